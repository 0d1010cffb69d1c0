//! Matching skeletons: per-block cycle-free α-matchings and their union.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_traits::{One, Zero};
use petgraph::unionfind::UnionFind;

use crate::decomposition::{block_decomposition, Block, BlockDecomposition, ExpansionInstance};
use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, Edge};
use crate::matching::{maximum_matching, verify_alpha_matching, FractionalMatching, Verdict};
use crate::rational::Rational;

/// A matching skeleton together with the decomposition it realises.
///
/// Only the support is the coreset message; the weights are kept so the
/// skeleton can be checked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton {
    pub weights: FractionalMatching,
    pub decomposition: BlockDecomposition,
}

impl Skeleton {
    /// Edges with positive weight, sorted.
    pub fn support(&self) -> Vec<Edge> {
        self.weights.support()
    }

    pub fn support_graph(&self) -> BipartiteGraph {
        BipartiteGraph::new(self.decomposition.p_count, self.decomposition.q_count, self.support())
            .expect("support edges are in range")
    }

    /// Checks every skeleton invariant against the host graph `g`.
    pub fn verify(&self, g: &BipartiteGraph) -> Verdict {
        let mut v = Verdict::default();
        let support = self.support();
        let n = g.vertex_count();
        if !support.is_empty() && support.len() > n - 1 {
            v.fail(format!("support has {} edges, more than n - 1 = {}", support.len(), n - 1));
        }
        if let Some(e) = first_cycle_edge(&support, g.p_count(), g.q_count()) {
            v.fail(format!("support contains a cycle through {e}"));
        }
        let (p_block, q_block) = self.decomposition.block_index();
        for e in &support {
            if !g.has_edge(*e) {
                v.fail(format!("{e} is not an edge of the host graph"));
            } else if p_block[e.p] != q_block[e.q] {
                v.fail(format!("{e} crosses two blocks"));
            }
        }
        for b in &self.decomposition.blocks {
            let x: FractionalMatching =
                b.p_set.iter().flat_map(|&p| g.p_neighbors(p).iter().map(move |&q| Edge::new(p, q)))
                    .map(|e| (e, self.weights.get(e)))
                    .collect();
            let ps: BTreeSet<usize> = b.p_set.iter().copied().collect();
            let verdict = verify_alpha_matching(g, &x, b.alpha, &ps);
            v.violations.extend(verdict.violations);
        }
        for (q, s) in self.weights.q_sums() {
            if s > Rational::one() {
                v.fail(format!("q{q} carries {s} > 1"));
            }
        }
        let mm_support = maximum_matching(&self.support_graph()).len();
        let mm_g = maximum_matching(g).len();
        if mm_support != mm_g {
            v.fail(format!("support matching {mm_support} below graph matching {mm_g}"));
        }
        v
    }
}

/// First edge (in order) that closes a cycle, checked with union-find.
pub fn first_cycle_edge(edges: &[Edge], p_count: usize, q_count: usize) -> Option<Edge> {
    let mut uf = UnionFind::<usize>::new(p_count + q_count);
    edges.iter().copied().find(|e| !uf.union(e.p, p_count + e.q))
}

/// An exact α-matching of `block` supported on `(P_i × Q_i) ∩ E`: an integral
/// max-flow on the scaled network divided by the level's denominator.
pub fn block_alpha_matching(g: &BipartiteGraph, block: &Block) -> Result<FractionalMatching> {
    if block.alpha.is_zero() || block.p_set.is_empty() {
        return Ok(FractionalMatching::new());
    }
    let inst = ExpansionInstance::new(g, &block.p_set, |q| block.q_set.binary_search(&q).is_ok());
    let flow = inst.scaled_flow(block.alpha);
    let (num, den) = (*block.alpha.numer(), *block.alpha.denom());
    if flow.value != num * inst.p_len() as i64 {
        return Err(Error::Inconsistent(format!(
            "block with level {} admits no alpha-matching (flow {} of {})",
            block.alpha,
            flow.value,
            num * inst.p_len() as i64
        )));
    }
    Ok(flow
        .arcs
        .iter()
        .map(|&(p, q, arc)| (inst.edge(p, q), Rational::new(flow.net.flow(arc), den)))
        .collect())
}

// P-vertex p is node 2p, Q-vertex q is node 2q + 1.
fn p_node(p: usize) -> usize {
    2 * p
}

fn q_node(q: usize) -> usize {
    2 * q + 1
}

/// Removes every cycle from the support of `x` while keeping every vertex's
/// incident weight exactly.
///
/// Edges are inserted into a growing forest in ascending order. An edge whose
/// endpoints are already joined closes an even cycle; weights around it are
/// alternately decreased (starting with the new edge) and increased by the
/// largest `ε` that keeps all weights in `[0, 1]`, which zeroes at least one
/// edge and leaves a forest again.
pub fn eliminate_cycles(x: &FractionalMatching) -> FractionalMatching {
    eliminate_cycles_counting(x).0
}

/// [`eliminate_cycles`] plus the number of cancellation rounds and the
/// support size after each round.
pub fn eliminate_cycles_counting(x: &FractionalMatching) -> (FractionalMatching, Vec<usize>) {
    let nodes = x.iter().map(|(e, _)| p_node(e.p).max(q_node(e.q)) + 1).max().unwrap_or(0);
    // Components only merge, so union-find over-approximates connectivity
    // after deletions; a positive answer is confirmed by a path search.
    let mut uf = UnionFind::<usize>::new(nodes);
    let mut weights: BTreeMap<Edge, Rational> = BTreeMap::new();
    let mut adj: HashMap<usize, Vec<(usize, Edge)>> = HashMap::new();
    let mut rounds = Vec::new();
    let zero = Rational::zero();
    let one = Rational::one();

    for (e, w) in x.iter() {
        let (u, v) = (p_node(e.p), q_node(e.q));
        let path = if uf.equiv(u, v) { forest_path(&adj, v, u) } else { None };
        let Some(path) = path else {
            uf.union(u, v);
            link(&mut adj, &mut weights, e, w);
            continue;
        };
        // Cycle e, path[0], path[1], ...: e and every odd path position lose ε.
        let minus = std::iter::once(w).chain(path.iter().skip(1).step_by(2).map(|f| weights[f]));
        let plus_room = path.iter().step_by(2).map(|f| one - weights[f]);
        let eps = minus.chain(plus_room).min().expect("cycle is nonempty");
        let mut new_w = w - eps;
        for (i, f) in path.iter().enumerate() {
            let cur = weights[f];
            let next = if i % 2 == 0 { cur + eps } else { cur - eps };
            if next == zero {
                unlink(&mut adj, &mut weights, *f);
            } else {
                weights.insert(*f, next);
            }
        }
        if new_w > zero {
            link(&mut adj, &mut weights, e, new_w);
        } else {
            new_w = zero;
        }
        debug_assert!(new_w >= zero);
        rounds.push(weights.len());
    }
    (weights.into_iter().collect(), rounds)
}

fn link(adj: &mut HashMap<usize, Vec<(usize, Edge)>>, weights: &mut BTreeMap<Edge, Rational>, e: Edge, w: Rational) {
    let (u, v) = (p_node(e.p), q_node(e.q));
    adj.entry(u).or_default().push((v, e));
    adj.entry(v).or_default().push((u, e));
    weights.insert(e, w);
}

fn unlink(adj: &mut HashMap<usize, Vec<(usize, Edge)>>, weights: &mut BTreeMap<Edge, Rational>, e: Edge) {
    for node in [p_node(e.p), q_node(e.q)] {
        if let Some(list) = adj.get_mut(&node) {
            if let Some(i) = list.iter().position(|&(_, f)| f == e) {
                list.remove(i);
            }
        }
    }
    weights.remove(&e);
}

/// Edges of the unique forest path from `from` to `to`, in walking order.
fn forest_path(adj: &HashMap<usize, Vec<(usize, Edge)>>, from: usize, to: usize) -> Option<Vec<Edge>> {
    let mut parent: HashMap<usize, (usize, Edge)> = HashMap::new();
    let mut queue = VecDeque::from([from]);
    let mut seen = BTreeSet::from([from]);
    while let Some(u) = queue.pop_front() {
        if u == to {
            let mut path = Vec::new();
            let mut cur = to;
            while cur != from {
                let (prev, e) = parent[&cur];
                path.push(e);
                cur = prev;
            }
            path.reverse();
            return Some(path);
        }
        for &(v, e) in adj.get(&u).map(Vec::as_slice).unwrap_or_default() {
            if seen.insert(v) {
                parent.insert(v, (u, e));
                queue.push_back(v);
            }
        }
    }
    None
}

/// Skeleton built block by block from a given decomposition of `g`.
pub fn skeleton_from(g: &BipartiteGraph, decomposition: BlockDecomposition) -> Result<Skeleton> {
    let mut weights = FractionalMatching::new();
    for block in &decomposition.blocks {
        let x = block_alpha_matching(g, block)?;
        weights.merge(&eliminate_cycles(&x));
    }
    Ok(Skeleton { weights, decomposition })
}

/// Block decomposition, then a cycle-free α-matching per block.
pub fn matching_skeleton(g: &BipartiteGraph) -> Result<Skeleton> {
    skeleton_from(g, block_decomposition(g))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AvoidOutcome {
    /// A skeleton of the host graph with no forbidden edge in its support.
    Avoided(Skeleton),
    /// The forbidden edge `{p, q}` present in the graph with `α(p) < α(q)`
    /// once forbidden edges are removed.
    Refused(Edge),
}

/// Looks for a skeleton of `g` that uses no edge accepted by `forbidden`.
///
/// Computes the skeleton `H⁻` of `g` without the forbidden edges. If every
/// forbidden edge present in `g` joins `p` to `q` with `α(p) ≥ α(q)` in that
/// smaller graph, adding them back leaves its decomposition unchanged and
/// `H⁻` is a skeleton of `g` as well. Otherwise the first violating edge is
/// reported.
pub fn skeleton_avoiding(g: &BipartiteGraph, forbidden: impl Fn(Edge) -> bool) -> Result<AvoidOutcome> {
    let present: Vec<Edge> = g.edges().iter().copied().filter(|&e| forbidden(e)).collect();
    if present.is_empty() {
        return matching_skeleton(g).map(AvoidOutcome::Avoided);
    }
    let reduced = g.filter_edges(|e| !forbidden(e));
    let h = matching_skeleton(&reduced)?;
    let levels = h.decomposition.levels();
    for e in present {
        if levels.p[e.p] < levels.q[e.q] {
            return Ok(AvoidOutcome::Refused(e));
        }
    }
    Ok(AvoidOutcome::Avoided(h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::verify_decomposition;
    use crate::graph::{gen_perfect, gen_random_bipartite};
    use crate::matching::verify_fractional_matching;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn cycle(len: usize) -> Vec<Edge> {
        // C_{2len}: p_i – q_i and p_i – q_{i+1 mod len}
        (0..len).flat_map(|i| [Edge::new(i, i), Edge::new(i, (i + 1) % len)]).collect()
    }

    #[test]
    fn block_alpha_matching_examples() {
        let g = gen_perfect(3);
        let d = block_decomposition(&g);
        let x = block_alpha_matching(&g, &d.blocks[0]).unwrap();
        assert_eq!(x, g.edges().iter().map(|&e| (e, r(1, 1))).collect());

        let star = BipartiteGraph::new(1, 2, [(0, 0), (0, 1)]).unwrap();
        let b = &block_decomposition(&star).blocks[0];
        let x = block_alpha_matching(&star, b).unwrap();
        assert_eq!(x, star.edges().iter().map(|&e| (e, r(1, 1))).collect());

        let g = BipartiteGraph::new(2, 1, [(0, 0), (1, 0)]).unwrap();
        let b = &block_decomposition(&g).blocks[0];
        assert_eq!(b.alpha, r(1, 2));
        let x = block_alpha_matching(&g, b).unwrap();
        assert_eq!(x, g.edges().iter().map(|&e| (e, r(1, 2))).collect());

        let bogus = Block { p_set: vec![0, 1], q_set: vec![0], alpha: r(1, 1) };
        assert!(matches!(block_alpha_matching(&g, &bogus), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn eliminate_cycles_examples() {
        let tree: FractionalMatching =
            [(Edge::new(0, 0), r(1, 2)), (Edge::new(1, 0), r(1, 2))].into_iter().collect();
        assert_eq!(eliminate_cycles(&tree), tree);

        let c4: FractionalMatching = cycle(2).into_iter().map(|e| (e, r(1, 2))).collect();
        let out = eliminate_cycles(&c4);
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|(_, w)| w == r(1, 1)));
        let (a, b) = (out.support()[0], out.support()[1]);
        assert!(a.p != b.p && a.q != b.q);

        let c6: FractionalMatching = cycle(3).into_iter().map(|e| (e, r(1, 2))).collect();
        let out = eliminate_cycles(&c6);
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|(_, w)| w == r(1, 1)));
        assert_eq!(out.p_sums(), c6.p_sums());
        assert_eq!(out.q_sums(), c6.q_sums());
    }

    #[test]
    fn rounds_strictly_shrink_support() {
        let g = gen_random_bipartite(12, 12, 0.5, 4).unwrap();
        let x: FractionalMatching = g.edges().iter().map(|&e| (e, r(1, 24))).collect();
        let (out, rounds) = eliminate_cycles_counting(&x);
        assert!(!rounds.is_empty());
        // each round ends with the forest plus at most the new edge, minus a zeroed edge
        assert!(first_cycle_edge(&out.support(), 12, 12).is_none());
        assert_eq!(out.p_sums(), x.p_sums());
        assert_eq!(out.q_sums(), x.q_sums());
    }

    #[test]
    fn skeleton_examples() {
        let empty = BipartiteGraph::empty(3, 4);
        assert!(matching_skeleton(&empty).unwrap().support().is_empty());

        let g = gen_perfect(5);
        let h = matching_skeleton(&g).unwrap();
        assert_eq!(h.support(), g.edges());
        assert!(h.verify(&g).is_ok());
    }

    #[test]
    fn figure_skeleton_is_spanning_tree_per_block() {
        let g = crate::decomposition::tests::figure_graph();
        let h = matching_skeleton(&g).unwrap();
        assert!(h.verify(&g).is_ok(), "{}", h.verify(&g));
        let support = h.support();
        let low = support.iter().filter(|e| e.p < 4).count();
        let high = support.iter().filter(|e| e.p >= 4).count();
        assert_eq!((low, high), (6, 4));
        assert!(support.len() <= 11);
        // the cross edges between the blocks are never used
        assert!(!support.contains(&Edge::new(4, 1)) && !support.contains(&Edge::new(5, 2)));
    }

    #[test]
    fn avoidance_examples() {
        let g = gen_random_bipartite(9, 9, 0.35, 12).unwrap();
        match skeleton_avoiding(&g, |_| false).unwrap() {
            AvoidOutcome::Avoided(h) => assert_eq!(h, matching_skeleton(&g).unwrap()),
            AvoidOutcome::Refused(e) => panic!("refused {e}"),
        }

        let single = BipartiteGraph::new(1, 1, [(0, 0)]).unwrap();
        assert_eq!(
            skeleton_avoiding(&single, |e| e == Edge::new(0, 0)).unwrap(),
            AvoidOutcome::Refused(Edge::new(0, 0))
        );
    }

    #[test]
    fn random_skeletons_hold_invariants() {
        for seed in 0..150u64 {
            let prob = 0.1 + (seed % 5) as f64 * 0.1;
            let g = gen_random_bipartite(11, 9, prob, seed).unwrap();
            let h = matching_skeleton(&g).unwrap();
            assert!(verify_decomposition(&g, &h.decomposition).is_ok());
            assert!(verify_fractional_matching(&g, &{
                // scale each block's weights down to a plain fractional matching
                h.weights
                    .iter()
                    .map(|(e, w)| {
                        let a = h.decomposition.levels().p[e.p].finite().unwrap();
                        (e, if a > Rational::one() { w / a } else { w })
                    })
                    .collect()
            })
            .is_ok());
            let verdict = h.verify(&g);
            assert!(verdict.is_ok(), "seed {seed}: {verdict}");
        }
    }
}
