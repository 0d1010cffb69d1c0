//! Integral and fractional matchings, their verifiers, and König covers.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, Edge, VertexRef};
use crate::rational::Rational;

/// Outcome of a verifier: empty means every checked property holds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Verdict {
    pub violations: Vec<String>,
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub(crate) fn fail(&mut self, msg: impl Into<String>) {
        self.violations.push(msg.into());
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        write!(f, "{}", self.violations.join("; "))
    }
}

/// Set of vertex-disjoint edges, sorted by `(p, q)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Matching {
    pairs: Vec<Edge>,
}

impl Matching {
    pub fn from_pairs(mut pairs: Vec<Edge>) -> Self {
        pairs.sort_unstable();
        Matching { pairs }
    }

    pub fn pairs(&self) -> &[Edge] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Checks vertex-disjointness and membership in `g`.
    pub fn verify(&self, g: &BipartiteGraph) -> Verdict {
        let mut v = Verdict::default();
        let mut ps = BTreeSet::new();
        let mut qs = BTreeSet::new();
        for &e in &self.pairs {
            if !g.has_edge(e) {
                v.fail(format!("{e} is not an edge"));
            }
            if !ps.insert(e.p) || !qs.insert(e.q) {
                v.fail(format!("{e} shares an endpoint"));
            }
        }
        v
    }
}

/// Edge weights in `(0, 1]` with at most unit weight at every vertex.
/// Zero weights are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FractionalMatching {
    weights: BTreeMap<Edge, Rational>,
}

impl FractionalMatching {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets the weight of `e`; a zero weight removes the entry.
    pub fn set(&mut self, e: Edge, w: Rational) {
        if w.is_zero() {
            self.weights.remove(&e);
        } else {
            self.weights.insert(e, w);
        }
    }

    pub fn get(&self, e: Edge) -> Rational {
        self.weights.get(&e).copied().unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Edge, Rational)> + '_ {
        self.weights.iter().map(|(&e, &w)| (e, w))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Edges with positive weight, sorted.
    pub fn support(&self) -> Vec<Edge> {
        self.weights.keys().copied().collect()
    }

    /// Sum of all weights.
    pub fn size(&self) -> Rational {
        self.weights.values().copied().sum()
    }

    pub fn p_sums(&self) -> BTreeMap<usize, Rational> {
        let mut sums = BTreeMap::new();
        for (e, w) in self.iter() {
            *sums.entry(e.p).or_insert_with(Rational::zero) += w;
        }
        sums
    }

    pub fn q_sums(&self) -> BTreeMap<usize, Rational> {
        let mut sums = BTreeMap::new();
        for (e, w) in self.iter() {
            *sums.entry(e.q).or_insert_with(Rational::zero) += w;
        }
        sums
    }

    /// Disjoint union; on a shared edge the weights add.
    pub fn merge(&mut self, other: &FractionalMatching) {
        for (e, w) in other.iter() {
            let cur = self.get(e);
            self.set(e, cur + w);
        }
    }
}

impl FromIterator<(Edge, Rational)> for FractionalMatching {
    fn from_iter<I: IntoIterator<Item = (Edge, Rational)>>(iter: I) -> Self {
        let mut x = FractionalMatching::new();
        for (e, w) in iter {
            x.set(e, w);
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VertexCover {
    pub vertices: BTreeSet<VertexRef>,
}

impl VertexCover {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn covers(&self, g: &BipartiteGraph) -> bool {
        g.edges().iter().all(|e| {
            self.vertices.contains(&VertexRef::p(e.p)) || self.vertices.contains(&VertexRef::q(e.q))
        })
    }
}

const FREE: usize = usize::MAX;

/// Maximum matching by Hopcroft–Karp. Free P-vertices are scanned in
/// ascending order and neighbours in ascending order, so the output is a
/// deterministic function of the graph.
pub fn maximum_matching(g: &BipartiteGraph) -> Matching {
    let (pc, qc) = (g.p_count(), g.q_count());
    let mut mate_p = vec![FREE; pc];
    let mut mate_q = vec![FREE; qc];
    let mut dist = vec![u32::MAX; pc];
    let mut cursor = vec![0usize; pc];

    loop {
        // BFS layering from all free P-vertices.
        let mut queue = VecDeque::new();
        for p in 0..pc {
            if mate_p[p] == FREE {
                dist[p] = 0;
                queue.push_back(p);
            } else {
                dist[p] = u32::MAX;
            }
        }
        let mut found = false;
        while let Some(p) = queue.pop_front() {
            for &q in g.p_neighbors(p) {
                let next = mate_q[q];
                if next == FREE {
                    found = true;
                } else if dist[next] == u32::MAX {
                    dist[next] = dist[p] + 1;
                    queue.push_back(next);
                }
            }
        }
        if !found {
            break;
        }
        cursor.iter_mut().for_each(|c| *c = 0);
        for p in 0..pc {
            if mate_p[p] == FREE {
                augment(g, p, &mut mate_p, &mut mate_q, &mut dist, &mut cursor);
            }
        }
    }

    let pairs = (0..pc).filter(|&p| mate_p[p] != FREE).map(|p| Edge::new(p, mate_p[p])).collect();
    Matching::from_pairs(pairs)
}

fn augment(
    g: &BipartiteGraph,
    p: usize,
    mate_p: &mut [usize],
    mate_q: &mut [usize],
    dist: &mut [u32],
    cursor: &mut [usize],
) -> bool {
    let adj = g.p_neighbors(p);
    while cursor[p] < adj.len() {
        let q = adj[cursor[p]];
        cursor[p] += 1;
        let next = mate_q[q];
        let ok = next == FREE
            || (dist[next] == dist[p] + 1 && augment(g, next, mate_p, mate_q, dist, cursor));
        if ok {
            mate_p[p] = q;
            mate_q[q] = p;
            return true;
        }
    }
    dist[p] = u32::MAX;
    false
}

/// König cover from a maximum matching: with `Z` the vertices reachable from
/// free P-vertices along alternating paths, the cover is `(P \ Z) ∪ (Q ∩ Z)`.
///
/// If `m` is not maximum the result is not a cover; this is not detected.
pub fn minimum_vertex_cover(g: &BipartiteGraph, m: &Matching) -> VertexCover {
    let mut mate_p = vec![FREE; g.p_count()];
    let mut mate_q = vec![FREE; g.q_count()];
    for e in m.pairs() {
        mate_p[e.p] = e.q;
        mate_q[e.q] = e.p;
    }
    let mut seen_p = vec![false; g.p_count()];
    let mut seen_q = vec![false; g.q_count()];
    let mut queue: VecDeque<usize> = (0..g.p_count()).filter(|&p| mate_p[p] == FREE).collect();
    for &p in &queue {
        seen_p[p] = true;
    }
    while let Some(p) = queue.pop_front() {
        for &q in g.p_neighbors(p) {
            if seen_q[q] || mate_p[p] == q {
                continue;
            }
            seen_q[q] = true;
            let back = mate_q[q];
            if back != FREE && !seen_p[back] {
                seen_p[back] = true;
                queue.push_back(back);
            }
        }
    }
    let vertices = (0..g.p_count())
        .filter(|&p| !seen_p[p])
        .map(VertexRef::p)
        .chain((0..g.q_count()).filter(|&q| seen_q[q]).map(VertexRef::q))
        .collect();
    VertexCover { vertices }
}

/// Checks that `x` is a fractional matching of `g` using exact sums.
pub fn verify_fractional_matching(g: &BipartiteGraph, x: &FractionalMatching) -> Verdict {
    let mut v = Verdict::default();
    check_edge_weights(g, x, &mut v);
    for (p, s) in x.p_sums() {
        if s > Rational::one() {
            v.fail(format!("p{p} carries {s} > 1"));
        }
    }
    check_q_sums(x, &mut v);
    v
}

/// Checks that `x` is an `alpha`-matching with respect to `p_set`: every
/// `p ∈ p_set` carries exactly `alpha`, every `q` at most 1.
pub fn verify_alpha_matching(
    g: &BipartiteGraph,
    x: &FractionalMatching,
    alpha: Rational,
    p_set: &BTreeSet<usize>,
) -> Verdict {
    let mut v = Verdict::default();
    check_edge_weights(g, x, &mut v);
    let sums = x.p_sums();
    for &p in p_set {
        let s = sums.get(&p).copied().unwrap_or_else(Rational::zero);
        if s != alpha {
            v.fail(format!("p{p} carries {s}, expected {alpha}"));
        }
    }
    for (e, _) in x.iter() {
        if !p_set.contains(&e.p) {
            v.fail(format!("{e} leaves the P-set"));
        }
    }
    check_q_sums(x, &mut v);
    v
}

fn check_edge_weights(g: &BipartiteGraph, x: &FractionalMatching, v: &mut Verdict) {
    for (e, w) in x.iter() {
        if !g.has_edge(e) {
            v.fail(format!("{e} is not an edge"));
        }
        if w <= Rational::zero() || w > Rational::one() {
            v.fail(format!("{e} has weight {w} outside (0, 1]"));
        }
    }
}

fn check_q_sums(x: &FractionalMatching, v: &mut Verdict) {
    for (q, s) in x.q_sums() {
        if s > Rational::one() {
            v.fail(format!("q{q} carries {s} > 1"));
        }
    }
}

pub const BRUTE_FORCE_EDGE_LIMIT: usize = 25;

/// Exhaustive search over all matchings; test oracle for small graphs.
pub fn brute_force_matching(g: &BipartiteGraph) -> Result<Matching> {
    if g.edge_count() > BRUTE_FORCE_EDGE_LIMIT {
        return Err(Error::OracleGuard {
            what: "edge count",
            actual: g.edge_count(),
            limit: BRUTE_FORCE_EDGE_LIMIT,
        });
    }
    struct Search<'a> {
        edges: &'a [Edge],
        used_p: Vec<bool>,
        used_q: Vec<bool>,
        current: Vec<Edge>,
        best: Vec<Edge>,
    }
    impl Search<'_> {
        fn go(&mut self, i: usize) {
            if self.current.len() + (self.edges.len() - i) <= self.best.len() {
                return;
            }
            if i == self.edges.len() {
                self.best = self.current.clone();
                return;
            }
            let e = self.edges[i];
            if !self.used_p[e.p] && !self.used_q[e.q] {
                self.used_p[e.p] = true;
                self.used_q[e.q] = true;
                self.current.push(e);
                self.go(i + 1);
                self.current.pop();
                self.used_p[e.p] = false;
                self.used_q[e.q] = false;
            }
            self.go(i + 1);
        }
    }
    let mut s = Search {
        edges: g.edges(),
        used_p: vec![false; g.p_count()],
        used_q: vec![false; g.q_count()],
        current: Vec::new(),
        best: Vec::new(),
    };
    s.go(0);
    Ok(Matching::from_pairs(s.best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_pathological, gen_perfect, gen_random_bipartite};

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn c4() -> BipartiteGraph {
        BipartiteGraph::new(2, 2, [(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap()
    }

    fn star() -> BipartiteGraph {
        BipartiteGraph::new(1, 2, [(0, 0), (0, 1)]).unwrap()
    }

    #[test]
    fn maximum_matching_examples() {
        assert_eq!(maximum_matching(&gen_perfect(3)).len(), 3);
        assert_eq!(maximum_matching(&star()).len(), 1);
        // 3r + 2r/k: the 2r/k spare Q1 vertices and the 2r/k spare P3 vertices
        // both get matched, so the graph is perfectly matchable.
        let g = gen_pathological(10, 10).unwrap();
        let m = maximum_matching(&g);
        assert_eq!(m.len(), 32);
        assert_eq!(minimum_vertex_cover(&g, &m).len(), 32);
        assert_eq!(g.p_count(), 32);
        let m = maximum_matching(&c4());
        assert!(m.verify(&c4()).is_ok());
    }

    #[test]
    fn vertex_cover_examples() {
        let g = gen_perfect(2);
        let cover = minimum_vertex_cover(&g, &maximum_matching(&g));
        assert_eq!(cover.len(), 2);
        assert!(cover.covers(&g));

        let empty = BipartiteGraph::empty(3, 2);
        assert!(minimum_vertex_cover(&empty, &maximum_matching(&empty)).is_empty());

        let s = star();
        let m = Matching::from_pairs(vec![Edge::new(0, 0)]);
        let cover = minimum_vertex_cover(&s, &m);
        assert_eq!(cover.vertices, [VertexRef::p(0)].into_iter().collect());
    }

    #[test]
    fn fractional_verifier_examples() {
        let g = star();
        assert!(verify_fractional_matching(&g, &FractionalMatching::new()).is_ok());
        let one: FractionalMatching = [(Edge::new(0, 0), r(1, 1))].into_iter().collect();
        assert!(verify_fractional_matching(&g, &one).is_ok());
        let over: FractionalMatching = [(Edge::new(0, 0), r(3, 2))].into_iter().collect();
        assert!(!verify_fractional_matching(&g, &over).is_ok());

        let half: FractionalMatching = c4().edges().iter().map(|&e| (e, r(1, 2))).collect();
        assert!(verify_fractional_matching(&c4(), &half).is_ok());
        assert_eq!(half.size(), r(2, 1));

        let stray: FractionalMatching = [(Edge::new(1, 1), r(1, 2))].into_iter().collect();
        assert!(!verify_fractional_matching(&g, &stray).is_ok());
    }

    #[test]
    fn alpha_verifier_examples() {
        let s = star();
        let both: FractionalMatching = s.edges().iter().map(|&e| (e, r(1, 1))).collect();
        assert!(verify_alpha_matching(&s, &both, r(2, 1), &[0].into()).is_ok());

        let g = gen_perfect(3);
        let ones: FractionalMatching = g.edges().iter().map(|&e| (e, r(1, 1))).collect();
        let ps: BTreeSet<usize> = (0..3).collect();
        assert!(verify_alpha_matching(&g, &ones, r(1, 1), &ps).is_ok());
        let verdict = verify_alpha_matching(&g, &ones, r(1, 2), &ps);
        assert_eq!(verdict.violations.len(), 3);
    }

    #[test]
    fn brute_force_examples() {
        assert!(brute_force_matching(&BipartiteGraph::empty(2, 2)).unwrap().is_empty());
        assert_eq!(brute_force_matching(&c4()).unwrap().len(), 2);
        let big = gen_random_bipartite(10, 10, 1.0, 0).unwrap();
        assert!(matches!(brute_force_matching(&big), Err(Error::OracleGuard { .. })));
    }

    #[test]
    fn hopcroft_karp_agrees_with_exhaustive_search() {
        for seed in 0..300u64 {
            let g = gen_random_bipartite(6, 6, 0.5, seed).unwrap();
            let g = g.filter_edges({
                let mut n = 0;
                move |_| {
                    n += 1;
                    n <= BRUTE_FORCE_EDGE_LIMIT
                }
            });
            let hk = maximum_matching(&g);
            assert!(hk.verify(&g).is_ok());
            assert_eq!(hk.len(), brute_force_matching(&g).unwrap().len(), "seed {seed}");
            let cover = minimum_vertex_cover(&g, &hk);
            assert!(cover.covers(&g));
            assert_eq!(cover.len(), hk.len());
            assert!(hk.len() <= g.p_count().min(g.q_count()));
        }
    }
}
