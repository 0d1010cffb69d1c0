//! Block decomposition of a bipartite graph by vertex expansion.
//!
//! Starting from the whole graph, repeatedly take the minimum expansion
//! `α = min |Γ(S)| / |S|` over nonempty `S` of the remaining P-vertices, remove
//! the largest minimiser `S` together with `Γ(S)`, and continue on what is
//! left. Each removed `(S, Γ(S), α)` is a [`Block`].
//!
//! The minimum is found exactly with max-flow probes: `α` is feasible (an
//! α-matching of the P-set exists) iff the scaled network
//! `s -num-> p -∞-> q -den-> t` carries `num · |P|`. A binary search over the
//! grid `1 / (2|P|²)` brackets the threshold, and the unique fraction with
//! denominator at most `|P|` in the bracket is recovered by a Stern–Brocot
//! descent. The largest minimiser is the P-part of the inclusion-maximal
//! minimum cut at that `α`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{ArcId, FlowNetwork};
use crate::graph::{BipartiteGraph, Edge, Side, VertexRef};
use crate::matching::{Verdict, VertexCover};
use crate::rational::{fmt_ratio, gcd, simplest_between, Level, Rational};
use crate::skeleton::Skeleton;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    /// Sorted P-indices.
    pub p_set: Vec<usize>,
    /// Sorted Q-indices, `Γ(p_set)` in the residual graph at extraction time.
    pub q_set: Vec<usize>,
    pub alpha: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockDecomposition {
    pub p_count: usize,
    pub q_count: usize,
    /// Blocks in order of strictly increasing `alpha`.
    pub blocks: Vec<Block>,
    /// Q-vertices that never join a block (exactly the isolated ones).
    pub leftover_q: Vec<usize>,
}

/// Per-vertex expansion levels of a decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Levels {
    pub p: Vec<Level>,
    pub q: Vec<Level>,
}

impl Levels {
    pub fn of(&self, v: VertexRef) -> Option<Level> {
        match v.side {
            Side::P => self.p.get(v.index).copied(),
            Side::Q => self.q.get(v.index).copied(),
        }
    }
}

impl BlockDecomposition {
    pub fn levels(&self) -> Levels {
        let mut p = vec![Level::Unbounded; self.p_count];
        let mut q = vec![Level::Unbounded; self.q_count];
        for b in &self.blocks {
            for &v in &b.p_set {
                p[v] = Level::Finite(b.alpha);
            }
            for &v in &b.q_set {
                q[v] = Level::Finite(b.alpha);
            }
        }
        Levels { p, q }
    }

    /// Index of the block holding each P- and Q-vertex.
    pub fn block_index(&self) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
        let mut p = vec![None; self.p_count];
        let mut q = vec![None; self.q_count];
        for (i, b) in self.blocks.iter().enumerate() {
            b.p_set.iter().for_each(|&v| p[v] = Some(i));
            b.q_set.iter().for_each(|&v| q[v] = Some(i));
        }
        (p, q)
    }
}

/// The minimum-expansion problem on `p_set` against the Q-vertices still
/// alive in a residual graph, compiled into local indices.
pub(crate) struct ExpansionInstance {
    p_global: Vec<usize>,
    q_global: Vec<usize>,
    /// Local Q-neighbours of each local P-vertex.
    adj: Vec<Vec<usize>>,
}

pub(crate) struct ScaledFlow {
    pub(crate) net: FlowNetwork,
    pub(crate) value: i64,
    /// `(local p, local q, arc)` for every P→Q arc.
    pub(crate) arcs: Vec<(usize, usize, ArcId)>,
}

impl ExpansionInstance {
    pub(crate) fn new(g: &BipartiteGraph, p_set: &[usize], alive: impl Fn(usize) -> bool) -> Self {
        let mut q_local: BTreeMap<usize, usize> = BTreeMap::new();
        for &p in p_set {
            for &q in g.p_neighbors(p) {
                if alive(q) {
                    q_local.insert(q, 0);
                }
            }
        }
        let q_global: Vec<usize> = q_local.keys().copied().collect();
        for (i, v) in q_local.values_mut().enumerate() {
            *v = i;
        }
        let adj = p_set
            .iter()
            .map(|&p| g.p_neighbors(p).iter().filter(|&&q| alive(q)).map(|q| q_local[q]).collect())
            .collect();
        ExpansionInstance { p_global: p_set.to_vec(), q_global, adj }
    }

    pub(crate) fn edge(&self, p_local: usize, q_local: usize) -> Edge {
        Edge::new(self.p_global[p_local], self.q_global[q_local])
    }

    pub(crate) fn p_len(&self) -> usize {
        self.p_global.len()
    }

    /// Max flow of `s -num-> p -(num·|P|+1)-> q -den-> t` for `alpha = num/den`.
    pub(crate) fn scaled_flow(&self, alpha: Rational) -> ScaledFlow {
        let (num, den) = (*alpha.numer(), *alpha.denom());
        let n = self.p_len();
        let m = self.q_global.len();
        let (s, t) = (0, n + m + 1);
        let inf = num
            .checked_mul(n as i64)
            .and_then(|x| x.checked_add(1))
            .expect("scaled capacity overflow");
        let mut net = FlowNetwork::new(n + m + 2);
        for p in 0..n {
            net.add_arc(s, 1 + p, num);
        }
        let mut arcs = Vec::new();
        for (p, qs) in self.adj.iter().enumerate() {
            for &q in qs {
                arcs.push((p, q, net.add_arc(1 + p, 1 + n + q, inf)));
            }
        }
        for q in 0..m {
            net.add_arc(1 + n + q, t, den);
        }
        let value = net.max_flow(s, t);
        ScaledFlow { net, value, arcs }
    }

    pub(crate) fn feasible(&self, alpha: Rational) -> bool {
        if alpha.is_zero() {
            return true;
        }
        self.scaled_flow(alpha).value == *alpha.numer() * self.p_len() as i64
    }

    /// Exact minimum expansion and the largest set attaining it, as global
    /// P-indices.
    fn solve(&self) -> (Rational, Vec<usize>) {
        let n = self.p_len();
        assert!(n > 0);
        let isolated: Vec<usize> =
            (0..n).filter(|&i| self.adj[i].is_empty()).map(|i| self.p_global[i]).collect();
        if !isolated.is_empty() {
            return (Rational::zero(), isolated);
        }
        let alpha = self.threshold();
        let flow = self.scaled_flow(alpha);
        debug_assert_eq!(flow.value, *alpha.numer() * n as i64);
        let reach = flow.net.reaches_sink(flow.net.node_count() - 1);
        let tight: Vec<usize> = (0..n).filter(|&i| !reach[1 + i]).map(|i| self.p_global[i]).collect();
        assert!(!tight.is_empty(), "no tight set at alpha = {alpha}");
        (alpha, tight)
    }

    /// Largest feasible `alpha`, assuming no isolated P-vertex.
    fn threshold(&self) -> Rational {
        let n = self.p_len() as i64;
        let min_deg = self.adj.iter().map(Vec::len).min().unwrap_or(0) as i64;
        let upper = Rational::from_integer(min_deg).min(Rational::new(self.q_global.len() as i64, n));
        if self.feasible(upper) {
            return upper;
        }
        // Every expansion is at least 1/n. Search the grid t / (2n²).
        let grid = 2 * n * n;
        let mut lo = 2 * n;
        let mut hi = (upper * Rational::from_integer(grid)).floor().to_integer() + 1;
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            let g = gcd(mid, grid);
            if self.feasible(Rational::new_raw(mid / g, grid / g)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let alpha = simplest_between(Rational::new(lo, grid), Rational::new(hi, grid));
        assert!(*alpha.denom() <= n, "snapped alpha {alpha} exceeds denominator bound {n}");
        alpha
    }
}

fn nonempty(p_set: &BTreeSet<usize>, g: &BipartiteGraph) -> Result<Vec<usize>> {
    if p_set.is_empty() {
        return Err(Error::EmptyPSet);
    }
    if let Some(&p) = p_set.iter().find(|&&p| p >= g.p_count()) {
        return Err(Error::VertexOutOfRange { side: 'P', index: p, bound: g.p_count() });
    }
    Ok(p_set.iter().copied().collect())
}

/// Whether an `alpha`-matching with respect to `p_set` exists in `g`.
pub fn alpha_feasible(g: &BipartiteGraph, alpha: Rational, p_set: &BTreeSet<usize>) -> Result<bool> {
    let ps = nonempty(p_set, g)?;
    Ok(ExpansionInstance::new(g, &ps, |_| true).feasible(alpha))
}

/// Minimum of `|Γ(S)| / |S|` over nonempty `S ⊆ p_set`, with the unique
/// inclusion-maximal minimiser.
pub fn min_expansion(g: &BipartiteGraph, p_set: &BTreeSet<usize>) -> Result<(Rational, BTreeSet<usize>)> {
    let ps = nonempty(p_set, g)?;
    let (alpha, s) = ExpansionInstance::new(g, &ps, |_| true).solve();
    Ok((alpha, s.into_iter().collect()))
}

pub const BRUTE_FORCE_P_LIMIT: usize = 16;

/// Exhaustive minimum expansion over all `2^|p_set| - 1` subsets, returning
/// the largest minimiser. Test oracle.
pub fn brute_force_min_expansion(
    g: &BipartiteGraph,
    p_set: &BTreeSet<usize>,
) -> Result<(Rational, BTreeSet<usize>)> {
    let ps = nonempty(p_set, g)?;
    if ps.len() > BRUTE_FORCE_P_LIMIT {
        return Err(Error::OracleGuard { what: "|p_set|", actual: ps.len(), limit: BRUTE_FORCE_P_LIMIT });
    }
    let words = g.q_count().div_ceil(64).max(1);
    let bits: Vec<Vec<u64>> = ps
        .iter()
        .map(|&p| {
            let mut b = vec![0u64; words];
            for &q in g.p_neighbors(p) {
                b[q / 64] |= 1 << (q % 64);
            }
            b
        })
        .collect();
    let subsets = 1usize << ps.len();
    let mut nb = vec![0u64; subsets * words];
    // (|Γ(S)|, |S|, mask) of the best subset so far
    let mut best: Option<(u64, u64, usize)> = None;
    for mask in 1..subsets {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        let mut count = 0u64;
        for w in 0..words {
            let v = nb[rest * words + w] | bits[low][w];
            nb[mask * words + w] = v;
            count += v.count_ones() as u64;
        }
        let size = mask.count_ones() as u64;
        let better = match best {
            None => true,
            Some((bc, bs, _)) => {
                let (lhs, rhs) = (count * bs, bc * size);
                lhs < rhs || (lhs == rhs && size > bs)
            }
        };
        if better {
            best = Some((count, size, mask));
        }
    }
    let (c, s, mask) = best.expect("nonempty p_set");
    let set = (0..ps.len()).filter(|i| mask >> i & 1 == 1).map(|i| ps[i]).collect();
    Ok((Rational::new(c as i64, s as i64), set))
}

/// One extraction step's raw output.
type Extracted = (Rational, Vec<usize>, Vec<usize>);

/// Runs the residual extraction loop on `p_alive` until it is exhausted,
/// marking absorbed Q-vertices dead in `q_alive`.
fn extract_blocks(g: &BipartiteGraph, mut p_alive: Vec<usize>, q_alive: &mut [bool]) -> Vec<Extracted> {
    let mut out = Vec::new();
    while !p_alive.is_empty() {
        let (alpha, s) = ExpansionInstance::new(g, &p_alive, |q| q_alive[q]).solve();
        let mut q_set: Vec<usize> =
            s.iter().flat_map(|&p| g.p_neighbors(p)).copied().filter(|&q| q_alive[q]).collect();
        q_set.sort_unstable();
        q_set.dedup();
        for &q in &q_set {
            q_alive[q] = false;
        }
        let taken: BTreeSet<usize> = s.iter().copied().collect();
        p_alive.retain(|p| !taken.contains(p));
        out.push((alpha, s, q_set));
    }
    out
}

fn assemble(g: &BipartiteGraph, extracted: Vec<Extracted>, q_alive: &[bool]) -> BlockDecomposition {
    let mut by_alpha: BTreeMap<Rational, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (alpha, ps, qs) in extracted {
        let entry = by_alpha.entry(alpha).or_default();
        entry.0.extend(ps);
        entry.1.extend(qs);
    }
    let blocks = by_alpha
        .into_iter()
        .map(|(alpha, (mut p_set, mut q_set))| {
            p_set.sort_unstable();
            q_set.sort_unstable();
            Block { p_set, q_set, alpha }
        })
        .collect();
    let leftover_q = (0..g.q_count()).filter(|&q| q_alive[q]).collect();
    BlockDecomposition { p_count: g.p_count(), q_count: g.q_count(), blocks, leftover_q }
}

/// Block decomposition of `g`.
///
/// The extraction loop runs independently on each connected component and
/// blocks of equal level are merged afterwards: in a disjoint union the
/// minimum expansion is the smallest component minimum and the largest
/// minimiser is the union of the components' largest minimisers, so this is
/// the same decomposition as [`block_decomposition_whole`].
pub fn block_decomposition(g: &BipartiteGraph) -> BlockDecomposition {
    let mut q_alive = vec![true; g.q_count()];
    let mut extracted = Vec::new();
    for component in p_components(g) {
        extracted.extend(extract_blocks(g, component, &mut q_alive));
    }
    assemble(g, extracted, &q_alive)
}

/// Block decomposition by running the extraction loop on the whole graph.
pub fn block_decomposition_whole(g: &BipartiteGraph) -> BlockDecomposition {
    let mut q_alive = vec![true; g.q_count()];
    let extracted = extract_blocks(g, (0..g.p_count()).collect(), &mut q_alive);
    assemble(g, extracted, &q_alive)
}

/// P-vertex sets of the connected components, each sorted, ordered by their
/// smallest member. Isolated P-vertices form singleton components.
fn p_components(g: &BipartiteGraph) -> Vec<Vec<usize>> {
    let mut seen_p = vec![false; g.p_count()];
    let mut seen_q = vec![false; g.q_count()];
    let mut out = Vec::new();
    for start in 0..g.p_count() {
        if seen_p[start] {
            continue;
        }
        seen_p[start] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            for &q in g.p_neighbors(p) {
                if seen_q[q] {
                    continue;
                }
                seen_q[q] = true;
                for &p2 in g.q_neighbors(q) {
                    if !seen_p[p2] {
                        seen_p[p2] = true;
                        comp.push(p2);
                        queue.push_back(p2);
                    }
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// `α(v)`, with [`Level::Unbounded`] for leftover Q-vertices.
pub fn expansion_of(d: &BlockDecomposition, v: VertexRef) -> Result<Level> {
    let bound = match v.side {
        Side::P => d.p_count,
        Side::Q => d.q_count,
    };
    if v.index >= bound {
        let side = if v.side == Side::P { 'P' } else { 'Q' };
        return Err(Error::VertexOutOfRange { side, index: v.index, bound });
    }
    for b in &d.blocks {
        let set = if v.side == Side::P { &b.p_set } else { &b.q_set };
        if set.binary_search(&v.index).is_ok() {
            return Ok(Level::Finite(b.alpha));
        }
    }
    match v.side {
        Side::Q if d.leftover_q.contains(&v.index) => Ok(Level::Unbounded),
        _ => Err(Error::Inconsistent(format!("{v} is in no block"))),
    }
}

/// Checks the structural properties of `d` against `g`: strictly increasing
/// levels, the vertex partition, `α_i |P_i| = |Q_i|`, `Q_i = Γ(P_i)` in the
/// residual graph, `Γ(P_i) ⊆ Q_1 ∪ … ∪ Q_i`, feasibility of `α_i` for `P_i`,
/// and, when the residual P-set is small enough, agreement with exhaustive
/// minimum expansion.
pub fn verify_decomposition(g: &BipartiteGraph, d: &BlockDecomposition) -> Verdict {
    let mut v = Verdict::default();
    if d.p_count != g.p_count() || d.q_count != g.q_count() {
        v.fail("vertex counts differ from the graph");
        return v;
    }
    for w in d.blocks.windows(2) {
        if w[0].alpha >= w[1].alpha {
            v.fail(format!("levels not strictly increasing: {} then {}", w[0].alpha, w[1].alpha));
        }
    }
    let mut p_seen = vec![0u32; g.p_count()];
    let mut q_seen = vec![0u32; g.q_count()];
    for b in &d.blocks {
        for &p in &b.p_set {
            match p_seen.get_mut(p) {
                Some(c) => *c += 1,
                None => v.fail(format!("p{p} out of range")),
            }
        }
        for &q in &b.q_set {
            match q_seen.get_mut(q) {
                Some(c) => *c += 1,
                None => v.fail(format!("q{q} out of range")),
            }
        }
    }
    for &q in &d.leftover_q {
        match q_seen.get_mut(q) {
            Some(c) => *c += 1,
            None => v.fail(format!("q{q} out of range")),
        }
    }
    for (p, &c) in p_seen.iter().enumerate() {
        if c != 1 {
            v.fail(format!("p{p} appears in {c} blocks"));
        }
    }
    for (q, &c) in q_seen.iter().enumerate() {
        if c != 1 {
            v.fail(format!("q{q} appears {c} times among blocks and leftovers"));
        }
    }
    if !v.is_ok() {
        return v;
    }

    let mut p_gone = vec![false; g.p_count()];
    let mut q_gone = vec![false; g.q_count()];
    for (i, b) in d.blocks.iter().enumerate() {
        if b.p_set.is_empty() {
            v.fail(format!("block {i} has an empty P-set"));
            continue;
        }
        if b.alpha * Rational::from_integer(b.p_set.len() as i64) != Rational::from_integer(b.q_set.len() as i64) {
            v.fail(format!("block {i}: alpha {} but |Q|/|P| = {}/{}", b.alpha, b.q_set.len(), b.p_set.len()));
        }
        let full: BTreeSet<usize> = b.p_set.iter().flat_map(|&p| g.p_neighbors(p)).copied().collect();
        if let Some(q) = full.iter().find(|&&q| !q_gone[q] && b.q_set.binary_search(&q).is_err()) {
            v.fail(format!("block {i}: neighbour q{q} lies in a later block or leftovers"));
        }
        let residual_gamma: Vec<usize> = full.iter().copied().filter(|&q| !q_gone[q]).collect();
        if residual_gamma != b.q_set {
            v.fail(format!("block {i}: Q-set differs from the residual neighbourhood"));
        }
        let residual = g.filter_edges(|e| !p_gone[e.p] && !q_gone[e.q]);
        if !ExpansionInstance::new(&residual, &b.p_set, |_| true).feasible(b.alpha) {
            v.fail(format!("block {i}: no {}-matching of its P-set", fmt_ratio(&b.alpha)));
        }
        let remaining: BTreeSet<usize> = (0..g.p_count()).filter(|&p| !p_gone[p]).collect();
        if remaining.len() <= BRUTE_FORCE_P_LIMIT {
            let (alpha, s) = brute_force_min_expansion(&residual, &remaining).expect("guarded");
            if alpha != b.alpha || s.iter().copied().collect::<Vec<_>>() != b.p_set {
                v.fail(format!("block {i}: exhaustive search finds level {alpha} on {s:?}"));
            }
        }
        b.p_set.iter().for_each(|&p| p_gone[p] = true);
        b.q_set.iter().for_each(|&q| q_gone[q] = true);
    }
    v
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CanonicalCover {
    pub p: Vec<usize>,
    pub q: Vec<usize>,
}

impl CanonicalCover {
    pub fn len(&self) -> usize {
        self.p.len() + self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_vertex_cover(&self) -> VertexCover {
        let vertices = self
            .p
            .iter()
            .map(|&p| VertexRef::p(p))
            .chain(self.q.iter().map(|&q| VertexRef::q(q)))
            .collect();
        VertexCover { vertices }
    }
}

/// `{q : α(q) < 1} ∪ {p : α(p) ≥ 1}`: the smaller side of every block.
/// Leftover Q-vertices (level unbounded) are excluded.
pub fn canonical_vertex_cover(d: &BlockDecomposition) -> CanonicalCover {
    let one = Rational::one();
    let mut p = Vec::new();
    let mut q = Vec::new();
    for b in &d.blocks {
        if b.alpha >= one {
            p.extend_from_slice(&b.p_set);
        } else {
            q.extend_from_slice(&b.q_set);
        }
    }
    p.sort_unstable();
    q.sort_unstable();
    CanonicalCover { p, q }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RobustnessReport {
    /// Whether the modified graph has exactly the original decomposition.
    pub holds: bool,
    pub modified: BlockDecomposition,
}

/// Applies `E' = (E ∪ e_plus) \ e_minus` and checks that the decomposition is
/// unchanged.
///
/// Preconditions are enforced: no edge of `e_minus` may lie in the skeleton
/// support, and every `{p, q}` in `e_plus` must satisfy `α(p) ≥ α(q)` under
/// `d` (leftover Q-vertices compare above every finite level).
pub fn check_robustness(
    g: &BipartiteGraph,
    d: &BlockDecomposition,
    e_plus: &[Edge],
    e_minus: &[Edge],
    h: &Skeleton,
) -> Result<RobustnessReport> {
    let support: BTreeSet<Edge> = h.support().into_iter().collect();
    if let Some(&e) = e_minus.iter().find(|e| support.contains(e)) {
        return Err(Error::RemovedSkeletonEdge(e));
    }
    let levels = d.levels();
    for &e in e_plus {
        let (Some(lp), Some(lq)) = (levels.of(VertexRef::p(e.p)), levels.of(VertexRef::q(e.q))) else {
            return Err(Error::EdgeOutOfRange { edge: e, p_count: d.p_count, q_count: d.q_count });
        };
        if lp < lq {
            return Err(Error::AlphaOrder(e));
        }
    }
    let removed: BTreeSet<Edge> = e_minus.iter().copied().collect();
    let modified = g.with_edges(e_plus.iter().copied())?.filter_edges(|e| !removed.contains(&e));
    let modified = block_decomposition(&modified);
    Ok(RobustnessReport { holds: &modified == d, modified })
}
