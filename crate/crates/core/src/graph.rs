//! Bipartite graph model, deterministic generators, random edge
//! partitioning and the edge-list text format.
//!
//! Vertices are dense indices per side: `P = 0..p_count`, `Q = 0..q_count`.
//! Edges are kept sorted by `(p, q)` and duplicate-free, so the position of an
//! edge in [`BipartiteGraph::edges`] is its ordinal.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub p: usize,
    pub q: usize,
}

impl Edge {
    pub const fn new(p: usize, q: usize) -> Self {
        Edge { p, q }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(p{}, q{})", self.p, self.q)
    }
}

impl From<(usize, usize)> for Edge {
    fn from((p, q): (usize, usize)) -> Self {
        Edge { p, q }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    P,
    Q,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexRef {
    pub side: Side,
    pub index: usize,
}

impl VertexRef {
    pub const fn p(index: usize) -> Self {
        VertexRef { side: Side::P, index }
    }

    pub const fn q(index: usize) -> Self {
        VertexRef { side: Side::Q, index }
    }
}

impl fmt::Display for VertexRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.side {
            Side::P => write!(f, "p{}", self.index),
            Side::Q => write!(f, "q{}", self.index),
        }
    }
}

/// Simple bipartite graph `G = (P, Q, E)`; immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    p_count: usize,
    q_count: usize,
    edges: Vec<Edge>,
    p_adj: Vec<Vec<usize>>,
    q_adj: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    /// Builds a graph, collapsing duplicate edges.
    pub fn new<I, E>(p_count: usize, q_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = E>,
        E: Into<Edge>,
    {
        let mut list = Vec::new();
        for e in edges {
            let e = e.into();
            if e.p >= p_count || e.q >= q_count {
                return Err(Error::EdgeOutOfRange { edge: e, p_count, q_count });
            }
            list.push(e);
        }
        list.sort_unstable();
        list.dedup();
        Ok(Self::from_sorted(p_count, q_count, list))
    }

    /// `edges` must be sorted, duplicate-free and in range.
    fn from_sorted(p_count: usize, q_count: usize, edges: Vec<Edge>) -> Self {
        let mut p_adj = vec![Vec::new(); p_count];
        let mut q_adj = vec![Vec::new(); q_count];
        for e in &edges {
            p_adj[e.p].push(e.q);
            q_adj[e.q].push(e.p);
        }
        BipartiteGraph { p_count, q_count, edges, p_adj, q_adj }
    }

    pub fn empty(p_count: usize, q_count: usize) -> Self {
        Self::from_sorted(p_count, q_count, Vec::new())
    }

    pub fn p_count(&self) -> usize {
        self.p_count
    }

    pub fn q_count(&self) -> usize {
        self.q_count
    }

    /// `n = |P| + |Q|`.
    pub fn vertex_count(&self) -> usize {
        self.p_count + self.q_count
    }

    /// `m = |E|`.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn has_edge(&self, e: Edge) -> bool {
        e.p < self.p_count && self.p_adj[e.p].binary_search(&e.q).is_ok()
    }

    /// Sorted Q-neighbours of `p`.
    pub fn p_neighbors(&self, p: usize) -> &[usize] {
        &self.p_adj[p]
    }

    /// Sorted P-neighbours of `q`.
    pub fn q_neighbors(&self, q: usize) -> &[usize] {
        &self.q_adj[q]
    }

    /// `Γ(S)` for a set of P-indices.
    pub fn neighbors(&self, s: &BTreeSet<usize>) -> Result<BTreeSet<usize>> {
        let mut out = BTreeSet::new();
        for &p in s {
            if p >= self.p_count {
                return Err(Error::VertexOutOfRange { side: 'P', index: p, bound: self.p_count });
            }
            out.extend(self.p_adj[p].iter().copied());
        }
        Ok(out)
    }

    /// Subgraph on the same vertex set keeping the edges accepted by `keep`.
    pub fn filter_edges(&self, mut keep: impl FnMut(Edge) -> bool) -> Self {
        let edges = self.edges.iter().copied().filter(|&e| keep(e)).collect();
        Self::from_sorted(self.p_count, self.q_count, edges)
    }

    /// Same vertex set with `extra` edges added (deduplicated).
    pub fn with_edges(&self, extra: impl IntoIterator<Item = Edge>) -> Result<Self> {
        Self::new(self.p_count, self.q_count, self.edges.iter().copied().chain(extra))
    }

    /// Splits the edges into `k` parts, sending each edge independently and
    /// uniformly to one part.
    ///
    /// The destination of edge ordinal `i` is drawn from a ChaCha stream keyed
    /// by `(seed, i)`, so the result does not depend on iteration order or on
    /// how many threads the caller uses.
    pub fn random_k_partition(&self, k: usize, seed: u64) -> Result<PartitionResult> {
        if k == 0 {
            return Err(Error::ZeroParts);
        }
        let mut buckets = vec![Vec::new(); k];
        for (ordinal, &e) in self.edges.iter().enumerate() {
            buckets[edge_destination(seed, ordinal as u64, k)].push(e);
        }
        let parts = buckets
            .into_iter()
            .map(|edges| Self::from_sorted(self.p_count, self.q_count, edges))
            .collect();
        Ok(PartitionResult { parts, seed })
    }
}

fn edge_destination(seed: u64, ordinal: u64, k: usize) -> usize {
    if k == 1 {
        return 0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ordinal);
    rng.gen_range(0..k)
}

/// Derives an independent 64-bit seed for sub-task `index` of `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index.wrapping_add(1) << 32);
    rng.next_u64()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionResult {
    pub parts: Vec<BipartiteGraph>,
    pub seed: u64,
}

/// Deduplicated union of graphs over a common vertex set.
pub fn union_graphs(parts: &[BipartiteGraph]) -> Result<BipartiteGraph> {
    let Some(first) = parts.first() else {
        return Ok(BipartiteGraph::empty(0, 0));
    };
    let (p_count, q_count) = (first.p_count, first.q_count);
    let mut edges = Vec::new();
    for g in parts {
        if g.p_count != p_count || g.q_count != q_count {
            return Err(Error::MismatchedCounts(p_count, q_count, g.p_count, g.q_count));
        }
        edges.extend_from_slice(&g.edges);
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(BipartiteGraph::from_sorted(p_count, q_count, edges))
}

/// `t + t` vertices joined by the perfect matching `p_i – q_i`.
pub fn gen_perfect(t: usize) -> BipartiteGraph {
    BipartiteGraph::from_sorted(t, t, (0..t).map(|i| Edge::new(i, i)).collect())
}

/// Each of the `p_count · q_count` pairs is present independently with
/// probability `prob`, drawn in `(p, q)` order from one seeded stream.
pub fn gen_random_bipartite(
    p_count: usize,
    q_count: usize,
    prob: f64,
    seed: u64,
) -> Result<BipartiteGraph> {
    if !(0.0..=1.0).contains(&prob) {
        return Err(Error::Probability(prob));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for p in 0..p_count {
        for q in 0..q_count {
            if rng.gen_bool(prob) {
                edges.push(Edge::new(p, q));
            }
        }
    }
    Ok(BipartiteGraph::from_sorted(p_count, q_count, edges))
}

/// Index ranges of the six vertex groups of the pathological graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathologicalLayout {
    pub r: usize,
    pub k: usize,
    pub p1: Range<usize>,
    pub p2: Range<usize>,
    pub p3: Range<usize>,
    pub q1: Range<usize>,
    pub q2: Range<usize>,
    pub q3: Range<usize>,
}

impl PathologicalLayout {
    pub fn new(r: usize, k: usize) -> Result<Self> {
        if r == 0 || k == 0 || (2 * r) % k != 0 {
            return Err(Error::PathologicalShape { r, k });
        }
        let wide = r + 2 * r / k;
        Ok(PathologicalLayout {
            r,
            k,
            p1: 0..r,
            p2: r..2 * r,
            p3: 2 * r..2 * r + wide,
            q1: 0..wide,
            q2: wide..wide + r,
            q3: wide + r..wide + 2 * r,
        })
    }

    pub fn p_count(&self) -> usize {
        self.p3.end
    }

    pub fn q_count(&self) -> usize {
        self.q3.end
    }

    /// Whether `e` is one of the `P_2 × Q_2` pairs.
    pub fn in_p2_q2(&self, e: Edge) -> bool {
        self.p2.contains(&e.p) && self.q2.contains(&e.q)
    }

    /// Size of the vertex cover `Q_1 ∪ P_3`, which bounds any matching that
    /// avoids `P_2 × Q_2`: `2r + 4r/k`.
    pub fn avoided_bound(&self) -> usize {
        self.q1.len() + self.p3.len()
    }
}

/// The six-group graph on which adversarial skeletons lose a third of the
/// matching.
///
/// Layout: `P = P1 | P2 | P3`, `Q = Q1 | Q2 | Q3` in that order. `P1[i]` is
/// matched to `Q1[i]` (the first `r` vertices of `Q1`), `Q1 × P2` and
/// `Q2 × P3` are complete, `P2[i] – Q2[i]`, and `P3[i] – Q3[i]` for the first
/// `r` vertices of `P3`.
pub fn gen_pathological(r: usize, k: usize) -> Result<BipartiteGraph> {
    let l = PathologicalLayout::new(r, k)?;
    let mut edges = Vec::new();
    for i in 0..r {
        edges.push(Edge::new(l.p1.start + i, l.q1.start + i));
    }
    for p in l.p2.clone() {
        for q in l.q1.clone() {
            edges.push(Edge::new(p, q));
        }
    }
    for i in 0..r {
        edges.push(Edge::new(l.p2.start + i, l.q2.start + i));
    }
    for p in l.p3.clone() {
        for q in l.q2.clone() {
            edges.push(Edge::new(p, q));
        }
    }
    for i in 0..r {
        edges.push(Edge::new(l.p3.start + i, l.q3.start + i));
    }
    BipartiteGraph::new(l.p_count(), l.q_count(), edges)
}

/// How the edge-list parser treats a repeated `e` line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Duplicates {
    Reject,
    Collapse,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedGraph {
    pub graph: BipartiteGraph,
    /// Number of duplicate edge lines that were collapsed.
    pub duplicates: usize,
}

/// Serialises `g` in the edge-list format:
///
/// ```text
/// p <p_count> <q_count> <m>
/// e <p_index> <q_index>
/// ```
pub fn write_edge_list(g: &BipartiteGraph) -> String {
    let mut out = String::with_capacity(16 + 12 * g.edge_count());
    out.push_str(&format!("p {} {} {}\n", g.p_count, g.q_count, g.edge_count()));
    for e in &g.edges {
        out.push_str(&format!("e {} {}\n", e.p, e.q));
    }
    out
}

pub fn parse_edge_list(text: &str, duplicates: Duplicates) -> Result<ParsedGraph> {
    let parse_err = |line: usize, reason: String| Error::Parse { line, reason };
    let mut header: Option<(usize, usize, usize)> = None;
    let mut edges = Vec::new();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let tag = fields.next().unwrap_or_default();
        let nums: Vec<usize> = fields
            .map(|f| f.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(lineno, format!("bad integer: {e}")))?;
        match (tag, nums.as_slice()) {
            ("p", &[p, q, m]) => {
                if header.is_some() {
                    return Err(parse_err(lineno, "second header line".into()));
                }
                header = Some((p, q, m));
            }
            ("e", &[p, q]) => {
                let Some((pc, qc, _)) = header else {
                    return Err(parse_err(lineno, "edge before header".into()));
                };
                if p >= pc || q >= qc {
                    return Err(parse_err(lineno, format!("edge (p{p}, q{q}) out of range")));
                }
                lines.push(lineno);
                edges.push(Edge::new(p, q));
            }
            _ => return Err(parse_err(lineno, format!("unrecognised line `{line}`"))),
        }
    }
    let (p_count, q_count, m) = header.ok_or_else(|| parse_err(0, "missing header".into()))?;
    if edges.len() != m {
        return Err(parse_err(0, format!("header declares {m} edges, found {}", edges.len())));
    }
    let mut sorted = edges.clone();
    sorted.sort_unstable();
    let before = sorted.len();
    sorted.dedup();
    let dup_count = before - sorted.len();
    if dup_count > 0 && duplicates == Duplicates::Reject {
        let mut seen = BTreeSet::new();
        let i = edges.iter().position(|e| !seen.insert(*e)).expect("duplicate exists");
        return Err(parse_err(lines[i], format!("duplicate edge {}", edges[i])));
    }
    Ok(ParsedGraph {
        graph: BipartiteGraph::from_sorted(p_count, q_count, sorted),
        duplicates: dup_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    #[test]
    fn build_graph_examples() {
        let g = BipartiteGraph::new(2, 2, [(0, 0), (1, 1)]).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.vertex_count(), 4);

        let star = BipartiteGraph::new(1, 2, [(0, 0), (0, 1), (0, 0)]).unwrap();
        assert_eq!(star.edge_count(), 2);

        let err = BipartiteGraph::new(2, 1, [(0, 5)]).unwrap_err();
        assert_eq!(err, Error::EdgeOutOfRange { edge: Edge::new(0, 5), p_count: 2, q_count: 1 });
        assert!(err.to_string().contains("(p0, q5)"));
    }

    #[test]
    fn neighbors_examples() {
        let star = BipartiteGraph::new(1, 2, [(0, 0), (0, 1)]).unwrap();
        assert_eq!(star.neighbors(&set(&[0])).unwrap(), set(&[0, 1]));
        assert_eq!(star.neighbors(&set(&[])).unwrap(), set(&[]));
        let g = BipartiteGraph::new(2, 1, [(0, 0), (1, 0)]).unwrap();
        assert_eq!(g.neighbors(&set(&[0, 1])).unwrap(), set(&[0]));
        assert!(g.neighbors(&set(&[2])).is_err());
    }

    #[test]
    fn partition_with_one_part_is_identity() {
        let g = gen_random_bipartite(20, 20, 0.3, 5).unwrap();
        let part = g.random_k_partition(1, 99).unwrap();
        assert_eq!(part.parts, vec![g]);
        assert_eq!(g_err(), Error::ZeroParts);
    }

    fn g_err() -> Error {
        gen_perfect(2).random_k_partition(0, 1).unwrap_err()
    }

    #[test]
    fn partition_sizes() {
        let g = gen_random_bipartite(30, 30, 0.12, 3).unwrap();
        let g = g.filter_edges({
            let mut n = 0;
            move |_| {
                n += 1;
                n <= 100
            }
        });
        assert_eq!(g.edge_count(), 100);
        let part = g.random_k_partition(10, 17).unwrap();
        assert_eq!(part.parts.iter().map(|p| p.edge_count()).sum::<usize>(), 100);

        let big = gen_random_bipartite(100, 100, 1.0, 0).unwrap();
        assert_eq!(big.edge_count(), 10_000);
        let part = big.random_k_partition(10, 2024).unwrap();
        for p in &part.parts {
            assert!((800..=1200).contains(&p.edge_count()), "part size {}", p.edge_count());
        }
    }

    #[test]
    fn union_examples() {
        let g = gen_random_bipartite(15, 12, 0.4, 8).unwrap();
        assert_eq!(union_graphs(&[g.clone(), g.clone()]).unwrap(), g);
        let a = BipartiteGraph::new(2, 2, [(0, 0)]).unwrap();
        let b = BipartiteGraph::new(2, 2, [(1, 1)]).unwrap();
        assert_eq!(union_graphs(&[a.clone(), b]).unwrap().edge_count(), 2);
        let c = BipartiteGraph::new(3, 2, [(1, 1)]).unwrap();
        assert!(matches!(union_graphs(&[a, c]), Err(Error::MismatchedCounts(..))));
    }

    #[test]
    fn pathological_shape() {
        let g = gen_pathological(500, 20).unwrap();
        assert_eq!(g.vertex_count(), 3100);
        let g = gen_pathological(10, 10).unwrap();
        let l = PathologicalLayout::new(10, 10).unwrap();
        assert_eq!(l.q1.len(), 12);
        assert_eq!(g.edge_count(), 270);
        assert_eq!(l.avoided_bound(), 24);
        assert_eq!(gen_pathological(10, 3).unwrap_err(), Error::PathologicalShape { r: 10, k: 3 });
    }

    #[test]
    fn random_generator_bounds() {
        assert_eq!(gen_random_bipartite(10, 10, 0.0, 1).unwrap().edge_count(), 0);
        assert_eq!(gen_random_bipartite(10, 7, 1.0, 1).unwrap().edge_count(), 70);
        let m = gen_random_bipartite(100, 100, 0.1, 77).unwrap().edge_count();
        assert!((800..=1200).contains(&m), "m = {m}");
        assert!(gen_random_bipartite(3, 3, 1.5, 1).is_err());
        assert!(gen_random_bipartite(3, 3, -0.1, 1).is_err());
    }

    #[test]
    fn edge_list_parsing() {
        let text = "# comment\np 2 3 3\ne 0 0\ne 1 2\ne 0 0\n";
        assert!(parse_edge_list(text, Duplicates::Reject).is_err());
        let parsed = parse_edge_list(text, Duplicates::Collapse).unwrap();
        assert_eq!(parsed.duplicates, 1);
        assert_eq!(parsed.graph.edge_count(), 2);
        assert!(parse_edge_list("p 1 1 1\ne 0 1\n", Duplicates::Reject).is_err());
        assert!(parse_edge_list("e 0 0\n", Duplicates::Reject).is_err());
        assert!(parse_edge_list("p 1 1 2\ne 0 0\n", Duplicates::Reject).is_err());
        assert!(parse_edge_list("p 1 1 1\nx 0 0\n", Duplicates::Reject).is_err());
    }

    fn arb_graph() -> impl Strategy<Value = BipartiteGraph> {
        (0usize..10, 0usize..10, any::<u64>(), 0.0f64..1.0)
            .prop_map(|(p, q, seed, prob)| gen_random_bipartite(p, q, prob, seed).unwrap())
    }

    proptest! {
        #[test]
        fn partition_union_is_identity(g in arb_graph(), k in 1usize..8, seed in any::<u64>()) {
            let part = g.random_k_partition(k, seed).unwrap();
            prop_assert_eq!(part.parts.len(), k);
            let total: usize = part.parts.iter().map(|p| p.edge_count()).sum();
            prop_assert_eq!(total, g.edge_count());
            prop_assert_eq!(union_graphs(&part.parts).unwrap(), g.clone());
            prop_assert_eq!(g.random_k_partition(k, seed).unwrap(), part);
        }

        #[test]
        fn neighbors_monotone(g in arb_graph(), a in any::<u16>(), b in any::<u16>()) {
            let pc = g.p_count();
            let s: BTreeSet<usize> = (0..pc).filter(|i| a >> i & 1 == 1).collect();
            let t: BTreeSet<usize> = s.iter().copied().chain((0..pc).filter(|i| b >> i & 1 == 1)).collect();
            let gs = g.neighbors(&s).unwrap();
            let gt = g.neighbors(&t).unwrap();
            prop_assert!(gs.is_subset(&gt));
        }

        #[test]
        fn edge_list_round_trip(g in arb_graph()) {
            let parsed = parse_edge_list(&write_edge_list(&g), Duplicates::Reject).unwrap();
            prop_assert_eq!(parsed.graph, g);
        }
    }
}
