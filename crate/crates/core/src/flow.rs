//! Dinic max-flow on integer capacities.
//!
//! Arc order is insertion order and every search scans arcs in that order, so
//! the resulting flow is a deterministic function of how the network was
//! built.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: i64,
}

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    arcs: Vec<Arc>,
    original: Vec<i64>,
    out: Vec<Vec<usize>>,
    level: Vec<u32>,
    cursor: Vec<usize>,
}

/// Handle to a forward arc; its reverse twin is `id ^ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArcId(usize);

const UNSEEN: u32 = u32::MAX;

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork {
            arcs: Vec::new(),
            original: Vec::new(),
            out: vec![Vec::new(); nodes],
            level: Vec::new(),
            cursor: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.out.len()
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cap: i64) -> ArcId {
        debug_assert!(cap >= 0);
        let id = self.arcs.len();
        self.arcs.push(Arc { to, cap });
        self.arcs.push(Arc { to: from, cap: 0 });
        self.original.push(cap);
        self.original.push(0);
        self.out[from].push(id);
        self.out[to].push(id + 1);
        ArcId(id)
    }

    /// Flow currently routed through a forward arc.
    pub fn flow(&self, arc: ArcId) -> i64 {
        self.original[arc.0] - self.arcs[arc.0].cap
    }

    pub fn max_flow(&mut self, source: usize, sink: usize) -> i64 {
        let mut total = 0i64;
        while self.build_levels(source, sink) {
            self.cursor = vec![0; self.out.len()];
            loop {
                let pushed = self.augment(source, sink, i64::MAX);
                if pushed == 0 {
                    break;
                }
                total += pushed;
            }
        }
        total
    }

    fn build_levels(&mut self, source: usize, sink: usize) -> bool {
        self.level = vec![UNSEEN; self.out.len()];
        self.level[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.out[u] {
                let arc = &self.arcs[a];
                if arc.cap > 0 && self.level[arc.to] == UNSEEN {
                    self.level[arc.to] = self.level[u] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        self.level[sink] != UNSEEN
    }

    // Iterative blocking-flow DFS along the level graph.
    fn augment(&mut self, source: usize, sink: usize, limit: i64) -> i64 {
        let mut path: Vec<usize> = Vec::new();
        let mut u = source;
        loop {
            if u == sink {
                let pushed = path.iter().map(|&a| self.arcs[a].cap).fold(limit, i64::min);
                for &a in &path {
                    self.arcs[a].cap -= pushed;
                    self.arcs[a ^ 1].cap += pushed;
                }
                return pushed;
            }
            let mut advanced = false;
            while self.cursor[u] < self.out[u].len() {
                let a = self.out[u][self.cursor[u]];
                let arc = &self.arcs[a];
                if arc.cap > 0 && self.level[arc.to] == self.level[u] + 1 {
                    path.push(a);
                    u = arc.to;
                    advanced = true;
                    break;
                }
                self.cursor[u] += 1;
            }
            if !advanced {
                // Dead end: retreat and skip the arc that led here.
                self.level[u] = UNSEEN;
                match path.pop() {
                    Some(a) => {
                        u = self.arcs[a ^ 1].to;
                        self.cursor[u] += 1;
                    }
                    None => return 0,
                }
            }
        }
    }

    /// Nodes that can still reach `sink` through arcs with residual capacity.
    /// After a maximum flow, the complement is the source side of the
    /// inclusion-maximal minimum cut.
    pub fn reaches_sink(&self, sink: usize) -> Vec<bool> {
        let mut seen = vec![false; self.out.len()];
        seen[sink] = true;
        let mut queue = VecDeque::from([sink]);
        while let Some(v) = queue.pop_front() {
            for &a in &self.out[v] {
                // a is v -> u; the twin u -> v has residual capacity arcs[a ^ 1].cap
                let u = self.arcs[a].to;
                if !seen[u] && self.arcs[a ^ 1].cap > 0 {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_network() {
        let mut net = FlowNetwork::new(6);
        net.add_arc(0, 1, 10);
        net.add_arc(0, 2, 10);
        net.add_arc(1, 3, 4);
        net.add_arc(1, 4, 8);
        net.add_arc(2, 4, 9);
        net.add_arc(3, 5, 10);
        net.add_arc(4, 3, 6);
        net.add_arc(4, 5, 10);
        assert_eq!(net.max_flow(0, 5), 19);
    }

    #[test]
    fn disconnected_and_flow_readback() {
        let mut net = FlowNetwork::new(4);
        net.add_arc(0, 1, 10);
        net.add_arc(2, 3, 5);
        assert_eq!(net.max_flow(0, 3), 0);

        let mut net = FlowNetwork::new(3);
        let a = net.add_arc(0, 1, 7);
        let b = net.add_arc(1, 2, 3);
        assert_eq!(net.max_flow(0, 2), 3);
        assert_eq!(net.flow(a), 3);
        assert_eq!(net.flow(b), 3);
        let reach = net.reaches_sink(2);
        assert_eq!(reach, vec![false, false, true]);
    }

    // Brute-force min cut over all source/sink bipartitions of a small network.
    fn brute_min_cut(n: usize, arcs: &[(usize, usize, i64)]) -> i64 {
        (0..1u32 << n)
            .filter(|m| m & 1 == 1 && m >> (n - 1) & 1 == 0)
            .map(|m| {
                arcs.iter()
                    .filter(|(u, v, _)| m >> u & 1 == 1 && m >> v & 1 == 0)
                    .map(|a| a.2)
                    .sum::<i64>()
            })
            .min()
            .unwrap()
    }

    proptest::proptest! {
        #[test]
        fn matches_brute_force_cut(raw in proptest::collection::vec((0usize..7, 0usize..7, 0i64..20), 0..25)) {
            let n = 7;
            let arcs: Vec<_> = raw.into_iter().filter(|(u, v, _)| u != v).collect();
            let mut net = FlowNetwork::new(n);
            for &(u, v, c) in &arcs {
                net.add_arc(u, v, c);
            }
            let f = net.max_flow(0, n - 1);
            proptest::prop_assert_eq!(f, brute_min_cut(n, &arcs));
        }
    }
}
