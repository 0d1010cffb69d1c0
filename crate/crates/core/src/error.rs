use crate::graph::Edge;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("edge {edge} out of range for graph with |P| = {p_count}, |Q| = {q_count}")]
    EdgeOutOfRange {
        edge: Edge,
        p_count: usize,
        q_count: usize,
    },
    #[error("vertex index {index} out of range for side {side} of size {bound}")]
    VertexOutOfRange {
        side: char,
        index: usize,
        bound: usize,
    },
    #[error("number of parts must be at least 1")]
    ZeroParts,
    #[error("graphs disagree on vertex counts: ({0}, {1}) vs ({2}, {3})")]
    MismatchedCounts(usize, usize, usize, usize),
    #[error("pathological graph needs r >= 1, k >= 1 and k | 2r (got r = {r}, k = {k})")]
    PathologicalShape { r: usize, k: usize },
    #[error("edge probability {0} is outside [0, 1]")]
    Probability(f64),
    #[error("oracle guard exceeded: {what} is {actual}, limit {limit}")]
    OracleGuard {
        what: &'static str,
        actual: usize,
        limit: usize,
    },
    #[error("empty P-set")]
    EmptyPSet,
    #[error("edge {0} lies in the skeleton support and cannot be removed")]
    RemovedSkeletonEdge(Edge),
    #[error("edge {0} violates alpha(p) >= alpha(q)")]
    AlphaOrder(Edge),
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },
}
