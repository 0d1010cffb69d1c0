//! Matching skeletons as randomized composable coresets for bipartite
//! maximum matching.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: the bipartite graph model, generators, random edge
//!   partitioning and the edge-list file format.
//! - [`matching`]: integral and fractional matchings, verifiers, and the
//!   König vertex cover.
//! - [`decomposition`]: the exact block decomposition by expansion level and
//!   the canonical vertex cover.
//! - [`skeleton`]: cycle-free α-matchings per block and the matching skeleton.
//! - [`coreset`]: the distributed coreset simulation and experiments.
//! - [`cli`]: the `mskel` command-line front end.

pub mod cli;
pub mod coreset;
pub mod decomposition;
mod error;
pub mod flow;
pub mod graph;
pub mod matching;
pub mod rational;
pub mod skeleton;

pub use error::{Error, Result};
pub use graph::{BipartiteGraph, Edge, Side, VertexRef};
pub use rational::{Level, Rational};
