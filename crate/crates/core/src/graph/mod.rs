//! Directed and partially directed graphs over a fixed node set `0..p`.
//!
//! [`Dag`] holds one DAG, [`Pdag`] holds PDAGs and CPDAGs (explicit directed
//! and undirected edge sets), and [`Permutation`] holds a node ordering. The
//! equivalence-class machinery (CPDAG completion, consistent extensions, class
//! enumeration) lives in [`equivalence`], metrics in [`metrics`] and the
//! edge-list text format in [`io`].

mod dag;
pub mod equivalence;
pub mod io;
pub mod metrics;
mod pdag;

pub use dag::{topological_order, Dag, Permutation};
pub use equivalence::{
    complete_to_cpdag, consistent_extension, enumerate_class, interventional_essential_graph,
    skeleton_vstructures,
    ClassEnumeration,
};
pub use metrics::{shd, union_graph, EdgeMark};
pub use pdag::Pdag;

use thiserror::Error;

/// Errors raised by graph construction and graph operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("node {node} out of range for a graph on {p} nodes")]
    NodeOutOfRange { node: usize, p: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("edge {0} -> {1} listed more than once")]
    DuplicateEdge(usize, usize),
    #[error("edges {0} -> {1} and {1} -> {0} both present")]
    ConflictingEdge(usize, usize),
    #[error("graph contains a directed cycle")]
    CycleDetected,
    #[error("graphs have different node counts ({0} vs {1})")]
    SizeMismatch(usize, usize),
    #[error("PDAG admits no consistent extension")]
    NoExtension,
    #[error("union of the class DAGs contains a cycle")]
    UnionCyclic,
    #[error("union of an empty list of graphs")]
    EmptyUnion,
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("edge list parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub(crate) fn check_node(node: usize, p: usize) -> Result<(), GraphError> {
    if node >= p {
        Err(GraphError::NodeOutOfRange { node, p })
    } else {
        Ok(())
    }
}
