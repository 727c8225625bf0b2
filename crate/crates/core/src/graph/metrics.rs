use serde::{Deserialize, Serialize};

use super::{Dag, GraphError, Pdag};

/// State of the unordered pair `(i, j)` seen from `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeMark {
    None,
    /// `i -> j`
    Forward,
    /// `j -> i`
    Backward,
    Undirected,
}

/// Graphs that can report an [`EdgeMark`] for every node pair.
pub trait EdgeMarks {
    fn node_count(&self) -> usize;
    fn edge_mark(&self, i: usize, j: usize) -> EdgeMark;
}

impl EdgeMarks for Dag {
    fn node_count(&self) -> usize {
        self.p()
    }

    fn edge_mark(&self, i: usize, j: usize) -> EdgeMark {
        if self.has_edge(i, j) {
            EdgeMark::Forward
        } else if self.has_edge(j, i) {
            EdgeMark::Backward
        } else {
            EdgeMark::None
        }
    }
}

impl EdgeMarks for Pdag {
    fn node_count(&self) -> usize {
        self.p()
    }

    fn edge_mark(&self, i: usize, j: usize) -> EdgeMark {
        self.mark(i, j)
    }
}

/// Structural Hamming distance: the number of unordered node pairs whose
/// edge state differs. Adding, deleting, reversing, directing or undirecting
/// an edge each count as one operation.
pub fn shd<A: EdgeMarks, B: EdgeMarks>(a: &A, b: &B) -> Result<usize, GraphError> {
    let p = a.node_count();
    if b.node_count() != p {
        return Err(GraphError::SizeMismatch(p, b.node_count()));
    }
    let mut dist = 0;
    for i in 0..p {
        for j in (i + 1)..p {
            if a.edge_mark(i, j) != b.edge_mark(i, j) {
                dist += 1;
            }
        }
    }
    Ok(dist)
}

/// Union of the edge sets of DAGs sharing one node set.
pub fn union_graph(dags: &[Dag]) -> Result<Dag, GraphError> {
    let first = dags.first().ok_or(GraphError::EmptyUnion)?;
    let p = first.p();
    let mut edges = std::collections::BTreeSet::new();
    for d in dags {
        if d.p() != p {
            return Err(GraphError::SizeMismatch(p, d.p()));
        }
        edges.extend(d.edges());
    }
    Dag::new(p, edges).map_err(|e| match e {
        GraphError::ConflictingEdge(..) | GraphError::CycleDetected => GraphError::UnionCyclic,
        other => other,
    })
}
