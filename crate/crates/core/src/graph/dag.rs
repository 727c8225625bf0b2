use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use super::{check_node, GraphError, Pdag};

/// A directed acyclic graph on nodes `0..p`.
///
/// Construction validates the DAG invariants, so every `Dag` value is acyclic,
/// loop-free and has at most one edge per unordered node pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    p: usize,
    parents: Vec<BTreeSet<usize>>,
    children: Vec<BTreeSet<usize>>,
}

impl Dag {
    pub fn empty(p: usize) -> Self {
        Dag {
            p,
            parents: vec![BTreeSet::new(); p],
            children: vec![BTreeSet::new(); p],
        }
    }

    /// Builds a DAG from `i -> j` pairs.
    pub fn new<I>(p: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut dag = Dag::empty(p);
        for (i, j) in edges {
            check_node(i, p)?;
            check_node(j, p)?;
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            if dag.children[i].contains(&j) {
                return Err(GraphError::DuplicateEdge(i, j));
            }
            if dag.children[j].contains(&i) {
                return Err(GraphError::ConflictingEdge(i, j));
            }
            dag.children[i].insert(j);
            dag.parents[j].insert(i);
        }
        topological_order(&dag)?;
        Ok(dag)
    }

    /// Builds a DAG from the nonzero pattern of a weight matrix.
    pub fn from_support(weights: &nalgebra::DMatrix<f64>) -> Result<Self, GraphError> {
        let p = weights.nrows();
        if weights.ncols() != p {
            return Err(GraphError::SizeMismatch(p, weights.ncols()));
        }
        let edges = (0..p)
            .flat_map(|i| (0..p).map(move |j| (i, j)))
            .filter(|&(i, j)| weights[(i, j)] != 0.0);
        Dag::new(p, edges)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n_edges(&self) -> usize {
        self.children.iter().map(BTreeSet::len).sum()
    }

    /// Edges in lexicographic `(from, to)` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.children
            .iter()
            .enumerate()
            .flat_map(|(i, ch)| ch.iter().map(move |&j| (i, j)))
    }

    pub fn parents(&self, j: usize) -> &BTreeSet<usize> {
        &self.parents[j]
    }

    pub fn children(&self, i: usize) -> &BTreeSet<usize> {
        &self.children[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.children[i].contains(&j)
    }

    pub fn is_adjacent(&self, i: usize, j: usize) -> bool {
        self.has_edge(i, j) || self.has_edge(j, i)
    }

    pub fn in_degree(&self, j: usize) -> usize {
        self.parents[j].len()
    }

    pub fn max_in_degree(&self) -> usize {
        self.parents.iter().map(BTreeSet::len).max().unwrap_or(0)
    }

    /// The same graph viewed as a PDAG with no undirected edges.
    pub fn to_pdag(&self) -> Pdag {
        Pdag::new(self.p, self.edges(), std::iter::empty())
            .expect("a valid DAG is a valid PDAG")
    }
}

/// A node ordering. `order()[t]` is the node placed at position `t`, and
/// `position(node)` is the inverse map.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    order: Vec<usize>,
    position: Vec<usize>,
}

impl Permutation {
    pub fn identity(p: usize) -> Self {
        Permutation {
            order: (0..p).collect(),
            position: (0..p).collect(),
        }
    }

    pub fn from_order(order: Vec<usize>) -> Result<Self, GraphError> {
        let p = order.len();
        let mut position = vec![usize::MAX; p];
        for (t, &node) in order.iter().enumerate() {
            if node >= p {
                return Err(GraphError::InvalidPermutation(format!(
                    "entry {node} out of range 0..{p}"
                )));
            }
            if position[node] != usize::MAX {
                return Err(GraphError::InvalidPermutation(format!(
                    "node {node} appears twice"
                )));
            }
            position[node] = t;
        }
        Ok(Permutation { order, position })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn position(&self, node: usize) -> usize {
        self.position[node]
    }

    pub fn reversed(&self) -> Self {
        let order: Vec<usize> = self.order.iter().rev().copied().collect();
        Permutation::from_order(order).expect("reversal of a bijection")
    }

    /// True when every edge `i -> j` of `dag` has `position(i) < position(j)`.
    pub fn is_consistent_with(&self, dag: &Dag) -> bool {
        self.len() == dag.p() && dag.edges().all(|(i, j)| self.position(i) < self.position(j))
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = GraphError;

    fn try_from(order: Vec<usize>) -> Result<Self, Self::Error> {
        Permutation::from_order(order)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(perm: Permutation) -> Self {
        perm.order
    }
}

/// Kahn's algorithm, always emitting the smallest available node index next.
pub fn topological_order(dag: &Dag) -> Result<Permutation, GraphError> {
    let p = dag.p();
    let mut indeg: Vec<usize> = (0..p).map(|j| dag.in_degree(j)).collect();
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..p).filter(|&j| indeg[j] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(p);
    while let Some(Reverse(node)) = ready.pop() {
        order.push(node);
        for &child in dag.children(node) {
            indeg[child] -= 1;
            if indeg[child] == 0 {
                ready.push(Reverse(child));
            }
        }
    }
    if order.len() != p {
        return Err(GraphError::CycleDetected);
    }
    Permutation::from_order(order)
}
