use std::collections::BTreeSet;

use super::{check_node, consistent_extension, equivalence, metrics::EdgeMark, Dag, GraphError};

/// A partially directed graph with explicit directed and undirected edge sets.
///
/// The directed part is kept acyclic. CPDAGs and DAGs are special cases; use
/// [`Pdag::is_cpdag`] to check that a value is a valid essential graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pdag {
    p: usize,
    parents: Vec<BTreeSet<usize>>,
    children: Vec<BTreeSet<usize>>,
    neighbors: Vec<BTreeSet<usize>>,
}

impl Pdag {
    pub fn empty(p: usize) -> Self {
        Pdag {
            p,
            parents: vec![BTreeSet::new(); p],
            children: vec![BTreeSet::new(); p],
            neighbors: vec![BTreeSet::new(); p],
        }
    }

    /// Builds a PDAG from directed `i -> j` pairs and undirected `{i, j}` pairs.
    pub fn new<D, U>(p: usize, directed: D, undirected: U) -> Result<Self, GraphError>
    where
        D: IntoIterator<Item = (usize, usize)>,
        U: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Pdag::empty(p);
        for (i, j) in directed {
            g.validate_new_pair(i, j)?;
            g.add_directed(i, j);
        }
        for (i, j) in undirected {
            g.validate_new_pair(i, j)?;
            g.add_undirected(i, j);
        }
        if !g.directed_part_is_acyclic() {
            return Err(GraphError::CycleDetected);
        }
        Ok(g)
    }

    fn validate_new_pair(&self, i: usize, j: usize) -> Result<(), GraphError> {
        check_node(i, self.p)?;
        check_node(j, self.p)?;
        if i == j {
            return Err(GraphError::SelfLoop(i));
        }
        if self.is_adjacent(i, j) {
            return Err(if self.has_directed(i, j) || self.is_undirected(i, j) {
                GraphError::DuplicateEdge(i, j)
            } else {
                GraphError::ConflictingEdge(i, j)
            });
        }
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn parents(&self, j: usize) -> &BTreeSet<usize> {
        &self.parents[j]
    }

    pub fn children(&self, i: usize) -> &BTreeSet<usize> {
        &self.children[i]
    }

    /// Nodes joined to `j` by an undirected edge.
    pub fn neighbors(&self, j: usize) -> &BTreeSet<usize> {
        &self.neighbors[j]
    }

    /// Every node adjacent to `j`, regardless of edge type.
    pub fn adjacents(&self, j: usize) -> BTreeSet<usize> {
        self.parents[j]
            .iter()
            .chain(&self.children[j])
            .chain(&self.neighbors[j])
            .copied()
            .collect()
    }

    pub fn has_directed(&self, i: usize, j: usize) -> bool {
        self.children[i].contains(&j)
    }

    pub fn is_undirected(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].contains(&j)
    }

    pub fn is_adjacent(&self, i: usize, j: usize) -> bool {
        self.has_directed(i, j) || self.has_directed(j, i) || self.is_undirected(i, j)
    }

    pub fn mark(&self, i: usize, j: usize) -> EdgeMark {
        if self.has_directed(i, j) {
            EdgeMark::Forward
        } else if self.has_directed(j, i) {
            EdgeMark::Backward
        } else if self.is_undirected(i, j) {
            EdgeMark::Undirected
        } else {
            EdgeMark::None
        }
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.children
            .iter()
            .enumerate()
            .flat_map(|(i, ch)| ch.iter().map(move |&j| (i, j)))
    }

    /// Undirected edges as `(i, j)` with `i < j`.
    pub fn undirected_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, ne)| ne.range((i + 1)..).map(move |&j| (i, j)))
    }

    pub fn n_directed(&self) -> usize {
        self.children.iter().map(BTreeSet::len).sum()
    }

    pub fn n_undirected(&self) -> usize {
        self.neighbors.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn n_edges(&self) -> usize {
        self.n_directed() + self.n_undirected()
    }

    /// Unordered adjacent pairs `(i, j)`, `i < j`.
    pub fn skeleton(&self) -> BTreeSet<(usize, usize)> {
        self.directed_edges()
            .map(|(i, j)| (i.min(j), i.max(j)))
            .chain(self.undirected_edges())
            .collect()
    }

    pub fn is_dag(&self) -> bool {
        self.n_undirected() == 0
    }

    /// Converts to a [`Dag`] when no undirected edges remain.
    pub fn to_dag(&self) -> Option<Dag> {
        if !self.is_dag() {
            return None;
        }
        Dag::new(self.p, self.directed_edges()).ok()
    }

    pub(crate) fn add_directed(&mut self, i: usize, j: usize) {
        self.children[i].insert(j);
        self.parents[j].insert(i);
    }

    pub(crate) fn add_undirected(&mut self, i: usize, j: usize) {
        self.neighbors[i].insert(j);
        self.neighbors[j].insert(i);
    }

    pub(crate) fn remove_edge(&mut self, i: usize, j: usize) {
        self.children[i].remove(&j);
        self.parents[j].remove(&i);
        self.children[j].remove(&i);
        self.parents[i].remove(&j);
        self.neighbors[i].remove(&j);
        self.neighbors[j].remove(&i);
    }

    /// Turns the undirected edge `i - j` into `i -> j`.
    pub(crate) fn orient(&mut self, i: usize, j: usize) {
        debug_assert!(self.is_undirected(i, j));
        self.neighbors[i].remove(&j);
        self.neighbors[j].remove(&i);
        self.add_directed(i, j);
    }

    pub fn directed_part_is_acyclic(&self) -> bool {
        let mut indeg: Vec<usize> = self.parents.iter().map(BTreeSet::len).collect();
        let mut stack: Vec<usize> = (0..self.p).filter(|&j| indeg[j] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    stack.push(c);
                }
            }
        }
        seen == self.p
    }

    /// True when no Meek rule can orient any further undirected edge.
    pub fn is_meek_closed(&self) -> bool {
        let mut closed = self.clone();
        equivalence::apply_meek_rules(&mut closed);
        closed == *self
    }

    /// True when this PDAG is the essential graph of some Markov equivalence
    /// class: it has a consistent extension whose completion is itself.
    pub fn is_cpdag(&self) -> bool {
        if !self.directed_part_is_acyclic() || !self.is_meek_closed() {
            return false;
        }
        match consistent_extension(self) {
            Ok(dag) => equivalence::complete_to_cpdag(&dag) == *self,
            Err(_) => false,
        }
    }
}

impl From<&Dag> for Pdag {
    fn from(dag: &Dag) -> Self {
        dag.to_pdag()
    }
}
