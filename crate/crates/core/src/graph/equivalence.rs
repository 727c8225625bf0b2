//! Markov equivalence classes: v-structures, CPDAG completion via Meek's
//! orientation rules, consistent extensions and exhaustive class enumeration.

use std::collections::BTreeSet;

use super::{Dag, GraphError, Pdag};

/// Skeleton pairs `(i, j)` with `i < j`, and v-structures `(a, b, c)` meaning
/// `a -> b <- c` with `a`, `c` non-adjacent, reported with `a < c`.
pub fn skeleton_vstructures(
    dag: &Dag,
) -> (BTreeSet<(usize, usize)>, BTreeSet<(usize, usize, usize)>) {
    let skeleton = dag.edges().map(|(i, j)| (i.min(j), i.max(j))).collect();
    let mut vstructs = BTreeSet::new();
    for b in 0..dag.p() {
        let pa: Vec<usize> = dag.parents(b).iter().copied().collect();
        for (x, &a) in pa.iter().enumerate() {
            for &c in &pa[x + 1..] {
                if !dag.is_adjacent(a, c) {
                    vstructs.insert((a, b, c));
                }
            }
        }
    }
    (skeleton, vstructs)
}

/// The essential graph (CPDAG) of the Markov equivalence class of `dag`.
///
/// Starts from the skeleton, orients the v-structures and closes the result
/// under Meek's rules.
pub fn complete_to_cpdag(dag: &Dag) -> Pdag {
    let (skeleton, vstructs) = skeleton_vstructures(dag);
    let mut g = Pdag::empty(dag.p());
    for &(i, j) in &skeleton {
        g.add_undirected(i, j);
    }
    for &(a, b, c) in &vstructs {
        if g.is_undirected(a, b) {
            g.orient(a, b);
        }
        if g.is_undirected(c, b) {
            g.orient(c, b);
        }
    }
    apply_meek_rules(&mut g);
    g
}

/// Applies Meek rules 1-4 until no undirected edge can be oriented.
pub(crate) fn apply_meek_rules(g: &mut Pdag) {
    loop {
        let mut changed = false;
        let undirected: Vec<(usize, usize)> = g.undirected_edges().collect();
        for (i, j) in undirected {
            if !g.is_undirected(i, j) {
                continue;
            }
            if meek_orients(g, i, j) {
                g.orient(i, j);
                changed = true;
            } else if meek_orients(g, j, i) {
                g.orient(j, i);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}

/// Whether some Meek rule forces the undirected edge `a - b` into `a -> b`.
fn meek_orients(g: &Pdag, a: usize, b: usize) -> bool {
    // R1: c -> a - b, c and b non-adjacent
    if g.parents(a).iter().any(|&c| !g.is_adjacent(c, b)) {
        return true;
    }
    // R2: a -> c -> b
    if g.children(a).iter().any(|&c| g.has_directed(c, b)) {
        return true;
    }
    // R3: a - c -> b, a - d -> b, c and d non-adjacent
    let spouses: Vec<usize> = g
        .neighbors(a)
        .iter()
        .copied()
        .filter(|&c| c != b && g.has_directed(c, b))
        .collect();
    for (x, &c) in spouses.iter().enumerate() {
        if spouses[x + 1..].iter().any(|&d| !g.is_adjacent(c, d)) {
            return true;
        }
    }
    // R4: a - c -> d -> b, a adjacent to d, c and b non-adjacent
    for &c in g.neighbors(a) {
        if c == b || g.is_adjacent(c, b) {
            continue;
        }
        if g
            .children(c)
            .iter()
            .any(|&d| d != a && g.has_directed(d, b) && g.is_adjacent(a, d))
        {
            return true;
        }
    }
    false
}

/// Essential graph of `dag` under the intervention families `targets`.
///
/// Starting from the observational CPDAG, every undirected edge with exactly
/// one endpoint in some target set takes its orientation from `dag`, then
/// the Meek rules are closed again. The family is assumed to contain the
/// observational setting (an empty target set).
pub fn interventional_essential_graph(dag: &Dag, targets: &[BTreeSet<usize>]) -> Pdag {
    let mut g = complete_to_cpdag(dag);
    let undirected: Vec<(usize, usize)> = g.undirected_edges().collect();
    for (a, b) in undirected {
        if targets.iter().any(|t| t.contains(&a) != t.contains(&b)) {
            if dag.has_edge(a, b) {
                g.orient(a, b);
            } else {
                g.orient(b, a);
            }
        }
    }
    apply_meek_rules(&mut g);
    g
}

/// One DAG in the class represented by `g` (Dor-Tarsi sink elimination).
///
/// Among the admissible sinks the largest node index is removed first, so an
/// isolated undirected edge `{i, j}` with `i < j` becomes `i -> j`, and a PDAG
/// without undirected edges comes back unchanged.
pub fn consistent_extension(g: &Pdag) -> Result<Dag, GraphError> {
    let p = g.p();
    let mut work = g.clone();
    let mut alive = vec![true; p];
    let mut oriented: Vec<(usize, usize)> = g.directed_edges().collect();
    for _ in 0..p {
        let sink = (0..p)
            .rev()
            .filter(|&x| alive[x])
            .find(|&x| is_admissible_sink(&work, x))
            .ok_or(GraphError::NoExtension)?;
        let undirected: Vec<usize> = work.neighbors(sink).iter().copied().collect();
        for y in undirected {
            oriented.push((y, sink));
        }
        let adj: Vec<usize> = work.adjacents(sink).into_iter().collect();
        for y in adj {
            work.remove_edge(y, sink);
        }
        alive[sink] = false;
    }
    Dag::new(p, oriented).map_err(|_| GraphError::NoExtension)
}

fn is_admissible_sink(g: &Pdag, x: usize) -> bool {
    if !g.children(x).is_empty() {
        return false;
    }
    let adj = g.adjacents(x);
    g.neighbors(x)
        .iter()
        .all(|&y| adj.iter().all(|&z| z == y || g.is_adjacent(y, z)))
}

/// All DAGs of an equivalence class, possibly truncated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassEnumeration {
    pub dags: Vec<Dag>,
    pub truncated: bool,
}

/// Every consistent extension of `g` that creates no new v-structure.
///
/// Undirected edges are visited in lexicographic order and tried as `i -> j`
/// before `j -> i`, which fixes the output order. At most `cap` DAGs are
/// returned; `truncated` reports whether more exist.
pub fn enumerate_class(g: &Pdag, cap: usize) -> ClassEnumeration {
    let undirected: Vec<(usize, usize)> = g.undirected_edges().collect();
    let mut state = EnumState {
        target: g,
        undirected: &undirected,
        cap,
        dags: Vec::new(),
        truncated: false,
    };
    let mut work = g.clone();
    state.recurse(&mut work, 0);
    ClassEnumeration {
        dags: state.dags,
        truncated: state.truncated,
    }
}

struct EnumState<'a> {
    target: &'a Pdag,
    undirected: &'a [(usize, usize)],
    cap: usize,
    dags: Vec<Dag>,
    truncated: bool,
}

impl EnumState<'_> {
    fn recurse(&mut self, work: &mut Pdag, idx: usize) {
        if self.truncated {
            return;
        }
        if idx == self.undirected.len() {
            let Some(dag) = work.to_dag() else { return };
            if complete_to_cpdag(&dag) != *self.target {
                return;
            }
            if self.dags.len() == self.cap {
                self.truncated = true;
                return;
            }
            self.dags.push(dag);
            return;
        }
        let (i, j) = self.undirected[idx];
        for (from, to) in [(i, j), (j, i)] {
            work.orient(from, to);
            if !self.creates_cycle(work, from, to) && !self.creates_vstructure(work, from, to) {
                self.recurse(work, idx + 1);
            }
            work.remove_edge(from, to);
            work.add_undirected(from, to);
            if self.truncated {
                return;
            }
        }
    }

    /// After adding `from -> to`: is there a directed path `to ~> from`?
    fn creates_cycle(&self, work: &Pdag, from: usize, to: usize) -> bool {
        let mut seen = vec![false; work.p()];
        let mut stack = vec![to];
        while let Some(v) = stack.pop() {
            if v == from {
                return true;
            }
            for &c in work.children(v) {
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        false
    }

    /// A freshly oriented edge into `to` may not meet a non-adjacent parent.
    fn creates_vstructure(&self, work: &Pdag, from: usize, to: usize) -> bool {
        work.parents(to)
            .iter()
            .any(|&w| w != from && !work.is_adjacent(w, from))
    }
}
