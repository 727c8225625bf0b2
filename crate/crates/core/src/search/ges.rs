use std::collections::{BTreeSet, VecDeque};

use rayon::prelude::*;

use super::{Move, PhaseOrder, SearchConfig, SearchError, SearchOutcome, SearchTrace, TraceRecord};
use crate::graph::{complete_to_cpdag, consistent_extension, Dag, Pdag};
use crate::scoring::{DecomposableScore, ScoreError};

struct Candidate {
    mv: Move,
    delta: f64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    Forward,
    Backward,
}

/// Greedy equivalence search from the empty graph on any decomposable score.
///
/// `max_in_degree` bounds the parent count of every node in every consistent
/// extension of every visited CPDAG.
pub fn ges<S: DecomposableScore>(
    score: &S,
    max_in_degree: Option<usize>,
    cfg: &SearchConfig,
) -> Result<SearchOutcome, SearchError> {
    cfg.validate()?;
    let p = score.node_count();
    let mut g = Pdag::empty(p);
    let mut current = score.graph_score(&Dag::empty(p))?;
    let mut trace = SearchTrace::default();
    let mut limit_hit = false;

    'outer: loop {
        let mut changed = false;
        for phase in [Phase::Forward, Phase::Backward] {
            loop {
                let candidates = match phase {
                    Phase::Forward => collect(p, cfg.parallel, |x| {
                        insert_candidates(score, &g, x, max_in_degree, cfg.epsilon_improve)
                    })?,
                    Phase::Backward => collect(p, cfg.parallel, |x| {
                        delete_candidates(score, &g, x, cfg.epsilon_improve)
                    })?,
                };
                if candidates.is_empty() {
                    break;
                }
                if trace.len() >= cfg.max_moves {
                    limit_hit = true;
                    break 'outer;
                }
                let Some((next, cand)) = pick(&g, candidates, max_in_degree)? else {
                    break;
                };
                trace.records.push(TraceRecord {
                    mv: cand.mv,
                    score_before: current,
                    score_after: current + cand.delta,
                });
                current += cand.delta;
                g = next;
                changed = true;
            }
        }
        if cfg.phase_order == PhaseOrder::ForwardBackward || !changed {
            break;
        }
    }

    Ok(SearchOutcome {
        cpdag: g,
        trace,
        score: current,
        move_limit_exceeded: limit_hit,
    })
}

/// Candidates from every `x`, concatenated in `x` order, then stably sorted
/// by decreasing gain so ties keep the `(x, y, set)` order.
fn collect<F>(p: usize, parallel: bool, per_x: F) -> Result<Vec<Candidate>, SearchError>
where
    F: Fn(usize) -> Result<Vec<Candidate>, SearchError> + Sync,
{
    let parts: Vec<Vec<Candidate>> = if parallel {
        (0..p).into_par_iter().map(&per_x).collect::<Result<_, _>>()?
    } else {
        (0..p).map(&per_x).collect::<Result<_, _>>()?
    };
    let mut all: Vec<Candidate> = parts.into_iter().flatten().collect();
    all.sort_by(|a, b| b.delta.total_cmp(&a.delta));
    Ok(all)
}

/// Applies the best candidate whose result respects the degree bound.
fn pick(
    g: &Pdag,
    candidates: Vec<Candidate>,
    max_in_degree: Option<usize>,
) -> Result<Option<(Pdag, Candidate)>, SearchError> {
    for cand in candidates {
        let next = apply(g, &cand.mv)?;
        if max_in_degree.is_none_or(|d| extension_degree_bound(&next) <= d) {
            return Ok(Some((next, cand)));
        }
    }
    Ok(None)
}

pub(super) fn apply(g: &Pdag, mv: &Move) -> Result<Pdag, SearchError> {
    let mut next = g.clone();
    match mv {
        Move::Insert { x, y, t } => {
            next.add_directed(*x, *y);
            for &t in t {
                next.orient(t, *y);
            }
        }
        Move::Delete { x, y, h } => {
            next.remove_edge(*x, *y);
            for &h in h {
                if next.is_undirected(*y, h) {
                    next.orient(*y, h);
                }
                if next.is_undirected(*x, h) {
                    next.orient(*x, h);
                }
            }
        }
    }
    let dag = consistent_extension(&next)?;
    Ok(complete_to_cpdag(&dag))
}

/// Local score, or `None` when the parent set is too large for the data.
fn local<S: DecomposableScore>(
    score: &S,
    j: usize,
    parents: &BTreeSet<usize>,
) -> Result<Option<f64>, SearchError> {
    let pa: Vec<usize> = parents.iter().copied().collect();
    match score.local_score(j, &pa) {
        Ok(v) => Ok(Some(v)),
        Err(ScoreError::TooManyParents { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn is_clique(g: &Pdag, nodes: &BTreeSet<usize>) -> bool {
    let v: Vec<usize> = nodes.iter().copied().collect();
    v.iter()
        .enumerate()
        .all(|(a, &i)| v[a + 1..].iter().all(|&j| g.is_adjacent(i, j)))
}

/// True when every semi-directed path from `from` to `to` meets `blocked`.
fn paths_blocked(g: &Pdag, from: usize, to: usize, blocked: &BTreeSet<usize>) -> bool {
    let mut seen = vec![false; g.p()];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        for &w in g.children(v).iter().chain(g.neighbors(v)) {
            if w == to {
                return false;
            }
            if !seen[w] && !blocked.contains(&w) {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    true
}

fn insert_candidates<S: DecomposableScore>(
    score: &S,
    g: &Pdag,
    x: usize,
    max_in_degree: Option<usize>,
    eps: f64,
) -> Result<Vec<Candidate>, SearchError> {
    let mut out = Vec::new();
    let adj_x = g.adjacents(x);
    for y in 0..g.p() {
        if y == x || adj_x.contains(&y) {
            continue;
        }
        let na: BTreeSet<usize> = g.neighbors(y).intersection(&adj_x).copied().collect();
        if !is_clique(g, &na) {
            continue;
        }
        let pool: Vec<usize> = g
            .neighbors(y)
            .iter()
            .copied()
            .filter(|t| !adj_x.contains(t))
            .collect();
        let mut base: BTreeSet<usize> = na.union(g.parents(y)).copied().collect();
        let mut t = Vec::new();
        grow_insert(
            score, g, x, y, &pool, 0, &mut t, &mut base, max_in_degree, eps, &mut out,
        )?;
    }
    Ok(out)
}

/// Depth-first over subsets `T` of `pool` that keep `NA ∪ T` a clique.
/// `base` holds `NA ∪ T ∪ pa(y)`.
#[allow(clippy::too_many_arguments)]
fn grow_insert<S: DecomposableScore>(
    score: &S,
    g: &Pdag,
    x: usize,
    y: usize,
    pool: &[usize],
    from: usize,
    t: &mut Vec<usize>,
    base: &mut BTreeSet<usize>,
    max_in_degree: Option<usize>,
    eps: f64,
    out: &mut Vec<Candidate>,
) -> Result<(), SearchError> {
    if max_in_degree.is_some_and(|d| base.len() + 1 > d) {
        return Ok(());
    }
    let na_t: BTreeSet<usize> = base.difference(g.parents(y)).copied().collect();
    if paths_blocked(g, y, x, &na_t) {
        if let Some(old) = local(score, y, base)? {
            base.insert(x);
            let new = local(score, y, base)?;
            base.remove(&x);
            if let Some(new) = new {
                let delta = new - old;
                if delta >= eps {
                    out.push(Candidate {
                        mv: Move::Insert { x, y, t: t.clone() },
                        delta,
                    });
                }
            }
        }
    }
    for i in from..pool.len() {
        let c = pool[i];
        if na_t.iter().all(|&u| g.is_adjacent(u, c)) {
            t.push(c);
            base.insert(c);
            grow_insert(score, g, x, y, pool, i + 1, t, base, max_in_degree, eps, out)?;
            base.remove(&c);
            t.pop();
        }
    }
    Ok(())
}

fn delete_candidates<S: DecomposableScore>(
    score: &S,
    g: &Pdag,
    x: usize,
    eps: f64,
) -> Result<Vec<Candidate>, SearchError> {
    let mut out = Vec::new();
    let adj_x = g.adjacents(x);
    let targets: BTreeSet<usize> = g.children(x).union(g.neighbors(x)).copied().collect();
    for y in targets {
        let na: Vec<usize> = g
            .neighbors(y)
            .iter()
            .copied()
            .filter(|v| adj_x.contains(v))
            .collect();
        assert!(na.len() < usize::BITS as usize, "neighbourhood too large");
        for mask in 0usize..(1 << na.len()) {
            let h: Vec<usize> = (0..na.len()).filter(|b| mask & (1 << b) != 0).map(|b| na[b]).collect();
            let rest: BTreeSet<usize> = (0..na.len())
                .filter(|b| mask & (1 << b) == 0)
                .map(|b| na[b])
                .collect();
            if !is_clique(g, &rest) {
                continue;
            }
            let mut without: BTreeSet<usize> = rest.union(g.parents(y)).copied().collect();
            without.remove(&x);
            let mut with = without.clone();
            with.insert(x);
            let (Some(new), Some(old)) = (local(score, y, &without)?, local(score, y, &with)?) else {
                continue;
            };
            let delta = new - old;
            if delta >= eps {
                out.push(Candidate {
                    mv: Move::Delete { x, y, h },
                    delta,
                });
            }
        }
    }
    Ok(out)
}

/// Largest parent count any consistent extension can give a node: its
/// directed parents plus the largest clique among its undirected neighbours.
pub(crate) fn extension_degree_bound(g: &Pdag) -> usize {
    (0..g.p())
        .map(|v| {
            let ne: Vec<usize> = g.neighbors(v).iter().copied().collect();
            g.parents(v).len() + max_clique(g, &ne, &mut Vec::new(), 0)
        })
        .max()
        .unwrap_or(0)
}

fn max_clique(g: &Pdag, nodes: &[usize], chosen: &mut Vec<usize>, from: usize) -> usize {
    let mut best = chosen.len();
    for i in from..nodes.len() {
        let c = nodes[i];
        if chosen.iter().all(|&u| g.is_adjacent(u, c)) {
            chosen.push(c);
            best = best.max(max_clique(g, nodes, chosen, i + 1));
            chosen.pop();
        }
    }
    best
}
