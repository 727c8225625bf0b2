use super::SearchError;
use crate::graph::Dag;
use crate::scoring::DecomposableScore;

/// Largest node count accepted by [`exhaustive_best_dag`].
pub const EXHAUSTIVE_MAX_P: usize = 5;

#[derive(Debug, Clone)]
pub struct ExhaustiveResult {
    pub dag: Dag,
    pub score: f64,
    /// Number of DAGs scored.
    pub visited: usize,
}

/// Scores every DAG on `p ≤ 5` nodes and returns the best one.
///
/// Scores within `1e-9` of each other count as tied; ties go to fewer edges,
/// then to the lexicographically smaller sorted edge list. DAGs exceeding
/// `max_in_degree` or too dense for the sample size are skipped.
pub fn exhaustive_best_dag<S: DecomposableScore>(
    score: &S,
    max_in_degree: Option<usize>,
) -> Result<ExhaustiveResult, SearchError> {
    let p = score.node_count();
    if p > EXHAUSTIVE_MAX_P {
        return Err(SearchError::TooLarge {
            p,
            max: EXHAUSTIVE_MAX_P,
        });
    }
    let pairs: Vec<(usize, usize)> = (0..p)
        .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
        .collect();
    let total = 3usize.pow(pairs.len() as u32);
    let mut best: Option<(f64, Vec<(usize, usize)>)> = None;
    let mut visited = 0;
    for code in 0..total {
        let mut c = code;
        let mut edges = Vec::new();
        for &(i, j) in &pairs {
            match c % 3 {
                1 => edges.push((i, j)),
                2 => edges.push((j, i)),
                _ => {}
            }
            c /= 3;
        }
        let Ok(dag) = Dag::new(p, edges) else {
            continue;
        };
        if max_in_degree.is_some_and(|d| dag.max_in_degree() > d) {
            continue;
        }
        let s = match score.graph_score(&dag) {
            Ok(s) => s,
            Err(crate::scoring::ScoreError::TooManyParents { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        visited += 1;
        let edges: Vec<(usize, usize)> = dag.edges().collect();
        let better = match &best {
            None => true,
            Some((bs, be)) => {
                if s > bs + 1e-9 {
                    true
                } else if s < bs - 1e-9 {
                    false
                } else {
                    (edges.len(), &edges) < (be.len(), be)
                }
            }
        };
        if better {
            best = Some((s, edges));
        }
    }
    let (score, edges) = best.expect("the empty graph is always admissible");
    Ok(ExhaustiveResult {
        dag: Dag::new(p, edges)?,
        score,
        visited,
    })
}
