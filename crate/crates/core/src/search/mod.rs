//! Greedy equivalence search over CPDAGs.
//!
//! The forward phase applies `Insert(x, y, T)` moves and the backward phase
//! `Delete(x, y, H)` moves, each chosen by best improvement of a
//! decomposable score. [`ges_fit`] runs it on the joint score,
//! [`separate_fit`] once per class, and [`gies_fit`] on the interventional
//! score. [`exhaustive_best_dag`] is a brute-force reference for tiny graphs.

mod exhaustive;
mod ges;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use std::collections::BTreeSet;

use crate::graph::{
    consistent_extension, enumerate_class, interventional_essential_graph, Dag, GraphError, Pdag,
};
use crate::scoring::{DecomposableScore, MultiDataset, ScoreConfig, ScoreError, ScoreKind, Scorer};

pub use exhaustive::{exhaustive_best_dag, ExhaustiveResult, EXHAUSTIVE_MAX_P};
pub use ges::ges;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("exhaustive search supports at most {max} nodes, got {p}")]
    TooLarge { p: usize, max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PhaseOrder {
    /// One forward phase, then one backward phase.
    #[default]
    ForwardBackward,
    /// Repeat forward and backward phases until neither changes the graph.
    IterateToFixedPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MoveSelection {
    #[default]
    BestImprovement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Bound `d` on the parent count of every node in every consistent
    /// extension. Combined with the score config's bound (smaller wins).
    pub max_in_degree: Option<usize>,
    pub phase_order: PhaseOrder,
    pub move_selection: MoveSelection,
    /// Minimum score gain for a move to be accepted.
    pub epsilon_improve: f64,
    pub max_moves: usize,
    /// Evaluate candidate moves on the rayon pool.
    pub parallel: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_in_degree: None,
            phase_order: PhaseOrder::ForwardBackward,
            move_selection: MoveSelection::BestImprovement,
            epsilon_improve: 1e-9,
            max_moves: 100_000,
            parallel: true,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if !(self.epsilon_improve >= 0.0) || !self.epsilon_improve.is_finite() {
            return Err(SearchError::InvalidConfig(format!(
                "epsilon_improve must be a finite non-negative number, got {}",
                self.epsilon_improve
            )));
        }
        if self.max_moves == 0 {
            return Err(SearchError::InvalidConfig("max_moves must be at least 1".into()));
        }
        Ok(())
    }

    fn effective_degree(&self, scfg: &ScoreConfig) -> Option<usize> {
        match (self.max_in_degree, scfg.max_in_degree) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Move {
    Insert { x: usize, y: usize, t: Vec<usize> },
    Delete { x: usize, y: usize, h: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    #[serde(rename = "move")]
    pub mv: Move,
    pub score_before: f64,
    pub score_after: f64,
}

impl TraceRecord {
    pub fn delta(&self) -> f64 {
        self.score_after - self.score_before
    }
}

/// Accepted moves in order, with the running class score.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub records: Vec<TraceRecord>,
}

impl SearchTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// One JSON object per accepted move, newline-terminated.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_json_lines(text: &str) -> Result<Self, serde_json::Error> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(SearchTrace { records })
    }
}

/// Result of one greedy search.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub cpdag: Pdag,
    pub trace: SearchTrace,
    /// Score of the final class (any consistent extension).
    pub score: f64,
    /// Set when `max_moves` stopped the search early; `cpdag` is then the
    /// best graph reached so far.
    pub move_limit_exceeded: bool,
}

/// jointGES step 1: greedy search on the joint score of all classes.
pub fn ges_fit(
    data: &MultiDataset,
    scfg: &ScoreConfig,
    cfg: &SearchConfig,
) -> Result<SearchOutcome, SearchError> {
    let scorer = Scorer::new(data, *scfg, ScoreKind::Observational);
    ges(&scorer, cfg.effective_degree(scfg), cfg)
}

/// GES on each class alone, with the penalty rescaled to the class size when
/// `scfg` carries a scaling constant.
pub fn separate_fit(
    data: &MultiDataset,
    scfg: &ScoreConfig,
    cfg: &SearchConfig,
) -> Result<Vec<SearchOutcome>, SearchError> {
    let run = |k: usize| {
        let single = data.single_class(k);
        let class_cfg = scfg.rescaled_for(data.p(), data.n_k(k));
        ges_fit(&single, &class_cfg, cfg)
    };
    if cfg.parallel {
        (0..data.n_classes()).into_par_iter().map(run).collect()
    } else {
        (0..data.n_classes()).map(run).collect()
    }
}

/// Class members scored when picking the best DAG after an interventional
/// search.
pub const GIES_CLASS_CAP: usize = 10_000;

/// Result of [`gies_fit`].
#[derive(Debug, Clone)]
pub struct GiesOutcome {
    /// Greedy search over observational CPDAGs on the interventional score.
    pub search: SearchOutcome,
    /// Highest interventional score among the members of `search.cpdag`.
    pub dag: Dag,
    pub dag_score: f64,
    /// Essential graph of `dag` under the dataset's intervention family.
    pub essential: Pdag,
    /// Set when the class had more than [`GIES_CLASS_CAP`] members.
    pub class_truncated: bool,
}

/// Greedy search on the interventional score. The interventional score
/// separates members of one observational class, so the best member of the
/// final class is reported alongside its interventional essential graph.
/// Without an intervention spec the search part equals [`ges_fit`].
pub fn gies_fit(
    data: &MultiDataset,
    scfg: &ScoreConfig,
    cfg: &SearchConfig,
) -> Result<GiesOutcome, SearchError> {
    let scorer = Scorer::new(data, *scfg, ScoreKind::Interventional);
    let degree = cfg.effective_degree(scfg);
    let search = ges(&scorer, degree, cfg)?;
    let class = enumerate_class(&search.cpdag, GIES_CLASS_CAP);
    let mut best: Option<(f64, Dag)> = None;
    for dag in class.dags {
        if degree.is_some_and(|d| dag.max_in_degree() > d) {
            continue;
        }
        let s = scorer.graph_score(&dag)?;
        if best.as_ref().is_none_or(|(b, _)| s > b + 1e-12) {
            best = Some((s, dag));
        }
    }
    let (dag_score, dag) = match best {
        Some(b) => b,
        None => {
            let dag = consistent_extension(&search.cpdag)?;
            (scorer.graph_score(&dag)?, dag)
        }
    };
    let targets: Vec<BTreeSet<usize>> = data
        .interventions()
        .map(|spec| spec.iter().cloned().collect())
        .unwrap_or_default();
    let essential = interventional_essential_graph(&dag, &targets);
    Ok(GiesOutcome {
        search,
        dag,
        dag_score,
        essential,
        class_truncated: class.truncated,
    })
}
