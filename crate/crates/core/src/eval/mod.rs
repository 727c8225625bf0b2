//! Evaluation: confusion counts, the joint-versus-separate comparison, ROC
//! sweeps, stability selection and hub detection.

mod experiment;
mod output;
mod stability;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::metrics::EdgeMarks;
use crate::graph::{Dag, EdgeMark, GraphError};
use crate::refit::{ExtensionChoice, LassoConfig, RefitError};
use crate::scoring::ScoreConfig;
use crate::search::{SearchConfig, SearchError};
use crate::sem::SemError;

pub use experiment::{
    roc_dominance, roc_sweep, run_comparison, run_replicate, ComparisonReport, ExperimentConfig,
    Method, MetricsSummary, PairedDifference, ReplicateFailure, ReplicateOutcome, ReplicateRecord,
    RocDominance, RocPoint, SummaryRow, Timing,
};
pub use output::{write_records_csv, write_roc_csv, write_summary_csv};
pub use stability::{stability_selection, StabilityConfig, StabilityResult};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sem(#[from] SemError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Refit(#[from] RefitError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Settings of one jointGES run (search plus refit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub score: ScoreConfig,
    pub search: SearchConfig,
    pub lasso: LassoConfig,
    pub extension: ExtensionChoice,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            score: ScoreConfig {
                scaling_c: Some(2.0),
                ..ScoreConfig::default()
            },
            search: SearchConfig::default(),
            lasso: LassoConfig::default(),
            extension: ExtensionChoice::Canonical,
        }
    }
}

impl PipelineConfig {
    /// Score settings for a dataset with `p` nodes and `n` rows in total.
    pub fn score_for(&self, p: usize, n: usize) -> ScoreConfig {
        self.score.rescaled_for(p, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ConfusionMode {
    /// Unordered pairs, direction ignored.
    #[default]
    Skeleton,
    /// A pair is a true positive only when both graphs give it the same mark.
    Oriented,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn tpr(&self) -> f64 {
        rate(self.tp, self.tp + self.fn_)
    }

    pub fn fpr(&self) -> f64 {
        rate(self.fp, self.fp + self.tn)
    }
}

fn rate(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Counts over the `C(p, 2)` unordered pairs.
///
/// In oriented mode a present pair with the wrong mark counts as both a
/// false positive and a false negative.
pub fn confusion<A: EdgeMarks, B: EdgeMarks>(
    estimate: &A,
    truth: &B,
    mode: ConfusionMode,
) -> Result<Confusion, GraphError> {
    let p = truth.node_count();
    if estimate.node_count() != p {
        return Err(GraphError::SizeMismatch(estimate.node_count(), p));
    }
    let mut c = Confusion::default();
    for i in 0..p {
        for j in i + 1..p {
            let e = estimate.edge_mark(i, j);
            let t = truth.edge_mark(i, j);
            let (ep, tp) = (e != EdgeMark::None, t != EdgeMark::None);
            match mode {
                ConfusionMode::Skeleton => match (ep, tp) {
                    (true, true) => c.tp += 1,
                    (true, false) => c.fp += 1,
                    (false, true) => c.fn_ += 1,
                    (false, false) => c.tn += 1,
                },
                ConfusionMode::Oriented => {
                    if ep && tp && e == t {
                        c.tp += 1;
                    } else {
                        if ep {
                            c.fp += 1;
                        }
                        if tp {
                            c.fn_ += 1;
                        }
                        if !ep && !tp {
                            c.tn += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(c)
}

/// Nodes whose in-degree plus out-degree is strictly above `min_total_degree`.
pub fn hub_nodes(union: &Dag, min_total_degree: usize) -> Vec<usize> {
    (0..union.p())
        .filter(|&v| union.parents(v).len() + union.children(v).len() > min_total_degree)
        .collect()
}
