use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{confusion, ConfusionMode, EvalError};
use crate::graph::{complete_to_cpdag, shd, Dag, Pdag};
use crate::refit::{joint_ges, ExtensionChoice, LassoConfig};
use crate::scoring::{MultiDataset, ScoreConfig};
use crate::search::{separate_fit, SearchConfig};
use crate::sem::{random_joint_model, sample, JointModelConfig};

/// A simulation study comparing jointGES with per-class GES.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: JointModelConfig,
    /// Rows drawn from every class.
    pub samples_per_class: usize,
    pub replicates: usize,
    /// Scaling constants `c` for the SHD comparison, `λ₁² = c · log(p) / n`.
    pub scaling_grid: Vec<f64>,
    /// Scaling constants swept for the ROC curves.
    pub tuning_grid: Vec<f64>,
    pub master_seed: u64,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub lasso: LassoConfig,
    #[serde(default)]
    pub roc_mode: ConfusionMode,
    /// Run replicates on the rayon pool.
    #[serde(default = "yes")]
    pub parallel: bool,
}

fn yes() -> bool {
    true
}

impl ExperimentConfig {
    /// Reduced-size version of the paper's simulation.
    pub fn desk_scale() -> Self {
        ExperimentConfig {
            model: JointModelConfig {
                p: 30,
                k: 3,
                core_edges: 30.0,
                extra_edges: 10,
                ..Default::default()
            },
            samples_per_class: 100,
            replicates: 20,
            scaling_grid: vec![2.0, 3.0, 4.0],
            tuning_grid: vec![0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 20.0],
            master_seed: 2024,
            search: SearchConfig::default(),
            lasso: LassoConfig::default(),
            roc_mode: ConfusionMode::Skeleton,
            parallel: true,
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: &str| Err(EvalError::Config(m.to_string()));
        self.model.validate()?;
        self.search.validate()?;
        self.lasso.validate()?;
        if self.replicates == 0 {
            return bad("replicates: must be at least 1");
        }
        if self.samples_per_class < 2 {
            return bad("samples_per_class: must be at least 2");
        }
        if self.scaling_grid.is_empty() {
            return bad("scaling_grid: must not be empty");
        }
        if self.tuning_grid.is_empty() {
            return bad("tuning_grid: must not be empty");
        }
        let grids = self.scaling_grid.iter().chain(&self.tuning_grid);
        if grids.into_iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return bad("scaling_grid/tuning_grid: values must be finite and non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// jointGES: joint search, then per-class lasso refits (class DAGs).
    Joint,
    /// GES on each class alone (class CPDAGs).
    Separate,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Joint => "joint",
            Method::Separate => "separate",
        }
    }
}

/// One method at one tuning value on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub method: Method,
    pub c: f64,
    pub class_shd: Vec<usize>,
    pub class_tpr: Vec<f64>,
    pub class_fpr: Vec<f64>,
}

impl ReplicateRecord {
    pub fn mean_shd(&self) -> f64 {
        mean(&self.class_shd.iter().map(|&s| s as f64).collect::<Vec<_>>())
    }

    pub fn mean_tpr(&self) -> f64 {
        mean(&self.class_tpr)
    }

    pub fn mean_fpr(&self) -> f64 {
        mean(&self.class_fpr)
    }
}

/// Estimated graphs of one replicate at one tuning value.
#[derive(Debug, Clone)]
pub struct ReplicateOutcome {
    pub truth: Vec<Dag>,
    pub joint: Vec<Dag>,
    pub separate: Vec<Pdag>,
    pub records: [ReplicateRecord; 2],
    pub seconds: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub c: f64,
    pub replicates: usize,
    pub mean_shd: f64,
    pub se_shd: f64,
    pub mean_tpr: f64,
    pub mean_fpr: f64,
}

/// Per-replicate `SHD(separate) − SHD(joint)`, aggregated at one `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDifference {
    pub c: f64,
    pub replicates: usize,
    pub mean: f64,
    pub se: f64,
}

impl PairedDifference {
    /// Joint SHD is lower by more than one standard error.
    pub fn joint_better(&self) -> bool {
        self.mean > 0.0 && self.mean > self.se
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub rows: Vec<SummaryRow>,
    pub paired: Vec<PairedDifference>,
    pub failures: Vec<ReplicateFailure>,
    pub replicates_requested: usize,
    pub shd_convention: String,
    pub roc_mode: ConfusionMode,
}

impl MetricsSummary {
    pub fn success_fraction(&self) -> f64 {
        let failed: std::collections::BTreeSet<usize> =
            self.failures.iter().map(|f| f.replicate).collect();
        1.0 - failed.len() as f64 / self.replicates_requested.max(1) as f64
    }
}

/// Wall-clock seconds per method, summed over replicates and grid values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub joint_seconds: f64,
    pub separate_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub summary: MetricsSummary,
    pub records: Vec<ReplicateRecord>,
    pub timing: Timing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub method: Method,
    pub c: f64,
    pub fpr: f64,
    pub tpr: f64,
}

pub const SHD_CONVENTION: &str =
    "joint: class DAG vs true class DAG; separate: estimated CPDAG vs CPDAG of true class DAG";

/// Data of replicate `r`: models and samples drawn from stream `r` of the
/// master seed, so extra replicates never change earlier ones.
fn replicate_data(
    cfg: &ExperimentConfig,
    r: usize,
) -> Result<(Vec<Dag>, MultiDataset, u64), EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    rng.set_stream(r as u64);
    let sim = random_joint_model(&cfg.model, &mut rng)?;
    let xs = sim
        .models
        .iter()
        .map(|m| sample(m, cfg.samples_per_class, &mut rng))
        .collect();
    let data = MultiDataset::new(xs, None).map_err(|e| EvalError::Config(e.to_string()))?;
    Ok((sim.dags, data, rng.next_u64()))
}

fn evaluate_grid(
    cfg: &ExperimentConfig,
    r: usize,
    grid: &[f64],
) -> Result<Vec<ReplicateOutcome>, EvalError> {
    let (truth, data, lasso_seed) = replicate_data(cfg, r)?;
    let lasso = LassoConfig {
        seed: lasso_seed,
        ..cfg.lasso
    };
    let p = cfg.model.p;
    let true_cpdags: Vec<Pdag> = truth.iter().map(complete_to_cpdag).collect();
    let mut out = Vec::with_capacity(grid.len());
    for &c in grid {
        let scfg = ScoreConfig::from_scaling(c, p, data.n());

        let start = Instant::now();
        let fit = joint_ges(&data, &scfg, &cfg.search, &lasso, ExtensionChoice::Canonical)?;
        let joint_time = start.elapsed().as_secs_f64();
        let joint: Vec<Dag> = (0..data.n_classes()).map(|k| fit.class_dag(k)).collect();

        let start = Instant::now();
        let separate: Vec<Pdag> = separate_fit(&data, &scfg, &cfg.search)?
            .into_iter()
            .map(|o| o.cpdag)
            .collect();
        let separate_time = start.elapsed().as_secs_f64();

        let mut joint_rec = record(r, Method::Joint, c);
        let mut sep_rec = record(r, Method::Separate, c);
        for k in 0..truth.len() {
            joint_rec.class_shd.push(shd(&joint[k], &truth[k])?);
            let cj = confusion(&joint[k], &truth[k], cfg.roc_mode)?;
            joint_rec.class_tpr.push(cj.tpr());
            joint_rec.class_fpr.push(cj.fpr());

            sep_rec.class_shd.push(shd(&separate[k], &true_cpdags[k])?);
            let cs = match cfg.roc_mode {
                ConfusionMode::Skeleton => confusion(&separate[k], &truth[k], cfg.roc_mode)?,
                ConfusionMode::Oriented => confusion(&separate[k], &true_cpdags[k], cfg.roc_mode)?,
            };
            sep_rec.class_tpr.push(cs.tpr());
            sep_rec.class_fpr.push(cs.fpr());
        }
        out.push(ReplicateOutcome {
            truth: truth.clone(),
            joint,
            separate,
            records: [joint_rec, sep_rec],
            seconds: [joint_time, separate_time],
        });
    }
    Ok(out)
}

fn record(replicate: usize, method: Method, c: f64) -> ReplicateRecord {
    ReplicateRecord {
        replicate,
        method,
        c,
        class_shd: Vec::new(),
        class_tpr: Vec::new(),
        class_fpr: Vec::new(),
    }
}

/// Both methods on replicate `r` at scaling constant `c`.
pub fn run_replicate(cfg: &ExperimentConfig, r: usize, c: f64) -> Result<ReplicateOutcome, EvalError> {
    cfg.validate()?;
    Ok(evaluate_grid(cfg, r, &[c])?.remove(0))
}

type GridResults = (Vec<ReplicateRecord>, Vec<ReplicateFailure>, Timing);

fn run_all(cfg: &ExperimentConfig, grid: &[f64]) -> Result<GridResults, EvalError> {
    cfg.validate()?;
    let run = |r: usize| (r, evaluate_grid(cfg, r, grid));
    let mut results: Vec<(usize, Result<Vec<ReplicateOutcome>, EvalError>)> = if cfg.parallel {
        (0..cfg.replicates).into_par_iter().map(run).collect()
    } else {
        (0..cfg.replicates).map(run).collect()
    };
    results.sort_by_key(|(r, _)| *r);
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut timing = Timing::default();
    for (r, res) in results {
        match res {
            Ok(outcomes) => {
                for o in outcomes {
                    timing.joint_seconds += o.seconds[0];
                    timing.separate_seconds += o.seconds[1];
                    records.extend(o.records);
                }
            }
            Err(e) => failures.push(ReplicateFailure {
                replicate: r,
                message: e.to_string(),
            }),
        }
    }
    Ok((records, failures, timing))
}

/// SHD, TPR and FPR of both methods at every scaling constant, averaged over
/// classes and replicates. Failed replicates are listed and skipped.
pub fn run_comparison(cfg: &ExperimentConfig) -> Result<ComparisonReport, EvalError> {
    let (records, failures, timing) = run_all(cfg, &cfg.scaling_grid)?;
    let mut rows = Vec::new();
    let mut paired = Vec::new();
    for &c in &cfg.scaling_grid {
        for method in [Method::Joint, Method::Separate] {
            let sel: Vec<&ReplicateRecord> = records
                .iter()
                .filter(|r| r.method == method && r.c == c)
                .collect();
            let shds: Vec<f64> = sel.iter().map(|r| r.mean_shd()).collect();
            rows.push(SummaryRow {
                method,
                c,
                replicates: sel.len(),
                mean_shd: mean(&shds),
                se_shd: std_error(&shds),
                mean_tpr: mean(&sel.iter().map(|r| r.mean_tpr()).collect::<Vec<_>>()),
                mean_fpr: mean(&sel.iter().map(|r| r.mean_fpr()).collect::<Vec<_>>()),
            });
        }
        let at_c = |m: Method| {
            records
                .iter()
                .filter(move |r| r.method == m && r.c == c)
                .map(|r| (r.replicate, r.mean_shd()))
        };
        let diffs: Vec<f64> = at_c(Method::Separate)
            .zip(at_c(Method::Joint))
            .map(|((rs, s), (rj, j))| {
                debug_assert_eq!(rs, rj);
                s - j
            })
            .collect();
        paired.push(PairedDifference {
            c,
            replicates: diffs.len(),
            mean: mean(&diffs),
            se: std_error(&diffs),
        });
    }
    Ok(ComparisonReport {
        summary: MetricsSummary {
            rows,
            paired,
            failures,
            replicates_requested: cfg.replicates,
            shd_convention: SHD_CONVENTION.to_string(),
            roc_mode: cfg.roc_mode,
        },
        records,
        timing,
    })
}

/// Average ROC point of each method at every tuning value, sorted by FPR
/// within each method (joint first).
pub fn roc_sweep(cfg: &ExperimentConfig) -> Result<Vec<RocPoint>, EvalError> {
    let (records, _, _) = run_all(cfg, &cfg.tuning_grid)?;
    let mut points = Vec::new();
    for method in [Method::Joint, Method::Separate] {
        let mut mine: Vec<RocPoint> = cfg
            .tuning_grid
            .iter()
            .map(|&c| {
                let sel: Vec<&ReplicateRecord> = records
                    .iter()
                    .filter(|r| r.method == method && r.c == c)
                    .collect();
                RocPoint {
                    method,
                    c,
                    fpr: mean(&sel.iter().map(|r| r.mean_fpr()).collect::<Vec<_>>()),
                    tpr: mean(&sel.iter().map(|r| r.mean_tpr()).collect::<Vec<_>>()),
                }
            })
            .collect();
        mine.sort_by(|a, b| a.fpr.total_cmp(&b.fpr).then(a.tpr.total_cmp(&b.tpr)));
        points.extend(mine);
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocDominance {
    /// Pairs (joint point, separate point) with FPRs within the tolerance.
    pub matched: usize,
    /// Matched pairs where the joint TPR is at least the separate TPR.
    pub joint_wins: usize,
}

impl RocDominance {
    pub fn fraction(&self) -> f64 {
        if self.matched == 0 {
            0.0
        } else {
            self.joint_wins as f64 / self.matched as f64
        }
    }
}

/// Compares every joint point with every separate point whose FPR lies
/// within `fpr_tol`.
pub fn roc_dominance(points: &[RocPoint], fpr_tol: f64) -> RocDominance {
    let mut d = RocDominance {
        matched: 0,
        joint_wins: 0,
    };
    for j in points.iter().filter(|p| p.method == Method::Joint) {
        for s in points.iter().filter(|p| p.method == Method::Separate) {
            if (j.fpr - s.fpr).abs() <= fpr_tol {
                d.matched += 1;
                if j.tpr >= s.tpr {
                    d.joint_wins += 1;
                }
            }
        }
    }
    d
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn std_error(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return f64::NAN;
    }
    let m = mean(v);
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (var / v.len() as f64).sqrt()
}
