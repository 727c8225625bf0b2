//! Per-class lasso refits restricted to the parent sets of an estimated
//! union graph, and the end-to-end jointGES pipeline.

mod lasso;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{consistent_extension, enumerate_class, Dag, GraphError, Pdag};
use crate::scoring::{MultiDataset, ScoreConfig};
use crate::search::{ges_fit, gies_fit, SearchConfig, SearchError, SearchTrace};
use crate::sem::{SemError, SemModel};

pub use lasso::{
    cv_lambda2, fold_assignment, lasso_cd, penalty_grid, soft_threshold, CvResult, LassoFit,
    LassoProblem,
};

#[derive(Debug, Error)]
pub enum RefitError {
    #[error("empty penalty grid")]
    GridEmpty,
    #[error("{folds}-fold cross-validation needs at least {folds} rows, got {n}")]
    TooFewRows { n: usize, folds: usize },
    #[error("invalid lasso configuration: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("equivalence class has more than {cap} members")]
    ClassTooLarge { cap: usize },
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sem(#[from] SemError),
}

/// How the lasso penalty (λ₂²) is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum PenaltyChoice {
    Fixed { value: f64 },
    /// `grid_size` log-spaced values from the KKT bound `λ_max` down to
    /// `λ_max · min_ratio`, selected by K-fold cross-validation.
    CrossValidated { grid_size: usize, min_ratio: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyScope {
    /// One cross-validated penalty per (class, node) regression.
    #[default]
    PerNode,
    /// One penalty shared by all regressions, minimizing the summed CV error.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LassoConfig {
    pub lambda2: PenaltyChoice,
    pub scope: PenaltyScope,
    pub cv_folds: usize,
    /// Bound on the KKT residual at exit.
    pub tol: f64,
    pub max_sweeps: usize,
    pub seed: u64,
    /// Fit on unit-variance predictors and rescale the coefficients back.
    pub standardize: bool,
    /// Noise variances are clamped below at `rss_floor · ‖X_j‖² / n_k`.
    pub rss_floor: f64,
    pub parallel: bool,
}

impl Default for LassoConfig {
    fn default() -> Self {
        LassoConfig {
            lambda2: PenaltyChoice::CrossValidated {
                grid_size: 50,
                min_ratio: 1e-3,
            },
            scope: PenaltyScope::PerNode,
            cv_folds: 10,
            tol: 1e-8,
            max_sweeps: 10_000,
            seed: 0,
            standardize: false,
            rss_floor: 1e-12,
            parallel: true,
        }
    }
}

impl LassoConfig {
    pub fn fixed(penalty: f64) -> Self {
        LassoConfig {
            lambda2: PenaltyChoice::Fixed { value: penalty },
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), RefitError> {
        let bad = |m: String| Err(RefitError::InvalidConfig(m));
        match self.lambda2 {
            PenaltyChoice::Fixed { value } if !(value >= 0.0 && value.is_finite()) => {
                return bad(format!("penalty must be finite and non-negative, got {value}"));
            }
            PenaltyChoice::CrossValidated { grid_size, min_ratio } => {
                if grid_size == 0 {
                    return Err(RefitError::GridEmpty);
                }
                if !(min_ratio > 0.0 && min_ratio <= 1.0) {
                    return bad(format!("min_ratio must lie in (0, 1], got {min_ratio}"));
                }
                if self.cv_folds < 2 {
                    return bad(format!("cv_folds must be at least 2, got {}", self.cv_folds));
                }
            }
            _ => {}
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_sweeps == 0 {
            return bad("max_sweeps must be at least 1".into());
        }
        if !(self.rss_floor > 0.0) {
            return bad(format!("rss_floor must be positive, got {}", self.rss_floor));
        }
        Ok(())
    }
}

/// Estimated union graph and per-class models.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub union: Dag,
    /// Equivalence class the union was drawn from, when it came from a search.
    pub union_cpdag: Option<Pdag>,
    pub per_class: Vec<SemModel>,
    pub trace: SearchTrace,
    /// Score of the searched class, when a search ran.
    pub search_score: Option<f64>,
    /// Penalty used per `[class][node]`; `None` where the node has no
    /// candidate parents in that class.
    pub chosen_penalty: Vec<Vec<Option<f64>>>,
    pub lasso_converged: bool,
    pub move_limit_exceeded: bool,
}

impl FitResult {
    pub fn n_classes(&self) -> usize {
        self.per_class.len()
    }

    /// Support of the class-`k` weight matrix.
    pub fn class_dag(&self, k: usize) -> Dag {
        self.per_class[k].dag().clone()
    }

    pub fn total_edges(&self) -> usize {
        self.per_class.iter().map(|m| m.dag().n_edges()).sum()
    }

    pub fn summary(&self) -> FitSummary {
        FitSummary {
            p: self.union.p(),
            classes: self.n_classes(),
            union_edges: self.union.n_edges(),
            class_edges: self.per_class.iter().map(|m| m.dag().n_edges()).collect(),
            search_score: self.search_score,
            trace_len: self.trace.len(),
            chosen_penalty: self.chosen_penalty.clone(),
            lasso_converged: self.lasso_converged,
            move_limit_exceeded: self.move_limit_exceeded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub p: usize,
    pub classes: usize,
    pub union_edges: usize,
    pub class_edges: Vec<usize>,
    pub search_score: Option<f64>,
    pub trace_len: usize,
    pub chosen_penalty: Vec<Vec<Option<f64>>>,
    pub lasso_converged: bool,
    pub move_limit_exceeded: bool,
}

/// One (class, node) regression.
struct Job {
    k: usize,
    j: usize,
    parents: Vec<usize>,
    y: DVector<f64>,
    x: DMatrix<f64>,
    /// Column scales applied to `x` (all ones without standardization).
    scale: Vec<f64>,
}

struct JobFit {
    coef: Vec<f64>,
    rss: f64,
    penalty: Option<f64>,
    converged: bool,
}

fn build_jobs(data: &MultiDataset, union: &Dag, cfg: &LassoConfig) -> Vec<Job> {
    let p = data.p();
    let mut jobs = Vec::with_capacity(data.n_classes() * p);
    for k in 0..data.n_classes() {
        let xk = data.class_data(k);
        for j in 0..p {
            let intervened = data
                .interventions()
                .is_some_and(|spec| spec.is_intervened(k, j));
            let parents: Vec<usize> = if intervened {
                Vec::new()
            } else {
                union.parents(j).iter().copied().collect()
            };
            let mut x = xk.select_columns(parents.iter());
            let mut scale = vec![1.0; parents.len()];
            if cfg.standardize {
                for (c, s) in scale.iter_mut().enumerate() {
                    let sd = (x.column(c).norm_squared() / x.nrows() as f64).sqrt();
                    if sd > 0.0 {
                        *s = sd;
                        x.column_mut(c).unscale_mut(sd);
                    }
                }
            }
            jobs.push(Job {
                k,
                j,
                parents,
                y: xk.column(j).into_owned(),
                x,
                scale,
            });
        }
    }
    jobs
}

fn job_stream(job: &Job, p: usize) -> u64 {
    (job.k * p + job.j) as u64
}

fn grid_for(problem: &LassoProblem, choice: &PenaltyChoice) -> Vec<f64> {
    match *choice {
        PenaltyChoice::CrossValidated { grid_size, min_ratio } => {
            penalty_grid(problem.lambda_max(), grid_size, min_ratio)
        }
        PenaltyChoice::Fixed { value } => vec![value],
    }
}

fn fit_job(job: &Job, penalty: f64, cfg: &LassoConfig) -> JobFit {
    let problem = LassoProblem::new(&job.y, &job.x).expect("job shapes agree");
    let fit = problem.solve(penalty, cfg.tol, cfg.max_sweeps, None);
    let rss = (&job.y - &job.x * &fit.coef).norm_squared();
    let coef = fit
        .coef
        .iter()
        .zip(&job.scale)
        .map(|(c, s)| c / s)
        .collect();
    JobFit {
        coef,
        rss,
        penalty: Some(penalty),
        converged: fit.converged,
    }
}

fn check_folds(job: &Job, folds: usize) -> Result<(), RefitError> {
    if job.y.len() < folds {
        return Err(RefitError::TooFewRows {
            n: job.y.len(),
            folds,
        });
    }
    Ok(())
}

fn per_node_fit(job: &Job, p: usize, cfg: &LassoConfig) -> Result<JobFit, RefitError> {
    if job.parents.is_empty() {
        return Ok(JobFit {
            coef: Vec::new(),
            rss: job.y.norm_squared(),
            penalty: None,
            converged: true,
        });
    }
    let penalty = match cfg.lambda2 {
        PenaltyChoice::Fixed { value } => value,
        choice @ PenaltyChoice::CrossValidated { .. } => {
            check_folds(job, cfg.cv_folds)?;
            let problem = LassoProblem::new(&job.y, &job.x)?;
            let grid = grid_for(&problem, &choice);
            let folds = fold_assignment(job.y.len(), cfg.cv_folds, cfg.seed, job_stream(job, p));
            let errors = lasso::cv_errors(&job.y, &job.x, &grid, &folds, cfg.tol, cfg.max_sweeps);
            grid[lasso::argmin_first(&errors)]
        }
    };
    Ok(fit_job(job, penalty, cfg))
}

fn global_penalty(jobs: &[Job], p: usize, cfg: &LassoConfig) -> Result<Option<f64>, RefitError> {
    let active: Vec<&Job> = jobs.iter().filter(|j| !j.parents.is_empty()).collect();
    if active.is_empty() {
        return Ok(None);
    }
    let choice = cfg.lambda2;
    if let PenaltyChoice::Fixed { value } = choice {
        return Ok(Some(value));
    }
    let mut lmax: f64 = 0.0;
    for job in &active {
        check_folds(job, cfg.cv_folds)?;
        lmax = lmax.max(LassoProblem::new(&job.y, &job.x)?.lambda_max());
    }
    let PenaltyChoice::CrossValidated { grid_size, min_ratio } = choice else {
        unreachable!()
    };
    let grid = penalty_grid(lmax, grid_size, min_ratio);
    let per_job = |job: &&Job| {
        let folds = fold_assignment(job.y.len(), cfg.cv_folds, cfg.seed, job_stream(job, p));
        let errors = lasso::cv_errors(&job.y, &job.x, &grid, &folds, cfg.tol, cfg.max_sweeps);
        let n = job.y.len() as f64;
        errors.into_iter().map(|e| e / n).collect::<Vec<f64>>()
    };
    let all: Vec<Vec<f64>> = if cfg.parallel {
        active.par_iter().map(per_job).collect()
    } else {
        active.iter().map(per_job).collect()
    };
    let mut total = vec![0.0; grid.len()];
    for errs in all {
        for (t, e) in total.iter_mut().zip(errs) {
            *t += e;
        }
    }
    Ok(Some(grid[lasso::argmin_first(&total)]))
}

/// jointGES step 2: lasso-regress every node on its union-graph parents in
/// every class. Nodes intervened on in class `k` get no parents there.
pub fn refit_classes(
    data: &MultiDataset,
    union: &Dag,
    cfg: &LassoConfig,
) -> Result<FitResult, RefitError> {
    cfg.validate()?;
    let p = data.p();
    if union.p() != p {
        return Err(RefitError::Shape(format!(
            "union graph has {} nodes, data has {p}",
            union.p()
        )));
    }
    let jobs = build_jobs(data, union, cfg);
    let fits: Vec<JobFit> = match cfg.scope {
        PenaltyScope::PerNode => {
            let run = |job: &Job| per_node_fit(job, p, cfg);
            if cfg.parallel {
                jobs.par_iter().map(run).collect::<Result<_, _>>()?
            } else {
                jobs.iter().map(run).collect::<Result<_, _>>()?
            }
        }
        PenaltyScope::Global => {
            let shared = global_penalty(&jobs, p, cfg)?;
            let run = |job: &Job| match shared {
                Some(pen) if !job.parents.is_empty() => fit_job(job, pen, cfg),
                _ => JobFit {
                    coef: Vec::new(),
                    rss: job.y.norm_squared(),
                    penalty: None,
                    converged: true,
                },
            };
            if cfg.parallel {
                jobs.par_iter().map(run).collect()
            } else {
                jobs.iter().map(run).collect()
            }
        }
    };

    let k_total = data.n_classes();
    let mut weights = vec![DMatrix::zeros(p, p); k_total];
    let mut omega = vec![vec![0.0; p]; k_total];
    let mut chosen = vec![vec![None; p]; k_total];
    let mut converged = true;
    for (job, fit) in jobs.iter().zip(&fits) {
        for (&i, &c) in job.parents.iter().zip(&fit.coef) {
            weights[job.k][(i, job.j)] = c;
        }
        let nk = job.y.len() as f64;
        let floor = cfg.rss_floor * job.y.norm_squared();
        omega[job.k][job.j] = (fit.rss.max(floor) / nk).max(cfg.rss_floor);
        chosen[job.k][job.j] = fit.penalty;
        converged &= fit.converged;
    }
    let per_class = weights
        .into_iter()
        .zip(omega)
        .map(|(w, o)| SemModel::new(w, DVector::from_vec(o)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FitResult {
        union: union.clone(),
        union_cpdag: None,
        per_class,
        trace: SearchTrace::default(),
        search_score: None,
        chosen_penalty: chosen,
        lasso_converged: converged,
        move_limit_exceeded: false,
    })
}

/// Refits every DAG in the class of `cpdag` and keeps the one with the
/// fewest total class edges (first in enumeration order on ties).
pub fn sparsest_extension_refit(
    data: &MultiDataset,
    cpdag: &Pdag,
    cfg: &LassoConfig,
    cap: usize,
) -> Result<FitResult, RefitError> {
    let class = enumerate_class(cpdag, cap);
    if class.truncated {
        return Err(RefitError::ClassTooLarge { cap });
    }
    let mut best: Option<FitResult> = None;
    for dag in &class.dags {
        let fit = refit_classes(data, dag, cfg)?;
        if best.as_ref().is_none_or(|b| fit.total_edges() < b.total_edges()) {
            best = Some(fit);
        }
    }
    let mut best = best.ok_or(RefitError::Graph(GraphError::NoExtension))?;
    best.union_cpdag = Some(cpdag.clone());
    Ok(best)
}

/// How the union DAG is taken from the searched class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ExtensionChoice {
    /// The deterministic consistent extension.
    #[default]
    Canonical,
    /// Refit every class member and keep the sparsest result.
    Sparsest { cap: usize },
}

/// Full jointGES: greedy search on the joint score, then per-class refits.
pub fn joint_ges(
    data: &MultiDataset,
    scfg: &ScoreConfig,
    search: &SearchConfig,
    lasso: &LassoConfig,
    extension: ExtensionChoice,
) -> Result<FitResult, RefitError> {
    let out = ges_fit(data, scfg, search)?;
    let mut fit = match extension {
        ExtensionChoice::Canonical => {
            let union = consistent_extension(&out.cpdag)?;
            refit_classes(data, &union, lasso)?
        }
        ExtensionChoice::Sparsest { cap } => sparsest_extension_refit(data, &out.cpdag, lasso, cap)?,
    };
    fit.union_cpdag = Some(out.cpdag);
    fit.trace = out.trace;
    fit.search_score = Some(out.score);
    fit.move_limit_exceeded = out.move_limit_exceeded;
    Ok(fit)
}

/// jointGES on the interventional score: the union is the best-scoring
/// member of the searched class and intervened nodes keep no parents.
pub fn joint_gies(
    data: &MultiDataset,
    scfg: &ScoreConfig,
    search: &SearchConfig,
    lasso: &LassoConfig,
) -> Result<FitResult, RefitError> {
    let out = gies_fit(data, scfg, search)?;
    let mut fit = refit_classes(data, &out.dag, lasso)?;
    fit.union_cpdag = Some(out.essential);
    fit.trace = out.search.trace;
    fit.search_score = Some(out.dag_score);
    fit.move_limit_exceeded = out.search.move_limit_exceeded;
    Ok(fit)
}

#[cfg(test)]
mod tests;
