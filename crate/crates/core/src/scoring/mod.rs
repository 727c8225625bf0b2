//! Decomposable joint scores.
//!
//! For node `j` with parent set `P` the observational local score is
//!
//! ```text
//! −[ Σ_k w_k · log(max(RSS_k(j | P), floor_kj) / n_k) + λ₁² · |P| ]
//! ```
//!
//! where `RSS_k` is the least-squares residual of regressing column `j` of
//! class `k` on the columns in `P`. Higher is better. The interventional
//! variant shares one coefficient vector across the classes where `j` is not
//! intervened on and treats intervened classes as constants.

mod cache;
mod dataset;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Dag;
use crate::sem::SemModel;

pub use cache::{RssSource, ScoreCache};
pub use dataset::MultiDataset;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("dataset has no classes or no columns")]
    EmptyDataset,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("node {node} out of range for p = {p}")]
    NodeOutOfRange { node: usize, p: usize },
    #[error("node {0} listed among its own parents")]
    SelfParent(usize),
    #[error("{parents} parents for node {node} with only {n} samples")]
    TooManyParents {
        node: usize,
        parents: usize,
        n: usize,
    },
    #[error("node {node} has {degree} parents, above the bound {max}")]
    DegreeExceeded { node: usize, degree: usize, max: usize },
}

/// Penalty and numerical settings of the score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreConfig {
    /// Per-edge penalty λ₁².
    pub lambda1_sq: f64,
    /// Scaling constant `c` when `lambda1_sq = c · log(p) / n`.
    #[serde(default)]
    pub scaling_c: Option<f64>,
    /// In-degree bound `d`; `None` means unbounded.
    #[serde(default)]
    pub max_in_degree: Option<usize>,
    /// Residual sums are clamped below at `rss_floor · ‖X_j‖²`, i.e.
    /// `rss_floor · n_k · var(X_j)`.
    #[serde(default = "default_rss_floor")]
    pub rss_floor: f64,
}

fn default_rss_floor() -> f64 {
    1e-12
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            lambda1_sq: 0.0,
            scaling_c: None,
            max_in_degree: None,
            rss_floor: default_rss_floor(),
        }
    }
}

impl ScoreConfig {
    pub fn with_penalty(lambda1_sq: f64) -> Self {
        ScoreConfig {
            lambda1_sq,
            ..Default::default()
        }
    }

    /// BIC rate `λ₁² = log(n) / n`.
    pub fn bic(n: usize) -> Self {
        ScoreConfig {
            lambda1_sq: (n as f64).ln() / n as f64,
            ..Default::default()
        }
    }

    /// `λ₁² = c · log(p) / n`.
    pub fn from_scaling(c: f64, p: usize, n: usize) -> Self {
        ScoreConfig {
            lambda1_sq: c * (p as f64).ln() / n as f64,
            scaling_c: Some(c),
            ..Default::default()
        }
    }

    /// `λ² = (log p / n) · max(p / s, 1)` for a guessed union-graph size `s`.
    pub fn theory_rate(p: usize, n: usize, sparsity_guess: usize) -> Self {
        let ratio = (p as f64 / sparsity_guess.max(1) as f64).max(1.0);
        ScoreConfig {
            lambda1_sq: (p as f64).ln() / n as f64 * ratio,
            ..Default::default()
        }
    }

    /// Same settings with `lambda1_sq` recomputed from `scaling_c` for a
    /// different sample size. Without `scaling_c` the penalty is kept.
    pub fn rescaled_for(&self, p: usize, n: usize) -> Self {
        match self.scaling_c {
            Some(c) => ScoreConfig {
                lambda1_sq: c * (p as f64).ln() / n as f64,
                ..*self
            },
            None => *self,
        }
    }
}

/// Anything that scores a node given a parent set; summing over nodes gives
/// the graph score.
pub trait DecomposableScore: Sync {
    fn node_count(&self) -> usize;

    /// Local score of `j` with parents `parents` (any order, no duplicates).
    fn local_score(&self, j: usize, parents: &[usize]) -> Result<f64, ScoreError>;

    fn graph_score(&self, dag: &Dag) -> Result<f64, ScoreError> {
        (0..dag.p())
            .map(|j| {
                let pa: Vec<usize> = dag.parents(j).iter().copied().collect();
                self.local_score(j, &pa)
            })
            .sum()
    }
}

/// Score flavour used by a [`Scorer`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    Observational,
    /// Falls back to the observational score when the dataset carries no
    /// intervention spec.
    Interventional,
}

/// Scores against one dataset, optionally memoizing residual sums.
#[derive(Debug)]
pub struct Scorer<'a> {
    data: &'a MultiDataset,
    cfg: ScoreConfig,
    kind: ScoreKind,
    cache: Option<ScoreCache>,
}

impl<'a> Scorer<'a> {
    pub fn new(data: &'a MultiDataset, cfg: ScoreConfig, kind: ScoreKind) -> Self {
        Scorer {
            data,
            cfg,
            kind,
            cache: Some(ScoreCache::unbounded()),
        }
    }

    pub fn uncached(data: &'a MultiDataset, cfg: ScoreConfig, kind: ScoreKind) -> Self {
        Scorer {
            data,
            cfg,
            kind,
            cache: None,
        }
    }

    pub fn with_cache(mut self, cache: ScoreCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn data(&self) -> &MultiDataset {
        self.data
    }

    pub fn config(&self) -> &ScoreConfig {
        &self.cfg
    }

    pub fn cache(&self) -> Option<&ScoreCache> {
        self.cache.as_ref()
    }

    fn rss(
        &self,
        source: RssSource,
        j: usize,
        parents: &[usize],
        compute: impl FnOnce() -> Result<f64, ScoreError>,
    ) -> Result<f64, ScoreError> {
        match &self.cache {
            Some(cache) => cache.get_or_insert(source, j, parents, compute),
            None => compute(),
        }
    }

    fn observational(&self, j: usize, parents: &[usize]) -> Result<f64, ScoreError> {
        let data = self.data;
        let mut total = 0.0;
        for k in 0..data.n_classes() {
            let rss = self.rss(RssSource::Class(k), j, parents, || {
                ols_rss(data, k, j, parents)
            })?;
            let floor = rss_floor(self.cfg.rss_floor, data.gram(k)[(j, j)]);
            total += data.weight(k) * (rss.max(floor) / data.n_k(k) as f64).ln();
        }
        Ok(-(total + self.cfg.lambda1_sq * parents.len() as f64))
    }

    fn interventional(&self, j: usize, parents: &[usize]) -> Result<f64, ScoreError> {
        let data = self.data;
        let (Some(spec), Some(group)) = (data.interventions(), data.pooled_group(j)) else {
            return self.observational(j, parents);
        };
        let n = data.n() as f64;
        let mut total = 0.0;
        for k in 0..data.n_classes() {
            if spec.is_intervened(k, j) {
                let gjj = data.gram(k)[(j, j)];
                let floor = rss_floor(self.cfg.rss_floor, gjj);
                total += data.weight(k) * (gjj.max(floor) / data.n_k(k) as f64).ln();
            }
        }
        if group.classes.is_empty() {
            // intervened everywhere: no parent set can change the likelihood
            return Ok(-total);
        }
        if parents.len() >= group.n {
            return Err(ScoreError::TooManyParents {
                node: j,
                parents: parents.len(),
                n: group.n,
            });
        }
        let rss = self.rss(RssSource::Pooled, j, parents, || {
            Ok(rss_from_gram(&group.gram, j, parents))
        })?;
        let floor = rss_floor(self.cfg.rss_floor, group.gram[(j, j)]);
        let n_minus = group.n as f64;
        total += n_minus / n * (rss.max(floor) / n_minus).ln();
        Ok(-(total + self.cfg.lambda1_sq * parents.len() as f64))
    }
}

impl DecomposableScore for Scorer<'_> {
    fn node_count(&self) -> usize {
        self.data.p()
    }

    fn local_score(&self, j: usize, parents: &[usize]) -> Result<f64, ScoreError> {
        let parents = canonical_parents(self.data.p(), j, parents)?;
        match self.kind {
            ScoreKind::Observational => self.observational(j, &parents),
            ScoreKind::Interventional => self.interventional(j, &parents),
        }
    }
}

fn canonical_parents(p: usize, j: usize, parents: &[usize]) -> Result<Vec<usize>, ScoreError> {
    if j >= p {
        return Err(ScoreError::NodeOutOfRange { node: j, p });
    }
    let mut sorted = parents.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if let Some(&bad) = sorted.iter().find(|&&i| i >= p) {
        return Err(ScoreError::NodeOutOfRange { node: bad, p });
    }
    if sorted.binary_search(&j).is_ok() {
        return Err(ScoreError::SelfParent(j));
    }
    Ok(sorted)
}

fn rss_floor(rel: f64, gjj: f64) -> f64 {
    if gjj > 0.0 {
        rel * gjj
    } else {
        rel.max(f64::MIN_POSITIVE)
    }
}

/// Minimal squared residual of regressing column `j` of class `k` on the
/// `parents` columns (no intercept; data are centered at construction).
/// Rank-deficient designs use the minimum-norm least-squares solution.
pub fn ols_rss(
    data: &MultiDataset,
    k: usize,
    j: usize,
    parents: &[usize],
) -> Result<f64, ScoreError> {
    let parents = canonical_parents(data.p(), j, parents)?;
    if parents.len() >= data.n_k(k) {
        return Err(ScoreError::TooManyParents {
            node: j,
            parents: parents.len(),
            n: data.n_k(k),
        });
    }
    Ok(rss_from_gram(data.gram(k), j, &parents))
}

/// `G_jj − g_Pjᵀ G_PP⁺ g_Pj` from a Gram matrix.
pub(crate) fn rss_from_gram(gram: &DMatrix<f64>, j: usize, parents: &[usize]) -> f64 {
    let gjj = gram[(j, j)];
    if parents.is_empty() {
        return gjj;
    }
    let m = parents.len();
    let g_pp = DMatrix::from_fn(m, m, |a, b| gram[(parents[a], parents[b])]);
    let g_pj = DVector::from_fn(m, |a, _| gram[(parents[a], j)]);
    let coef = solve_normal_equations(&g_pp, &g_pj);
    (gjj - g_pj.dot(&coef)).max(0.0)
}

/// Solves `G a = b` for a symmetric PSD `G`; falls back to the pseudo-inverse
/// when `G` is singular or badly conditioned.
pub(crate) fn solve_normal_equations(g: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let max_diag = g.diagonal().amax();
    if let Some(chol) = g.clone().cholesky() {
        let l = chol.l_dirty();
        let min_pivot = (0..g.nrows()).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
        if min_pivot > 1e-12 * max_diag {
            return chol.solve(b);
        }
    }
    let svd = g.clone().svd(true, true);
    let eps = 1e-12 * svd.singular_values.amax().max(f64::MIN_POSITIVE);
    svd.solve(b, eps)
        .unwrap_or_else(|_| DVector::zeros(b.len()))
}

/// Observational local score, computed without a cache.
pub fn local_score(
    data: &MultiDataset,
    j: usize,
    parents: &[usize],
    cfg: &ScoreConfig,
) -> Result<f64, ScoreError> {
    Scorer::uncached(data, *cfg, ScoreKind::Observational).local_score(j, parents)
}

/// Interventional local score, computed without a cache.
pub fn interventional_local_score(
    data: &MultiDataset,
    j: usize,
    parents: &[usize],
    cfg: &ScoreConfig,
) -> Result<f64, ScoreError> {
    Scorer::uncached(data, *cfg, ScoreKind::Interventional).local_score(j, parents)
}

/// Sum of observational local scores; rejects graphs above the in-degree bound.
pub fn graph_score(data: &MultiDataset, g: &Dag, cfg: &ScoreConfig) -> Result<f64, ScoreError> {
    check_in_degree(g, cfg.max_in_degree)?;
    Scorer::uncached(data, *cfg, ScoreKind::Observational).graph_score(g)
}

pub fn interventional_graph_score(
    data: &MultiDataset,
    g: &Dag,
    cfg: &ScoreConfig,
) -> Result<f64, ScoreError> {
    check_in_degree(g, cfg.max_in_degree)?;
    Scorer::uncached(data, *cfg, ScoreKind::Interventional).graph_score(g)
}

pub(crate) fn check_in_degree(g: &Dag, max: Option<usize>) -> Result<(), ScoreError> {
    if let Some(max) = max {
        if let Some(j) = (0..g.p()).find(|&j| g.in_degree(j) > max) {
            return Err(ScoreError::DegreeExceeded {
                node: j,
                degree: g.in_degree(j),
                max,
            });
        }
    }
    Ok(())
}

/// `−tr(S (I−A) Ω⁻¹ (I−A)ᵀ) + log det((I−A) Ω⁻¹ (I−A)ᵀ)` with `S = XᵀX / n`.
///
/// The determinant of `I − A` is one, so the log-determinant is `−Σ log ω_j`.
pub fn sem_log_likelihood(x: &DMatrix<f64>, m: &SemModel) -> Result<f64, ScoreError> {
    let p = m.p();
    if x.ncols() != p || x.nrows() == 0 {
        return Err(ScoreError::DimensionMismatch(format!(
            "data is {}x{}, model has p = {p}",
            x.nrows(),
            x.ncols()
        )));
    }
    let s = x.tr_mul(x) / x.nrows() as f64;
    let b = DMatrix::<f64>::identity(p, p) - m.weights();
    let mut trace = 0.0;
    for j in 0..p {
        let col = b.column(j);
        trace += (col.transpose() * &s * col)[(0, 0)] / m.omega()[j];
    }
    let log_det: f64 = -m.omega().iter().map(|w| w.ln()).sum::<f64>();
    Ok(-trace + log_det)
}
