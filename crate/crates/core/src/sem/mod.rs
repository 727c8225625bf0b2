//! Linear Gaussian structural equation models `X = AᵀX + ε`, `ε ~ N(0, Ω)`.
//!
//! [`precision_from_sem`] maps `(A, Ω)` to the precision and covariance
//! matrices, [`cholesky_sem`] goes back from a precision matrix under a chosen
//! node ordering, [`sample`] draws data by forward substitution and
//! [`apply_intervention`] performs a perfect intervention.

pub mod io;
mod simulate;

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{topological_order, Dag, GraphError, Permutation};

pub use simulate::{
    draw_intervention_variances, interventional_collection, random_joint_model, JointModelConfig,
    SimulatedCollection,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemError {
    #[error("invalid SEM: {0}")]
    InvalidModel(String),
    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("bad intervention target: {0}")]
    BadTarget(String),
    #[error("infeasible model configuration: {0}")]
    ConfigInfeasible(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Edge weights `A` (`A[(i, j)] != 0` iff `i -> j`) and noise variances `ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct SemModel {
    weights: DMatrix<f64>,
    omega: DVector<f64>,
    dag: Dag,
}

impl SemModel {
    pub fn new(weights: DMatrix<f64>, omega: DVector<f64>) -> Result<Self, SemError> {
        let p = omega.len();
        if weights.nrows() != p || weights.ncols() != p {
            return Err(SemError::InvalidModel(format!(
                "weights are {}x{} but omega has length {p}",
                weights.nrows(),
                weights.ncols()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(SemError::InvalidModel(format!("non-finite weight {w}")));
        }
        if let Some(o) = omega.iter().find(|o| !(o.is_finite() && **o > 0.0)) {
            return Err(SemError::InvalidModel(format!(
                "noise variance {o} is not positive and finite"
            )));
        }
        let dag = Dag::from_support(&weights)?;
        Ok(SemModel {
            weights,
            omega,
            dag,
        })
    }

    /// Builds a model from weighted edges `(i, j, weight)` and noise variances.
    pub fn from_edges(
        p: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        omega: Vec<f64>,
    ) -> Result<Self, SemError> {
        let mut weights = DMatrix::zeros(p, p);
        for (i, j, w) in edges {
            if i >= p || j >= p {
                return Err(GraphError::NodeOutOfRange { node: i.max(j), p }.into());
            }
            weights[(i, j)] = w;
        }
        SemModel::new(weights, DVector::from_vec(omega))
    }

    pub fn p(&self) -> usize {
        self.omega.len()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn omega(&self) -> &DVector<f64> {
        &self.omega
    }

    /// The DAG given by the nonzero weights.
    pub fn dag(&self) -> &Dag {
        &self.dag
    }
}

/// Covariance `Σ` and precision `Θ = Σ⁻¹` of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariancePair {
    pub sigma: DMatrix<f64>,
    pub theta: DMatrix<f64>,
}

/// `Θ = (I − A) Ω⁻¹ (I − A)ᵀ` and `Σ = (I − A)⁻ᵀ Ω (I − A)⁻¹`.
pub fn precision_from_sem(m: &SemModel) -> Result<CovariancePair, SemError> {
    let p = m.p();
    let b = DMatrix::<f64>::identity(p, p) - m.weights();
    let inv_omega = DMatrix::from_diagonal(&m.omega().map(|w| 1.0 / w));
    let theta = symmetrize(&b * inv_omega * b.transpose());
    // I − A is unit triangular up to a permutation, so the inverse exists
    let b_inv = b
        .try_inverse()
        .ok_or_else(|| SemError::NumericalFailure("I - A is singular".into()))?;
    let omega = DMatrix::from_diagonal(m.omega());
    let sigma = symmetrize(b_inv.transpose() * omega * b_inv);
    Ok(CovariancePair { sigma, theta })
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Upper-triangular-plus-diagonal factorization of `theta` after reordering
/// its rows and columns by `order`, mapped back to the original labels.
///
/// The returned model has weights consistent with `order` and reproduces
/// `theta` exactly (up to rounding) through [`precision_from_sem`].
pub fn cholesky_sem(theta: &DMatrix<f64>, order: &Permutation) -> Result<SemModel, SemError> {
    let p = theta.nrows();
    if theta.ncols() != p || order.len() != p {
        return Err(SemError::NotPositiveDefinite(format!(
            "expected a square matrix matching a permutation of length {}, got {}x{}",
            order.len(),
            p,
            theta.ncols()
        )));
    }
    let scale = theta.amax().max(1.0);
    for i in 0..p {
        for j in (i + 1)..p {
            if (theta[(i, j)] - theta[(j, i)]).abs() > 1e-9 * scale {
                return Err(SemError::NotPositiveDefinite(format!(
                    "entries ({i},{j}) and ({j},{i}) differ"
                )));
            }
        }
    }
    // Reordered and then reversed: reversed[(s, t)] = theta[o[p-1-s], o[p-1-t]].
    // A lower Cholesky factor of the reversed matrix is an upper factor of the
    // reordered one.
    let o = order.order();
    let reversed = DMatrix::from_fn(p, p, |s, t| theta[(o[p - 1 - s], o[p - 1 - t])]);
    let chol = reversed
        .cholesky()
        .ok_or_else(|| SemError::NotPositiveDefinite("Cholesky factorization failed".into()))?;
    let l = chol.l();
    let mut weights = DMatrix::zeros(p, p);
    let mut omega = DVector::zeros(p);
    for s in 0..p {
        let diag = l[(s, s)];
        // U = J L D^{-1/2} J is unit upper triangular; A = I − U.
        let node_col = o[p - 1 - s];
        omega[node_col] = 1.0 / (diag * diag);
        for r in (s + 1)..p {
            let node_row = o[p - 1 - r];
            weights[(node_row, node_col)] = -l[(r, s)] / diag;
        }
    }
    SemModel::new(weights, omega)
}

/// Draws `n` i.i.d. rows from the model.
///
/// Noise is drawn column by column in node-index order, then each node is
/// filled in topological order from its parents.
pub fn sample<R: Rng + ?Sized>(m: &SemModel, n: usize, rng: &mut R) -> DMatrix<f64> {
    let p = m.p();
    let mut x = DMatrix::zeros(n, p);
    for j in 0..p {
        let sd = m.omega()[j].sqrt();
        for r in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            x[(r, j)] = sd * z;
        }
    }
    let order = topological_order(m.dag()).expect("SemModel support is acyclic");
    for &j in order.order() {
        for &i in m.dag().parents(j) {
            let w = m.weights()[(i, j)];
            for r in 0..n {
                x[(r, j)] += w * x[(r, i)];
            }
        }
    }
    x
}

/// Per-class intervention targets `I_k`; an empty set is an observational class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InterventionSpec {
    targets: Vec<BTreeSet<usize>>,
}

impl InterventionSpec {
    pub fn new(targets: Vec<BTreeSet<usize>>, p: usize) -> Result<Self, SemError> {
        for (k, set) in targets.iter().enumerate() {
            if let Some(&bad) = set.iter().find(|&&j| j >= p) {
                return Err(SemError::BadTarget(format!(
                    "class {k} targets node {bad}, but p = {p}"
                )));
            }
        }
        Ok(InterventionSpec { targets })
    }

    /// No class intervened.
    pub fn observational(k: usize) -> Self {
        InterventionSpec {
            targets: vec![BTreeSet::new(); k],
        }
    }

    pub fn n_classes(&self) -> usize {
        self.targets.len()
    }

    pub fn targets(&self, k: usize) -> &BTreeSet<usize> {
        &self.targets[k]
    }

    pub fn is_intervened(&self, k: usize, j: usize) -> bool {
        self.targets[k].contains(&j)
    }

    pub fn iter(&self) -> impl Iterator<Item = &BTreeSet<usize>> {
        self.targets.iter()
    }
}

/// Perfect intervention: cuts every edge into a target and replaces the
/// target's noise variance.
pub fn apply_intervention(
    m: &SemModel,
    targets: &BTreeSet<usize>,
    new_variances: &BTreeMap<usize, f64>,
) -> Result<SemModel, SemError> {
    let p = m.p();
    if let Some(&bad) = targets.iter().find(|&&j| j >= p) {
        return Err(SemError::BadTarget(format!("node {bad} out of range 0..{p}")));
    }
    let keys: BTreeSet<usize> = new_variances.keys().copied().collect();
    if keys != *targets {
        return Err(SemError::BadTarget(format!(
            "variance keys {keys:?} do not match targets {targets:?}"
        )));
    }
    let mut weights = m.weights().clone();
    let mut omega = m.omega().clone();
    for &j in targets {
        weights.column_mut(j).fill(0.0);
        let v = new_variances[&j];
        if !(v.is_finite() && v > 0.0) {
            return Err(SemError::BadTarget(format!(
                "variance {v} for node {j} is not positive and finite"
            )));
        }
        omega[j] = v;
    }
    SemModel::new(weights, omega)
}
