//! Lasso by cyclic coordinate descent on the Gram matrix.
//!
//! The objective is `(1/n)‖y − X a‖² + penalty · ‖a‖₁`, where `penalty`
//! plays the role of λ₂².

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::RefitError;

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub coef: DVector<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// Largest KKT violation at exit.
    pub kkt_residual: f64,
}

impl LassoFit {
    pub fn active_set(&self) -> Vec<usize> {
        (0..self.coef.len()).filter(|&i| self.coef[i] != 0.0).collect()
    }
}

/// Sufficient statistics `G = XᵀX / n`, `c = Xᵀy / n`.
#[derive(Debug, Clone)]
pub struct LassoProblem {
    gram: DMatrix<f64>,
    cross: DVector<f64>,
}

impl LassoProblem {
    pub fn new(y: &DVector<f64>, x: &DMatrix<f64>) -> Result<Self, RefitError> {
        if y.len() != x.nrows() {
            return Err(RefitError::Shape(format!(
                "response has {} rows, design has {}",
                y.len(),
                x.nrows()
            )));
        }
        let n = y.len().max(1) as f64;
        Ok(LassoProblem {
            gram: x.tr_mul(x) / n,
            cross: x.tr_mul(y) / n,
        })
    }

    pub fn from_moments(gram: DMatrix<f64>, cross: DVector<f64>) -> Self {
        LassoProblem { gram, cross }
    }

    pub fn dim(&self) -> usize {
        self.cross.len()
    }

    /// Smallest penalty with an all-zero solution: `2 · max |X_iᵀy| / n`.
    pub fn lambda_max(&self) -> f64 {
        2.0 * self.cross.amax()
    }

    /// Gradient of the smooth part negated: `2 (c − G a)`.
    fn score_vector(&self, a: &DVector<f64>) -> DVector<f64> {
        (&self.cross - &self.gram * a) * 2.0
    }

    pub fn kkt_residual(&self, a: &DVector<f64>, penalty: f64) -> f64 {
        let g = self.score_vector(a);
        (0..a.len())
            .map(|i| {
                if a[i] != 0.0 {
                    (g[i] - penalty * a[i].signum()).abs()
                } else {
                    (g[i].abs() - penalty).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }

    /// Coordinate descent from `start` (zeros when `None`) until the KKT
    /// residual is at most `tol`.
    pub fn solve(
        &self,
        penalty: f64,
        tol: f64,
        max_sweeps: usize,
        start: Option<&DVector<f64>>,
    ) -> LassoFit {
        let m = self.dim();
        let mut a = start.cloned().unwrap_or_else(|| DVector::zeros(m));
        // g holds c − G a and is kept current after each coordinate move
        let mut g = &self.cross - &self.gram * &a;
        let mut sweeps = 0;
        let mut kkt = self.kkt_residual(&a, penalty);
        while kkt > tol && sweeps < max_sweeps {
            for i in 0..m {
                let gii = self.gram[(i, i)];
                if gii <= 0.0 {
                    continue;
                }
                let rho = g[i] + gii * a[i];
                let new = soft_threshold(rho, penalty / 2.0) / gii;
                let step = new - a[i];
                if step != 0.0 {
                    g.axpy(-step, &self.gram.column(i), 1.0);
                    a[i] = new;
                }
            }
            sweeps += 1;
            kkt = self.kkt_residual(&a, penalty);
        }
        LassoFit {
            coef: a,
            sweeps,
            converged: kkt <= tol,
            kkt_residual: kkt,
        }
    }
}

pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Lasso fit of `y` on the columns of `x`.
pub fn lasso_cd(
    y: &DVector<f64>,
    x: &DMatrix<f64>,
    penalty: f64,
    tol: f64,
    max_sweeps: usize,
) -> Result<LassoFit, RefitError> {
    if !(penalty >= 0.0) {
        return Err(RefitError::InvalidConfig(format!("negative penalty {penalty}")));
    }
    Ok(LassoProblem::new(y, x)?.solve(penalty, tol, max_sweeps, None))
}

/// `count` log-spaced values from `max` down to `max · min_ratio`.
pub fn penalty_grid(max: f64, count: usize, min_ratio: f64) -> Vec<f64> {
    if count == 0 {
        return Vec::new();
    }
    if count == 1 || max <= 0.0 {
        return vec![max.max(0.0)];
    }
    let step = min_ratio.ln() / (count - 1) as f64;
    (0..count).map(|i| max * (step * i as f64).exp()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub penalty: f64,
    pub index: usize,
    /// Mean held-out squared error per grid value.
    pub errors: Vec<f64>,
}

/// Row indices of each fold: a seeded shuffle dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64, stream: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut rng);
    let mut out = vec![Vec::new(); folds];
    for (i, r) in rows.into_iter().enumerate() {
        out[i % folds].push(r);
    }
    out
}

/// Held-out squared error of every grid value, summed over folds
/// (not yet averaged).
pub(crate) fn cv_errors(
    y: &DVector<f64>,
    x: &DMatrix<f64>,
    grid: &[f64],
    folds: &[Vec<usize>],
    tol: f64,
    max_sweeps: usize,
) -> Vec<f64> {
    let n = y.len();
    let mut errors = vec![0.0; grid.len()];
    let mut in_fold = vec![usize::MAX; n];
    for (f, rows) in folds.iter().enumerate() {
        for &r in rows {
            in_fold[r] = f;
        }
    }
    for (f, test) in folds.iter().enumerate() {
        if test.is_empty() {
            continue;
        }
        let train: Vec<usize> = (0..n).filter(|&r| in_fold[r] != f).collect();
        let xt = x.select_rows(train.iter());
        let yt = DVector::from_iterator(train.len(), train.iter().map(|&r| y[r]));
        let problem = LassoProblem::new(&yt, &xt).expect("shapes agree");
        let xv = x.select_rows(test.iter());
        let yv = DVector::from_iterator(test.len(), test.iter().map(|&r| y[r]));
        let mut warm: Option<DVector<f64>> = None;
        for (g, &pen) in grid.iter().enumerate() {
            let fit = problem.solve(pen, tol, max_sweeps, warm.as_ref());
            errors[g] += (&yv - &xv * &fit.coef).norm_squared();
            warm = Some(fit.coef);
        }
    }
    errors
}

/// Picks the grid value with the smallest mean held-out error; ties go to the
/// larger penalty. `grid` must be sorted in decreasing order.
pub fn cv_lambda2(
    y: &DVector<f64>,
    x: &DMatrix<f64>,
    grid: &[f64],
    folds: usize,
    seed: u64,
    tol: f64,
    max_sweeps: usize,
) -> Result<CvResult, RefitError> {
    if grid.is_empty() {
        return Err(RefitError::GridEmpty);
    }
    if folds < 2 || folds > y.len() {
        return Err(RefitError::TooFewRows { n: y.len(), folds });
    }
    LassoProblem::new(y, x)?;
    let assignment = fold_assignment(y.len(), folds, seed, 0);
    let mut errors = cv_errors(y, x, grid, &assignment, tol, max_sweeps);
    for e in &mut errors {
        *e /= y.len() as f64;
    }
    let index = argmin_first(&errors);
    Ok(CvResult {
        penalty: grid[index],
        index,
        errors,
    })
}

pub(crate) fn argmin_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, m: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, m, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn zero_penalty_is_least_squares() {
        let x = gaussian(60, 4, 1);
        let y = &x * DVector::from_vec(vec![1.0, -2.0, 0.5, 0.0]) + gaussian(60, 1, 2).column(0);
        let fit = lasso_cd(&y, &x, 0.0, 1e-12, 100_000).unwrap();
        assert!(fit.converged);
        let ols = (x.transpose() * &x).cholesky().unwrap().solve(&(x.transpose() * &y));
        assert!((&fit.coef - ols).amax() < 1e-8);
    }

    #[test]
    fn penalty_above_threshold_gives_zero() {
        let x = gaussian(40, 5, 3);
        let y: DVector<f64> = x.column(2) * 1.5 + gaussian(40, 1, 4).column(0);
        let oracle = (0..5)
            .map(|i| (x.column(i).dot(&y)).abs())
            .fold(0.0, f64::max)
            * 2.0
            / 40.0;
        let fit = lasso_cd(&y, &x, oracle, 1e-10, 1000).unwrap();
        assert!(fit.coef.iter().all(|&c| c == 0.0));
        let fit = lasso_cd(&y, &x, oracle * 0.99, 1e-10, 1000).unwrap();
        assert!(fit.coef.iter().any(|&c| c != 0.0));
    }

    #[test]
    fn single_predictor_matches_closed_form() {
        let x = gaussian(30, 1, 5);
        let y: DVector<f64> = x.column(0) * 0.7 + gaussian(30, 1, 6).column(0);
        let n = 30.0;
        let rho = x.column(0).dot(&y) / n;
        let xx = x.column(0).norm_squared() / n;
        for pen in [0.0, 0.1, 0.5, 2.0] {
            let expected = rho.signum() * (rho.abs() - pen / 2.0).max(0.0) / xx;
            let fit = lasso_cd(&y, &x, pen, 1e-12, 100).unwrap();
            assert!((fit.coef[0] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn kkt_certificate_holds_at_exit() {
        let mut x = gaussian(80, 6, 7);
        for r in 0..80 {
            x[(r, 1)] += 0.8 * x[(r, 0)];
        }
        let y: DVector<f64> = x.column(0) - x.column(3) * 0.5 + gaussian(80, 1, 8).column(0);
        let tol = 1e-9;
        for pen in [0.01, 0.1, 0.4] {
            let fit = lasso_cd(&y, &x, pen, tol, 100_000).unwrap();
            assert!(fit.converged);
            let r = &y - &x * &fit.coef;
            for i in 0..6 {
                let g = 2.0 * x.column(i).dot(&r) / 80.0;
                if fit.coef[i] != 0.0 {
                    assert!((g - pen * fit.coef[i].signum()).abs() <= tol * 1.0001);
                } else {
                    assert!(g.abs() <= pen + tol);
                }
            }
        }
    }

    #[test]
    fn no_convergence_is_flagged() {
        let mut x = gaussian(50, 3, 9);
        for r in 0..50 {
            x[(r, 1)] = x[(r, 0)] + 1e-3 * x[(r, 1)];
        }
        let y: DVector<f64> = x.column(0) + gaussian(50, 1, 10).column(0);
        let fit = lasso_cd(&y, &x, 0.0, 1e-14, 1).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.sweeps, 1);
        assert!(fit.kkt_residual > 1e-14);
    }

    #[test]
    fn empty_design() {
        let y = DVector::from_vec(vec![1.0, -1.0]);
        let fit = lasso_cd(&y, &DMatrix::zeros(2, 0), 0.3, 1e-9, 10).unwrap();
        assert_eq!(fit.coef.len(), 0);
        assert!(fit.converged);
    }

    #[test]
    fn grid_shape() {
        let g = penalty_grid(2.0, 50, 1e-3);
        assert_eq!(g.len(), 50);
        assert!((g[0] - 2.0).abs() < 1e-15);
        assert!((g[49] - 2e-3).abs() < 1e-15);
        assert!(g.windows(2).all(|w| w[0] > w[1]));
        let ratio = g[1] / g[0];
        assert!(g.windows(2).all(|w| (w[1] / w[0] - ratio).abs() < 1e-12));
        assert!(penalty_grid(1.0, 0, 0.1).is_empty());
    }

    #[test]
    fn folds_partition_rows_deterministically() {
        let f = fold_assignment(23, 5, 42, 0);
        let mut all: Vec<usize> = f.iter().flatten().copied().collect();
        all.sort();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        assert!(f.iter().all(|x| x.len() == 4 || x.len() == 5));
        assert_eq!(f, fold_assignment(23, 5, 42, 0));
        assert_ne!(f, fold_assignment(23, 5, 42, 1));
    }

    #[test]
    fn cv_errors() {
        let x = gaussian(20, 2, 11);
        let y = DVector::from_element(20, 1.0);
        assert!(matches!(
            cv_lambda2(&y, &x, &[], 5, 0, 1e-9, 100),
            Err(RefitError::GridEmpty)
        ));
        assert!(cv_lambda2(&y, &x, &[1.0], 21, 0, 1e-9, 100).is_err());
    }

    #[test]
    fn leave_one_out_returns_grid_member() {
        let x = gaussian(6, 2, 12);
        let y: DVector<f64> = x.column(0) + gaussian(6, 1, 13).column(0);
        let grid = penalty_grid(1.0, 5, 0.01);
        let cv = cv_lambda2(&y, &x, &grid, 6, 3, 1e-9, 10_000).unwrap();
        assert!(grid.contains(&cv.penalty));
        assert_eq!(cv.errors.len(), 5);
    }

    #[test]
    fn strong_predictor_is_kept_with_accurate_coefficient() {
        let x = gaussian(1000, 3, 14);
        let y: DVector<f64> = x.column(1) * 0.8 + gaussian(1000, 1, 15).column(0);
        let problem = LassoProblem::new(&y, &x).unwrap();
        let grid = penalty_grid(problem.lambda_max(), 50, 1e-3);
        let cv = cv_lambda2(&y, &x, &grid, 10, 7, 1e-9, 10_000).unwrap();
        let fit = lasso_cd(&y, &x, cv.penalty, 1e-9, 10_000).unwrap();
        assert!((fit.coef[1] - 0.8).abs() < 0.08, "{}", fit.coef[1]);
    }

    #[test]
    fn pure_noise_selects_large_penalty() {
        // argmin-CV keeps a small shrunken noise coefficient in roughly a
        // quarter of draws, independent of n
        let mut hits = 0;
        let mut indices = Vec::new();
        let trials = 100;
        for t in 0..trials {
            let x = gaussian(100, 5, 100 + t);
            let y: DVector<f64> = gaussian(100, 1, 200 + t).column(0).into_owned();
            let problem = LassoProblem::new(&y, &x).unwrap();
            let grid = penalty_grid(problem.lambda_max(), 50, 1e-3);
            let cv = cv_lambda2(&y, &x, &grid, 10, t, 1e-9, 10_000).unwrap();
            if cv.index < 5 {
                hits += 1;
            }
            indices.push(cv.index);
        }
        indices.sort();
        assert_eq!(indices[trials as usize / 2], 0);
        assert!(hits * 100 >= trials * 65, "{hits}/{trials}");
    }

    #[test]
    fn active_set_shrinks_along_the_path() {
        let x = gaussian(200, 6, 16);
        let y: DVector<f64> = x.column(0) * 1.0 - x.column(2) * 0.6
            + x.column(4) * 0.3
            + gaussian(200, 1, 17).column(0);
        let problem = LassoProblem::new(&y, &x).unwrap();
        let grid = penalty_grid(problem.lambda_max(), 50, 1e-3);
        let sizes: Vec<usize> = grid
            .iter()
            .map(|&p| problem.solve(p, 1e-10, 100_000, None).active_set().len())
            .collect();
        assert!(sizes.windows(2).all(|w| w[0] <= w[1]), "{sizes:?}");
        assert_eq!(sizes[0], 0);
    }
}
