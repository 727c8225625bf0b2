use nalgebra::DMatrix;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EvalError, PipelineConfig};
use crate::refit::joint_ges;
use crate::scoring::MultiDataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub subsamples: usize,
    /// Share of each class drawn without replacement per subsample.
    pub fraction: f64,
    /// Edges selected in at least this share of subsamples are kept.
    pub threshold: f64,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            subsamples: 50,
            fraction: 0.5,
            threshold: 0.6,
            seed: 0,
            parallel: true,
        }
    }
}

impl StabilityConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: &str| Err(EvalError::Config(m.to_string()));
        if self.subsamples == 0 {
            return bad("subsamples: must be at least 1");
        }
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return bad("fraction: must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return bad("threshold: must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityResult {
    /// Selection frequency of each directed edge `i → j`, per class.
    pub frequencies: Vec<DMatrix<f64>>,
    /// Edges with frequency at or above the threshold, per class.
    pub selected: Vec<Vec<(usize, usize)>>,
}

/// Runs jointGES on random subsamples and records how often each class edge
/// is selected.
pub fn stability_selection(
    data: &MultiDataset,
    pipeline: &PipelineConfig,
    cfg: &StabilityConfig,
) -> Result<StabilityResult, EvalError> {
    cfg.validate()?;
    let (p, k_classes) = (data.p(), data.n_classes());
    let sizes: Vec<usize> = (0..k_classes)
        .map(|k| ((cfg.fraction * data.n_k(k) as f64).floor() as usize).max(2))
        .collect();
    let run = |s: usize| -> Result<Vec<DMatrix<u32>>, EvalError> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(s as u64);
        let rows: Vec<Vec<usize>> = (0..k_classes)
            .map(|k| {
                let mut r = index::sample(&mut rng, data.n_k(k), sizes[k].min(data.n_k(k))).into_vec();
                r.sort_unstable();
                r
            })
            .collect();
        let sub = data
            .subsample(&rows)
            .map_err(|e| EvalError::Config(e.to_string()))?;
        let scfg = pipeline.score_for(p, sub.n());
        let fit = joint_ges(&sub, &scfg, &pipeline.search, &pipeline.lasso, pipeline.extension)?;
        Ok((0..k_classes)
            .map(|k| {
                let dag = fit.class_dag(k);
                DMatrix::from_fn(p, p, |i, j| dag.has_edge(i, j) as u32)
            })
            .collect())
    };
    let counts: Vec<Vec<DMatrix<u32>>> = if cfg.parallel {
        (0..cfg.subsamples)
            .into_par_iter()
            .map(run)
            .collect::<Result<_, _>>()?
    } else {
        (0..cfg.subsamples).map(run).collect::<Result<_, _>>()?
    };
    let mut totals = vec![DMatrix::<u32>::zeros(p, p); k_classes];
    for c in &counts {
        for (t, m) in totals.iter_mut().zip(c) {
            *t += m;
        }
    }
    let b = cfg.subsamples as f64;
    let frequencies: Vec<DMatrix<f64>> = totals.iter().map(|t| t.map(|v| v as f64 / b)).collect();
    let selected = frequencies
        .iter()
        .map(|f| {
            (0..p)
                .flat_map(|i| (0..p).map(move |j| (i, j)))
                .filter(|&(i, j)| i != j && f[(i, j)] >= cfg.threshold)
                .collect()
        })
        .collect();
    Ok(StabilityResult {
        frequencies,
        selected,
    })
}
