use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::ScoreError;
use crate::sem::InterventionSpec;

/// `K` sample matrices over one node set, with per-class Gram matrices.
///
/// Columns are mean-centered at construction unless built with
/// [`MultiDataset::with_centering`]`(.., false)`.
#[derive(Debug, Clone)]
pub struct MultiDataset {
    p: usize,
    classes: Vec<DMatrix<f64>>,
    grams: Vec<DMatrix<f64>>,
    n_k: Vec<usize>,
    weights: Vec<f64>,
    interventions: Option<InterventionSpec>,
    pooled: Option<PooledGrams>,
    centered: bool,
}

/// Gram matrices summed over the classes where a node is not intervened on.
#[derive(Debug, Clone)]
struct PooledGrams {
    /// node -> index into `groups`
    group_of: Vec<usize>,
    groups: Vec<PooledGroup>,
}

#[derive(Debug, Clone)]
pub(crate) struct PooledGroup {
    pub classes: Vec<usize>,
    pub gram: DMatrix<f64>,
    pub n: usize,
}

impl MultiDataset {
    pub fn new(
        classes: Vec<DMatrix<f64>>,
        interventions: Option<InterventionSpec>,
    ) -> Result<Self, ScoreError> {
        Self::with_centering(classes, interventions, true)
    }

    pub fn with_centering(
        mut classes: Vec<DMatrix<f64>>,
        interventions: Option<InterventionSpec>,
        center: bool,
    ) -> Result<Self, ScoreError> {
        let first = classes.first().ok_or(ScoreError::EmptyDataset)?;
        let p = first.ncols();
        if p == 0 {
            return Err(ScoreError::EmptyDataset);
        }
        for (k, x) in classes.iter().enumerate() {
            if x.ncols() != p {
                return Err(ScoreError::DimensionMismatch(format!(
                    "class {k} has {} columns, class 0 has {p}",
                    x.ncols()
                )));
            }
            if x.nrows() == 0 {
                return Err(ScoreError::DimensionMismatch(format!("class {k} has no rows")));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(ScoreError::DimensionMismatch(format!(
                    "class {k} contains non-finite values"
                )));
            }
        }
        if let Some(spec) = &interventions {
            if spec.n_classes() != classes.len() {
                return Err(ScoreError::DimensionMismatch(format!(
                    "intervention spec lists {} classes, data has {}",
                    spec.n_classes(),
                    classes.len()
                )));
            }
            if let Some(bad) = spec.iter().flatten().find(|&&j| j >= p) {
                return Err(ScoreError::NodeOutOfRange { node: *bad, p });
            }
        }
        if center {
            for x in &mut classes {
                for mut col in x.column_iter_mut() {
                    let mean = col.mean();
                    col.add_scalar_mut(-mean);
                }
            }
        }
        let grams: Vec<DMatrix<f64>> = classes.iter().map(|x| x.tr_mul(x)).collect();
        let n_k: Vec<usize> = classes.iter().map(|x| x.nrows()).collect();
        let n: usize = n_k.iter().sum();
        let weights = n_k.iter().map(|&nk| nk as f64 / n as f64).collect();
        let pooled = interventions
            .as_ref()
            .map(|spec| PooledGrams::build(spec, &grams, &n_k, p));
        Ok(MultiDataset {
            p,
            classes,
            grams,
            n_k,
            weights,
            interventions,
            pooled,
            centered: center,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Total sample size `n = Σ n_k`.
    pub fn n(&self) -> usize {
        self.n_k.iter().sum()
    }

    pub fn n_k(&self, k: usize) -> usize {
        self.n_k[k]
    }

    /// Class weight `w_k = n_k / n`.
    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn class_data(&self, k: usize) -> &DMatrix<f64> {
        &self.classes[k]
    }

    pub fn gram(&self, k: usize) -> &DMatrix<f64> {
        &self.grams[k]
    }

    pub fn interventions(&self) -> Option<&InterventionSpec> {
        self.interventions.as_ref()
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub(crate) fn pooled_group(&self, j: usize) -> Option<&PooledGroup> {
        self.pooled
            .as_ref()
            .map(|pg| &pg.groups[pg.group_of[j]])
    }

    /// The single-class dataset for class `k` (no intervention spec).
    pub fn single_class(&self, k: usize) -> MultiDataset {
        MultiDataset::with_centering(vec![self.classes[k].clone()], None, false)
            .expect("class data already validated")
    }

    /// Row subset per class; data are re-centered when the parent was centered.
    pub fn subsample(&self, rows: &[Vec<usize>]) -> Result<MultiDataset, ScoreError> {
        if rows.len() != self.n_classes() {
            return Err(ScoreError::DimensionMismatch(format!(
                "{} row lists for {} classes",
                rows.len(),
                self.n_classes()
            )));
        }
        let classes = self
            .classes
            .iter()
            .zip(rows)
            .map(|(x, r)| x.select_rows(r.iter()))
            .collect();
        MultiDataset::with_centering(classes, self.interventions.clone(), self.centered)
    }
}

impl PooledGrams {
    fn build(spec: &InterventionSpec, grams: &[DMatrix<f64>], n_k: &[usize], p: usize) -> Self {
        let mut index: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        let mut groups = Vec::new();
        let mut group_of = Vec::with_capacity(p);
        for j in 0..p {
            let classes: Vec<usize> = (0..grams.len())
                .filter(|&k| !spec.is_intervened(k, j))
                .collect();
            let idx = *index.entry(classes.clone()).or_insert_with(|| {
                let mut gram = DMatrix::zeros(p, p);
                for &k in &classes {
                    gram += &grams[k];
                }
                let n = classes.iter().map(|&k| n_k[k]).sum();
                groups.push(PooledGroup { classes, gram, n });
                groups.len() - 1
            });
            group_of.push(idx);
        }
        PooledGrams { group_of, groups }
    }
}
