use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{apply_intervention, InterventionSpec, SemError, SemModel};
use crate::graph::{Dag, Permutation};

/// Parameters of the random collection generator: a shared Erdős–Rényi core
/// oriented by one random ordering, plus class-specific extra edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointModelConfig {
    pub p: usize,
    #[serde(rename = "K")]
    pub k: usize,
    /// Expected number of core edges; each pair is included independently.
    pub core_edges: f64,
    /// Exact number of extra edges added to each class.
    pub extra_edges: usize,
    /// Two disjoint intervals, neither containing zero.
    pub weight_range: [[f64; 2]; 2],
    pub variance_range: [f64; 2],
    pub seed: u64,
    /// Reuse one weight per core edge across classes.
    #[serde(default)]
    pub lock_shared_weights: bool,
    /// Noise variance range for intervened nodes; `variance_range` when absent.
    #[serde(default)]
    pub intervention_variance_range: Option<[f64; 2]>,
}

impl Default for JointModelConfig {
    fn default() -> Self {
        JointModelConfig {
            p: 100,
            k: 3,
            core_edges: 100.0,
            extra_edges: 30,
            weight_range: [[-1.0, -0.1], [0.1, 1.0]],
            variance_range: [1.0, 2.25],
            seed: 0,
            lock_shared_weights: false,
            intervention_variance_range: None,
        }
    }
}

impl JointModelConfig {
    pub fn validate(&self) -> Result<(), SemError> {
        let bad = |msg: String| Err(SemError::ConfigInfeasible(msg));
        if self.p < 2 {
            return bad(format!("p: need at least 2 nodes, got {}", self.p));
        }
        if self.k == 0 {
            return bad("K: need at least one class".into());
        }
        let pairs = (self.p * (self.p - 1) / 2) as f64;
        if !(self.core_edges.is_finite() && self.core_edges >= 0.0 && self.core_edges <= pairs) {
            return bad(format!(
                "core_edges: {} is outside [0, {pairs}]",
                self.core_edges
            ));
        }
        let [a, b] = self.weight_range;
        for (name, iv) in [("weight_range[0]", a), ("weight_range[1]", b)] {
            if !(iv[0].is_finite() && iv[1].is_finite() && iv[0] < iv[1]) {
                return bad(format!("{name}: {iv:?} is not a bounded interval"));
            }
            if iv[0] <= 0.0 && iv[1] >= 0.0 {
                return bad(format!("{name}: {iv:?} contains zero"));
            }
        }
        if a[1] >= b[0] && b[1] >= a[0] {
            return bad("weight_range: intervals overlap".into());
        }
        check_variance_range("variance_range", self.variance_range)?;
        if let Some(r) = self.intervention_variance_range {
            check_variance_range("intervention_variance_range", r)?;
        }
        Ok(())
    }
}

fn check_variance_range(name: &str, r: [f64; 2]) -> Result<(), SemError> {
    if r[0].is_finite() && r[1].is_finite() && r[0] > 0.0 && r[0] <= r[1] {
        Ok(())
    } else {
        Err(SemError::ConfigInfeasible(format!(
            "{name}: {r:?} must satisfy 0 < lo <= hi"
        )))
    }
}

/// Output of [`random_joint_model`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedCollection {
    /// Ordering consistent with every class DAG.
    pub order: Permutation,
    pub core: Dag,
    pub dags: Vec<Dag>,
    pub models: Vec<SemModel>,
}

pub fn random_joint_model<R: Rng + ?Sized>(
    cfg: &JointModelConfig,
    rng: &mut R,
) -> Result<SimulatedCollection, SemError> {
    cfg.validate()?;
    let p = cfg.p;
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(rng);
    let order = Permutation::from_order(order)?;

    // pairs as (earlier, later) in the drawn ordering
    let pairs: Vec<(usize, usize)> = (0..p)
        .flat_map(|s| ((s + 1)..p).map(move |t| (s, t)))
        .map(|(s, t)| (order.order()[s], order.order()[t]))
        .collect();
    let prob = cfg.core_edges / pairs.len() as f64;
    let mut core_edges = Vec::new();
    let mut free = Vec::new();
    for &pair in &pairs {
        if rng.random::<f64>() < prob {
            core_edges.push(pair);
        } else {
            free.push(pair);
        }
    }
    if cfg.extra_edges > free.len() {
        return Err(SemError::ConfigInfeasible(format!(
            "extra_edges: {} requested but only {} non-edges remain",
            cfg.extra_edges,
            free.len()
        )));
    }
    let core = Dag::new(p, core_edges.iter().copied())?;

    let locked: BTreeMap<(usize, usize), f64> = if cfg.lock_shared_weights {
        core_edges
            .iter()
            .map(|&e| (e, draw_weight(cfg, rng)))
            .collect()
    } else {
        BTreeMap::new()
    };

    let mut dags = Vec::with_capacity(cfg.k);
    let mut models = Vec::with_capacity(cfg.k);
    for _ in 0..cfg.k {
        let mut edges: BTreeSet<(usize, usize)> = core_edges.iter().copied().collect();
        for idx in index::sample(rng, free.len(), cfg.extra_edges).into_vec() {
            edges.insert(free[idx]);
        }
        let weighted: Vec<(usize, usize, f64)> = edges
            .iter()
            .map(|&e| {
                let w = match locked.get(&e) {
                    Some(&w) => w,
                    None => draw_weight(cfg, rng),
                };
                (e.0, e.1, w)
            })
            .collect();
        let omega: Vec<f64> = (0..p)
            .map(|_| draw_uniform(cfg.variance_range, rng))
            .collect();
        let model = SemModel::from_edges(p, weighted, omega)?;
        dags.push(model.dag().clone());
        models.push(model);
    }
    Ok(SimulatedCollection {
        order,
        core,
        dags,
        models,
    })
}

fn draw_uniform<R: Rng + ?Sized>(range: [f64; 2], rng: &mut R) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.random_range(range[0]..range[1])
    }
}

/// Uniform on the union of the two weight intervals.
fn draw_weight<R: Rng + ?Sized>(cfg: &JointModelConfig, rng: &mut R) -> f64 {
    let [a, b] = cfg.weight_range;
    let (la, lb) = (a[1] - a[0], b[1] - b[0]);
    let u = rng.random::<f64>() * (la + lb);
    if u < la {
        a[0] + u
    } else {
        b[0] + (u - la)
    }
}

/// Fresh variances for a set of intervention targets.
pub fn draw_intervention_variances<R: Rng + ?Sized>(
    targets: &BTreeSet<usize>,
    range: [f64; 2],
    rng: &mut R,
) -> BTreeMap<usize, f64> {
    targets
        .iter()
        .map(|&j| (j, draw_uniform(range, rng)))
        .collect()
}

/// One intervened model per class of `spec`, all derived from `base`.
pub fn interventional_collection<R: Rng + ?Sized>(
    base: &SemModel,
    spec: &InterventionSpec,
    variance_range: [f64; 2],
    rng: &mut R,
) -> Result<Vec<SemModel>, SemError> {
    check_variance_range("variance_range", variance_range)?;
    spec.iter()
        .map(|targets| {
            let vars = draw_intervention_variances(targets, variance_range, rng);
            apply_intervention(base, targets, &vars)
        })
        .collect()
}
