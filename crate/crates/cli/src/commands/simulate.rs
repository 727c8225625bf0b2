use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use jointges::sem::io::{default_header, write_samples_csv, write_sem};
use jointges::sem::{
    interventional_collection, random_joint_model, sample, InterventionSpec, JointModelConfig,
};

use super::read_json_config;
use crate::error::{CliError, CliResult};
use crate::manifest::{now, ManifestParts, OutputDir};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulation config (JSON).
    #[arg(long)]
    pub config: PathBuf,
}

/// Model generator settings plus per-class sample sizes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub model: JointModelConfig,
    /// Rows drawn per class; one entry per class.
    pub n_k: Vec<usize>,
    /// Optional targets per class. When present every class shares the
    /// first generated model and class `k` is intervened on its targets.
    #[serde(default)]
    pub interventions: Option<Vec<BTreeSet<usize>>>,
}

impl SimulationConfig {
    fn validate(&self) -> CliResult<()> {
        self.model
            .validate()
            .map_err(|e| CliError::config(format!("model.{e}")))?;
        if self.n_k.len() != self.model.k {
            return Err(CliError::config(format!(
                "n_k: {} sizes given for K = {} classes",
                self.n_k.len(),
                self.model.k
            )));
        }
        if let Some(&n) = self.n_k.iter().find(|&&n| n < 2) {
            return Err(CliError::config(format!("n_k: every class needs at least 2 rows, got {n}")));
        }
        if let Some(t) = &self.interventions {
            if t.len() != self.model.k {
                return Err(CliError::config(format!(
                    "interventions: {} target sets for K = {} classes",
                    t.len(),
                    self.model.k
                )));
            }
            InterventionSpec::new(t.clone(), self.model.p)
                .map_err(|e| CliError::config(format!("interventions: {e}")))?;
        }
        Ok(())
    }
}

pub fn run(args: &SimulateArgs, seed: Option<u64>, out: &Path) -> CliResult<()> {
    let started = now();
    let mut inputs = Vec::new();
    let mut cfg: SimulationConfig = read_json_config(&args.config, &mut inputs)?;
    if let Some(s) = seed {
        cfg.model.seed = s;
    }
    cfg.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.model.seed);
    let sim = random_joint_model(&cfg.model, &mut rng)
        .map_err(|e| CliError::config(format!("model: {e}")))?;
    let models = match &cfg.interventions {
        None => sim.models,
        Some(targets) => {
            let spec = InterventionSpec::new(targets.clone(), cfg.model.p)
                .map_err(|e| CliError::config(format!("interventions: {e}")))?;
            let range = cfg
                .model
                .intervention_variance_range
                .unwrap_or(cfg.model.variance_range);
            interventional_collection(&sim.models[0], &spec, range, &mut rng)
                .map_err(|e| CliError::config(format!("interventions: {e}")))?
        }
    };

    let header = default_header(cfg.model.p);
    let mut dir = OutputDir::create(out)?;
    for (k, m) in models.iter().enumerate() {
        let x = sample(m, cfg.n_k[k], &mut rng);
        let mut csv = Vec::new();
        write_samples_csv(&x, &header, &mut csv)
            .map_err(|e| CliError::io(&out.join(format!("class_{k}.csv")), e))?;
        dir.write(&format!("class_{k}.csv"), &csv)?;
        dir.write(&format!("truth_class_{k}.txt"), write_sem(m).as_bytes())?;
    }
    if let Some(t) = &cfg.interventions {
        dir.write_json("interventions.json", t)?;
    }
    let config = serde_json::to_value(&cfg).expect("config serializes");
    dir.finish(ManifestParts {
        command: "simulate",
        config,
        seed: Some(cfg.model.seed),
        inputs,
        started,
        extra: None,
    })
}
