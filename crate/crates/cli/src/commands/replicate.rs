use std::path::{Path, PathBuf};

use clap::Args;

use jointges::eval::{
    roc_sweep, run_comparison, write_records_csv, write_roc_csv, write_summary_csv,
    ExperimentConfig,
};

use super::read_json_config;
use crate::error::{CliError, CliResult};
use crate::manifest::{now, ManifestParts, OutputDir};

/// Share of replicates that must succeed for a zero exit status.
const MIN_SUCCESS: f64 = 0.9;

#[derive(Debug, Args)]
pub struct ReplicateArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Skip the ROC sweep over the tuning grid.
    #[arg(long)]
    pub no_roc: bool,
}

pub fn run(args: &ReplicateArgs, seed: Option<u64>, out: &Path) -> CliResult<()> {
    let started = now();
    let mut inputs = Vec::new();
    let mut cfg: ExperimentConfig = read_json_config(&args.config, &mut inputs)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    cfg.validate().map_err(|e| CliError::config(e.to_string()))?;

    let report = run_comparison(&cfg).map_err(|e| CliError::config(e.to_string()))?;
    let roc = if args.no_roc {
        None
    } else {
        Some(roc_sweep(&cfg).map_err(|e| CliError::config(e.to_string()))?)
    };

    let comments = vec![
        format!("jointges {}", env!("CARGO_PKG_VERSION")),
        format!("master_seed={}", cfg.master_seed),
    ];
    let csv_err = |name: &str, e| CliError::io(&out.join(name), e);
    let mut dir = OutputDir::create(out)?;
    let mut buf = Vec::new();
    write_summary_csv(&mut buf, &report.summary, &comments).map_err(|e| csv_err("summary.csv", e))?;
    dir.write("summary.csv", &buf)?;
    dir.write_json("summary.json", &report.summary)?;
    let mut buf = Vec::new();
    write_records_csv(&mut buf, &report.records, &comments).map_err(|e| csv_err("records.csv", e))?;
    dir.write("records.csv", &buf)?;
    if let Some(points) = &roc {
        let mut buf = Vec::new();
        write_roc_csv(&mut buf, points, &comments).map_err(|e| csv_err("roc.csv", e))?;
        dir.write("roc.csv", &buf)?;
        dir.write_json("roc.json", points)?;
    }
    let config = serde_json::to_value(&cfg).expect("config serializes");
    let success = report.summary.success_fraction();
    for f in &report.summary.failures {
        log::warn!("replicate {} failed: {}", f.replicate, f.message);
    }
    dir.finish(ManifestParts {
        command: "replicate",
        config,
        seed: Some(cfg.master_seed),
        inputs,
        started,
        extra: Some(serde_json::json!({ "timing": report.timing })),
    })?;
    if success < MIN_SUCCESS {
        return Err(CliError::replicates(format!(
            "only {:.0}% of replicates succeeded",
            100.0 * success
        )));
    }
    Ok(())
}
