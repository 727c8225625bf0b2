use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;

use jointges::eval::{confusion, Confusion, ConfusionMode};
use jointges::graph::io::parse_edge_list;
use jointges::graph::{shd, Pdag};

use crate::error::{CliError, CliResult};
use crate::manifest::{now, read_input, FileDigest, ManifestParts, OutputDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Counting {
    Skeleton,
    Oriented,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Estimated graphs, one edge-list file per class.
    #[arg(long, required = true, num_args = 1..)]
    pub estimate: Vec<PathBuf>,
    /// True graphs in the same class order.
    #[arg(long, required = true, num_args = 1..)]
    pub truth: Vec<PathBuf>,
    /// How TP/FP/FN/TN are counted.
    #[arg(long, value_enum, default_value_t = Counting::Skeleton)]
    pub counting: Counting,
}

#[derive(Debug, Serialize)]
struct ClassMetrics {
    class: usize,
    shd: usize,
    #[serde(flatten)]
    counts: Confusion,
    tpr: f64,
    fpr: f64,
}

#[derive(Debug, Serialize)]
struct Metrics {
    counting: ConfusionMode,
    classes: Vec<ClassMetrics>,
    mean_shd: f64,
    mean_tpr: f64,
    mean_fpr: f64,
}

/// Reads an edge list; a pair listed in both directions is undirected.
fn read_graph(path: &Path, inputs: &mut Vec<FileDigest>) -> CliResult<Pdag> {
    let bytes = read_input(path, inputs)?;
    let text = String::from_utf8(bytes)
        .map_err(|e| CliError::shape(format!("{}: {e}", path.display())))?;
    parse_edge_list(&text)
        .and_then(|l| l.to_pdag())
        .map_err(|e| CliError::shape(format!("{}: {e}", path.display())))
}

pub fn run(args: &EvaluateArgs, out: &Path) -> CliResult<()> {
    let started = now();
    let mut inputs = Vec::new();
    if args.estimate.len() != args.truth.len() {
        return Err(CliError::shape(format!(
            "{} estimate files for {} truth files",
            args.estimate.len(),
            args.truth.len()
        )));
    }
    let mode = match args.counting {
        Counting::Skeleton => ConfusionMode::Skeleton,
        Counting::Oriented => ConfusionMode::Oriented,
    };
    let mut classes = Vec::new();
    for (k, (e, t)) in args.estimate.iter().zip(&args.truth).enumerate() {
        let est = read_graph(e, &mut inputs)?;
        let truth = read_graph(t, &mut inputs)?;
        if est.p() != truth.p() {
            return Err(CliError::shape(format!(
                "class {k}: {} has p = {}, {} has p = {}",
                e.display(),
                est.p(),
                t.display(),
                truth.p()
            )));
        }
        let counts = confusion(&est, &truth, mode).map_err(|e| CliError::shape(e.to_string()))?;
        classes.push(ClassMetrics {
            class: k,
            shd: shd(&est, &truth).map_err(|e| CliError::shape(e.to_string()))?,
            counts,
            tpr: counts.tpr(),
            fpr: counts.fpr(),
        });
    }
    let n = classes.len() as f64;
    let metrics = Metrics {
        counting: mode,
        mean_shd: classes.iter().map(|c| c.shd as f64).sum::<f64>() / n,
        mean_tpr: classes.iter().map(|c| c.tpr).sum::<f64>() / n,
        mean_fpr: classes.iter().map(|c| c.fpr).sum::<f64>() / n,
        classes,
    };

    let mut csv = String::from("class,shd,tp,fp,fn,tn,tpr,fpr\n");
    for c in &metrics.classes {
        csv += &format!(
            "{},{},{},{},{},{},{},{}\n",
            c.class, c.shd, c.counts.tp, c.counts.fp, c.counts.fn_, c.counts.tn, c.tpr, c.fpr
        );
    }
    csv += &format!(
        "mean,{},,,,,{},{}\n",
        metrics.mean_shd, metrics.mean_tpr, metrics.mean_fpr
    );

    let mut dir = OutputDir::create(out)?;
    dir.write("metrics.csv", csv.as_bytes())?;
    dir.write_json("metrics.json", &metrics)?;
    let config = serde_json::json!({
        "estimate": args.estimate.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "truth": args.truth.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "counting": mode,
    });
    dir.finish(ManifestParts {
        command: "evaluate",
        config,
        seed: None,
        inputs,
        started,
        extra: None,
    })
}
