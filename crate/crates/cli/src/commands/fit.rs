use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;

use jointges::graph::io::{write_dag, write_pdag};
use jointges::refit::{joint_ges, joint_gies, ExtensionChoice, LassoConfig, PenaltyChoice};
use jointges::scoring::{MultiDataset, ScoreConfig};
use jointges::search::{separate_fit, SearchConfig};
use jointges::sem::io::{read_samples_csv, write_sem};
use jointges::sem::InterventionSpec;

use super::read_json_config;
use crate::error::{CliError, CliResult};
use crate::manifest::{now, read_input, FileDigest, ManifestParts, OutputDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// jointGES: joint search, then per-class lasso refits.
    Joint,
    /// GES on each class alone.
    Separate,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// One CSV per class; all must share the same header.
    #[arg(long, required = true, num_args = 1..)]
    pub data: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Joint)]
    pub mode: Mode,
    /// Scaling constant c in λ₁² = c·log(p)/n.
    #[arg(long = "lambda1-c", default_value_t = 2.0)]
    pub lambda1_c: f64,
    #[arg(long)]
    pub max_in_degree: Option<usize>,
    /// Fixed lasso penalty λ₂²; cross-validation is used when absent.
    #[arg(long, conflicts_with = "cv")]
    pub lambda2: Option<f64>,
    /// Number of cross-validation folds for λ₂².
    #[arg(long)]
    pub cv: Option<usize>,
    /// Refit every member of the searched class and keep the sparsest,
    /// scoring at most this many members.
    #[arg(long)]
    pub sparsest: Option<usize>,
    /// JSON array with one array of intervened node indices per class.
    #[arg(long)]
    pub interventions: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct ResolvedFit {
    data: Vec<String>,
    mode: Mode,
    score: ScoreConfig,
    search: SearchConfig,
    lasso: Option<LassoConfig>,
    extension: Option<ExtensionChoice>,
    interventions: Option<Vec<BTreeSet<usize>>>,
}

fn load_data(
    args: &FitArgs,
    inputs: &mut Vec<FileDigest>,
) -> CliResult<(Vec<String>, Vec<DMatrix<f64>>)> {
    let mut header: Option<Vec<String>> = None;
    let mut classes = Vec::new();
    for path in &args.data {
        let bytes = read_input(path, inputs)?;
        let (names, x) = read_samples_csv(bytes.as_slice())
            .map_err(|e| CliError::shape(format!("{}: {e}", path.display())))?;
        match &header {
            None => header = Some(names),
            Some(h) if *h != names => {
                return Err(CliError::shape(format!(
                    "{}: header differs from {}",
                    path.display(),
                    args.data[0].display()
                )))
            }
            Some(_) => {}
        }
        classes.push(x);
    }
    Ok((header.unwrap_or_default(), classes))
}

pub fn run(args: &FitArgs, seed: Option<u64>, jobs_parallel: bool, out: &Path) -> CliResult<()> {
    let started = now();
    let mut inputs = Vec::new();
    if !(args.lambda1_c.is_finite() && args.lambda1_c >= 0.0) {
        return Err(CliError::config(format!(
            "--lambda1-c: {} must be finite and non-negative",
            args.lambda1_c
        )));
    }
    let targets: Option<Vec<BTreeSet<usize>>> = match &args.interventions {
        Some(path) => Some(read_json_config(path, &mut inputs)?),
        None => None,
    };
    if targets.is_some() && args.mode == Mode::Separate {
        return Err(CliError::config("--interventions requires --mode joint"));
    }
    let (_, classes) = load_data(args, &mut inputs)?;
    let p = classes.first().map(|x| x.ncols()).unwrap_or(0);
    let spec = match &targets {
        Some(t) => {
            if t.len() != classes.len() {
                return Err(CliError::shape(format!(
                    "interventions: {} target sets for {} data files",
                    t.len(),
                    classes.len()
                )));
            }
            Some(InterventionSpec::new(t.clone(), p).map_err(|e| CliError::shape(e.to_string()))?)
        }
        None => None,
    };
    let data = MultiDataset::new(classes, spec).map_err(|e| CliError::shape(e.to_string()))?;

    let score = ScoreConfig {
        max_in_degree: args.max_in_degree,
        ..ScoreConfig::from_scaling(args.lambda1_c, data.p(), data.n())
    };
    let search = SearchConfig {
        max_in_degree: args.max_in_degree,
        parallel: jobs_parallel,
        ..SearchConfig::default()
    };
    search.validate()?;
    let mut lasso = LassoConfig {
        seed: seed.unwrap_or(0),
        parallel: jobs_parallel,
        ..LassoConfig::default()
    };
    if let Some(v) = args.lambda2 {
        lasso.lambda2 = PenaltyChoice::Fixed { value: v };
    }
    if let Some(f) = args.cv {
        lasso.cv_folds = f;
    }
    lasso.validate()?;
    let extension = match args.sparsest {
        Some(cap) => ExtensionChoice::Sparsest { cap },
        None => ExtensionChoice::Canonical,
    };

    let resolved = ResolvedFit {
        data: args.data.iter().map(|p| p.display().to_string()).collect(),
        mode: args.mode,
        score,
        search,
        lasso: (args.mode == Mode::Joint).then_some(lasso),
        extension: (args.mode == Mode::Joint && targets.is_none()).then_some(extension),
        interventions: targets.clone(),
    };
    let config = serde_json::to_value(&resolved).expect("config serializes");

    let mut dir;
    match args.mode {
        Mode::Joint => {
            let fit = match &targets {
                Some(_) => joint_gies(&data, &score, &search, &lasso)?,
                None => joint_ges(&data, &score, &search, &lasso, extension)?,
            };
            if let Some(t) = &targets {
                for (k, set) in t.iter().enumerate() {
                    for &j in set {
                        if !fit.per_class[k].dag().parents(j).is_empty() {
                            return Err(CliError::search(format!(
                                "class {k}: intervened node {j} received parents"
                            )));
                        }
                    }
                }
            }
            dir = OutputDir::create(out)?;
            dir.write("union.txt", write_dag(&fit.union).as_bytes())?;
            if let Some(cp) = &fit.union_cpdag {
                dir.write("union_cpdag.txt", write_pdag(cp).as_bytes())?;
            }
            for (k, m) in fit.per_class.iter().enumerate() {
                dir.write(&format!("class_{k}.txt"), write_sem(m).as_bytes())?;
            }
            dir.write_json("summary.json", &fit.summary())?;
            dir.write("trace.jsonl", fit.trace.to_json_lines().as_bytes())?;
            if fit.move_limit_exceeded {
                log::warn!("search stopped at the move limit");
            }
            if !fit.lasso_converged {
                log::warn!("some lasso fits stopped before meeting the tolerance");
            }
        }
        Mode::Separate => {
            let outs = separate_fit(&data, &score, &search)?;
            dir = OutputDir::create(out)?;
            #[derive(Serialize)]
            struct ClassSummary {
                class: usize,
                edges: usize,
                undirected: usize,
                score: f64,
                trace_len: usize,
                move_limit_exceeded: bool,
            }
            let mut summary = Vec::new();
            for (k, o) in outs.iter().enumerate() {
                dir.write(&format!("cpdag_class_{k}.txt"), write_pdag(&o.cpdag).as_bytes())?;
                dir.write(
                    &format!("trace_class_{k}.jsonl"),
                    o.trace.to_json_lines().as_bytes(),
                )?;
                summary.push(ClassSummary {
                    class: k,
                    edges: o.cpdag.n_edges(),
                    undirected: o.cpdag.n_undirected(),
                    score: o.score,
                    trace_len: o.trace.len(),
                    move_limit_exceeded: o.move_limit_exceeded,
                });
            }
            dir.write_json("summary.json", &summary)?;
        }
    }
    dir.finish(ManifestParts {
        command: "fit",
        config,
        seed,
        inputs,
        started,
        extra: None,
    })
}
