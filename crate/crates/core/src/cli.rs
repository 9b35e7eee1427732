//! Running clustering methods from command-line style arguments and writing
//! the per-run output files.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{fcm_fit, fcm_lcc_fit, kmeans_fit, FcmParams};
use crate::config::{validate_config, GpacConfig, HardUpdate, InitMode};
use crate::dataset::Dataset;
use crate::error::{GpacError, Result};
use crate::gpac::{fit_with_graphs, Graphs, TraceRow};
use crate::graph::build_knn_graph;
use crate::io::{write_labels, write_probs, DataFormat};
use crate::metrics::{evaluate, Scores};
use crate::partition::FuzzyPartition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Gpac,
    Kmeans,
    Fcm,
    FcmLcc,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Gpac => "gpac",
            Method::Kmeans => "kmeans",
            Method::Fcm => "fcm",
            Method::FcmLcc => "fcm-lcc",
        })
    }
}

impl FromStr for Method {
    type Err = GpacError;

    fn from_str(s: &str) -> Result<Self> {
        <Self as clap::ValueEnum>::from_str(s, true)
            .map_err(|_| GpacError::InvalidConfig(format!("unknown method {s:?}")))
    }
}

/// Method and hyperparameter flags shared by `cluster` and `experiment`.
#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    #[arg(long, value_enum, default_value_t = Method::Gpac)]
    pub method: Method,
    /// Number of clusters.
    #[arg(long, short = 'c')]
    pub clusters: usize,
    #[arg(long, default_value_t = 1.05)]
    pub m: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long = "beta-max", default_value_t = 1.0)]
    pub beta_max: f64,
    /// Epochs over which beta ramps from 0 to beta-max.
    #[arg(long = "beta-ramp", default_value_t = 10)]
    pub beta_ramp: usize,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Random-walk expansion depth (default: ceil(log_k(n/c))).
    #[arg(long)]
    pub theta: Option<usize>,
    #[arg(long = "batch-size", default_value_t = 1024)]
    pub batch_size: usize,
    #[arg(long = "max-epochs", default_value_t = 100)]
    pub max_epochs: usize,
    /// GPAC stops once fewer than this fraction of hard labels change in an epoch.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[arg(long, default_value = "kmeanspp", value_parser = InitMode::from_str)]
    pub init: InitMode,
    /// Gaussian kernel bandwidth (default: mean squared k-th neighbor distance).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Zero-based CSV column holding integer ground-truth labels.
    #[arg(long = "labels-col")]
    pub labels_col: Option<usize>,
    /// `csv` or `bin`; guessed from the file extension when omitted.
    #[arg(long, value_parser = DataFormat::from_str)]
    pub format: Option<DataFormat>,
    #[arg(long = "out-dir", default_value = "gpac-out")]
    pub out_dir: PathBuf,
    /// Write zeros for all wall-clock fields so outputs are byte-reproducible.
    #[arg(long = "no-timings")]
    pub no_timings: bool,
}

impl RunArgs {
    pub fn new(method: Method, clusters: usize) -> Self {
        RunArgs {
            method,
            clusters,
            m: 1.05,
            alpha: 1.0,
            beta_max: 1.0,
            beta_ramp: 10,
            k: 10,
            theta: None,
            batch_size: 1024,
            max_epochs: 100,
            tol: 1e-3,
            seed: 0,
            repeats: 1,
            init: InitMode::Kmeanspp,
            sigma: None,
            labels_col: None,
            format: None,
            out_dir: PathBuf::from("gpac-out"),
            no_timings: false,
        }
    }

    pub fn gpac_config(&self, seed: u64) -> GpacConfig {
        GpacConfig {
            clusters: self.clusters,
            m: self.m,
            alpha: self.alpha,
            beta_max: self.beta_max,
            beta_ramp_epochs: self.beta_ramp,
            k: self.k,
            theta: self.theta,
            sigma: self.sigma,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            convergence_tol: self.tol,
            seed,
            init: self.init,
            hard_update: HardUpdate::Score,
            allow_extreme_m: false,
        }
    }

    pub fn fcm_params(&self, seed: u64) -> FcmParams {
        FcmParams {
            seed,
            ..FcmParams::new(self.clusters, self.m)
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.repeats as u64).map(|r| self.seed + r).collect()
    }
}

/// Everything one method run produces.
#[derive(Debug, Clone)]
pub struct MethodOutput {
    pub predictions: Vec<usize>,
    pub fuzzy: Option<FuzzyPartition>,
    pub trace: Vec<TraceRow>,
    pub graph_ms: f64,
    pub optimize_ms: f64,
}

/// Prebuilt graphs or the data needed to build them once per dataset.
pub enum SharedGraph {
    None,
    Gpac(Graphs, f64),
    Knn(crate::graph::KnnGraph, f64),
}

/// Builds whatever graph `args.method` needs; it does not depend on the seed.
pub fn shared_graph(data: &Dataset, args: &RunArgs) -> Result<SharedGraph> {
    let start = Instant::now();
    Ok(match args.method {
        Method::Gpac => {
            let g = Graphs::build(data, &args.gpac_config(args.seed))?;
            SharedGraph::Gpac(g, start.elapsed().as_secs_f64() * 1e3)
        }
        Method::FcmLcc => {
            let g = build_knn_graph(data, args.k, args.sigma)?;
            SharedGraph::Knn(g, start.elapsed().as_secs_f64() * 1e3)
        }
        _ => SharedGraph::None,
    })
}

pub fn run_method(data: &Dataset, args: &RunArgs, seed: u64, graph: &SharedGraph) -> Result<MethodOutput> {
    let start = Instant::now();
    let ms = |s: Instant| s.elapsed().as_secs_f64() * 1e3;
    match (args.method, graph) {
        (Method::Gpac, SharedGraph::Gpac(graphs, graph_ms)) => {
            let r = fit_with_graphs(data, &args.gpac_config(seed), graphs.clone())?;
            Ok(MethodOutput {
                predictions: r.predictions,
                fuzzy: Some(r.fuzzy),
                trace: r.trace,
                graph_ms: *graph_ms,
                optimize_ms: r.optimize_ms,
            })
        }
        (Method::Kmeans, _) => {
            if args.clusters < 1 || args.clusters > data.n() {
                return Err(GpacError::InvalidConfig(format!(
                    "cluster count must lie in [1, {}]",
                    data.n()
                )));
            }
            let r = kmeans_fit(data, args.clusters, seed, 300)?;
            Ok(MethodOutput {
                predictions: r.partition.into_labels(),
                fuzzy: None,
                trace: Vec::new(),
                graph_ms: 0.0,
                optimize_ms: ms(start),
            })
        }
        (Method::Fcm, _) => {
            let r = fcm_fit(data, &args.fcm_params(seed))?;
            Ok(MethodOutput {
                predictions: r.partition.argmax().into_labels(),
                fuzzy: Some(r.partition),
                trace: Vec::new(),
                graph_ms: 0.0,
                optimize_ms: ms(start),
            })
        }
        (Method::FcmLcc, SharedGraph::Knn(g, graph_ms)) => {
            let r = fcm_lcc_fit(data, &args.fcm_params(seed), args.beta_max, g)?;
            Ok(MethodOutput {
                predictions: r.partition.argmax().into_labels(),
                fuzzy: Some(r.partition),
                trace: Vec::new(),
                graph_ms: *graph_ms,
                optimize_ms: ms(start),
            })
        }
        (method, _) => Err(GpacError::InvalidConfig(format!(
            "graph for method {method} was not prepared"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation; absent for a single repeat.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.len() >= 2).then(|| {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        });
        Summary { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub nmi: Summary,
    pub acc: Summary,
    pub ari: Summary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub graph_ms: f64,
    pub optimize_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatReport {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scores: Option<Scores>,
    pub epochs: usize,
    pub timings: Timings,
}

/// Summary of a `cluster` invocation, written as `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: String,
    pub n: usize,
    pub d: usize,
    pub config: serde_json::Value,
    pub repeats: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricSummary>,
    pub runs: Vec<RepeatReport>,
    pub trace: Vec<TraceRow>,
    pub timings: Timings,
}

fn config_echo(args: &RunArgs, data: &Dataset) -> Result<serde_json::Value> {
    let value = match args.method {
        Method::Gpac => {
            let cfg = validate_config(&args.gpac_config(args.seed), data)?;
            serde_json::to_value(cfg)
        }
        Method::Kmeans => serde_json::to_value(serde_json::json!({
            "clusters": args.clusters, "seed": args.seed, "max_iters": 300
        })),
        Method::Fcm | Method::FcmLcc => {
            let p = args.fcm_params(args.seed);
            let mut v = serde_json::json!({
                "clusters": p.clusters, "m": p.m, "seed": p.seed,
                "tol": p.tol, "max_iters": p.max_iters
            });
            if args.method == Method::FcmLcc {
                v["beta"] = args.beta_max.into();
                v["k"] = args.k.into();
            }
            Ok(v)
        }
    };
    value.map_err(|e| GpacError::InvalidConfig(e.to_string()))
}

/// Worker pool honoring `GPAC_THREADS`.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = std::env::var("GPAC_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
    {
        builder = builder.num_threads(t);
    }
    builder
        .build()
        .map_err(|e| GpacError::InvalidConfig(format!("thread pool: {e}")))
}

/// Runs every repeat of the configured method, in parallel across seeds.
pub fn run_repeats(data: &Dataset, args: &RunArgs) -> Result<Vec<(u64, MethodOutput)>> {
    if args.repeats < 1 {
        return Err(GpacError::InvalidConfig("repeats must be at least 1".into()));
    }
    let graph = shared_graph(data, args)?;
    let seeds = args.seeds();
    let pool = thread_pool()?;
    pool.install(|| {
        seeds
            .par_iter()
            .map(|&s| run_method(data, args, s, &graph).map(|o| (s, o)))
            .collect()
    })
}

fn write_trace(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let mut out = String::new();
    for row in trace {
        out.push_str(&serde_json::to_string(row).expect("trace rows serialize"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| GpacError::io(path, e))
}

/// Loads the input, runs all repeats and writes `labels.txt`, `probs.csv`,
/// `trace.ldj` and `report.json` under `args.out_dir`. With several repeats
/// the per-run files go to `seed-<seed>/` subdirectories.
pub fn run_cluster(input: &Path, args: &RunArgs) -> Result<RunReport> {
    let total_start = Instant::now();
    let format = args.format.unwrap_or_else(|| DataFormat::from_path(input));
    let data = crate::io::load_dataset(input, format, args.labels_col)?;
    let mut report = cluster_dataset(&data, args)?;
    if !args.no_timings {
        report.timings.total_ms = total_start.elapsed().as_secs_f64() * 1e3;
    }
    write_report(&args.out_dir.join("report.json"), &report)?;
    Ok(report)
}

/// [`run_cluster`] on an in-memory dataset; writes the per-run files but not
/// `report.json`.
pub fn cluster_dataset(data: &Dataset, args: &RunArgs) -> Result<RunReport> {
    let config = config_echo(args, data)?;
    let outputs = run_repeats(data, args)?;
    fs::create_dir_all(&args.out_dir).map_err(|e| GpacError::io(&args.out_dir, e))?;

    let mut runs = Vec::with_capacity(outputs.len());
    for (seed, out) in &outputs {
        let dir = if args.repeats == 1 {
            args.out_dir.clone()
        } else {
            args.out_dir.join(format!("seed-{seed}"))
        };
        fs::create_dir_all(&dir).map_err(|e| GpacError::io(&dir, e))?;
        write_labels(&dir.join("labels.txt"), &out.predictions)?;
        if let Some(p) = &out.fuzzy {
            write_probs(&dir.join("probs.csv"), p)?;
        }
        let mut trace = out.trace.clone();
        if args.no_timings {
            trace.iter_mut().for_each(|r| r.elapsed_ms = 0.0);
        }
        if args.method == Method::Gpac {
            write_trace(&dir.join("trace.ldj"), &trace)?;
        }
        let scores = data
            .labels()
            .map(|truth| evaluate(&out.predictions, truth))
            .transpose()?;
        let timings = if args.no_timings {
            Timings { graph_ms: 0.0, optimize_ms: 0.0, total_ms: 0.0 }
        } else {
            Timings {
                graph_ms: out.graph_ms,
                optimize_ms: out.optimize_ms,
                total_ms: out.graph_ms + out.optimize_ms,
            }
        };
        runs.push(RepeatReport {
            seed: *seed,
            scores,
            epochs: out.trace.len(),
            timings,
        });
    }

    let metrics = if runs.iter().all(|r| r.scores.is_some()) {
        let pick = |f: fn(&Scores) -> f64| -> Summary {
            Summary::of(&runs.iter().filter_map(|r| r.scores.as_ref().map(f)).collect::<Vec<_>>())
        };
        Some(MetricSummary {
            nmi: pick(|s| s.nmi),
            acc: pick(|s| s.acc),
            ari: pick(|s| s.ari),
        })
    } else {
        None
    };
    let mean_of = |f: fn(&Timings) -> f64| runs.iter().map(|r| f(&r.timings)).sum::<f64>() / runs.len() as f64;
    let timings = Timings {
        graph_ms: mean_of(|t| t.graph_ms),
        optimize_ms: mean_of(|t| t.optimize_ms),
        total_ms: mean_of(|t| t.total_ms),
    };
    let trace = outputs.first().map(|(_, o)| o.trace.clone()).unwrap_or_default();
    let trace = if args.no_timings {
        trace.into_iter().map(|r| TraceRow { elapsed_ms: 0.0, ..r }).collect()
    } else {
        trace
    };
    Ok(RunReport {
        method: args.method.to_string(),
        n: data.n(),
        d: data.d(),
        config,
        repeats: args.repeats,
        metrics,
        runs,
        trace,
        timings,
    })
}

pub fn write_report(path: &Path, report: &RunReport) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| GpacError::InvalidConfig(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| GpacError::io(path, e))
}
