//! Parameter sweeps and ablations that write one CSV row per (variant, value,
//! repeat).

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cli::{run_method, shared_graph, thread_pool, Method, RunArgs};
use crate::dataset::Dataset;
use crate::error::{GpacError, Result};
use crate::metrics::evaluate;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    LccAblation,
    BatchSweep,
    InitSweep,
    MSweep,
    KSweep,
    Scaling,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::LccAblation,
        Suite::BatchSweep,
        Suite::InitSweep,
        Suite::MSweep,
        Suite::KSweep,
        Suite::Scaling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::LccAblation => "lcc-ablation",
            Suite::BatchSweep => "batch-sweep",
            Suite::InitSweep => "init-sweep",
            Suite::MSweep => "m-sweep",
            Suite::KSweep => "k-sweep",
            Suite::Scaling => "scaling",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = GpacError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| {
                let known: Vec<_> = Suite::ALL.iter().map(|s| s.name()).collect();
                GpacError::InvalidConfig(format!(
                    "unknown experiment suite {s:?} (expected one of {})",
                    known.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub variant: String,
    pub value: String,
    pub repeat: usize,
    pub nmi: f64,
    pub acc: f64,
    pub ari: f64,
    pub time_ms: f64,
}

pub const DEFAULT_SCALING_SIZES: [usize; 4] = [5_000, 10_000, 20_000, 40_000];
pub const BATCH_SIZES: [usize; 6] = [64, 128, 256, 512, 1024, 2048];
pub const K_VALUES: [usize; 7] = [5, 10, 20, 40, 80, 160, 320];

pub fn m_values() -> Vec<f64> {
    (1..=10).map(|i| 1.0 + 0.05 * i as f64).collect()
}

/// Runs `args` over all repeats and appends one row per repeat. The graph is
/// built once and shared by every seed.
fn sweep_point(
    data: &Dataset,
    args: &RunArgs,
    variant: &str,
    value: String,
    rows: &mut Vec<ExperimentRow>,
) -> Result<()> {
    let truth = data.labels().ok_or_else(|| {
        GpacError::InvalidDataset("experiments need ground-truth labels (--labels-col)".into())
    })?;
    let graph = shared_graph(data, args)?;
    for (repeat, seed) in args.seeds().into_iter().enumerate() {
        let out = run_method(data, args, seed, &graph)?;
        let scores = evaluate(&out.predictions, truth)?;
        rows.push(ExperimentRow {
            variant: variant.to_string(),
            value: value.clone(),
            repeat,
            nmi: scores.nmi,
            acc: scores.acc,
            ari: scores.ari,
            time_ms: if args.no_timings { 0.0 } else { out.graph_ms + out.optimize_ms },
        });
    }
    Ok(())
}

fn with_method(base: &RunArgs, method: Method) -> RunArgs {
    RunArgs { method, ..base.clone() }
}

/// First `size` entries of one seeded permutation, so smaller subsets are
/// contained in larger ones.
pub fn nested_subsets(n: usize, sizes: &[usize], seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    sizes.iter().map(|&s| order[..s.min(n)].to_vec()).collect()
}

/// Computes the rows of one suite without touching the filesystem.
pub fn experiment_rows(
    suite: Suite,
    data: &Dataset,
    base: &RunArgs,
    sizes: &[usize],
) -> Result<Vec<ExperimentRow>> {
    let mut rows = Vec::new();
    let gpac = with_method(base, Method::Gpac);
    match suite {
        Suite::LccAblation => {
            sweep_point(data, &gpac, "gpac", base.beta_max.to_string(), &mut rows)?;
            let no_lcc = RunArgs { beta_max: 0.0, ..gpac.clone() };
            sweep_point(data, &no_lcc, "gpac-no-lcc", "0".into(), &mut rows)?;
            let fcm = with_method(base, Method::Fcm);
            sweep_point(data, &fcm, "fcm", "0".into(), &mut rows)?;
            let fcm_lcc = with_method(base, Method::FcmLcc);
            sweep_point(data, &fcm_lcc, "fcm-lcc", base.beta_max.to_string(), &mut rows)?;
        }
        Suite::BatchSweep => {
            let mut sizes: Vec<usize> = BATCH_SIZES.iter().copied().filter(|&b| b < data.n()).collect();
            sizes.push(data.n());
            for b in sizes {
                let with_lcc = RunArgs { batch_size: b, ..gpac.clone() };
                sweep_point(data, &with_lcc, "gpac", b.to_string(), &mut rows)?;
                let no_lcc = RunArgs { beta_max: 0.0, ..with_lcc };
                sweep_point(data, &no_lcc, "gpac-no-lcc", b.to_string(), &mut rows)?;
            }
        }
        Suite::InitSweep => {
            for init in [crate::InitMode::Kmeanspp, crate::InitMode::Random, crate::InitMode::Zero] {
                let args = RunArgs { init, ..gpac.clone() };
                sweep_point(data, &args, "gpac", init.to_string(), &mut rows)?;
            }
        }
        Suite::MSweep => {
            for m in m_values() {
                let value = format!("{m:.2}");
                let g = RunArgs { m, ..gpac.clone() };
                sweep_point(data, &g, "gpac", value.clone(), &mut rows)?;
                let f = RunArgs { m, ..with_method(base, Method::Fcm) };
                sweep_point(data, &f, "fcm", value, &mut rows)?;
            }
        }
        Suite::KSweep => {
            for k in K_VALUES.into_iter().filter(|&k| k < data.n()) {
                let args = RunArgs { k, ..gpac.clone() };
                sweep_point(data, &args, "gpac", k.to_string(), &mut rows)?;
            }
        }
        Suite::Scaling => {
            let sizes: Vec<usize> = sizes.iter().copied().filter(|&s| s <= data.n()).collect();
            if sizes.is_empty() {
                return Err(GpacError::InvalidConfig(format!(
                    "no scaling size fits a dataset of {} samples",
                    data.n()
                )));
            }
            for (size, idx) in sizes.iter().zip(nested_subsets(data.n(), &sizes, base.seed)) {
                let sub = data.subset(&idx)?;
                scaling_point(&sub, &gpac, *size, &mut rows)?;
            }
        }
    }
    Ok(rows)
}

/// Records graph construction and optimizer time separately.
fn scaling_point(data: &Dataset, args: &RunArgs, size: usize, rows: &mut Vec<ExperimentRow>) -> Result<()> {
    let start = Instant::now();
    let graph = shared_graph(data, args)?;
    let graph_ms = start.elapsed().as_secs_f64() * 1e3;
    let truth = data.labels();
    for (repeat, seed) in args.seeds().into_iter().enumerate() {
        let out = run_method(data, args, seed, &graph)?;
        let scores = truth.map(|t| evaluate(&out.predictions, t)).transpose()?;
        let (nmi, acc, ari) = scores.map_or((f64::NAN, f64::NAN, f64::NAN), |s| (s.nmi, s.acc, s.ari));
        for (variant, ms) in [("graph", graph_ms), ("optimize", out.optimize_ms)] {
            rows.push(ExperimentRow {
                variant: variant.into(),
                value: size.to_string(),
                repeat,
                nmi,
                acc,
                ari,
                time_ms: if args.no_timings { 0.0 } else { ms },
            });
        }
    }
    Ok(())
}

pub fn write_rows(path: &Path, rows: &[ExperimentRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| GpacError::parse(path, e.to_string()))?;
    let err = |e: csv::Error| GpacError::parse(path, e.to_string());
    w.write_record(["variant", "value", "repeat", "nmi", "acc", "ari", "time_ms"])
        .map_err(err)?;
    for r in rows {
        w.write_record([
            r.variant.clone(),
            r.value.clone(),
            r.repeat.to_string(),
            r.nmi.to_string(),
            r.acc.to_string(),
            r.ari.to_string(),
            format!("{:.3}", r.time_ms),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| GpacError::io(path, e))
}

/// Runs a suite and writes `<out_dir>/<suite>.csv`, returning its path.
pub fn run_experiment(suite: Suite, data: &Dataset, base: &RunArgs, sizes: &[usize]) -> Result<PathBuf> {
    let rows = thread_pool()?.install(|| experiment_rows(suite, data, base, sizes))?;
    fs::create_dir_all(&base.out_dir).map_err(|e| GpacError::io(&base.out_dir, e))?;
    let path = base.out_dir.join(format!("{suite}.csv"));
    write_rows(&path, &rows)?;
    Ok(path)
}
