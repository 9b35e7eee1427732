//! The graph probability aggregation optimizer.
//!
//! Each sample carries a probability row `p_i` (the fuzzy partition P) and a
//! hard label `v_i` (the one-hot matrix V). Samples are revisited one at a
//! time in shuffled mini-batches. For sample `i` the scores
//!
//! ```text
//! s_p = P~ - alpha * sum_{j in A_i'} v_j
//! s_v = V~ - alpha * sum_{j in A_i'} p_j^m
//! ```
//!
//! are built from the running column sums `P~`, `V~` (with `i` removed) and
//! the batch-restricted adjacency set `A_i'`. The fuzzy row becomes the
//! normalized inverse power `s_p^(-1/(m-1))`, blended with the graph
//! neighborhood average by weight `beta`; the hard label becomes
//! `argmin s_v`.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::kmeans_fit;
use crate::config::{validate_config, GpacConfig, HardUpdate, InitMode};
use crate::dataset::Dataset;
use crate::error::{GpacError, Result};
use crate::graph::{
    build_knn_graph, default_theta, expand_adjacency, neighborhood_average_into,
    AdjacencyIndicator, KnnGraph,
};
use crate::partition::{argmax, FuzzyPartition, HardPartition};

/// Column sums of P and V maintained across sample updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateState {
    pub p_tilde: Vec<f64>,
    pub v_tilde: Vec<f64>,
    pub epoch: usize,
    pub beta_current: f64,
}

impl AggregateState {
    fn recompute(&mut self, probs: &[f64], labels: &[usize], c: usize) {
        self.p_tilde.iter_mut().for_each(|v| *v = 0.0);
        self.v_tilde.iter_mut().for_each(|v| *v = 0.0);
        for (row, &l) in probs.chunks_exact(c).zip(labels) {
            for (t, p) in self.p_tilde.iter_mut().zip(row) {
                *t += p;
            }
            self.v_tilde[l] += 1.0;
        }
    }
}

/// Fuzzy and hard clustering scores of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorePair {
    pub s_p: Vec<f64>,
    pub s_v: Vec<f64>,
}

/// Scores of one sample from aggregates that already exclude it.
///
/// `probs` is the row-major n×c matrix P and `labels` the hard labels; only
/// rows listed in `batch_adjacency` are read.
pub fn compute_scores(
    batch_adjacency: &[usize],
    p_tilde: &[f64],
    v_tilde: &[f64],
    probs: &[f64],
    labels: &[usize],
    alpha: f64,
    m: f64,
) -> ScorePair {
    let c = p_tilde.len();
    let mut votes = vec![0.0; c];
    let mut mass = vec![0.0; c];
    for &j in batch_adjacency {
        votes[labels[j]] += 1.0;
        for (acc, p) in mass.iter_mut().zip(&probs[j * c..(j + 1) * c]) {
            *acc += p.powf(m);
        }
    }
    ScorePair {
        s_p: p_tilde.iter().zip(&votes).map(|(t, v)| t - alpha * v).collect(),
        s_v: v_tilde.iter().zip(&mass).map(|(t, q)| t - alpha * q).collect(),
    }
}

/// Shifts the scores so the smallest becomes exactly 1.
pub fn guard_scores(s_p: &mut [f64]) {
    let min = s_p.iter().copied().fold(f64::INFINITY, f64::min);
    // (min - min) + 1 is exactly 1 in floating point
    s_p.iter_mut().for_each(|s| *s = *s - min + 1.0);
}

/// Normalized inverse power `s^(-1/(m-1))`, computed in the log domain.
pub fn fuzzy_from_scores(s_p: &[f64], m: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; s_p.len()];
    fuzzy_from_scores_into(s_p, m, &mut out);
    if out.iter().any(|p| !p.is_finite()) {
        return Err(GpacError::NonFiniteMembership(0));
    }
    Ok(out)
}

#[inline]
fn fuzzy_from_scores_into(s_p: &[f64], m: f64, out: &mut [f64]) {
    let power = -1.0 / (m - 1.0);
    let mut max = f64::NEG_INFINITY;
    for (o, &s) in out.iter_mut().zip(s_p) {
        *o = power * s.ln();
        max = max.max(*o);
    }
    let mut total = 0.0;
    for o in out.iter_mut() {
        *o = (*o - max).exp();
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
}

/// `(p* + beta * p_bar) / (1 + beta)`: the closest point to `p*` that is
/// penalized by `beta` for straying from the neighborhood average.
pub fn project_local_consistency(p_star: &[f64], p_bar: &[f64], beta: f64) -> Vec<f64> {
    let mut out = vec![0.0; p_star.len()];
    project_local_consistency_into(p_star, p_bar, beta, &mut out);
    out
}

#[inline]
pub(crate) fn project_local_consistency_into(p_star: &[f64], p_bar: &[f64], beta: f64, out: &mut [f64]) {
    if beta == 0.0 {
        out.copy_from_slice(p_star);
        return;
    }
    let keep = 1.0 / (1.0 + beta);
    let pull = beta / (1.0 + beta);
    for ((o, a), b) in out.iter_mut().zip(p_star).zip(p_bar) {
        *o = keep * a + pull * b;
    }
}

/// Argmin of the hard score, ties to the lowest index.
pub fn hard_from_scores(s_v: &[f64]) -> usize {
    let mut best = 0;
    for (l, &v) in s_v.iter().enumerate().skip(1) {
        if v < s_v[best] {
            best = l;
        }
    }
    best
}

/// `Tr(VᵀHV + PᵀHPᵐ − α VᵀŴPᵐ)` with `H = 11ᵀ − I`, evaluated through
/// column sums so H is never formed.
pub fn objective_value(
    probs: &FuzzyPartition,
    hard: &HardPartition,
    adjacency: &AdjacencyIndicator,
    alpha: f64,
    m: f64,
) -> f64 {
    objective_raw(probs.as_slice(), hard.labels(), probs.c(), adjacency, alpha, m, None)
}

/// Shared evaluator. With `rows` set, the per-row terms are summed over
/// those rows only and scaled up to n.
fn objective_raw(
    probs: &[f64],
    labels: &[usize],
    c: usize,
    adjacency: &AdjacencyIndicator,
    alpha: f64,
    m: f64,
    rows: Option<&[usize]>,
) -> f64 {
    let n = labels.len();
    let mut counts = vec![0.0; c];
    let mut col_p = vec![0.0; c];
    let mut col_pm = vec![0.0; c];
    let mut diag = 0.0;
    for (row, &l) in probs.chunks_exact(c).zip(labels) {
        counts[l] += 1.0;
        for t in 0..c {
            let pm = row[t].powf(m);
            col_p[t] += row[t];
            col_pm[t] += pm;
            diag += row[t] * pm;
        }
    }
    let hard_self: f64 = counts.iter().map(|k| k * k).sum::<f64>() - n as f64;
    let fuzzy_self: f64 = col_p.iter().zip(&col_pm).map(|(a, b)| a * b).sum::<f64>() - diag;
    let cross_row = |i: usize| -> f64 {
        let l = labels[i];
        adjacency.set(i).iter().map(|&j| probs[j * c + l].powf(m)).sum()
    };
    let cross = match rows {
        None => (0..n).map(cross_row).sum(),
        Some(rows) if !rows.is_empty() => {
            rows.iter().map(|&i| cross_row(i)).sum::<f64>() * n as f64 / rows.len() as f64
        }
        Some(_) => 0.0,
    };
    hard_self + fuzzy_self - alpha * cross
}

/// Uniform P and the configured initial V.
pub fn init_partitions(data: &Dataset, config: &GpacConfig) -> Result<(FuzzyPartition, HardPartition)> {
    let (n, c) = (data.n(), config.clusters);
    let probs = FuzzyPartition::uniform(n, c);
    let hard = match config.init {
        InitMode::Kmeanspp => kmeans_fit(data, c, config.seed, 0)?.partition,
        InitMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            HardPartition::from_raw_unchecked((0..n).map(|_| rng.random_range(0..c)).collect(), c)
        }
        InitMode::Zero => HardPartition::from_raw_unchecked(vec![0; n], c),
    };
    Ok((probs, hard))
}

/// What an observer sees just before sample `sample` is overwritten.
#[derive(Debug)]
pub struct UpdateView<'a> {
    pub sample: usize,
    /// Members of the current batch, in update order.
    pub batch: &'a [usize],
    /// Current P (row-major) and V, still holding the sample's old values.
    pub probs: &'a [f64],
    pub labels: &'a [usize],
    /// Scores before the guard shift.
    pub scores: &'a ScorePair,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub labels_changed: usize,
    pub beta: f64,
    pub elapsed_ms: f64,
}

/// The optimizer state for one dataset.
#[derive(Debug, Clone)]
pub struct Solver {
    config: GpacConfig,
    graph: KnnGraph,
    adjacency: AdjacencyIndicator,
    n: usize,
    c: usize,
    probs: Vec<f64>,
    probs_pow: Vec<f64>,
    labels: Vec<usize>,
    agg: AggregateState,
    rng: ChaCha8Rng,
    batch_stamp: Vec<u64>,
    stamp: u64,
}

/// Graphs built for a dataset; reusable across seeds.
#[derive(Debug, Clone)]
pub struct Graphs {
    pub knn: KnnGraph,
    pub adjacency: AdjacencyIndicator,
}

impl Graphs {
    pub fn build(data: &Dataset, config: &GpacConfig) -> Result<Self> {
        let config = validate_config(config, data)?;
        let knn = build_knn_graph(data, config.k, config.sigma)?;
        let theta = config
            .theta
            .unwrap_or_else(|| default_theta(data.n(), config.clusters, config.k));
        let adjacency = expand_adjacency(&knn, theta);
        Ok(Graphs { knn, adjacency })
    }
}

impl Solver {
    pub fn new(data: &Dataset, config: &GpacConfig) -> Result<Self> {
        let graphs = Graphs::build(data, config)?;
        Self::with_graphs(data, config, graphs)
    }

    pub fn with_graphs(data: &Dataset, config: &GpacConfig, graphs: Graphs) -> Result<Self> {
        let (probs, hard) = init_partitions(data, &validate_config(config, data)?)?;
        Self::from_state(data, config, graphs, probs, hard)
    }

    /// Starts from explicit partitions instead of the configured initializer.
    pub fn from_state(
        data: &Dataset,
        config: &GpacConfig,
        graphs: Graphs,
        probs: FuzzyPartition,
        hard: HardPartition,
    ) -> Result<Self> {
        let config = validate_config(config, data)?;
        let (n, c) = (data.n(), config.clusters);
        if graphs.knn.n() != n || graphs.adjacency.n() != n {
            return Err(GpacError::InvalidConfig(format!(
                "graphs cover {} nodes, dataset has {n}",
                graphs.knn.n()
            )));
        }
        if probs.n() != n || probs.c() != c || hard.n() != n || hard.c() != c {
            return Err(GpacError::InvalidConfig(
                "initial partitions do not match n or c".into(),
            ));
        }
        let probs = probs.into_vec();
        let probs_pow = probs.iter().map(|p| p.powf(config.m)).collect();
        let mut agg = AggregateState {
            p_tilde: vec![0.0; c],
            v_tilde: vec![0.0; c],
            epoch: 0,
            beta_current: config.beta_at(0),
        };
        let labels = hard.into_labels();
        agg.recompute(&probs, &labels, c);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        Ok(Solver {
            graph: graphs.knn,
            adjacency: graphs.adjacency,
            n,
            c,
            probs,
            probs_pow,
            labels,
            agg,
            rng,
            batch_stamp: vec![0; n],
            stamp: 0,
            config,
        })
    }

    pub fn config(&self) -> &GpacConfig {
        &self.config
    }

    pub fn graph(&self) -> &KnnGraph {
        &self.graph
    }

    pub fn adjacency(&self) -> &AdjacencyIndicator {
        &self.adjacency
    }

    pub fn aggregates(&self) -> &AggregateState {
        &self.agg
    }

    pub fn epoch(&self) -> usize {
        self.agg.epoch
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn fuzzy(&self) -> FuzzyPartition {
        FuzzyPartition::from_raw_unchecked(self.probs.clone(), self.n, self.c)
    }

    pub fn hard(&self) -> HardPartition {
        HardPartition::from_raw_unchecked(self.labels.clone(), self.c)
    }

    /// Final prediction: most probable cluster per sample.
    pub fn predictions(&self) -> Vec<usize> {
        self.probs.chunks_exact(self.c).map(argmax).collect()
    }

    /// Current objective value; sampled on a fixed stride when
    /// `sample_rows` is below n.
    pub fn objective(&self, sample_rows: usize) -> f64 {
        let rows: Option<Vec<usize>> = (sample_rows < self.n).then(|| {
            let step = self.n as f64 / sample_rows.max(1) as f64;
            (0..sample_rows.max(1)).map(|t| (t as f64 * step) as usize).collect()
        });
        objective_raw(
            &self.probs,
            &self.labels,
            self.c,
            &self.adjacency,
            self.config.alpha,
            self.config.m,
            rows.as_deref(),
        )
    }

    pub fn run_epoch(&mut self) -> Result<EpochStats> {
        self.run_epoch_observed(|_| {})
    }

    /// One pass over all samples in shuffled mini-batches. The observer is
    /// called for every sample right after its scores are formed.
    pub fn run_epoch_observed<F>(&mut self, mut observe: F) -> Result<EpochStats>
    where
        F: FnMut(&UpdateView<'_>),
    {
        let start = Instant::now();
        let (n, c) = (self.n, self.c);
        let alpha = self.config.alpha;
        let m = self.config.m;
        let beta = self.config.beta_at(self.agg.epoch);
        self.agg.beta_current = beta;

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut self.rng);

        let mut scores = ScorePair {
            s_p: vec![0.0; c],
            s_v: vec![0.0; c],
        };
        let mut votes = vec![0.0; c];
        let mut mass = vec![0.0; c];
        let mut p_star = vec![0.0; c];
        let mut p_bar = vec![0.0; c];
        let mut changed = 0usize;

        for batch in order.chunks(self.config.batch_size) {
            self.stamp += 1;
            for &i in batch {
                self.batch_stamp[i] = self.stamp;
            }
            self.agg.recompute(&self.probs, &self.labels, c);

            for &i in batch {
                let old_label = self.labels[i];
                let row = i * c..(i + 1) * c;
                for (t, p) in self.agg.p_tilde.iter_mut().zip(&self.probs[row.clone()]) {
                    *t -= p;
                }
                self.agg.v_tilde[old_label] -= 1.0;

                votes.iter_mut().for_each(|v| *v = 0.0);
                mass.iter_mut().for_each(|v| *v = 0.0);
                for &j in self.adjacency.set(i) {
                    if self.batch_stamp[j] != self.stamp {
                        continue;
                    }
                    votes[self.labels[j]] += 1.0;
                    for (acc, q) in mass.iter_mut().zip(&self.probs_pow[j * c..(j + 1) * c]) {
                        *acc += q;
                    }
                }
                for l in 0..c {
                    scores.s_p[l] = self.agg.p_tilde[l] - alpha * votes[l];
                    scores.s_v[l] = self.agg.v_tilde[l] - alpha * mass[l];
                }
                observe(&UpdateView {
                    sample: i,
                    batch,
                    probs: &self.probs,
                    labels: &self.labels,
                    scores: &scores,
                    beta,
                });

                guard_scores(&mut scores.s_p);
                fuzzy_from_scores_into(&scores.s_p, m, &mut p_star);
                if p_star.iter().any(|p| !p.is_finite()) {
                    return Err(GpacError::NonFiniteMembership(i));
                }
                neighborhood_average_into(&self.graph, &self.probs, c, i, &mut p_bar);
                project_local_consistency_into(&p_star, &p_bar, beta, &mut self.probs[row.clone()]);
                for (q, p) in self.probs_pow[row.clone()].iter_mut().zip(&self.probs[row.clone()]) {
                    *q = p.powf(m);
                }

                let new_label = match self.config.hard_update {
                    HardUpdate::Score => hard_from_scores(&scores.s_v),
                    HardUpdate::ArgmaxFuzzy => argmax(&self.probs[row.clone()]),
                };
                if new_label != old_label {
                    changed += 1;
                }
                self.labels[i] = new_label;
                for (t, p) in self.agg.p_tilde.iter_mut().zip(&self.probs[row]) {
                    *t += p;
                }
                self.agg.v_tilde[new_label] += 1.0;
            }
        }

        let stats = EpochStats {
            epoch: self.agg.epoch,
            labels_changed: changed,
            beta,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        self.agg.epoch += 1;
        Ok(stats)
    }

    /// Whether the loop may stop after an epoch with these stats.
    pub fn converged(&self, stats: &EpochStats) -> bool {
        let ramp_done = self.agg.epoch >= self.config.beta_ramp_epochs;
        ramp_done && (stats.labels_changed as f64 / self.n as f64) < self.config.convergence_tol
    }
}

/// Rows evaluated exactly by the per-epoch objective; larger datasets use a
/// strided sample of this many rows.
pub const EXACT_OBJECTIVE_ROWS: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub epoch: usize,
    pub objective: f64,
    pub labels_changed: usize,
    pub beta: f64,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub fuzzy: FuzzyPartition,
    pub hard: HardPartition,
    /// argmax of each fuzzy row.
    pub predictions: Vec<usize>,
    pub trace: Vec<TraceRow>,
    pub theta: usize,
    pub sigma: f64,
    pub graph_ms: f64,
    pub optimize_ms: f64,
}

/// Builds the graphs, initializes and iterates until the hard labels settle
/// (after the beta ramp) or the epoch budget runs out.
pub fn fit(data: &Dataset, config: &GpacConfig) -> Result<FitResult> {
    let start = Instant::now();
    let graphs = Graphs::build(data, config)?;
    let graph_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut result = fit_with_graphs(data, config, graphs)?;
    result.graph_ms = graph_ms;
    Ok(result)
}

/// [`fit`] on prebuilt graphs.
pub fn fit_with_graphs(data: &Dataset, config: &GpacConfig, graphs: Graphs) -> Result<FitResult> {
    let start = Instant::now();
    let theta = graphs.adjacency.theta();
    let sigma = graphs.knn.sigma();
    let mut solver = Solver::with_graphs(data, config, graphs)?;
    let mut trace = Vec::new();
    for _ in 0..solver.config().max_epochs {
        let stats = solver.run_epoch()?;
        trace.push(TraceRow {
            epoch: stats.epoch,
            objective: solver.objective(EXACT_OBJECTIVE_ROWS),
            labels_changed: stats.labels_changed,
            beta: stats.beta,
            elapsed_ms: stats.elapsed_ms,
        });
        if solver.converged(&stats) {
            break;
        }
    }
    Ok(FitResult {
        predictions: solver.predictions(),
        fuzzy: solver.fuzzy(),
        hard: solver.hard(),
        trace,
        theta,
        sigma,
        graph_ms: 0.0,
        optimize_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}
