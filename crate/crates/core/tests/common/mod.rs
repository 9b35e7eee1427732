//! Independent dense reference implementations shared by the integration tests.
#![allow(dead_code)]

use gpac::gpac::Graphs;
use gpac::graph::{build_knn_graph, expand_adjacency};
use gpac::{Dataset, FuzzyPartition, GpacConfig, HardPartition, KnnGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
    let features = (0..n * d).map(|_| rng.random_range(-5.0..5.0)).collect();
    Dataset::new(features, n, d, None).unwrap()
}

pub fn random_partitions(rng: &mut ChaCha8Rng, n: usize, c: usize) -> (FuzzyPartition, HardPartition) {
    let raw: Vec<f64> = (0..n * c).map(|_| rng.random_range(0.01..1.0)).collect();
    let probs = gpac::row_normalize(&raw, n, c).unwrap();
    let labels = (0..n).map(|_| rng.random_range(0..c)).collect();
    (probs, HardPartition::new(labels, c).unwrap())
}

/// Dense 0/1 support of W, diagonal excluded.
pub fn dense_support(graph: &KnnGraph) -> Vec<Vec<bool>> {
    let n = graph.n();
    (0..n)
        .map(|i| (0..n).map(|j| i != j && graph.weight(i, j) > 0.0).collect())
        .collect()
}

/// `1[(W + I)^theta > 0] - I` by repeated boolean matrix products.
pub fn dense_adjacency(graph: &KnnGraph, theta: usize) -> Vec<Vec<bool>> {
    let n = graph.n();
    let mut step = dense_support(graph);
    for (i, row) in step.iter_mut().enumerate() {
        row[i] = true;
    }
    let mut reach = step.clone();
    for _ in 1..theta {
        let mut next = vec![vec![false; n]; n];
        for i in 0..n {
            for t in 0..n {
                if reach[i][t] {
                    for j in 0..n {
                        next[i][j] |= step[t][j];
                    }
                }
            }
        }
        reach = next;
    }
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = false;
    }
    reach
}

/// Scores of sample `i` straight from their definition: column sums over
/// every other sample minus alpha times the in-batch adjacency votes.
pub fn dense_scores(
    probs: &[f64],
    labels: &[usize],
    c: usize,
    adj: &[Vec<bool>],
    in_batch: &[bool],
    i: usize,
    alpha: f64,
    m: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = labels.len();
    let mut s_p = vec![0.0; c];
    let mut s_v = vec![0.0; c];
    for l in 0..c {
        for j in 0..n {
            if j == i {
                continue;
            }
            s_p[l] += probs[j * c + l];
            s_v[l] += if labels[j] == l { 1.0 } else { 0.0 };
        }
        for j in 0..n {
            if adj[i][j] && in_batch[j] {
                s_p[l] -= alpha * if labels[j] == l { 1.0 } else { 0.0 };
                s_v[l] -= alpha * probs[j * c + l].powf(m);
            }
        }
    }
    (s_p, s_v)
}

/// `Tr(VᵀHV + PᵀHPᵐ − α VᵀŴPᵐ)` with every matrix entry spelled out.
pub fn brute_objective(
    probs: &[f64],
    labels: &[usize],
    c: usize,
    adj: &[Vec<bool>],
    alpha: f64,
    m: f64,
) -> f64 {
    let n = labels.len();
    let v = |i: usize, l: usize| if labels[i] == l { 1.0 } else { 0.0 };
    let mut total = 0.0;
    for l in 0..c {
        for i in 0..n {
            for j in 0..n {
                let h = if i == j { 0.0 } else { 1.0 };
                let w = if adj[i][j] { 1.0 } else { 0.0 };
                total += h * v(i, l) * v(j, l);
                total += h * probs[i * c + l] * probs[j * c + l].powf(m);
                total -= alpha * w * v(i, l) * probs[j * c + l].powf(m);
            }
        }
    }
    total
}

/// A full epoch written out naively in a given visiting order.
pub fn naive_epoch(
    probs: &mut [f64],
    labels: &mut [usize],
    c: usize,
    graph: &KnnGraph,
    adj: &[Vec<bool>],
    order: &[usize],
    batch_size: usize,
    cfg: &GpacConfig,
    beta: f64,
) {
    let n = labels.len();
    for batch in order.chunks(batch_size) {
        let mut in_batch = vec![false; n];
        batch.iter().for_each(|&i| in_batch[i] = true);
        for &i in batch {
            let (mut s_p, s_v) = dense_scores(probs, labels, c, adj, &in_batch, i, cfg.alpha, cfg.m);
            let min = s_p.iter().cloned().fold(f64::INFINITY, f64::min);
            s_p.iter_mut().for_each(|s| *s = *s - min + 1.0);
            let raw: Vec<f64> = s_p.iter().map(|s| s.powf(-1.0 / (cfg.m - 1.0))).collect();
            let total: f64 = raw.iter().sum();
            let mut p_bar = vec![0.0; c];
            let mut deg = 0.0;
            for j in 0..n {
                let w = graph.weight(i, j);
                deg += w;
                for l in 0..c {
                    p_bar[l] += w * probs[j * c + l];
                }
            }
            for l in 0..c {
                probs[i * c + l] = (raw[l] / total + beta * p_bar[l] / deg) / (1.0 + beta);
            }
            let mut best = 0;
            for l in 1..c {
                if s_v[l] < s_v[best] {
                    best = l;
                }
            }
            labels[i] = best;
        }
    }
}

pub fn graphs_for(data: &Dataset, k: usize, theta: usize) -> Graphs {
    let knn = build_knn_graph(data, k, None).unwrap();
    let adjacency = expand_adjacency(&knn, theta);
    Graphs { knn, adjacency }
}

/// All permutations of `0..k`.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Best agreement over all injective maps from predicted ids to truth ids
/// (extra ids map to nothing). Labels must be compact in `0..kp`, `0..kt`.
pub fn brute_acc(pred: &[usize], truth: &[usize]) -> f64 {
    let kp = pred.iter().max().map_or(0, |m| m + 1);
    let kt = truth.iter().max().map_or(0, |m| m + 1);
    let size = kp.max(kt);
    let mut best = 0;
    for perm in permutations(size) {
        let hits = pred.iter().zip(truth).filter(|(p, t)| perm[**p] == **t).count();
        best = best.max(hits);
    }
    best as f64 / pred.len() as f64
}

/// Adjusted Rand index by enumerating all sample pairs.
pub fn brute_ari(pred: &[usize], truth: &[usize]) -> f64 {
    let n = pred.len();
    let (mut a, mut b, mut both, mut pairs) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let sp = pred[i] == pred[j];
            let st = truth[i] == truth[j];
            a += f64::from(u8::from(sp));
            b += f64::from(u8::from(st));
            both += f64::from(u8::from(sp && st));
            pairs += 1.0;
        }
    }
    let expected = a * b / pairs;
    let max = (a + b) / 2.0;
    if max == expected {
        return 1.0;
    }
    (both - expected) / (max - expected)
}
