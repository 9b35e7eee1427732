//! Center-based baselines: K-means++ seeding, Lloyd's K-means, fuzzy
//! c-means and fuzzy c-means with the local consistency projection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{sq_euclidean, Dataset};
use crate::error::{GpacError, Result};
use crate::gpac::project_local_consistency_into;
use crate::graph::{neighborhood_average_into, KnnGraph};
use crate::partition::{FuzzyPartition, HardPartition};

/// Cluster centers, row-major c×d, with the number of samples (or total
/// membership weight) attached to each.
#[derive(Debug, Clone, PartialEq)]
pub struct Centroids {
    pub centers: Vec<f64>,
    pub weights: Vec<f64>,
    pub c: usize,
    pub d: usize,
}

impl Centroids {
    #[inline]
    pub fn center(&self, l: usize) -> &[f64] {
        &self.centers[l * self.d..(l + 1) * self.d]
    }

    /// Index and squared distance of the nearest center, ties to the lowest index.
    pub fn nearest(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for l in 0..self.c {
            let d = sq_euclidean(x, self.center(l));
            if d < best.1 {
                best = (l, d);
            }
        }
        best
    }
}

/// D²-weighted seeding. The first seed is uniform; each further seed is
/// drawn with probability proportional to its squared distance from the
/// closest seed so far.
pub fn kmeanspp_seed(data: &Dataset, c: usize, seed: u64) -> Result<Centroids> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    kmeanspp_seed_with(data, c, &mut rng)
}

pub(crate) fn kmeanspp_seed_with<R: Rng>(data: &Dataset, c: usize, rng: &mut R) -> Result<Centroids> {
    let n = data.n();
    if c == 0 || c > n {
        return Err(GpacError::TooFewDistinctPoints {
            requested: c,
            available: n,
        });
    }
    let mut chosen = Vec::with_capacity(c);
    chosen.push(rng.random_range(0..n));
    let mut dist: Vec<f64> = (0..n).map(|i| data.sq_dist(i, chosen[0])).collect();
    while chosen.len() < c {
        let total: f64 = dist.iter().sum();
        if !(total > 0.0) {
            return Err(GpacError::TooFewDistinctPoints {
                requested: c,
                available: chosen.len(),
            });
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &d) in dist.iter().enumerate() {
            if d > 0.0 {
                acc += d;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
        }
        let next = pick.expect("positive total implies a positive entry");
        chosen.push(next);
        let x = data.row(next);
        dist.par_iter_mut().enumerate().for_each(|(i, d)| {
            *d = d.min(sq_euclidean(data.row(i), x));
        });
    }
    let mut centers = Vec::with_capacity(c * data.d());
    for &i in &chosen {
        centers.extend_from_slice(data.row(i));
    }
    Ok(Centroids {
        centers,
        weights: vec![1.0; c],
        c,
        d: data.d(),
    })
}

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub partition: HardPartition,
    pub centroids: Centroids,
    /// Sum of squared distances to the assigned centers after each assignment pass.
    pub inertia: Vec<f64>,
    pub iterations: usize,
}

fn assign(data: &Dataset, centroids: &Centroids) -> (Vec<usize>, Vec<f64>) {
    (0..data.n())
        .into_par_iter()
        .map(|i| centroids.nearest(data.row(i)))
        .unzip()
}

/// Moves the farthest sample of a multi-member cluster into each empty
/// cluster and recenters that cluster on it.
fn repair_empty(
    data: &Dataset,
    labels: &mut [usize],
    dists: &mut [f64],
    centroids: &mut Centroids,
) {
    let c = centroids.c;
    let d = centroids.d;
    loop {
        let mut counts = vec![0usize; c];
        labels.iter().for_each(|&l| counts[l] += 1);
        let Some(empty) = counts.iter().position(|&k| k == 0) else {
            return;
        };
        let donor = (0..labels.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
        let Some(i) = donor else { return };
        labels[i] = empty;
        dists[i] = 0.0;
        centroids.centers[empty * d..(empty + 1) * d].copy_from_slice(data.row(i));
    }
}

fn update_means(data: &Dataset, labels: &[usize], centroids: &mut Centroids) {
    let d = centroids.d;
    let mut sums = vec![0.0; centroids.c * d];
    let mut counts = vec![0.0; centroids.c];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1.0;
        for (s, x) in sums[l * d..(l + 1) * d].iter_mut().zip(data.row(i)) {
            *s += x;
        }
    }
    for l in 0..centroids.c {
        if counts[l] > 0.0 {
            for t in 0..d {
                centroids.centers[l * d + t] = sums[l * d + t] / counts[l];
            }
        }
    }
    centroids.weights = counts;
}

/// Lloyd iterations from K-means++ seeds. With `max_iters = 0` this is the
/// plain nearest-seed assignment.
pub fn kmeans_fit(data: &Dataset, c: usize, seed: u64, max_iters: usize) -> Result<KMeansFit> {
    let mut centroids = kmeanspp_seed(data, c, seed)?;
    let (mut labels, mut dists) = assign(data, &centroids);
    repair_empty(data, &mut labels, &mut dists, &mut centroids);
    let mut inertia = vec![dists.iter().sum::<f64>()];
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        update_means(data, &labels, &mut centroids);
        let (mut next, mut next_d) = assign(data, &centroids);
        repair_empty(data, &mut next, &mut next_d, &mut centroids);
        inertia.push(next_d.iter().sum());
        let stable = next == labels;
        labels = next;
        if stable {
            break;
        }
    }
    let mut counts = vec![0.0; c];
    labels.iter().for_each(|&l| counts[l] += 1.0);
    centroids.weights = counts;
    Ok(KMeansFit {
        partition: HardPartition::from_raw_unchecked(labels, c),
        centroids,
        inertia,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FcmParams {
    pub clusters: usize,
    pub m: f64,
    pub seed: u64,
    /// Stop once the largest membership change falls below this.
    pub tol: f64,
    pub max_iters: usize,
}

impl FcmParams {
    pub fn new(clusters: usize, m: f64) -> Self {
        FcmParams {
            clusters,
            m,
            seed: 0,
            tol: 1e-6,
            max_iters: 300,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FcmFit {
    pub partition: FuzzyPartition,
    pub centroids: Centroids,
    /// FCM objective Σ p^m ‖x − v‖² after each membership update.
    pub objective: Vec<f64>,
    pub iterations: usize,
}

/// Standard FCM minimizer for one sample: memberships proportional to
/// `‖x − v_l‖^(−2/(m−1))`, evaluated in the log domain. A sample sitting on
/// one or more centers splits its membership evenly among them.
pub fn fcm_memberships_into(x: &[f64], centroids: &Centroids, m: f64, out: &mut [f64]) {
    let c = centroids.c;
    let mut zeros = 0usize;
    for l in 0..c {
        out[l] = sq_euclidean(x, centroids.center(l));
        if out[l] == 0.0 {
            zeros += 1;
        }
    }
    if zeros > 0 {
        let share = 1.0 / zeros as f64;
        out.iter_mut()
            .for_each(|v| *v = if *v == 0.0 { share } else { 0.0 });
        return;
    }
    let power = -1.0 / (m - 1.0);
    let mut max = f64::NEG_INFINITY;
    for v in out.iter_mut() {
        *v = power * v.ln();
        max = max.max(*v);
    }
    let mut total = 0.0;
    for v in out.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    out.iter_mut().for_each(|v| *v /= total);
}

fn fcm_objective(data: &Dataset, probs: &[f64], centroids: &Centroids, m: f64) -> f64 {
    let c = centroids.c;
    (0..data.n())
        .map(|i| {
            (0..c)
                .map(|l| probs[i * c + l].powf(m) * sq_euclidean(data.row(i), centroids.center(l)))
                .sum::<f64>()
        })
        .sum()
}

fn weighted_centers(data: &Dataset, probs: &[f64], m: f64, centroids: &mut Centroids) {
    let (c, d) = (centroids.c, centroids.d);
    let mut sums = vec![0.0; c * d];
    let mut weights = vec![0.0; c];
    for i in 0..data.n() {
        let x = data.row(i);
        for l in 0..c {
            let w = probs[i * c + l].powf(m);
            weights[l] += w;
            for (s, v) in sums[l * d..(l + 1) * d].iter_mut().zip(x) {
                *s += w * v;
            }
        }
    }
    for l in 0..c {
        // a cluster whose total weight underflowed keeps its previous center
        if weights[l] > 0.0 {
            for t in 0..d {
                centroids.centers[l * d + t] = sums[l * d + t] / weights[l];
            }
        }
    }
    centroids.weights = weights;
}

fn fcm_run(data: &Dataset, params: &FcmParams, lcc: Option<(&KnnGraph, f64)>) -> Result<FcmFit> {
    if !(params.m > 1.0) {
        return Err(GpacError::InvalidConfig(format!(
            "fuzzy exponent m must exceed 1, got {}",
            params.m
        )));
    }
    if params.clusters < 1 || params.clusters > data.n() {
        return Err(GpacError::InvalidConfig(format!(
            "cluster count must lie in [1, {}], got {}",
            data.n(),
            params.clusters
        )));
    }
    if let Some((g, beta)) = lcc {
        if g.n() != data.n() || !(beta >= 0.0) {
            return Err(GpacError::InvalidConfig(
                "graph size must match the dataset and beta must be >= 0".into(),
            ));
        }
    }
    let (n, c, m) = (data.n(), params.clusters, params.m);
    let mut centroids = kmeanspp_seed(data, c, params.seed)?;

    let memberships = |centroids: &Centroids| -> Vec<f64> {
        let mut probs = vec![0.0; n * c];
        probs
            .par_chunks_mut(c)
            .enumerate()
            .for_each(|(i, row)| fcm_memberships_into(data.row(i), centroids, m, row));
        probs
    };
    let project = |fresh: Vec<f64>, previous: &[f64]| -> Vec<f64> {
        match lcc {
            None => fresh,
            Some((graph, beta)) => {
                let mut out = vec![0.0; n * c];
                out.par_chunks_mut(c).enumerate().for_each(|(i, row)| {
                    let mut avg = vec![0.0; c];
                    neighborhood_average_into(graph, previous, c, i, &mut avg);
                    project_local_consistency_into(&fresh[i * c..(i + 1) * c], &avg, beta, row);
                });
                out
            }
        }
    };

    let first = memberships(&centroids);
    let mut probs = project(first.clone(), &first);
    let mut objective = vec![fcm_objective(data, &probs, &centroids, m)];
    let mut iterations = 0;
    while iterations < params.max_iters {
        iterations += 1;
        weighted_centers(data, &probs, m, &mut centroids);
        let next = project(memberships(&centroids), &probs);
        let delta = next
            .iter()
            .zip(&probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        probs = next;
        objective.push(fcm_objective(data, &probs, &centroids, m));
        if delta < params.tol {
            break;
        }
    }
    if let Some(i) = probs.iter().position(|p| !p.is_finite()) {
        return Err(GpacError::NonFiniteMembership(i / c));
    }
    Ok(FcmFit {
        partition: FuzzyPartition::from_raw_unchecked(probs, n, c),
        centroids,
        objective,
        iterations,
    })
}

/// Fuzzy c-means alternating weighted-mean centers and inverse-distance
/// memberships, starting from K-means++ seeds.
pub fn fcm_fit(data: &Dataset, params: &FcmParams) -> Result<FcmFit> {
    fcm_run(data, params, None)
}

/// Fuzzy c-means where every membership update is pulled toward the
/// previous iterate's neighborhood average with weight `beta`.
pub fn fcm_lcc_fit(data: &Dataset, params: &FcmParams, beta: f64, graph: &KnnGraph) -> Result<FcmFit> {
    fcm_run(data, params, Some((graph, beta)))
}
