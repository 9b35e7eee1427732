//! External clustering quality measures: NMI, ACC and ARI.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{GpacError, Result};

/// Co-occurrence counts between predicted clusters (rows) and true classes
/// (columns). Label values are compacted to `0..r` and `0..s` in sorted order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contingency {
    counts: Vec<u64>,
    rows: usize,
    cols: usize,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    total: u64,
}

fn compact<T: Ord + Copy>(labels: &[T]) -> (Vec<usize>, usize) {
    let mut ids = BTreeMap::new();
    for &l in labels {
        ids.entry(l).or_insert(0usize);
    }
    for (next, v) in ids.values_mut().enumerate() {
        *v = next;
    }
    (labels.iter().map(|l| ids[l]).collect(), ids.len())
}

impl Contingency {
    pub fn new<A: Ord + Copy, B: Ord + Copy>(pred: &[A], truth: &[B]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(GpacError::LengthMismatch(pred.len(), truth.len()));
        }
        let (p, rows) = compact(pred);
        let (t, cols) = compact(truth);
        let mut counts = vec![0u64; rows * cols];
        for (&a, &b) in p.iter().zip(&t) {
            counts[a * cols + b] += 1;
        }
        let row_sums = (0..rows)
            .map(|r| counts[r * cols..(r + 1) * cols].iter().sum())
            .collect();
        let col_sums = (0..cols)
            .map(|s| (0..rows).map(|r| counts[r * cols + s]).sum())
            .collect();
        Ok(Contingency {
            counts,
            rows,
            cols,
            row_sums,
            col_sums,
            total: pred.len() as u64,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    #[inline]
    pub fn get(&self, r: usize, s: usize) -> u64 {
        self.counts[r * self.cols + s]
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NmiNormalization {
    /// `I / ((H(a) + H(b)) / 2)`
    #[default]
    Arithmetic,
    /// `I / sqrt(H(a) H(b))`
    Geometric,
}

/// Sums in ascending order so the result does not depend on label order.
fn sorted_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

fn entropy(sums: &[u64], total: f64) -> f64 {
    sorted_sum(
        sums.iter()
            .filter(|&&k| k > 0)
            .map(|&k| {
                let p = k as f64 / total;
                -p * p.ln()
            })
            .collect(),
    )
}

/// Normalized mutual information with arithmetic-mean normalization.
pub fn nmi<A: Ord + Copy, B: Ord + Copy>(pred: &[A], truth: &[B]) -> Result<f64> {
    nmi_with(pred, truth, NmiNormalization::Arithmetic)
}

pub fn nmi_with<A: Ord + Copy, B: Ord + Copy>(
    pred: &[A],
    truth: &[B],
    norm: NmiNormalization,
) -> Result<f64> {
    if pred.is_empty() {
        return Err(GpacError::LengthMismatch(0, truth.len()));
    }
    let t = Contingency::new(pred, truth)?;
    let n = t.total as f64;
    let ha = entropy(&t.row_sums, n);
    let hb = entropy(&t.col_sums, n);
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }
    let mut terms = Vec::new();
    for r in 0..t.rows {
        for s in 0..t.cols {
            let k = t.get(r, s);
            if k > 0 {
                let k = k as f64;
                terms.push(k / n * (n * k / (t.row_sums[r] as f64 * t.col_sums[s] as f64)).ln());
            }
        }
    }
    let mi = sorted_sum(terms);
    let denom = match norm {
        NmiNormalization::Arithmetic => 0.5 * (ha + hb),
        NmiNormalization::Geometric => (ha * hb).sqrt(),
    };
    Ok((mi / denom).clamp(0.0, 1.0))
}

/// Best-matching accuracy: the largest fraction of samples covered by a
/// one-to-one mapping from predicted clusters to classes. Surplus clusters
/// on either side stay unmatched.
pub fn acc<A: Ord + Copy, B: Ord + Copy>(pred: &[A], truth: &[B]) -> Result<f64> {
    if pred.is_empty() {
        return Err(GpacError::LengthMismatch(0, truth.len()));
    }
    let t = Contingency::new(pred, truth)?;
    let size = t.rows.max(t.cols);
    let max = t.counts.iter().copied().max().unwrap_or(0) as i64;
    // minimize (max - count) on the zero-padded square matrix
    let cost: Vec<i64> = (0..size * size)
        .map(|idx| {
            let (r, s) = (idx / size, idx % size);
            let k = if r < t.rows && s < t.cols { t.get(r, s) as i64 } else { 0 };
            max - k
        })
        .collect();
    let assignment = hungarian_min(&cost, size);
    let matched: u64 = assignment
        .iter()
        .enumerate()
        .filter(|&(r, &s)| r < t.rows && s < t.cols)
        .map(|(r, &s)| t.get(r, s))
        .sum();
    Ok(matched as f64 / t.total as f64)
}

/// Minimum-cost perfect matching on a square matrix (shortest augmenting
/// paths with potentials). Returns the column assigned to each row.
pub(crate) fn hungarian_min(cost: &[i64], size: usize) -> Vec<usize> {
    const INF: i64 = i64::MAX / 4;
    // 1-based arrays; index 0 is the virtual root
    let mut u = vec![0i64; size + 1];
    let mut v = vec![0i64; size + 1];
    let mut owner = vec![0usize; size + 1];
    let mut way = vec![0usize; size + 1];
    for row in 1..=size {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![INF; size + 1];
        let mut used = vec![false; size + 1];
        loop {
            used[col0] = true;
            let r0 = owner[col0];
            let mut delta = INF;
            let mut col1 = 0;
            for col in 1..=size {
                if !used[col] {
                    let cur = cost[(r0 - 1) * size + (col - 1)] - u[r0] - v[col];
                    if cur < minv[col] {
                        minv[col] = cur;
                        way[col] = col0;
                    }
                    if minv[col] < delta {
                        delta = minv[col];
                        col1 = col;
                    }
                }
            }
            for col in 0..=size {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; size];
    for col in 1..=size {
        if owner[col] > 0 {
            assignment[owner[col] - 1] = col - 1;
        }
    }
    assignment
}

#[inline]
fn comb2(k: u64) -> f64 {
    (k as f64) * (k as f64 - 1.0) / 2.0
}

/// Adjusted Rand index from pair counts.
pub fn ari<A: Ord + Copy, B: Ord + Copy>(pred: &[A], truth: &[B]) -> Result<f64> {
    if pred.len() < 2 {
        return Err(GpacError::LengthMismatch(pred.len(), truth.len()));
    }
    let t = Contingency::new(pred, truth)?;
    let index: f64 = t.counts.iter().map(|&k| comb2(k)).sum();
    let a: f64 = t.row_sums.iter().map(|&k| comb2(k)).sum();
    let b: f64 = t.col_sums.iter().map(|&k| comb2(k)).sum();
    let pairs = comb2(t.total);
    let expected = a * b / pairs;
    let max_index = 0.5 * (a + b);
    let denom = max_index - expected;
    if denom == 0.0 {
        // both partitions all-singletons or both a single cluster
        return Ok(1.0);
    }
    Ok((index - expected) / denom)
}

/// NMI, ACC and ARI of one labeling against the truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub nmi: f64,
    pub acc: f64,
    pub ari: f64,
}

pub fn evaluate<A: Ord + Copy, B: Ord + Copy>(pred: &[A], truth: &[B]) -> Result<Scores> {
    Ok(Scores {
        nmi: nmi(pred, truth)?,
        acc: acc(pred, truth)?,
        ari: ari(pred, truth)?,
    })
}
