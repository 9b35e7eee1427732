//! Fuzzy (row-stochastic) and hard (one-label-per-sample) partitions.

use crate::error::{GpacError, Result};

/// Tolerance for row-sum checks on probability matrices.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// An n×c row-stochastic membership matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyPartition {
    probs: Vec<f64>,
    n: usize,
    c: usize,
}

impl FuzzyPartition {
    /// Wraps a matrix after checking that every row lies on the simplex.
    pub fn new(probs: Vec<f64>, n: usize, c: usize) -> Result<Self> {
        if c == 0 || probs.len() != n * c {
            return Err(GpacError::InvalidDataset(format!(
                "probability matrix has {} entries, expected {n}x{c}",
                probs.len()
            )));
        }
        for (i, row) in probs.chunks_exact(c).enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
                return Err(GpacError::DegenerateRow {
                    row: i,
                    reason: "entry outside [0, 1]",
                });
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > STOCHASTIC_TOL {
                return Err(GpacError::DegenerateRow {
                    row: i,
                    reason: "row does not sum to 1",
                });
            }
        }
        Ok(FuzzyPartition { probs, n, c })
    }

    /// Every entry equal to `1/c`.
    pub fn uniform(n: usize, c: usize) -> Self {
        FuzzyPartition {
            probs: vec![1.0 / c as f64; n * c],
            n,
            c,
        }
    }

    pub(crate) fn from_raw_unchecked(probs: Vec<f64>, n: usize, c: usize) -> Self {
        debug_assert_eq!(probs.len(), n * c);
        FuzzyPartition { probs, n, c }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.c..(i + 1) * self.c]
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.c];
        for row in self.probs.chunks_exact(self.c) {
            for (s, p) in sums.iter_mut().zip(row) {
                *s += p;
            }
        }
        sums
    }

    /// Whether every column sum lies strictly between 0 and n, i.e. no
    /// cluster is empty and no cluster absorbs everything.
    pub fn is_feasible(&self) -> bool {
        let n = self.n as f64;
        self.column_sums().iter().all(|&s| s > 0.0 && s < n)
    }

    /// Most probable cluster per sample, ties to the lowest index.
    pub fn argmax(&self) -> HardPartition {
        let labels = self.probs.chunks_exact(self.c).map(argmax).collect();
        HardPartition { labels, c: self.c }
    }
}

/// Divides each row of a nonnegative n×c matrix by its sum.
pub fn row_normalize(matrix: &[f64], n: usize, c: usize) -> Result<FuzzyPartition> {
    if c == 0 || matrix.len() != n * c {
        return Err(GpacError::InvalidDataset(format!(
            "matrix has {} entries, expected {n}x{c}",
            matrix.len()
        )));
    }
    let mut probs = matrix.to_vec();
    for (i, row) in probs.chunks_exact_mut(c).enumerate() {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(GpacError::DegenerateRow {
                row: i,
                reason: "non-finite value",
            });
        }
        if row.iter().any(|v| *v < 0.0) {
            return Err(GpacError::DegenerateRow {
                row: i,
                reason: "negative value",
            });
        }
        let s: f64 = row.iter().sum();
        if s <= 0.0 {
            return Err(GpacError::DegenerateRow {
                row: i,
                reason: "row sums to zero",
            });
        }
        row.iter_mut().for_each(|v| *v /= s);
    }
    FuzzyPartition::new(probs, n, c)
}

/// One cluster id per sample; logically the one-hot matrix V.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardPartition {
    labels: Vec<usize>,
    c: usize,
}

impl HardPartition {
    pub fn new(labels: Vec<usize>, c: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
            return Err(GpacError::InvalidDataset(format!(
                "cluster id {bad} out of range for {c} clusters"
            )));
        }
        Ok(HardPartition { labels, c })
    }

    pub(crate) fn from_raw_unchecked(labels: Vec<usize>, c: usize) -> Self {
        HardPartition { labels, c }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn c(&self) -> usize {
        self.c
    }

    /// Cluster sizes, i.e. the column sums of V.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.c];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn to_one_hot(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.labels.len() * self.c];
        for (i, &l) in self.labels.iter().enumerate() {
            m[i * self.c + l] = 1.0;
        }
        m
    }

    pub fn from_one_hot(matrix: &[f64], n: usize, c: usize) -> Result<Self> {
        if c == 0 || matrix.len() != n * c {
            return Err(GpacError::InvalidDataset(format!(
                "one-hot matrix has {} entries, expected {n}x{c}",
                matrix.len()
            )));
        }
        let mut labels = Vec::with_capacity(n);
        for (i, row) in matrix.chunks_exact(c).enumerate() {
            let ones: Vec<usize> = (0..c).filter(|&l| row[l] == 1.0).collect();
            let zeros = row.iter().filter(|&&v| v == 0.0).count();
            if ones.len() != 1 || zeros != c - 1 {
                return Err(GpacError::DegenerateRow {
                    row: i,
                    reason: "not a one-hot row",
                });
            }
            labels.push(ones[0]);
        }
        Ok(HardPartition { labels, c })
    }
}

#[inline]
pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (l, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = l;
        }
    }
    best
}
