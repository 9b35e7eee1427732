use crate::error::{GpacError, Result};

/// Dense row-major feature matrix with optional ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n: usize,
    d: usize,
    labels: Option<Vec<i64>>,
}

impl Dataset {
    pub fn new(features: Vec<f64>, n: usize, d: usize, labels: Option<Vec<i64>>) -> Result<Self> {
        if n < 2 {
            return Err(GpacError::InvalidDataset(format!(
                "need at least 2 samples, got {n}"
            )));
        }
        if d < 1 {
            return Err(GpacError::InvalidDataset("feature dimension is 0".into()));
        }
        if features.len() != n * d {
            return Err(GpacError::InvalidDataset(format!(
                "expected {} feature values for {n}x{d}, got {}",
                n * d,
                features.len()
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(GpacError::InvalidDataset(format!(
                "non-finite feature at sample {}, column {}",
                pos / d,
                pos % d
            )));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(GpacError::InvalidDataset(format!(
                    "{} labels for {n} samples",
                    l.len()
                )));
            }
        }
        Ok(Dataset {
            features,
            n,
            d,
            labels,
        })
    }

    /// Builds a dataset from equally sized rows.
    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<i64>>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(GpacError::InvalidDataset(format!(
                "row {bad} has {} values, expected {d}",
                rows[bad].len()
            )));
        }
        Self::new(rows.concat(), rows.len(), d, labels)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.d)
    }

    /// Squared Euclidean distance between samples `i` and `j`.
    #[inline]
    pub fn sq_dist(&self, i: usize, j: usize) -> f64 {
        sq_euclidean(self.row(i), self.row(j))
    }

    /// Restricts the dataset to the given sample indices, in order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i]).collect());
        Self::new(features, indices.len(), self.d, labels)
    }
}

#[inline]
pub(crate) fn sq_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let t = x - y;
            t * t
        })
        .sum()
}
