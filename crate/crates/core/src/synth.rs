//! Synthetic Gaussian blob datasets with known labels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{sq_euclidean, Dataset};
use crate::error::{GpacError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    /// One center per class.
    pub centers: Vec<Vec<f64>>,
    pub per_cluster: usize,
    /// Isotropic standard deviation of every component.
    pub std: f64,
    /// Uniform background points, as a fraction of the blob points. Each is
    /// labeled with its nearest center.
    pub noise_fraction: f64,
}

impl BlobSpec {
    /// `c` blobs in the plane on a square grid with the given center spacing.
    pub fn grid(c: usize, per_cluster: usize, spacing: f64, std: f64) -> Self {
        let cols = (c as f64).sqrt().ceil().max(1.0) as usize;
        let centers = (0..c)
            .map(|l| vec![(l % cols) as f64 * spacing, (l / cols) as f64 * spacing])
            .collect();
        BlobSpec {
            centers,
            per_cluster,
            std,
            noise_fraction: 0.0,
        }
    }

    pub fn with_noise(mut self, fraction: f64) -> Self {
        self.noise_fraction = fraction;
        self
    }

    pub fn generate(&self, seed: u64) -> Result<Dataset> {
        let d = self.centers.first().map_or(0, Vec::len);
        if d == 0 || self.centers.iter().any(|c| c.len() != d) {
            return Err(GpacError::InvalidDataset(
                "blob centers must share a nonzero dimension".into(),
            ));
        }
        let normal = Normal::new(0.0, self.std)
            .map_err(|e| GpacError::InvalidDataset(format!("bad blob std: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (l, center) in self.centers.iter().enumerate() {
            for _ in 0..self.per_cluster {
                features.extend(center.iter().map(|&m| m + normal.sample(&mut rng)));
                labels.push(l as i64);
            }
        }
        let noise = (self.noise_fraction * labels.len() as f64).round() as usize;
        if noise > 0 {
            let pad = 3.0 * self.std;
            let lo: Vec<f64> = (0..d)
                .map(|t| self.centers.iter().map(|c| c[t]).fold(f64::INFINITY, f64::min) - pad)
                .collect();
            let hi: Vec<f64> = (0..d)
                .map(|t| self.centers.iter().map(|c| c[t]).fold(f64::NEG_INFINITY, f64::max) + pad)
                .collect();
            for _ in 0..noise {
                let x: Vec<f64> = (0..d).map(|t| rng.random_range(lo[t]..hi[t])).collect();
                let nearest = (0..self.centers.len())
                    .min_by(|&a, &b| {
                        sq_euclidean(&x, &self.centers[a]).total_cmp(&sq_euclidean(&x, &self.centers[b]))
                    })
                    .unwrap_or(0);
                features.extend(x);
                labels.push(nearest as i64);
            }
        }
        let n = labels.len();
        Dataset::new(features, n, d, Some(labels))
    }
}
