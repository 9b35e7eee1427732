//! Graph probability aggregation clustering (GPAC).
//!
//! A center-free fuzzy clustering method: every sample holds a probability
//! vector over `c` clusters and a hard label, and both are refreshed in
//! closed form from global column sums and votes of graph neighbors. See
//! [`gpac::fit`] for the end-to-end entry point.
//!
//! ```
//! use gpac::{fit, GpacConfig};
//! use gpac::synth::BlobSpec;
//!
//! let data = BlobSpec::grid(3, 60, 12.0, 1.0).generate(7).unwrap();
//! let result = fit(&data, &GpacConfig::new(3)).unwrap();
//! let acc = gpac::metrics::acc(&result.predictions, data.labels().unwrap()).unwrap();
//! assert!(acc > 0.95);
//! ```

pub mod baselines;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod gpac;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod partition;
pub mod synth;

pub use config::{validate_config, GpacConfig, HardUpdate, InitMode};
pub use dataset::Dataset;
pub use error::{GpacError, Result};
pub use gpac::{fit, FitResult, Solver};
pub use graph::{AdjacencyIndicator, KnnGraph};
pub use partition::{row_normalize, FuzzyPartition, HardPartition};
