//! Shared fixtures for the benchmark suite.

use pcconv_core::data::{sbm_generate, SbmConfig};
use pcconv_core::Dataset;

/// A mid-sized SBM instance reused across benchmarks.
pub fn bench_dataset(n_nodes: usize, seed: u64) -> Dataset {
    sbm_generate(&SbmConfig {
        n_nodes,
        n_classes: 4,
        p_in: (12.0 / n_nodes as f64).min(1.0),
        p_out: (3.0 / n_nodes as f64).min(1.0),
        feature_dim: 32,
        mu: 1.0,
        sigma: 0.8,
        seed,
    })
    .expect("valid benchmark configuration")
}
