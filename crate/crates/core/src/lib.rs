//! Spectral graph filtering with Poisson-Charlier polynomial convolutions.
//!
//! The library implements two-fold homophilic/heterophilic graph filtering:
//! a heterophilic heat kernel combined with a local low-pass filter, exactly
//! approximated by a truncated Poisson-Charlier series and applied as a
//! learnable filter bank (PC-Conv). A small node classifier (PCNet) trains
//! the bank end to end with hand-derived gradients.
//!
//! Module map:
//! - [`linalg`] — CSR products, Jacobi eigensolver, LU solves (oracle-grade)
//! - [`graph`] — graphs, generalized Laplacian normalization, homophily
//! - [`pcpoly`] — Poisson-Charlier coefficients and the truncated series
//! - [`filter`] — PC-Conv application plus dense spectral oracles
//! - [`fit`] — least-squares filter fitting and polynomial interpolation
//! - [`model`] — PCNet: forward/backward, Adam, training loop, model files
//! - [`data`] — dataset I/O, SBM generation, split protocols
//! - [`rng`] — deterministic splitmix generator
//!
//! ```
//! use pcconv_core::data::{sbm_generate, split_ratio, SbmConfig};
//! use pcconv_core::model::{evaluate, train, ModelConfig, TrainConfig};
//!
//! let ds = sbm_generate(&SbmConfig {
//!     n_nodes: 60,
//!     n_classes: 3,
//!     p_in: 0.4,
//!     p_out: 0.05,
//!     feature_dim: 8,
//!     mu: 1.5,
//!     sigma: 0.4,
//!     seed: 1,
//! })?;
//! let split = split_ratio(&ds, 0.6, 0.2, 1)?;
//! let model_cfg = ModelConfig { k_order: 2, n_order: 8, ..Default::default() };
//! let train_cfg = TrainConfig { max_epochs: 50, patience: 50, ..Default::default() };
//! let (model, history) = train(&ds, &split, &model_cfg, &train_cfg)?;
//! let accuracy = evaluate(&model, &ds, &split.test_idx)?;
//! assert!(accuracy > 0.5 && history.best_epoch >= 1);
//! # Ok::<(), pcconv_core::Error>(())
//! ```

pub mod data;
pub mod error;
pub mod filter;
pub mod fit;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod pcpoly;
pub mod rng;

pub use data::{Dataset, SbmConfig, SparseSplitMode, Split};
pub use error::{Error, Result};
pub use filter::{FactorOrder, FilterParams, FoldedCoeffs, HeatKernelSign};
pub use graph::{Graph, NormalizationConfig, PFeasibility};
pub use linalg::{DenseMatrix, SparseMatrix, SymEig};
pub use model::{BaselineMode, ModelConfig, PcNetModel, TrainConfig, TrainHistory};
pub use pcpoly::PcCoeffTable;
