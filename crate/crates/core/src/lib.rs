//! Core algorithms for the A2 copula spatial Bayesian neural network (A2-SBNN).
//!
//! The crate is organized around the pipeline the model follows:
//!
//! - [`rng`] / [`special`] / [`matrix`] / [`stats`] / [`shapiro`]: deterministic
//!   statistical and linear-algebra kernels (seeded substreams, the normal
//!   quantile, Cholesky, exact 1-D Wasserstein, the Shapiro-Wilk test).
//! - [`copula`]: the A2 copula inverse generator and the copula-driven weight
//!   initialization pipeline.
//! - [`field`]: spatial grids and synthesis of the fixed heavy-tailed target
//!   field the network is calibrated against.
//! - [`autodiff`]: a small reverse-mode automatic differentiation engine with
//!   support for differentiating through input gradients (needed by the
//!   critic's gradient penalty).
//! - [`model`]: the RBF-embedded residual network and ensemble inference.
//! - [`calibrate`]: the composite calibration loss (supervised + Wasserstein
//!   critic with gradient penalty + moment + correlation terms) and the
//!   Adam-based training loop.
//!
//! Everything is `f64` and deterministic given an explicit seed; no global
//! RNG state exists anywhere in the crate.

pub mod autodiff;
pub mod calibrate;
pub mod copula;
pub mod error;
pub mod field;
pub mod matrix;
pub mod model;
pub mod rng;
pub mod shapiro;
pub mod special;
pub mod stats;

pub use calibrate::{
    calibrate, CalibrationConfig, CalibrationRun, Critic, CriticParams, LossBreakdown,
};
pub use copula::A2Params;
pub use error::{Error, Result};
pub use field::{FieldConfig, SpatialGrid, TargetField};
pub use matrix::Matrix;
pub use model::{predict_ensemble, EmbeddingConfig, ModelConfig, ModelParams, SbnnModel};
pub use rng::RngStream;
