//! Low-rank multi-task linear regression: data generation, estimators
//! (nuclear-norm regularized, Frank-Wolfe, factored gradient descent,
//! alternating minimization, method of moments, per-task least squares),
//! subspace recovery and transfer to new tasks, plus a benchmark harness.

pub mod bench;
pub mod datagen;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod matops;
pub mod meta;
pub mod metrics;
pub mod rng;

pub use error::{MtlError, Result};
pub use matops::RealMatrix;
