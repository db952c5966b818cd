//! Low-rank logistic PCA for binary matrices via singular value thresholding.
//!
//! The observed 0/1 matrix is modeled entrywise as Bernoulli with natural
//! parameter matrix `Theta = 1 mu^T + Z`, where `mu` is a per-column offset
//! and `Z` is encouraged to be low rank by a concave penalty (GDP by
//! default) on its singular values. A majorization-minimization loop with
//! closed-form block updates fits the model; missing entries are handled by
//! a weight mask, which also powers hold-out cross-validation for choosing
//! the regularization strength.

pub mod error;
pub mod evaluate;
pub mod experiments;
pub mod io;
pub mod likelihood;
pub mod penalty;
pub mod select;
pub mod simulate;
pub mod solver;
mod svd;

pub use error::{Error, Result};
pub use likelihood::{BinaryMatrix, Link, NaturalParams};
pub use penalty::{PenaltySpec, SingularSpectrum};
pub use solver::{decompose, fit, fit_null, objective, FitConfig, FitDiagnostics, Init, LpcaModel};
