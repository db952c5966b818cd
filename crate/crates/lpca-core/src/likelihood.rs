//! Bernoulli likelihood, link functions, and gradients.
//!
//! The natural parameter matrix is `Theta = 1 mu^T + Z` with `Z` column
//! centered; the per-entry mean is `phi(theta)` where `phi` is the inverse
//! link. Missing entries carry weight zero and contribute nothing to the
//! likelihood or its gradient.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Link function for the Bernoulli mean.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Logit,
    Probit,
}

impl std::str::FromStr for Link {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logit" => Ok(Link::Logit),
            "probit" => Ok(Link::Probit),
            other => Err(Error::InvalidInput(format!("unknown link '{other}'"))),
        }
    }
}

impl std::fmt::Display for Link {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Link::Logit => write!(f, "logit"),
            Link::Probit => write!(f, "probit"),
        }
    }
}

/// Observed binary matrix with a missing-value mask.
///
/// `data` holds 0/1 values (0 at missing positions); `mask` is 1 where the
/// entry was observed and 0 where it is missing.
#[derive(Clone, Debug)]
pub struct BinaryMatrix {
    data: Array2<f64>,
    mask: Array2<f64>,
}

impl BinaryMatrix {
    /// Build from separate value and mask matrices.
    pub fn from_parts(data: Array2<f64>, mask: Array2<f64>) -> Result<Self> {
        if data.dim() != mask.dim() {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", data.dim()),
                got: format!("{:?}", mask.dim()),
            });
        }
        for (&x, &w) in data.iter().zip(mask.iter()) {
            if w != 0.0 && w != 1.0 {
                return Err(Error::InvalidInput(format!("mask entry {w} is not 0/1")));
            }
            if w == 1.0 && x != 0.0 && x != 1.0 {
                return Err(Error::InvalidInput(format!(
                    "observed entry {x} is not 0/1"
                )));
            }
        }
        let mut data = data;
        data.iter_mut()
            .zip(mask.iter())
            .for_each(|(x, &w)| *x *= w);
        Ok(Self { data, mask })
    }

    /// Build from a dense matrix where missing values are encoded as NaN.
    pub fn from_dense(values: Array2<f64>) -> Result<Self> {
        let mask = values.mapv(|x| if x.is_nan() { 0.0 } else { 1.0 });
        let data = values.mapv(|x| if x.is_nan() { 0.0 } else { x });
        Self::from_parts(data, mask)
    }

    /// Fully observed matrix.
    pub fn fully_observed(values: Array2<f64>) -> Result<Self> {
        let mask = Array2::ones(values.dim());
        Self::from_parts(values, mask)
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn mask(&self) -> &Array2<f64> {
        &self.mask
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.mask[[i, j]] == 1.0
    }

    pub fn n_observed(&self) -> usize {
        self.mask.sum() as usize
    }

    /// Count of observed ones and zeros.
    pub fn observed_counts(&self) -> (usize, usize) {
        let ones = self.data.sum() as usize;
        (ones, self.n_observed() - ones)
    }

    /// Number of observed entries per column.
    pub fn observed_per_column(&self) -> Array1<f64> {
        self.mask.sum_axis(Axis(0))
    }

    /// Returns an error if any column has no observed entry (the offset for
    /// that column would be unidentifiable).
    pub fn check_columns_observed(&self) -> Result<()> {
        for (j, c) in self.observed_per_column().iter().enumerate() {
            if *c == 0.0 {
                return Err(Error::InvalidInput(format!(
                    "column {j} has no observed entries"
                )));
            }
        }
        Ok(())
    }

    /// Copy with the given entry set to missing.
    pub fn with_missing(&self, entries: &[(usize, usize)]) -> Self {
        let mut out = self.clone();
        for &(i, j) in entries {
            out.mask[[i, j]] = 0.0;
            out.data[[i, j]] = 0.0;
        }
        out
    }
}

/// Offset plus centered low-rank part of the natural parameter matrix.
#[derive(Clone, Debug)]
pub struct NaturalParams {
    pub mu: Array1<f64>,
    pub z: Array2<f64>,
}

impl NaturalParams {
    pub fn new(mu: Array1<f64>, z: Array2<f64>) -> Result<Self> {
        if mu.len() != z.ncols() {
            return Err(Error::ShapeMismatch {
                expected: format!("offset of length {}", z.ncols()),
                got: format!("{}", mu.len()),
            });
        }
        Ok(Self { mu, z })
    }

    /// `Theta = 1 mu^T + Z`.
    pub fn theta(&self) -> Array2<f64> {
        &self.z + &self.mu
    }

    /// Check the identifiability constraint `1^T Z = 0` within
    /// `1e-8 * ||Z||_F`.
    pub fn is_centered(&self) -> bool {
        let norm = self.z.mapv(|x| x * x).sum().sqrt();
        let tol = 1e-8 * norm.max(1e-300);
        self.z
            .sum_axis(Axis(0))
            .iter()
            .all(|&s| s.abs() <= tol)
    }
}

/// Elementwise inverse link, mapping natural parameters to probabilities.
pub fn inverse_link(theta: &Array2<f64>, link: Link) -> Array2<f64> {
    theta.mapv(|t| inverse_link_scalar(t, link))
}

pub fn inverse_link_scalar(theta: f64, link: Link) -> f64 {
    match link {
        Link::Logit => {
            if theta >= 0.0 {
                1.0 / (1.0 + (-theta).exp())
            } else {
                let e = theta.exp();
                e / (1.0 + e)
            }
        }
        Link::Probit => norm_cdf(theta),
    }
}

/// Negative log-likelihood of one observed entry.
pub fn bernoulli_nll(x: f64, theta: f64, link: Link) -> f64 {
    match link {
        // log(1 + e^theta) - x * theta, evaluated without overflow
        Link::Logit => softplus(theta) - x * theta,
        Link::Probit => {
            if x == 1.0 {
                -norm_log_cdf(theta)
            } else {
                -norm_log_cdf(-theta)
            }
        }
    }
}

/// Weighted negative log-likelihood over all observed entries.
pub fn neg_log_likelihood(x: &BinaryMatrix, theta: &Array2<f64>, link: Link) -> Result<f64> {
    check_shapes(x, theta)?;
    let mut total = 0.0;
    for ((&xi, &w), &t) in x
        .data()
        .iter()
        .zip(x.mask().iter())
        .zip(theta.iter())
    {
        if w != 0.0 {
            total += w * bernoulli_nll(xi, t, link);
        }
    }
    Ok(total)
}

/// Elementwise gradient of the negative log-likelihood with respect to
/// `theta`. For the logit link this is `phi(theta) - x`. The caller applies
/// the missing-value mask.
pub fn nll_gradient(x: &BinaryMatrix, theta: &Array2<f64>, link: Link) -> Result<Array2<f64>> {
    check_shapes(x, theta)?;
    let mut g = Array2::zeros(theta.dim());
    for ((gi, &xi), &t) in g.iter_mut().zip(x.data().iter()).zip(theta.iter()) {
        *gi = match link {
            Link::Logit => inverse_link_scalar(t, Link::Logit) - xi,
            Link::Probit => {
                if xi == 1.0 {
                    -mills_ratio(t)
                } else {
                    mills_ratio(-t)
                }
            }
        };
    }
    Ok(g)
}

/// Uniform upper bound on the second derivative of the per-entry negative
/// log-likelihood: 0.25 for logit, 1.0 for probit.
pub fn lipschitz_bound(link: Link) -> f64 {
    match link {
        Link::Logit => 0.25,
        Link::Probit => 1.0,
    }
}

fn check_shapes(x: &BinaryMatrix, theta: &Array2<f64>) -> Result<()> {
    if x.data().dim() != theta.dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", x.data().dim()),
            got: format!("{:?}", theta.dim()),
        });
    }
    Ok(())
}

fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// log Phi(z), stable over the whole double range.
fn norm_log_cdf(z: f64) -> f64 {
    if z < -37.0 {
        // asymptotic expansion of the Mills ratio
        let z2 = z * z;
        -0.5 * z2 - LN_SQRT_2PI - (-z).ln() + (-1.0 / z2 + 3.0 / (z2 * z2)).ln_1p()
    } else if z < 8.0 {
        (0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)).ln()
    } else {
        // Phi(z) = 1 - Phi(-z) with Phi(-z) tiny
        (-0.5 * libm::erfc(z / std::f64::consts::SQRT_2)).ln_1p()
    }
}

/// phi(z) / Phi(z), the derivative of -log Phi.
fn mills_ratio(z: f64) -> f64 {
    let log_pdf = -0.5 * z * z - LN_SQRT_2PI;
    (log_pdf - norm_log_cdf(z)).exp()
}
