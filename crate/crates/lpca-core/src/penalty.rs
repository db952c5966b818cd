//! Penalty kernels on singular values.
//!
//! Each concave penalty contributes three pieces: its value on a spectrum,
//! the supergradient weights used to majorize it by a weighted sum of
//! singular values, and the proximal (thresholding) operator of that
//! weighted sum. The hard rank constraint is handled separately by the
//! solver and has no penalty value.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::svd;

/// Default GDP hyper-parameter.
pub const DEFAULT_GAMMA: f64 = 1.0;
/// Canonical SCAD shape parameter.
pub const DEFAULT_SCAD_A: f64 = 3.7;
/// Smoothing floor for the L_q supergradient at zero.
pub const LQ_EPS: f64 = 1e-8;
/// Thresholded singular values below this fraction of the leading input
/// singular value are snapped to exactly zero so rank counts are stable.
pub const SV_SNAP_REL: f64 = 1e-12;

/// Penalty family with its hyper-parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PenaltySpec {
    /// `lambda * sum_r log(1 + sigma_r / gamma)`
    Gdp { lambda: f64, gamma: f64 },
    /// `lambda * sum_r sigma_r`
    Nuclear { lambda: f64 },
    /// Fan-Li SCAD with `lambda` folded into the value.
    Scad { lambda: f64, a: f64 },
    /// `lambda * sum_r sigma_r^q`, `0 < q <= 1`
    Lq { lambda: f64, q: f64 },
    /// Hard constraint `rank(Z) = rank`; ignores `lambda`.
    ExactRank { rank: usize },
}

impl PenaltySpec {
    pub fn gdp(lambda: f64, gamma: f64) -> Self {
        PenaltySpec::Gdp { lambda, gamma }
    }

    pub fn nuclear(lambda: f64) -> Self {
        PenaltySpec::Nuclear { lambda }
    }

    pub fn scad(lambda: f64, a: f64) -> Self {
        PenaltySpec::Scad { lambda, a }
    }

    pub fn lq(lambda: f64, q: f64) -> Self {
        PenaltySpec::Lq { lambda, q }
    }

    pub fn exact_rank(rank: usize) -> Self {
        PenaltySpec::ExactRank { rank }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PenaltySpec::Gdp { lambda, gamma } => {
                if lambda < 0.0 || !lambda.is_finite() {
                    return Err(Error::InvalidInput(format!("lambda {lambda} must be >= 0")));
                }
                if gamma <= 0.0 || !gamma.is_finite() {
                    return Err(Error::InvalidInput(format!("gamma {gamma} must be > 0")));
                }
            }
            PenaltySpec::Nuclear { lambda } => {
                if lambda < 0.0 || !lambda.is_finite() {
                    return Err(Error::InvalidInput(format!("lambda {lambda} must be >= 0")));
                }
            }
            PenaltySpec::Scad { lambda, a } => {
                if lambda < 0.0 || !lambda.is_finite() {
                    return Err(Error::InvalidInput(format!("lambda {lambda} must be >= 0")));
                }
                if a <= 2.0 || !a.is_finite() {
                    return Err(Error::InvalidInput(format!("SCAD a {a} must be > 2")));
                }
            }
            PenaltySpec::Lq { lambda, q } => {
                if lambda < 0.0 || !lambda.is_finite() {
                    return Err(Error::InvalidInput(format!("lambda {lambda} must be >= 0")));
                }
                if q <= 0.0 || q > 1.0 {
                    return Err(Error::InvalidInput(format!("q {q} must be in (0, 1]")));
                }
            }
            PenaltySpec::ExactRank { .. } => {}
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        match *self {
            PenaltySpec::Gdp { lambda, .. }
            | PenaltySpec::Nuclear { lambda }
            | PenaltySpec::Scad { lambda, .. }
            | PenaltySpec::Lq { lambda, .. } => lambda,
            PenaltySpec::ExactRank { .. } => 0.0,
        }
    }

    /// Same family and hyper-parameters at a different regularization
    /// strength. No-op for the hard rank constraint.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        match *self {
            PenaltySpec::Gdp { gamma, .. } => PenaltySpec::Gdp { lambda, gamma },
            PenaltySpec::Nuclear { .. } => PenaltySpec::Nuclear { lambda },
            PenaltySpec::Scad { a, .. } => PenaltySpec::Scad { lambda, a },
            PenaltySpec::Lq { q, .. } => PenaltySpec::Lq { lambda, q },
            PenaltySpec::ExactRank { rank } => PenaltySpec::ExactRank { rank },
        }
    }

    pub fn is_exact_rank(&self) -> bool {
        matches!(self, PenaltySpec::ExactRank { .. })
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            PenaltySpec::Gdp { .. } => "gdp",
            PenaltySpec::Nuclear { .. } => "nuclear",
            PenaltySpec::Scad { .. } => "scad",
            PenaltySpec::Lq { .. } => "lq",
            PenaltySpec::ExactRank { .. } => "exact",
        }
    }
}

/// Nonincreasing vector of nonnegative singular values.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularSpectrum(Vec<f64>);

impl SingularSpectrum {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for w in values.windows(2) {
            if w[1] > w[0] {
                return Err(Error::InvalidInput(
                    "singular values must be nonincreasing".into(),
                ));
            }
        }
        if values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidInput(
                "singular values must be finite and nonnegative".into(),
            ));
        }
        Ok(Self(values))
    }

    /// Values already known to be sorted (e.g. fresh from an SVD).
    pub(crate) fn from_sorted_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(values.windows(2).all(|w| w[1] <= w[0]));
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Penalty value `sum_r g(sigma_r)`. Excludes the outer `lambda` factor for
/// GDP/nuclear/L_q; SCAD folds `lambda` in.
pub fn penalty_value(spec: &PenaltySpec, sigma: &SingularSpectrum) -> Result<f64> {
    spec.validate()?;
    let vals = sigma.values();
    match *spec {
        PenaltySpec::Gdp { gamma, .. } => Ok(vals.iter().map(|s| (s / gamma).ln_1p()).sum()),
        PenaltySpec::Nuclear { .. } => Ok(vals.iter().sum()),
        PenaltySpec::Lq { q, .. } => Ok(vals.iter().map(|s| s.powf(q)).sum()),
        PenaltySpec::Scad { lambda, a } => Ok(vals.iter().map(|&s| scad_value(s, lambda, a)).sum()),
        PenaltySpec::ExactRank { .. } => Err(Error::ExactRankPenalty),
    }
}

/// Per-singular-value weights `w_r` majorizing the penalty by
/// `sum_r w_r sigma_r`. The solver thresholds at `lambda * w_r / L`, so SCAD
/// weights are reported as `P'_lambda(sigma) / lambda`.
pub fn supergradient_weights(spec: &PenaltySpec, sigma_k: &SingularSpectrum) -> Result<Vec<f64>> {
    spec.validate()?;
    let vals = sigma_k.values();
    match *spec {
        PenaltySpec::Gdp { gamma, .. } => Ok(vals.iter().map(|s| 1.0 / (gamma + s)).collect()),
        PenaltySpec::Nuclear { .. } => Ok(vec![1.0; vals.len()]),
        PenaltySpec::Lq { q, .. } => Ok(vals
            .iter()
            .map(|&s| q * s.max(LQ_EPS).powf(q - 1.0))
            .collect()),
        PenaltySpec::Scad { lambda, a } => {
            Ok(vals.iter().map(|&s| scad_weight(s, lambda, a)).collect())
        }
        PenaltySpec::ExactRank { .. } => Err(Error::ExactRankPenalty),
    }
}

/// Supergradient weight at `sigma = 0`, the largest weight the family can
/// produce. Used for the automatic regularization range.
pub fn weight_at_zero(spec: &PenaltySpec) -> Result<f64> {
    let ones = SingularSpectrum::from_sorted_unchecked(vec![0.0]);
    Ok(supergradient_weights(spec, &ones)?[0])
}

/// Thresholded SVD factors of the proximal step.
pub(crate) struct ShrunkSvd {
    /// I x K left factors, K = min(I, J).
    pub u: Array2<f64>,
    /// Full-length thresholded spectrum, nonincreasing, zeros included.
    pub eta: Vec<f64>,
    /// J x K right factors.
    pub v: Array2<f64>,
}

impl ShrunkSvd {
    pub fn rank(&self) -> usize {
        self.eta.iter().take_while(|&&e| e > 0.0).count()
    }

    pub fn compose(&self) -> Array2<f64> {
        svd::reconstruct(&self.u, &self.eta, &self.v, self.rank())
    }
}

pub(crate) fn weighted_sv_threshold_factors(
    m: &ArrayView2<f64>,
    weights: &[f64],
    lambda: f64,
    l: f64,
) -> Result<ShrunkSvd> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!("lambda {lambda} must be >= 0")));
    }
    if l <= 0.0 || !l.is_finite() {
        return Err(Error::InvalidInput(format!("step constant {l} must be > 0")));
    }
    let svd = svd::thin_svd(m)?;
    let k = svd.s.len();
    if weights.len() < k {
        return Err(Error::InvalidInput(format!(
            "{} weights for {k} singular values",
            weights.len()
        )));
    }
    // the closed form is the global prox only when weights do not decrease
    // with the index (concave penalties guarantee this)
    for w in weights[..k].windows(2) {
        if w[1] < w[0] - 1e-12 * w[0].abs().max(1.0) {
            return Err(Error::InvalidInput(
                "weights must be nondecreasing along the sorted spectrum".into(),
            ));
        }
    }
    if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(Error::InvalidInput("weights must be nonnegative".into()));
    }
    let snap = SV_SNAP_REL * svd.s.first().copied().unwrap_or(0.0);
    let eta: Vec<f64> = svd
        .s
        .iter()
        .zip(weights.iter())
        .map(|(&s, &w)| {
            let shrunk = (s - lambda * w / l).max(0.0);
            if shrunk < snap {
                0.0
            } else {
                shrunk
            }
        })
        .collect();
    Ok(ShrunkSvd {
        u: svd.u,
        eta,
        v: svd.v,
    })
}

/// Proximal operator of `lambda * sum_r w_r sigma_r(Z)` with step `1/L`:
/// the global minimizer of `(L/2) ||Z - M||_F^2 + lambda sum_r w_r sigma_r(Z)`.
///
/// Computes an SVD `M = U diag(s) V^T` and returns
/// `U diag(max(0, s_r - lambda w_r / L)) V^T`.
pub fn weighted_sv_threshold(
    m: &ArrayView2<f64>,
    weights: &[f64],
    lambda: f64,
    l: f64,
) -> Result<Array2<f64>> {
    Ok(weighted_sv_threshold_factors(m, weights, lambda, l)?.compose())
}

fn scad_value(s: f64, lambda: f64, a: f64) -> f64 {
    if s <= lambda {
        lambda * s
    } else if s <= a * lambda {
        (2.0 * a * lambda * s - s * s - lambda * lambda) / (2.0 * (a - 1.0))
    } else {
        lambda * lambda * (a + 1.0) / 2.0
    }
}

/// `P'_lambda(sigma) / lambda` so the uniform threshold `lambda * w / L`
/// reproduces the SCAD derivative.
fn scad_weight(s: f64, lambda: f64, a: f64) -> f64 {
    if lambda <= 0.0 {
        0.0
    } else if s <= lambda {
        1.0
    } else if s <= a * lambda {
        (a * lambda - s) / ((a - 1.0) * lambda)
    } else {
        0.0
    }
}

/// Scalar thresholding function `eta(sigma) = argmin_{eta >= 0}
/// (1/2)(eta - sigma)^2 + lambda g(eta)` for one singular value.
pub fn scalar_prox(spec: &PenaltySpec, sigma: f64) -> Result<f64> {
    spec.validate()?;
    if sigma < 0.0 {
        return Err(Error::InvalidInput("sigma must be nonnegative".into()));
    }
    let objective = |eta: f64| -> f64 {
        let g = match *spec {
            PenaltySpec::Gdp { lambda, gamma } => lambda * (eta / gamma).ln_1p(),
            PenaltySpec::Nuclear { lambda } => lambda * eta,
            PenaltySpec::Scad { lambda, a } => scad_value(eta, lambda, a),
            PenaltySpec::Lq { lambda, q } => lambda * eta.powf(q),
            PenaltySpec::ExactRank { .. } => unreachable!(),
        };
        0.5 * (eta - sigma) * (eta - sigma) + g
    };
    match *spec {
        PenaltySpec::Nuclear { lambda } => Ok((sigma - lambda).max(0.0)),
        PenaltySpec::Gdp { lambda, gamma } => {
            // interior stationary points solve eta^2 + (gamma - sigma) eta
            // + (lambda - sigma gamma) = 0
            let b = gamma - sigma;
            let c = lambda - sigma * gamma;
            let disc = b * b - 4.0 * c;
            let mut best = (0.0, objective(0.0));
            if disc >= 0.0 {
                let root = 0.5 * (-b + disc.sqrt());
                if root > 0.0 {
                    let f = objective(root);
                    if f < best.1 {
                        best = (root, f);
                    }
                }
            }
            Ok(best.0)
        }
        PenaltySpec::Scad { lambda, a } => {
            if sigma <= 2.0 * lambda {
                Ok((sigma - lambda).max(0.0))
            } else if sigma <= a * lambda {
                Ok(((a - 1.0) * sigma - a * lambda) / (a - 2.0))
            } else {
                Ok(sigma)
            }
        }
        PenaltySpec::Lq { lambda, q } => {
            if q == 1.0 {
                return Ok((sigma - lambda).max(0.0));
            }
            // Newton on the stationarity condition from eta = sigma down,
            // then compare against the boundary candidate eta = 0
            let mut eta = sigma;
            let mut converged = false;
            for _ in 0..100 {
                if eta <= 0.0 {
                    break;
                }
                let h = eta - sigma + lambda * q * eta.powf(q - 1.0);
                let dh = 1.0 + lambda * q * (q - 1.0) * eta.powf(q - 2.0);
                if dh.abs() < 1e-14 {
                    break;
                }
                let next = eta - h / dh;
                if !next.is_finite() || next <= 0.0 {
                    break;
                }
                if (next - eta).abs() <= 1e-14 * eta.max(1.0) {
                    eta = next;
                    converged = true;
                    break;
                }
                eta = next;
            }
            if converged && eta > 0.0 && objective(eta) <= objective(0.0) {
                Ok(eta)
            } else {
                Ok(0.0)
            }
        }
        PenaltySpec::ExactRank { .. } => Err(Error::ExactRankPenalty),
    }
}

/// Sampled thresholding curve `(sigma, eta)` on `[0, sigma_max]`.
pub fn threshold_curve(
    spec: &PenaltySpec,
    sigma_max: f64,
    points: usize,
) -> Result<Vec<(f64, f64)>> {
    if sigma_max <= 0.0 || points < 2 {
        return Err(Error::InvalidInput(
            "need sigma_max > 0 and at least 2 points".into(),
        ));
    }
    (0..points)
        .map(|i| {
            let sigma = sigma_max * i as f64 / (points - 1) as f64;
            scalar_prox(spec, sigma).map(|eta| (sigma, eta))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spectrum(v: Vec<f64>) -> SingularSpectrum {
        SingularSpectrum::new(v).unwrap()
    }

    #[test]
    fn gdp_value_examples() {
        let spec = PenaltySpec::gdp(1.0, 1.0);
        assert_eq!(penalty_value(&spec, &spectrum(vec![0.0, 0.0])).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert_abs_diff_eq!(
            penalty_value(&spec, &spectrum(vec![e - 1.0])).unwrap(),
            1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn nuclear_value_sums_entries() {
        let spec = PenaltySpec::nuclear(2.0);
        assert_abs_diff_eq!(
            penalty_value(&spec, &spectrum(vec![3.0, 1.0])).unwrap(),
            4.0
        );
    }

    #[test]
    fn exact_rank_penalty_is_undefined() {
        let spec = PenaltySpec::exact_rank(3);
        assert!(matches!(
            penalty_value(&spec, &spectrum(vec![1.0])),
            Err(Error::ExactRankPenalty)
        ));
        assert!(supergradient_weights(&spec, &spectrum(vec![1.0])).is_err());
    }

    #[test]
    fn gdp_weights() {
        let spec = PenaltySpec::gdp(1.0, 1.0);
        let w = supergradient_weights(&spec, &spectrum(vec![0.0])).unwrap();
        assert_abs_diff_eq!(w[0], 1.0);
        let w = supergradient_weights(&spec, &spectrum(vec![3.0, 1.0])).unwrap();
        assert_abs_diff_eq!(w[0], 0.25);
        assert_abs_diff_eq!(w[1], 0.5);
    }

    #[test]
    fn nuclear_weights_are_constant() {
        let spec = PenaltySpec::nuclear(1.0);
        let w = supergradient_weights(&spec, &spectrum(vec![7.0, 0.1])).unwrap();
        assert_eq!(w, vec![1.0, 1.0]);
    }

    #[test]
    fn unsorted_spectrum_rejected() {
        assert!(SingularSpectrum::new(vec![3.0, 4.0]).is_err());
        assert!(SingularSpectrum::new(vec![3.0, -1.0]).is_err());
    }

    #[test]
    fn threshold_diagonal_example() {
        // shrink s - lambda * w / L: 3 - 1*0.25/0.25 = 2, 1 - 1*0.5/0.25 < 0
        let m = array![[3.0, 0.0], [0.0, 1.0]];
        let z = weighted_sv_threshold(&m.view(), &[0.25, 0.5], 1.0, 0.25).unwrap();
        assert_abs_diff_eq!(z[[0, 0]], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(z[[1, 1]], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(z[[0, 1]], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_lambda_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Array2::from_shape_fn((4, 6), |_| rng.gen_range(-2.0..2.0));
        let z = weighted_sv_threshold(&m.view(), &[1.0; 4], 0.0, 0.25).unwrap();
        for (a, b) in m.iter().zip(z.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn zero_matrix_is_fixed_point() {
        let m = Array2::<f64>::zeros((3, 3));
        let z = weighted_sv_threshold(&m.view(), &[1.0; 3], 5.0, 0.25).unwrap();
        assert!(z.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn non_finite_input_rejected() {
        let m = array![[f64::NAN, 0.0], [0.0, 1.0]];
        assert!(weighted_sv_threshold(&m.view(), &[1.0, 1.0], 1.0, 0.25).is_err());
    }

    #[test]
    fn shrinkage_never_grows_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let m = Array2::from_shape_fn((5, 5), |_| rng.gen_range(-2.0..2.0));
            let sigma_in = crate::svd::singular_values(&m.view()).unwrap();
            let sigma_spec = SingularSpectrum::from_sorted_unchecked(sigma_in.to_vec());
            let spec = PenaltySpec::gdp(rng.gen_range(0.0..2.0), rng.gen_range(0.1..3.0));
            let w = supergradient_weights(&spec, &sigma_spec).unwrap();
            let z = weighted_sv_threshold(&m.view(), &w, spec.lambda(), 0.25).unwrap();
            let sigma_out = crate::svd::singular_values(&z.view()).unwrap();
            for (si, so) in sigma_in.iter().zip(sigma_out.iter()) {
                assert!(so <= &(si + 1e-10), "output {so} exceeds input {si}");
            }
        }
    }

    #[test]
    fn thresholded_values_monotone_in_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let m = Array2::from_shape_fn((5, 5), |_| rng.gen_range(-2.0..2.0));
        let weights = [0.2, 0.3, 0.5, 0.8, 1.0];
        let mut prev: Option<Vec<f64>> = None;
        for step in 0..8 {
            let lambda = step as f64 * 0.4;
            let fac =
                weighted_sv_threshold_factors(&m.view(), &weights, lambda, 0.25).unwrap();
            if let Some(p) = prev {
                for (now, before) in fac.eta.iter().zip(p.iter()) {
                    assert!(now <= &(before + 1e-12));
                }
            }
            prev = Some(fac.eta);
        }
    }

    /// 1-D grid-search oracle for the scalar prox problem
    /// min 0.5*L*(eta - s)^2 + lambda*w*eta over eta >= 0.
    fn scalar_shrink_oracle(s: f64, w: f64, lambda: f64, l: f64) -> f64 {
        let mut best = (0.0, 0.5 * l * s * s);
        let n = 10_000;
        for i in 0..=n {
            let eta = s * i as f64 / n as f64;
            let obj = 0.5 * l * (eta - s) * (eta - s) + lambda * w * eta;
            if obj < best.1 {
                best = (eta, obj);
            }
        }
        best.0
    }

    #[test]
    fn closed_form_matches_scalar_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let s: f64 = rng.gen_range(0.0..5.0);
            let w: f64 = rng.gen_range(0.0..2.0);
            let lambda: f64 = rng.gen_range(0.0..2.0);
            let l = 0.25f64;
            let closed = (s - lambda * w / l).max(0.0);
            let grid = scalar_shrink_oracle(s, w, lambda, l);
            assert!((closed - grid).abs() < s.max(1.0) * 2e-4);
        }
    }

    /// Full matrix-level oracle: the prox objective at the closed-form output
    /// must not exceed the value found by per-singular-value grid search.
    #[test]
    fn prox_objective_beats_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let l = 0.25;
        for trial in 0..25 {
            let m = Array2::from_shape_fn((5, 5), |_| rng.gen_range(-2.0..2.0));
            let spec = match trial % 4 {
                0 => PenaltySpec::gdp(rng.gen_range(0.0..1.5), rng.gen_range(0.2..3.0)),
                1 => PenaltySpec::nuclear(rng.gen_range(0.0..1.5)),
                2 => PenaltySpec::scad(rng.gen_range(0.0..1.5), 3.7),
                _ => PenaltySpec::lq(rng.gen_range(0.0..1.5), rng.gen_range(0.2..1.0)),
            };
            let s_in = crate::svd::singular_values(&m.view()).unwrap();
            let sig = SingularSpectrum::from_sorted_unchecked(s_in.to_vec());
            let w = supergradient_weights(&spec, &sig).unwrap();
            let lambda = spec.lambda();
            let fac = weighted_sv_threshold_factors(&m.view(), &w, lambda, l).unwrap();
            let z = fac.compose();
            let attained = 0.5 * l * (&z - &m).mapv(|d| d * d).sum()
                + lambda * fac.eta.iter().zip(w.iter()).map(|(e, wi)| e * wi).sum::<f64>();
            // separable oracle: optimize each singular value on a grid
            let oracle: f64 = s_in
                .iter()
                .zip(w.iter())
                .map(|(&s, &wi)| {
                    let eta = scalar_shrink_oracle(s, wi, lambda, l);
                    0.5 * l * (eta - s) * (eta - s) + lambda * wi * eta
                })
                .sum();
            assert!(
                attained <= oracle + 1e-8,
                "attained {attained} worse than oracle {oracle}"
            );
        }
    }

    #[test]
    fn decreasing_weights_rejected() {
        let m = array![[3.0, 0.0], [0.0, 1.0]];
        assert!(weighted_sv_threshold(&m.view(), &[0.5, 0.25], 1.0, 0.25).is_err());
    }

    #[test]
    fn curve_nuclear_is_shifted_identity() {
        let spec = PenaltySpec::nuclear(1.5);
        let curve = threshold_curve(&spec, 6.0, 61).unwrap();
        for &(s, eta) in &curve {
            if s <= 1.5 {
                assert_eq!(eta, 0.0);
            } else {
                assert_abs_diff_eq!(eta, s - 1.5, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn curve_gdp_shape() {
        let spec = PenaltySpec::gdp(2.0, 1.0);
        let curve = threshold_curve(&spec, 50.0, 501).unwrap();
        for &(s, eta) in &curve {
            assert!(eta >= 0.0);
            if eta > 0.0 {
                assert!(eta < s + 1e-12, "thresholded value must not exceed input");
            }
        }
        // approaches the identity for large sigma
        let (s_last, eta_last) = *curve.last().unwrap();
        assert!(s_last - eta_last < 0.1, "gap {} too large", s_last - eta_last);
        // and is exactly zero below the threshold
        assert_eq!(curve[1].1, 0.0);
    }

    #[test]
    fn scalar_prox_matches_grid_for_all_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let specs = [
            PenaltySpec::gdp(1.3, 0.7),
            PenaltySpec::nuclear(0.8),
            PenaltySpec::scad(0.9, 3.7),
            PenaltySpec::lq(0.8, 0.5),
        ];
        for spec in specs {
            for _ in 0..40 {
                let sigma = rng.gen_range(0.0..6.0);
                let eta = scalar_prox(&spec, sigma).unwrap();
                let obj = |e: f64| {
                    let g = match spec {
                        PenaltySpec::Gdp { lambda, gamma } => lambda * (e / gamma).ln_1p(),
                        PenaltySpec::Nuclear { lambda } => lambda * e,
                        PenaltySpec::Scad { lambda, a } => scad_value(e, lambda, a),
                        PenaltySpec::Lq { lambda, q } => lambda * e.powf(q),
                        PenaltySpec::ExactRank { .. } => unreachable!(),
                    };
                    0.5 * (e - sigma) * (e - sigma) + g
                };
                let mut grid_best = f64::INFINITY;
                for i in 0..=20_000 {
                    let e = sigma * i as f64 / 20_000.0;
                    grid_best = grid_best.min(obj(e));
                }
                assert!(
                    obj(eta) <= grid_best + 1e-6,
                    "{spec:?} sigma={sigma}: prox {} vs grid {grid_best}",
                    obj(eta)
                );
            }
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(PenaltySpec::gdp(-1.0, 1.0).validate().is_err());
        assert!(PenaltySpec::gdp(1.0, 0.0).validate().is_err());
        assert!(PenaltySpec::scad(1.0, 2.0).validate().is_err());
        assert!(PenaltySpec::lq(1.0, 0.0).validate().is_err());
        assert!(PenaltySpec::lq(1.0, 1.1).validate().is_err());
        assert!(PenaltySpec::exact_rank(0).validate().is_ok());
    }
}
