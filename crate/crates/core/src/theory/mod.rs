//! Analytical approximations and bounds for the detection scheme:
//! single-node error exponents and delay slopes, Gaussian approximations of
//! node stopping times, the fusion-center delay and error-probability
//! approximations, and the asymptotic delay and error conditions.

mod asymptotic;
mod fusion;
mod report;

pub use asymptotic::{
    asymptotic_delay_bound, asymptotic_error_condition, asymptotic_scenario, chernoff_rate,
    RateFunctions,
};
pub use fusion::{
    edd_approx, error_prob_approx, error_prob_approx_mc, fusion_drift_profile, order_stat_means,
    ErrorBounds, FusionDriftProfile, MAX_ORDER_STAT_NODES, SERIES_TAIL_CUTOFF,
};
pub use report::{theory_report, HypothesisReport, TheoryReport};

use serde::Serialize;
use thiserror::Error;

use crate::detection::{Hypothesis, LocalNodeParams};
use crate::dist::{kl_divergence, Dist, DistError};
use crate::montecarlo::ScenarioError;
use crate::numerics::{bisect, NumericsError, ROOT_TOL};

/// Residual allowed in moment equations at the returned root.
pub const MOMENT_RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TheoryError {
    #[error("moment equation has no positive root: {0}")]
    NoRoot(String),
    #[error("drift {drift} has the wrong sign for {hypothesis}")]
    NonpositiveDrift { drift: f64, hypothesis: &'static str },
    #[error("order statistics support at most {max} nodes, got {got}")]
    TooManyNodes { got: usize, max: usize },
    #[error("no fusion drift reaches the threshold")]
    NoFavorableDrift,
    #[error("error-probability series needs zero-mean Gaussian receiver noise and mu1 = -mu0")]
    AsymmetricNoise,
    #[error("eta = {eta} is outside (0, {rate})")]
    EtaOutOfRange { eta: f64, rate: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Mean and variance of a node's per-step increment under one hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftStats {
    pub mean: f64,
    pub variance: f64,
    pub hypothesis: Hypothesis,
    pub node_index: usize,
}

/// Exact mean and variance of `node.increment(X)` for `X ~ law`.
pub fn increment_moments(node: &LocalNodeParams, law: &Dist) -> Result<(f64, f64), TheoryError> {
    moments(node.null_law(), node.lambda(), law)
}

/// Mean and variance of `V = -ln p0(X) - H(p0) - λ/2` for `X ~ law`.
fn moments(p0: &Dist, lambda: f64, law: &Dist) -> Result<(f64, f64), TheoryError> {
    if let (Dist::Gaussian { mean: m0, variance: v0 }, Dist::Gaussian { mean, variance }) = (*p0, *law) {
        // V = (x - m0)²/(2 v0) - 1/2 - λ/2
        let d2 = (mean - m0).powi(2);
        let m = (variance + d2) / (2.0 * v0) - 0.5 - lambda / 2.0;
        let v = (2.0 * variance * variance + 4.0 * variance * d2) / (4.0 * v0 * v0);
        return Ok((m, v));
    }
    let h0 = p0.entropy();
    let inc = |x: f64| -p0.log_density(x) - h0 - lambda / 2.0;
    let m = law.expect(inc)?;
    let v = law.expect(|x| (inc(x) - m).powi(2))?;
    Ok((m, v))
}

pub fn drift_stats(
    node: &LocalNodeParams,
    law: &Dist,
    hypothesis: Hypothesis,
    node_index: usize,
) -> Result<DriftStats, TheoryError> {
    let (mean, variance) = increment_moments(node, law)?;
    Ok(DriftStats {
        mean,
        variance,
        hypothesis,
        node_index,
    })
}

/// `ln E[exp(t·V)]` for the increment `V = -ln p0(X) - H(p0) - λ/2`,
/// `X ~ p_true`. Infinite when the expectation diverges.
pub fn increment_log_mgf(p_true: &Dist, p0: &Dist, lambda: f64, t: f64) -> Result<f64, TheoryError> {
    if t == 0.0 {
        return Ok(0.0);
    }
    if let (Dist::Gaussian { mean: m0, variance: v0 }, Dist::Gaussian { mean, variance }) = (*p0, *p_true) {
        let r = 1.0 - t * variance / v0;
        if r <= 0.0 {
            return Ok(f64::INFINITY);
        }
        let d2 = (mean - m0).powi(2);
        return Ok(-0.5 * r.ln() + t * d2 / (2.0 * v0 * r) - t * (1.0 + lambda) / 2.0);
    }
    let h0 = p0.entropy();
    match p_true.expect_exp(|x| t * (-p0.log_density(x) - h0 - lambda / 2.0)) {
        Ok(m) => Ok(m.ln()),
        Err(DistError::Divergent) => Ok(f64::INFINITY),
        Err(e) => Err(e.into()),
    }
}

fn sign_for(hyp: Hypothesis) -> f64 {
    match hyp {
        Hypothesis::H0 => 1.0,
        Hypothesis::H1 => -1.0,
    }
}

/// Positive root of the single-node moment equation: `E₀[e^{sV}] = 1`
/// under H0 and `E₁[e^{-sV}] = 1` under H1, with `V` the node increment
/// and slack `ε = 0`.
pub fn error_exponent(p_true: &Dist, p0: &Dist, lambda: f64, hyp: Hypothesis) -> Result<f64, TheoryError> {
    let sg = sign_for(hyp);
    let phi = |s: f64| increment_log_mgf(p_true, p0, lambda, sg * s);
    let drift = moments(p0, lambda, p_true)?.0;
    if !(sg * drift < 0.0) {
        return Err(TheoryError::NoRoot(format!(
            "drift {drift} does not point toward the {} threshold",
            hyp.label()
        )));
    }

    // find a point with φ < 0 near zero, then march right to φ ≥ 0
    let mut lo = 1.0 / 64.0;
    while phi(lo)? >= 0.0 {
        lo /= 2.0;
        if lo < 1e-12 {
            return Err(TheoryError::NoRoot("moment function never dips below one".into()));
        }
    }
    let mut hi = lo;
    loop {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(TheoryError::NoRoot("moment function stays below one".into()));
        }
        if phi(hi)? >= 0.0 {
            break;
        }
        lo = hi;
    }
    let f = |s: f64| phi(s).unwrap_or(f64::NAN);
    let s = bisect(f, lo, hi, ROOT_TOL)?;
    let residual = phi(s)?.exp_m1().abs();
    if !(residual < MOMENT_RESIDUAL_TOL) {
        return Err(TheoryError::NoRoot(format!(
            "moment function jumps past one near s = {s} (residual {residual})"
        )));
    }
    Ok(s)
}

/// Limit of `N / |threshold|` for a single node: `2/λ` under H0 and
/// `1/(D(P1‖P0) + H(P1) - H(P0) - λ/2)` under H1.
pub fn delay_slope(p_true: &Dist, p0: &Dist, lambda: f64, hyp: Hypothesis) -> Result<f64, TheoryError> {
    match hyp {
        Hypothesis::H0 => {
            if !(lambda > 0.0) {
                return Err(TheoryError::NonpositiveDrift {
                    drift: -lambda / 2.0,
                    hypothesis: "H0",
                });
            }
            Ok(2.0 / lambda)
        }
        Hypothesis::H1 => {
            let d = h1_drift(p_true, p0, lambda)?;
            if !(d > 0.0) {
                return Err(TheoryError::NonpositiveDrift {
                    drift: d,
                    hypothesis: "H1",
                });
            }
            Ok(1.0 / d)
        }
    }
}

/// `D(P1‖P0) + H(P1) - H(P0) - λ/2`.
pub fn h1_drift(p1: &Dist, p0: &Dist, lambda: f64) -> Result<f64, TheoryError> {
    Ok(kl_divergence(p1, p0)? + p1.entropy() - p0.entropy() - lambda / 2.0)
}

/// Gaussian approximation of a node's stopping time under `hyp` when it
/// observes `law`: mean `T/|δ|`, variance `T·ρ²/|δ|³`, with `T` the
/// threshold magnitude on the side `hyp` drifts toward.
pub fn node_stopping_gaussian(
    node: &LocalNodeParams,
    law: &Dist,
    hyp: Hypothesis,
) -> Result<(f64, f64), TheoryError> {
    let (delta, rho2) = increment_moments(node, law)?;
    stopping_from_moments(node, delta, rho2, hyp)
}

pub(crate) fn stopping_from_moments(
    node: &LocalNodeParams,
    delta: f64,
    rho2: f64,
    hyp: Hypothesis,
) -> Result<(f64, f64), TheoryError> {
    let (t, ok) = match hyp {
        Hypothesis::H0 => (node.log_beta(), delta < 0.0),
        Hypothesis::H1 => (node.log_alpha(), delta > 0.0),
    };
    if !ok {
        return Err(TheoryError::NonpositiveDrift {
            drift: delta,
            hypothesis: hyp.label(),
        });
    }
    let a = delta.abs();
    Ok((t / a, t * rho2 / (a * a * a)))
}
