use serde::Serialize;

use super::fusion::mean_llr;
use super::{increment_log_mgf, increment_moments, TheoryError};
use crate::detection::{fusion_llr, FusionParams, Hypothesis};
use crate::dist::{Dist, DistError};
use crate::montecarlo::Scenario;
use crate::numerics::{find_root_right, golden_min, MIN_TOL};

const SCAN_POINTS: usize = 64;

/// Rate-function ingredients of the fusion statistic under one hypothesis.
///
/// `ξ*` is the fusion LLR increment when every node transmits the wrong
/// level; `θ = |E ξ*|`. `Δ(𝒜)` is the signed drift when every node
/// transmits the correct level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFunctions {
    pub hypothesis: Hypothesis,
    pub theta: f64,
    pub delta_a: f64,
    /// `E|ξ*|`, the zero of [`RateFunctions::legendre`]
    pub mean_abs: f64,
    /// essential supremum of `|ξ*|`; `None` when unbounded
    pub ess_sup: Option<f64>,
    #[serde(skip)]
    fusion: FusionParams,
    #[serde(skip)]
    wrong_sum: f64,
}

impl RateFunctions {
    pub fn new(sc: &Scenario, hyp: Hypothesis) -> Result<Self, TheoryError> {
        let fusion = sc.fusion().clone();
        let wrong_sum: f64 = sc.nodes().iter().map(|n| n.level(hyp.other())).sum();
        let right_sum: f64 = sc.nodes().iter().map(|n| n.level(hyp)).sum();
        let theta = mean_llr(&fusion, wrong_sum)?.abs();
        let delta_a = mean_llr(&fusion, right_sum)?;
        let xi = |z: f64| fusion_llr(&fusion, wrong_sum + z).abs();
        let mean_abs = match fusion.noise_law {
            Dist::Gaussian { variance, .. } => {
                // ξ* is Gaussian: folded-normal mean
                let m = mean_llr(&fusion, wrong_sum)?;
                let s = (fusion.mu1 - fusion.mu0).abs() / variance.sqrt();
                s * (2.0 / std::f64::consts::PI).sqrt() * (-m * m / (2.0 * s * s)).exp()
                    + m * (1.0 - 2.0 * crate::numerics::norm_cdf(-m / s))
            }
            noise => noise.expect(xi)?,
        };
        let ess_sup = match fusion.noise_law {
            Dist::Binomial { trials, .. } => {
                let m = (0..=trials).map(|k| xi(k as f64)).fold(0.0, f64::max);
                m.is_finite().then_some(m)
            }
            _ => None,
        };
        Ok(Self {
            hypothesis: hyp,
            theta,
            delta_a,
            mean_abs,
            ess_sup,
            fusion,
            wrong_sum,
        })
    }

    /// `ln E[e^{t|ξ*|}]`; infinite where the MGF diverges.
    pub fn log_mgf(&self, t: f64) -> Result<f64, TheoryError> {
        if t == 0.0 {
            return Ok(0.0);
        }
        let (f, c) = (&self.fusion, self.wrong_sum);
        match f.noise_law.expect_exp(|z| t * fusion_llr(f, c + z).abs()) {
            Ok(m) => Ok(m.ln()),
            Err(DistError::Divergent) => Ok(f64::INFINITY),
            Err(e) => Err(e.into()),
        }
    }

    /// `Λ(a) = sup_t [a t - ln E e^{t|ξ*|}]`.
    pub fn legendre(&self, a: f64) -> Result<f64, TheoryError> {
        let sign = if a >= self.mean_abs { 1.0 } else { -1.0 };
        let neg = |u: f64| match self.log_mgf(sign * u) {
            Ok(v) => v - a * sign * u,
            Err(_) => f64::NAN,
        };
        // the objective is concave in t: widen until it turns down
        let mut hi = 1.0;
        while hi < 1e6 && neg(hi) < neg(hi / 2.0) {
            hi *= 2.0;
        }
        let (_, v) = golden_min(neg, 0.0, hi, MIN_TOL);
        Ok((-v).max(0.0))
    }

    /// Inverse of `Λ` on its increasing branch `a > E|ξ*|`.
    pub fn legendre_inverse(&self, eta: f64) -> Result<f64, TheoryError> {
        if !(eta > 0.0) {
            return Err(TheoryError::Invalid(format!("eta must be positive, got {eta}")));
        }
        let step = self.mean_abs.max(1e-3);
        let f = |a: f64| self.legendre(a).map(|v| v - eta).unwrap_or(f64::NAN);
        Ok(find_root_right(f, self.mean_abs, step, 1e9)?)
    }

    /// `s(η)`: `η/α⁺` when `η ≥ Λ(α⁺)`, otherwise `η/Λ⁻¹(η)`.
    pub fn s_value(&self, eta: f64) -> Result<f64, TheoryError> {
        if let Some(sup) = self.ess_sup {
            if eta >= self.legendre(sup)? {
                return Ok(eta / sup);
            }
        }
        Ok(eta / self.legendre_inverse(eta)?)
    }
}

/// Node-level Chernoff rate `-ln inf_{t≥0} E[e^{-tU}]`, with `U` the node
/// increment oriented toward the correct threshold (`U = V` under H1,
/// `U = -V` under H0).
pub fn chernoff_rate(p_true: &Dist, p0: &Dist, lambda: f64, hyp: Hypothesis) -> Result<f64, TheoryError> {
    let sign = match hyp {
        Hypothesis::H0 => 1.0,
        Hypothesis::H1 => -1.0,
    };
    let phi = |t: f64| increment_log_mgf(p_true, p0, lambda, sign * t).unwrap_or(f64::NAN);
    let mut hi = 0.125;
    while hi < 1e3 {
        let v = phi(hi);
        if !(v < 0.0) {
            break;
        }
        hi *= 2.0;
    }
    let h = hi / SCAN_POINTS as f64;
    let best = (0..=SCAN_POINTS)
        .map(|i| (i, phi(i as f64 * h)))
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|p| p.0)
        .unwrap_or(0);
    let lo = best.saturating_sub(1) as f64 * h;
    let (_, v) = golden_min(phi, lo, (best + 1) as f64 * h, MIN_TOL);
    Ok((-v.min(0.0)).max(0.0))
}

/// `R_i`: the smallest node Chernoff rate.
fn min_chernoff_rate(sc: &Scenario, hyp: Hypothesis) -> Result<f64, TheoryError> {
    let mut r = f64::INFINITY;
    for (l, node) in sc.nodes().iter().enumerate() {
        let law = sc.observation_law(l, hyp);
        r = r.min(chernoff_rate(law, node.null_law(), node.lambda(), hyp)?);
    }
    Ok(r)
}

fn total_drift(sc: &Scenario, hyp: Hypothesis) -> Result<f64, TheoryError> {
    match hyp {
        Hypothesis::H0 => Ok(sc.nodes().iter().map(|n| n.lambda() / 2.0).sum()),
        Hypothesis::H1 => {
            let mut d = 0.0;
            for (l, node) in sc.nodes().iter().enumerate() {
                d += increment_moments(node, sc.observation_law(l, Hypothesis::H1))?.0;
            }
            Ok(d)
        }
    }
}

/// Asymptotic bound on `N / |ln c|`: `1/D_tot + C/Δ(𝒜)` with
/// `C₀ = -(1 + θ₀/D⁰_tot)` and `C₁ = 1 + θ₁/D¹_tot`.
pub fn asymptotic_delay_bound(sc: &Scenario, hyp: Hypothesis) -> Result<f64, TheoryError> {
    let rf = RateFunctions::new(sc, hyp)?;
    let d = total_drift(sc, hyp)?;
    if !(d > 0.0) {
        return Err(TheoryError::NonpositiveDrift {
            drift: d,
            hypothesis: hyp.label(),
        });
    }
    if !(rf.delta_a.is_finite() && rf.delta_a != 0.0) {
        return Err(TheoryError::Invalid(format!("fusion drift {} is degenerate", rf.delta_a)));
    }
    let c = match hyp {
        Hypothesis::H0 => -(1.0 + rf.theta / d),
        Hypothesis::H1 => 1.0 + rf.theta / d,
    };
    Ok(1.0 / d + c / rf.delta_a)
}

/// Evaluates `s_i(η)` and whether `s_i(η) > 1`, for `0 < η < R_i`.
pub fn asymptotic_error_condition(sc: &Scenario, eta: f64, hyp: Hypothesis) -> Result<(f64, bool), TheoryError> {
    let rate = min_chernoff_rate(sc, hyp)?;
    if !(eta > 0.0 && eta < rate) {
        return Err(TheoryError::EtaOutOfRange { eta, rate });
    }
    let s = RateFunctions::new(sc, hyp)?.s_value(eta)?;
    Ok((s, s > 1.0))
}

/// The scenario with the thresholds the asymptotic analysis prescribes at
/// scale `|ln c|`: node `l` gets `-|ln c|/L` and `ρ_l|ln c|` with
/// `ρ_l = δ_{1,l}/D¹_tot`, the fusion center `±|ln c|`.
pub fn asymptotic_scenario(sc: &Scenario, scale: f64) -> Result<Scenario, TheoryError> {
    let l = sc.num_nodes() as f64;
    let d1 = total_drift(sc, Hypothesis::H1)?;
    let mut th = Vec::with_capacity(sc.num_nodes());
    for (i, node) in sc.nodes().iter().enumerate() {
        let delta = increment_moments(node, sc.observation_law(i, Hypothesis::H1))?.0;
        th.push((delta / d1 * scale, scale / l));
    }
    Ok(sc.with_per_node_thresholds(&th)?.with_fusion_thresholds(scale, scale)?)
}
