//! Composite-null design: when only bounds on the noise and signal powers
//! are known, pick a Gaussian reference law `P̂₀ = N(0, Γ²)` and a drift
//! offset `υλ` that minimise the worst-case asymptotic Bayes risk.
//!
//! Costs of wrong decisions are normalised to one.

use serde::Serialize;
use thiserror::Error;

use crate::detection::{DetectionError, LocalNodeParams};
use crate::dist::{kl_divergence, Dist, DistError};
use crate::numerics::{bisect, NumericsError, ROOT_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompositeError {
    #[error("invalid power bounds: {0}")]
    InvalidBounds(String),
    #[error("noise power bounds coincide")]
    DegenerateBounds,
    #[error("infeasible design: {0}")]
    InfeasibleDesign(String),
    #[error("infeasible drift: {0}")]
    InfeasibleDrift(String),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
}

/// Bounds on the noise power and the signal power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerBounds {
    pub noise_var_lo: f64,
    pub noise_var_hi: f64,
    pub signal_var_lo: f64,
    pub signal_var_hi: f64,
}

impl PowerBounds {
    pub fn new(noise_var_lo: f64, noise_var_hi: f64, signal_var_lo: f64, signal_var_hi: f64) -> Result<Self, CompositeError> {
        let pb = Self {
            noise_var_lo,
            noise_var_hi,
            signal_var_lo,
            signal_var_hi,
        };
        pb.validate().map(|_| pb)
    }

    pub fn validate(&self) -> Result<(), CompositeError> {
        let all_finite = [self.noise_var_lo, self.noise_var_hi, self.signal_var_lo, self.signal_var_hi]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite || !(self.noise_var_lo > 0.0) || !(self.signal_var_lo > 0.0) {
            return Err(CompositeError::InvalidBounds("powers must be positive and finite".into()));
        }
        if !(self.noise_var_hi > self.noise_var_lo) {
            return Err(CompositeError::InvalidBounds("noise_var_hi must exceed noise_var_lo".into()));
        }
        if !(self.signal_var_hi >= self.signal_var_lo) {
            return Err(CompositeError::InvalidBounds("signal_var_hi must be at least signal_var_lo".into()));
        }
        Ok(())
    }
}

/// `f(v) = ½ ln(v0/v) + ½(v/v0 - 1)`: the H0-class divergence measure at
/// variance `v` around the centre `v0`.
pub fn f_center(v: f64, v0: f64) -> f64 {
    0.5 * (v0 / v).ln() + 0.5 * (v / v0 - 1.0)
}

/// Centre variance `σ₀²` equalising `f` at the two noise bounds: the
/// logarithmic mean of the bounds.
pub fn center_sigma0(pb: &PowerBounds) -> Result<f64, CompositeError> {
    let (lo, hi) = (pb.noise_var_lo, pb.noise_var_hi);
    if !(lo > 0.0 && hi.is_finite()) {
        return Err(CompositeError::InvalidBounds("powers must be positive and finite".into()));
    }
    if hi == lo {
        return Err(CompositeError::DegenerateBounds);
    }
    let d = hi - lo;
    Ok(d / (d / lo).ln_1p())
}

/// [`center_sigma0`] by bisection on `f(lo) = f(hi)`.
pub fn center_sigma0_by_bisection(pb: &PowerBounds) -> Result<f64, CompositeError> {
    let (lo, hi) = (pb.noise_var_lo, pb.noise_var_hi);
    if hi == lo {
        return Err(CompositeError::DegenerateBounds);
    }
    let g = |v0: f64| f_center(lo, v0) - f_center(hi, v0);
    let tol = ROOT_TOL * lo.min(1.0) * 1e-3;
    Ok(bisect(g, lo.min(hi), lo.max(hi), tol)?)
}

/// `(γλ, λ)`: `f` at the noise bounds and at the weakest signal-plus-noise
/// power.
pub fn class_params(pb: &PowerBounds) -> Result<(f64, f64), CompositeError> {
    let v0 = center_sigma0(pb)?;
    Ok((
        f_center(pb.noise_var_lo, v0),
        f_center(pb.noise_var_lo + pb.signal_var_lo, v0),
    ))
}

/// Worst-case risk as a function of `x = 1/Γ²` and `y = υλ`.
pub fn g_risk(a_w: f64, b_w: f64, a: f64, b: f64, x: f64, y: f64) -> f64 {
    a_w / (y + 0.5 - 0.5 * a * x) + b_w / (0.5 * b * x - y - 0.5)
}

/// Minimiser of [`g_risk`] over `y`.
pub fn y_opt(a_w: f64, b_w: f64, a: f64, b: f64, x: f64) -> f64 {
    let (sa, sb) = (a_w.sqrt(), b_w.sqrt());
    0.5 * (sa * (b * x - 1.0) + sb * (a * x - 1.0)) / (sa + sb)
}

/// Per-hypothesis values, indexed by `Hypothesis::index`.
pub type PerHypothesis = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositeDesign {
    pub sigma0_sq: f64,
    pub gamma_lambda: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub gamma_hat_sq: f64,
    pub x: f64,
    pub y_opt: f64,
    pub upsilon: f64,
    pub a: f64,
    pub b: f64,
    #[serde(rename = "A")]
    pub weight_a: f64,
    #[serde(rename = "B")]
    pub weight_b: f64,
    pub warnings: Vec<String>,
}

impl CompositeDesign {
    /// The two worst-case drift denominators of `g(x, y_opt)`.
    pub fn denominators(&self) -> (f64, f64) {
        (
            self.y_opt + 0.5 - 0.5 * self.a * self.x,
            0.5 * self.b * self.x - self.y_opt - 0.5,
        )
    }

    pub fn reference_law(&self) -> Dist {
        Dist::gaussian(0.0, self.gamma_hat_sq).expect("design variance is positive")
    }
}

fn risk_weights(prior_h0: f64, l: usize, theta: PerHypothesis, delta_a: PerHypothesis) -> (f64, f64) {
    let lf = l as f64;
    (
        prior_h0 / lf * (1.0 - theta[0] / delta_a[0]),
        (1.0 - prior_h0) / lf * (1.0 + theta[1] / delta_a[1]),
    )
}

/// Minimax design with `Γ²` at the midpoint of the noise bounds.
pub fn optimize(
    pb: &PowerBounds,
    prior_h0: f64,
    l: usize,
    theta: PerHypothesis,
    delta_a: PerHypothesis,
) -> Result<CompositeDesign, CompositeError> {
    optimize_with_x(pb, prior_h0, l, theta, delta_a, None)
}

/// Minimax design; `x_override` replaces the default `x = 1/Γ²`.
pub fn optimize_with_x(
    pb: &PowerBounds,
    prior_h0: f64,
    l: usize,
    theta: PerHypothesis,
    delta_a: PerHypothesis,
    x_override: Option<f64>,
) -> Result<CompositeDesign, CompositeError> {
    pb.validate()?;
    if !(prior_h0 > 0.0 && prior_h0 < 1.0) {
        return Err(CompositeError::InfeasibleDesign(format!("prior_h0 must lie in (0, 1), got {prior_h0}")));
    }
    if l == 0 {
        return Err(CompositeError::InfeasibleDesign("at least one node is required".into()));
    }
    let sigma0_sq = center_sigma0(pb)?;
    let (gamma_lambda, lambda) = class_params(pb)?;
    let gamma = gamma_lambda / lambda;
    let mut warnings = Vec::new();
    if !(0.0..1.0).contains(&gamma) {
        warnings.push(format!("gamma = {gamma} is outside [0, 1): the H0 and H1 classes overlap"));
    }

    let (weight_a, weight_b) = risk_weights(prior_h0, l, theta, delta_a);
    if !(weight_a > 0.0 && weight_b > 0.0) {
        return Err(CompositeError::InfeasibleDesign(format!(
            "risk weights must be positive, got A = {weight_a}, B = {weight_b}"
        )));
    }
    let a = pb.noise_var_hi;
    let b = pb.noise_var_lo + pb.signal_var_lo;
    let x = match x_override {
        Some(x) => x,
        None => 2.0 / (pb.noise_var_lo + pb.noise_var_hi),
    };
    if !(x > 1.0 / pb.noise_var_hi && x < 1.0 / pb.noise_var_lo) {
        return Err(CompositeError::InfeasibleDesign(format!(
            "x = {x} must lie in (1/{}, 1/{})",
            pb.noise_var_hi, pb.noise_var_lo
        )));
    }
    let y = y_opt(weight_a, weight_b, a, b, x);
    let design = CompositeDesign {
        sigma0_sq,
        gamma_lambda,
        lambda,
        gamma,
        gamma_hat_sq: 1.0 / x,
        x,
        y_opt: y,
        upsilon: y / lambda,
        a,
        b,
        weight_a,
        weight_b,
        warnings,
    };
    let (d0, d1) = design.denominators();
    if !(d0 > 0.0 && d1 > 0.0) {
        return Err(CompositeError::InfeasibleDesign(format!(
            "worst-case drifts {d0} (H0) and {d1} (H1) must both be positive"
        )));
    }
    Ok(design)
}

/// Right side of the asymptotic Bayes-risk bound, normalised by
/// `c|ln c|`, for the actual laws `p0_actual`, `p1_actual`.
pub fn bayes_risk_bound(
    design: &CompositeDesign,
    p0_actual: &Dist,
    p1_actual: &Dist,
    prior_h0: f64,
    l: usize,
    theta: PerHypothesis,
    delta_a: PerHypothesis,
) -> Result<f64, CompositeError> {
    let p_hat = design.reference_law();
    let h_hat = p_hat.entropy();
    let d0 = design.y_opt - (kl_divergence(p0_actual, &p_hat)? + p0_actual.entropy() - h_hat);
    let d1 = kl_divergence(p1_actual, &p_hat)? + p1_actual.entropy() - h_hat - design.y_opt;
    if !(d0 > 0.0) {
        return Err(CompositeError::InfeasibleDrift(format!("H0 drift magnitude {d0} is not positive")));
    }
    if !(d1 > 0.0) {
        return Err(CompositeError::InfeasibleDrift(format!("H1 drift {d1} is not positive")));
    }
    let (wa, wb) = risk_weights(prior_h0, l, theta, delta_a);
    let p1 = 1.0 - prior_h0;
    Ok(wa / d0 + wb / d1 - prior_h0 / delta_a[0] + p1 / delta_a[1])
}

/// `(P̂₀, per-step offset h(P̂₀) + υλ)` of the generalised detector.
pub fn composite_detector_params(design: &CompositeDesign) -> (Dist, f64) {
    let p = design.reference_law();
    (p, p.entropy() + design.y_opt)
}

/// A node running the generalised statistic: the reference law is `P̂₀`
/// and the `λ/2` slot carries `υλ`.
pub fn composite_node(
    design: &CompositeDesign,
    log_alpha: f64,
    log_beta: f64,
    b0: f64,
    b1: f64,
) -> Result<LocalNodeParams, CompositeError> {
    Ok(LocalNodeParams::new(
        design.reference_law(),
        2.0 * design.y_opt,
        log_alpha,
        log_beta,
        b0,
        b1,
    )?)
}

/// The unoptimised detector for the same class: reference `N(0, σ₀²)` and
/// offset `λ/2` with the class `λ`.
pub fn baseline_node(
    design: &CompositeDesign,
    log_alpha: f64,
    log_beta: f64,
    b0: f64,
    b1: f64,
) -> Result<LocalNodeParams, CompositeError> {
    Ok(LocalNodeParams::new(
        Dist::gaussian(0.0, design.sigma0_sq)?,
        design.lambda,
        log_alpha,
        log_beta,
        b0,
        b1,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use proptest::prelude::*;

    const TH: PerHypothesis = [2.0, 2.0];
    const DA: PerHypothesis = [-2.0, 2.0];

    fn pb() -> PowerBounds {
        PowerBounds::new(0.5, 2.0, 3.0, 3.0).unwrap()
    }

    #[test]
    fn log_mean_examples() {
        let p = PowerBounds::new(1.0, 4.0, 4.0, 4.0).unwrap();
        let c = center_sigma0(&p).unwrap();
        assert!((c - 3.0 / 4f64.ln()).abs() < 1e-14);
        assert!((c - 2.164_042_561_333_445).abs() < 1e-12);
        let b = center_sigma0_by_bisection(&p).unwrap();
        assert!((b - c).abs() < 1e-10);
        assert!((f_center(1.0, c) - f_center(4.0, c)).abs() < 1e-10);
    }

    #[test]
    fn log_mean_limit() {
        let p = PowerBounds::new(2.0, 2.0 * (1.0 + 1e-6), 1.0, 1.0).unwrap();
        let c = center_sigma0(&p).unwrap();
        assert!(c > 2.0 && c < 2.0 * (1.0 + 1e-6));
        assert!((c - 2.0).abs() < 2e-6);
        let mut q = p;
        q.noise_var_hi = q.noise_var_lo;
        assert_eq!(center_sigma0(&q), Err(CompositeError::DegenerateBounds));
    }

    #[test]
    fn class_params_example() {
        let p = PowerBounds::new(1.0, 4.0, 4.0, 4.0).unwrap();
        let (gl, l) = class_params(&p).unwrap();
        let v0 = 3.0 / 4f64.ln();
        let direct = 5f64.sqrt().recip().ln() + v0.sqrt().ln() + 0.5 * (5.0 / v0 - 1.0);
        assert!((l - direct).abs() < 1e-12);
        assert!((gl - f_center(4.0, v0)).abs() < 1e-12);
        assert!(gl / l < 1.0);
    }

    #[test]
    fn f_is_nonnegative_with_zero_at_centre() {
        let v0 = 1.7;
        assert_eq!(f_center(v0, v0), 0.0);
        for i in 1..2000 {
            assert!(f_center(i as f64 * 0.005, v0) >= 0.0);
        }
    }

    #[test]
    fn gamma_below_one_when_classes_separate() {
        for i in 0..50 {
            let lo = 0.2 + i as f64 * 0.1;
            let hi = lo * 3.0;
            let s = hi - lo + 0.01 + i as f64 * 0.05;
            let (gl, l) = class_params(&PowerBounds::new(lo, hi, s, s).unwrap()).unwrap();
            assert!(gl / l < 1.0);
        }
    }

    #[test]
    fn worked_design() {
        let d = optimize(&pb(), 0.5, 5, TH, DA).unwrap();
        assert!((d.y_opt - 0.6).abs() < 1e-12);
        let (d0, d1) = d.denominators();
        assert!((d0 - 0.3).abs() < 1e-12 && (d1 - 0.3).abs() < 1e-12);
        assert!((d.gamma_hat_sq - 1.25).abs() < 1e-15);
        assert!((d.sigma0_sq - 1.5 / 4f64.ln()).abs() < 1e-12);
        assert!(d.warnings.is_empty());
        assert!((d.upsilon * d.lambda - d.y_opt).abs() < 1e-15);
    }

    #[test]
    fn equal_weights_collapse() {
        let (a, b, x) = (2.0, 3.5, 0.8);
        assert!((y_opt(0.3, 0.3, a, b, x) - ((a + b) * x - 2.0) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn infeasible_designs_are_reported() {
        // weakest H1 power below the strongest noise: worst-case drifts clash
        let p = PowerBounds::new(0.5, 2.0, 1.0, 1.0).unwrap();
        assert!(matches!(optimize(&p, 0.5, 5, TH, DA), Err(CompositeError::InfeasibleDesign(_))));
        assert!(matches!(
            optimize_with_x(&pb(), 0.5, 5, TH, DA, Some(3.0)),
            Err(CompositeError::InfeasibleDesign(_))
        ));
        assert!(optimize(&pb(), 0.5, 5, TH, [2.0, 2.0]).is_err());
    }

    #[test]
    fn overlapping_classes_warn() {
        let p = PowerBounds::new(0.5, 2.0, 1.0, 1.0).unwrap();
        let (gl, l) = class_params(&p).unwrap();
        assert!(gl / l > 1.0);
    }

    proptest! {
        #[test]
        fn y_opt_beats_grid(
            wa in 0.01f64..2.0, wb in 0.01f64..2.0,
            a in 0.5f64..3.0, extra in 0.2f64..4.0, t in 0.05f64..0.95,
        ) {
            let b = a + extra;
            // x strictly inside (1/b, 1/a) so a feasible y exists
            let x = (1.0 / b) + t * (1.0 / a - 1.0 / b);
            let y = y_opt(wa, wb, a, b, x);
            let lo = 0.5 * a * x - 0.5;
            let hi = 0.5 * b * x - 0.5;
            prop_assert!(y > lo && y < hi);
            let gy = g_risk(wa, wb, a, b, x, y);
            let mut z = lo + 1e-4;
            while z < hi {
                prop_assert!(gy <= g_risk(wa, wb, a, b, x, z) + 1e-8);
                z += 1e-4;
            }
        }
    }

    #[test]
    fn grid_minimum_near_y_opt() {
        let d = optimize(&pb(), 0.5, 5, TH, [-2.5, 1.5]).unwrap();
        let g = |y: f64| g_risk(d.weight_a, d.weight_b, d.a, d.b, d.x, y);
        let lo = 0.5 * d.a * d.x - 0.5;
        let hi = 0.5 * d.b * d.x - 0.5;
        let mut best = (lo, f64::INFINITY);
        let mut y = lo + 1e-4;
        while y < hi {
            if g(y) < best.1 {
                best = (y, g(y));
            }
            y += 1e-4;
        }
        assert!((best.0 - d.y_opt).abs() <= 1e-4);
    }

    #[test]
    fn risk_bound_terms() {
        let d = optimize(&pb(), 0.5, 5, TH, DA).unwrap();
        let p_hat = d.reference_law();
        let p1 = Dist::gaussian(0.0, d.b).unwrap();
        let r = bayes_risk_bound(&d, &p_hat, &p1, 0.5, 5, TH, DA).unwrap();
        // P0' = P̂0 gives H0 drift υλ; worst-case P1' gives ½(b x - 1) - υλ
        let expect = d.weight_a / d.y_opt + d.weight_b / (0.5 * (d.b * d.x - 1.0) - d.y_opt) - 0.5 / DA[0] + 0.5 / DA[1];
        assert!((r - expect).abs() < 1e-9, "{r} {expect}");
        let r2 = bayes_risk_bound(&d, &p_hat, &p1, 0.7, 5, TH, DA).unwrap();
        assert!(r2 != r);
        let bad = Dist::gaussian(0.0, 1.0).unwrap();
        assert!(matches!(
            bayes_risk_bound(&d, &p_hat, &bad, 0.5, 5, TH, DA),
            Err(CompositeError::InfeasibleDrift(_))
        ));
    }

    #[test]
    fn detector_params() {
        let d = optimize(&pb(), 0.5, 5, TH, DA).unwrap();
        let (p, off) = composite_detector_params(&d);
        assert_eq!(off, p.entropy() + d.y_opt);
        let node = composite_node(&d, 10.0, 10.0, -1.0, 1.0).unwrap();
        assert_eq!(node.lambda() / 2.0, d.y_opt);
    }

    #[test]
    fn reduction_to_plain_detector() {
        // υλ = λ/2 and Γ² = Var(P0) recover the original increments exactly
        let lambda = 1.0;
        let plain = LocalNodeParams::new(Dist::gaussian(0.0, 1.0).unwrap(), lambda, 10.0, 10.0, -1.0, 1.0).unwrap();
        let mut d = optimize(&pb(), 0.5, 5, TH, DA).unwrap();
        d.gamma_hat_sq = 1.0;
        d.x = 1.0;
        d.y_opt = lambda / 2.0;
        let gen = composite_node(&d, 10.0, 10.0, -1.0, 1.0).unwrap();
        let s = Dist::gaussian(0.0, 5.0).unwrap().sampler();
        let mut rng = StreamKey::new(1, 0, 0).rng();
        for _ in 0..1000 {
            let x = s.sample(&mut rng);
            assert_eq!(plain.increment(x).to_bits(), gen.increment(x).to_bits());
        }
    }

    #[test]
    fn generalised_h0_drift() {
        let d = optimize(&pb(), 0.5, 5, TH, DA).unwrap();
        let node = composite_node(&d, 10.0, 10.0, -1.0, 1.0).unwrap();
        let p0 = Dist::gaussian(0.0, 1.0).unwrap();
        let p_hat = d.reference_law();
        let drift = kl_divergence(&p0, &p_hat).unwrap() + p0.entropy() - p_hat.entropy() - d.y_opt;
        let s = p0.sampler();
        let mut rng = StreamKey::new(2, 0, 0).rng();
        let n = 100_000;
        let v: Vec<f64> = (0..n).map(|_| node.increment(s.sample(&mut rng))).collect();
        let m = v.iter().sum::<f64>() / n as f64;
        let se = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64 / n as f64).sqrt();
        assert!((m - drift).abs() < 3.0 * se, "{m} {drift} {se}");
    }
}
