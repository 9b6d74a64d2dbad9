use serde::Serialize;

use super::{increment_moments, stopping_from_moments, TheoryError};
use crate::detection::{fusion_llr, FusionParams, Hypothesis};
use crate::dist::Dist;
use crate::montecarlo::Scenario;
use crate::numerics::{integrate, integrate_to_infinity, norm_cdf, norm_pdf, norm_sf};
use crate::rng::{StreamKey, NOISE_CHANNEL};

/// Largest node count accepted by [`order_stat_means`].
pub const MAX_ORDER_STAT_NODES: usize = 12;
/// The error-probability series stops once `P(t₁ > k)` falls below this.
pub const SERIES_TAIL_CUTOFF: f64 = 1e-6;

const ORDER_STAT_SPAN: f64 = 12.0;
const MAX_SERIES_TERMS: u64 = 10_000_000;

/// Expected order statistics `E[t_(1)] ≤ … ≤ E[t_(L)]` of independent
/// Gaussians with the given means and variances.
pub fn order_stat_means(means: &[f64], variances: &[f64]) -> Result<Vec<f64>, TheoryError> {
    let l = means.len();
    if l == 0 || variances.len() != l {
        return Err(TheoryError::Invalid("need one variance per mean".into()));
    }
    if l > MAX_ORDER_STAT_NODES {
        return Err(TheoryError::TooManyNodes {
            got: l,
            max: MAX_ORDER_STAT_NODES,
        });
    }
    if variances.iter().any(|&v| !(v > 0.0 && v.is_finite())) || means.iter().any(|m| !m.is_finite()) {
        return Err(TheoryError::Invalid("variances must be positive and finite".into()));
    }
    let sds: Vec<f64> = variances.iter().map(|v| v.sqrt()).collect();
    let lo = (0..l).map(|i| means[i] - ORDER_STAT_SPAN * sds[i]).fold(f64::INFINITY, f64::min);
    let hi = (0..l).map(|i| means[i] + ORDER_STAT_SPAN * sds[i]).fold(f64::NEG_INFINITY, f64::max);

    // counts[c] = P(exactly c of the variables are ≤ x)
    let below_counts = |x: f64| {
        let mut counts = vec![0.0; l + 1];
        counts[0] = 1.0;
        for i in 0..l {
            let p = norm_cdf((x - means[i]) / sds[i]);
            for c in (0..=i + 1).rev() {
                let stay = counts[c] * (1.0 - p);
                let moved = if c > 0 { counts[c - 1] * p } else { 0.0 };
                counts[c] = stay + moved;
            }
        }
        counts
    };
    (1..=l)
        .map(|k| {
            // E t_(k) = lo + ∫_lo^hi P(t_(k) > x) dx, and t_(k) > x iff fewer than k are below x
            let tail = integrate(|x| below_counts(x)[..k].iter().sum::<f64>(), lo, hi)?;
            Ok(lo + tail)
        })
        .collect()
}

/// Piecewise-constant mean drift of the fusion statistic as nodes decide.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusionDriftProfile {
    pub hypothesis: Hypothesis,
    /// `drifts[j]`: mean LLR increment while `j` nodes transmit, `j = 0..=L`
    pub drifts: Vec<f64>,
    /// `E[t_j]`, `j = 1..=L`
    pub change_means: Vec<f64>,
    /// `F̃_j`, `j = 0..=L`
    pub f_tilde: Vec<f64>,
}

impl FusionDriftProfile {
    /// `E[t_j]` with `E[t_0] = 0` and `E[t_{L+1}] = ∞`.
    pub fn change_time(&self, j: usize) -> f64 {
        match j {
            0 => 0.0,
            j if j <= self.change_means.len() => self.change_means[j - 1],
            _ => f64::INFINITY,
        }
    }

    /// Recomputes `F̃` from the drifts and change times.
    pub fn recompute_f_tilde(drifts: &[f64], change_means: &[f64]) -> Vec<f64> {
        let mut f = vec![0.0; drifts.len()];
        let mut prev = 0.0;
        for j in 1..drifts.len() {
            f[j] = f[j - 1] + drifts[j - 1] * (change_means[j - 1] - prev);
            prev = change_means[j - 1];
        }
        f
    }
}

/// Mean of `fusion_llr(c + Z)` for the receiver noise `Z`.
pub(crate) fn mean_llr(fusion: &FusionParams, c: f64) -> Result<f64, TheoryError> {
    if let Dist::Gaussian { variance, .. } = fusion.noise_law {
        let (a, b) = (c - fusion.mu0, c - fusion.mu1);
        return Ok((a * a - b * b) / (2.0 * variance));
    }
    Ok(fusion.noise_law.expect(|z| fusion_llr(fusion, c + z))?)
}

/// Gaussian stopping-time parameters of every node for a correct decision
/// under `hyp`.
pub(crate) fn node_stopping_params(sc: &Scenario, hyp: Hypothesis) -> Result<Vec<(f64, f64)>, TheoryError> {
    (0..sc.num_nodes())
        .map(|l| {
            let node = &sc.nodes()[l];
            let (d, r) = increment_moments(node, sc.observation_law(l, hyp))?;
            stopping_from_moments(node, d, r, hyp)
        })
        .collect()
}

/// Fusion drift profile under `hyp`, assuming nodes decide correctly in
/// order of their mean stopping times.
pub fn fusion_drift_profile(sc: &Scenario, hyp: Hypothesis) -> Result<FusionDriftProfile, TheoryError> {
    let params = node_stopping_params(sc, hyp)?;
    let mut order: Vec<usize> = (0..params.len()).collect();
    order.sort_by(|&a, &b| params[a].0.total_cmp(&params[b].0));

    let mut drifts = Vec::with_capacity(order.len() + 1);
    let mut c = 0.0;
    drifts.push(mean_llr(sc.fusion(), c)?);
    for &l in &order {
        c += sc.nodes()[l].level(hyp);
        drifts.push(mean_llr(sc.fusion(), c)?);
    }
    let means: Vec<f64> = params.iter().map(|p| p.0).collect();
    let vars: Vec<f64> = params.iter().map(|p| p.1).collect();
    let change_means = order_stat_means(&means, &vars)?;
    let f_tilde = FusionDriftProfile::recompute_f_tilde(&drifts, &change_means);
    Ok(FusionDriftProfile {
        hypothesis: hyp,
        drifts,
        change_means,
        f_tilde,
    })
}

/// Signed fusion threshold the statistic drifts toward under `hyp`.
fn target(fusion: &FusionParams, hyp: Hypothesis) -> f64 {
    match hyp {
        Hypothesis::H0 => -fusion.log_beta,
        Hypothesis::H1 => fusion.log_alpha,
    }
}

/// Approximate fusion-center detection delay: the time the mean drift path
/// first reaches the threshold.
pub fn edd_approx(sc: &Scenario, hyp: Hypothesis) -> Result<f64, TheoryError> {
    let p = fusion_drift_profile(sc, hyp)?;
    edd_from_profile(&p, target(sc.fusion(), hyp))
}

pub(crate) fn edd_from_profile(p: &FusionDriftProfile, target: f64) -> Result<f64, TheoryError> {
    for j in 0..p.drifts.len() {
        let d = p.drifts[j];
        if d * target <= 0.0 {
            continue;
        }
        let remaining = (target - p.f_tilde[j]) / d;
        let start = p.change_time(j);
        if remaining < p.change_time(j + 1) - start {
            return Ok(start + remaining);
        }
    }
    Err(TheoryError::NoFavorableDrift)
}

/// Lower and upper brackets on an error probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorBounds {
    pub lower: f64,
    pub upper: f64,
}

/// `P(t₁ > k)` for independent Gaussian node stopping times.
fn first_change_tail(params: &[(f64, f64)], k: f64) -> f64 {
    params
        .iter()
        .map(|&(m, v)| norm_sf((k - m) / v.sqrt()))
        .product()
}

/// Wrong-decision threshold magnitude under `hyp`.
fn error_threshold(fusion: &FusionParams, hyp: Hypothesis) -> f64 {
    match hyp {
        Hypothesis::H0 => fusion.log_alpha,
        Hypothesis::H1 => fusion.log_beta,
    }
}

/// Brackets on `P_FA` (under H0) or `P_MD` (under H1) from the event that
/// the fusion statistic crosses the wrong threshold before any node
/// decides. The density of the pre-decision statistic `F_{k-1}` is its CLT
/// Gaussian surrogate.
pub fn error_prob_approx(sc: &Scenario, hyp: Hypothesis) -> Result<ErrorBounds, TheoryError> {
    let fusion = sc.fusion();
    if !fusion.is_symmetric() {
        return Err(TheoryError::AsymmetricNoise);
    }
    let Dist::Gaussian { variance, .. } = fusion.noise_law else {
        return Err(TheoryError::AsymmetricNoise);
    };
    let params = node_stopping_params(sc, hyp)?;
    let t = error_threshold(fusion, hyp);
    // the silent-channel LLR is Gaussian with mean 0
    let sd_xi = (fusion.mu1 - fusion.mu0) / variance.sqrt();

    let (mut lower, mut upper) = (0.0, 0.0);
    for k in 1..=MAX_SERIES_TERMS {
        let tail = first_change_tail(&params, k as f64);
        if tail < SERIES_TAIL_CUTOFF {
            break;
        }
        let (inner, p_past) = if k == 1 {
            (norm_sf(t / sd_xi), 0.0)
        } else {
            let s = ((k - 1) as f64).sqrt() * sd_xi;
            let inner = integrate_to_infinity(|u| norm_sf(u / sd_xi) * norm_pdf((t - u) / s) / s, 0.0)?;
            (inner, norm_sf(t / s))
        };
        lower += inner * (1.0 - 2.0 * p_past).max(0.0) * tail;
        upper += inner * (1.0 - p_past) * tail;
    }
    Ok(ErrorBounds {
        lower: lower.clamp(0.0, 1.0),
        upper: upper.clamp(0.0, 1.0),
    })
}

/// [`error_prob_approx`] with the law of `F_{k-1}` replaced by `n_paths`
/// simulated silent-channel paths (seeded by `seed`). Works for any
/// receiver noise.
pub fn error_prob_approx_mc(
    sc: &Scenario,
    hyp: Hypothesis,
    n_paths: u64,
    seed: u64,
) -> Result<ErrorBounds, TheoryError> {
    if n_paths == 0 {
        return Err(TheoryError::Invalid("at least one path is required".into()));
    }
    let fusion = sc.fusion();
    let params = node_stopping_params(sc, hyp)?;
    let t = error_threshold(fusion, hyp);
    // orient so that the error threshold is at +t
    let sign = match hyp {
        Hypothesis::H0 => 1.0,
        Hypothesis::H1 => -1.0,
    };
    let noise = fusion.noise_law.sampler();
    let mut rngs: Vec<_> = (0..n_paths)
        .map(|i| StreamKey::new(seed, i, NOISE_CHANNEL).rng())
        .collect();
    let mut f = vec![0.0; n_paths as usize];
    let n = n_paths as f64;

    let (mut lower, mut upper) = (0.0, 0.0);
    for k in 1..=MAX_SERIES_TERMS {
        let tail = first_change_tail(&params, k as f64);
        if tail < SERIES_TAIL_CUTOFF {
            break;
        }
        let (mut crossing, mut past) = (0u64, 0u64);
        for (fi, rng) in f.iter_mut().zip(rngs.iter_mut()) {
            let xi = sign * fusion_llr(fusion, noise.sample(rng));
            if *fi >= t {
                past += 1;
            } else if *fi + xi > t {
                crossing += 1;
            }
            *fi += xi;
        }
        let inner = crossing as f64 / n;
        let p_past = past as f64 / n;
        lower += inner * (1.0 - 2.0 * p_past).max(0.0) * tail;
        upper += inner * (1.0 - p_past) * tail;
    }
    Ok(ErrorBounds {
        lower: lower.clamp(0.0, 1.0),
        upper: upper.clamp(0.0, 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{self, Preset};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn single_order_statistic_is_the_mean() {
        let m = order_stat_means(&[3.5], &[2.0]).unwrap();
        assert!((m[0] - 3.5).abs() < 1e-8);
    }

    #[test]
    fn two_standard_gaussians() {
        let m = order_stat_means(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let r = 1.0 / std::f64::consts::PI.sqrt();
        assert!((m[0] + r).abs() < 1e-7, "{m:?}");
        assert!((m[1] - r).abs() < 1e-7, "{m:?}");
    }

    #[test]
    fn order_stats_match_sampling() {
        let n = 1_000_000;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut sums = [0.0; 5];
        let mut sq = [0.0; 5];
        for _ in 0..n {
            let mut x: [f64; 5] = std::array::from_fn(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                10.0 + 2.0 * z
            });
            x.sort_by(f64::total_cmp);
            for k in 0..5 {
                sums[k] += x[k];
                sq[k] += x[k] * x[k];
            }
        }
        let m = order_stat_means(&[10.0; 5], &[4.0; 5]).unwrap();
        for k in 0..5 {
            let mean = sums[k] / n as f64;
            let se = ((sq[k] / n as f64 - mean * mean) / n as f64).sqrt();
            assert!((m[k] - mean).abs() < 3.0 * se, "k={k}: {} vs {mean} ± {se}", m[k]);
        }
    }

    #[test]
    fn order_stat_limits() {
        assert!(matches!(
            order_stat_means(&[0.0; 13], &[1.0; 13]),
            Err(TheoryError::TooManyNodes { got: 13, .. })
        ));
        assert!(order_stat_means(&[0.0], &[0.0]).is_err());
    }

    #[test]
    fn gaussian_profile() {
        let sc = Preset::GaussianEqualSnr.scenario();
        let p = fusion_drift_profile(&sc, Hypothesis::H1).unwrap();
        let s2 = presets::MAC_NOISE_VAR;
        for (j, d) in p.drifts.iter().enumerate() {
            assert!((d - 4.0 * j as f64 / s2).abs() < 1e-12, "{j}: {d}");
        }
        assert_eq!(p.f_tilde[0], 0.0);
        assert_eq!(p.f_tilde, FusionDriftProfile::recompute_f_tilde(&p.drifts, &p.change_means));
        let p0 = fusion_drift_profile(&sc, Hypothesis::H0).unwrap();
        assert!((p0.drifts[5] + 20.0 / s2).abs() < 1e-12);
    }

    #[test]
    fn single_node_edd_specialisation() {
        let sc = presets::single_node_gaussian(1.0, 5.0).unwrap();
        let p = fusion_drift_profile(&sc, Hypothesis::H1).unwrap();
        let e = edd_approx(&sc, Hypothesis::H1).unwrap();
        assert_eq!(p.f_tilde[1], 0.0);
        assert!((e - (p.change_means[0] + 1.0 / p.drifts[1])).abs() < 1e-12);
    }

    #[test]
    fn edd_increases_with_fc_threshold() {
        let sc = Preset::GaussianEqualSnr.scenario();
        for h in [Hypothesis::H0, Hypothesis::H1] {
            let e: Vec<f64> = [5.0, 10.0, 20.0, 40.0]
                .iter()
                .map(|&t| edd_approx(&sc.with_fusion_thresholds(t, t).unwrap(), h).unwrap())
                .collect();
            assert!(e.windows(2).all(|w| w[1] > w[0]), "{e:?}");
        }
    }

    #[test]
    fn error_brackets_order_and_vanish() {
        let sc = Preset::GaussianEqualSnr.scenario();
        for h in [Hypothesis::H0, Hypothesis::H1] {
            let mut prev = f64::INFINITY;
            for t in [2.0, 5.0, 10.0, 15.0, 30.0, 60.0] {
                let s = sc.with_fusion_thresholds(t, t).unwrap();
                let b = error_prob_approx(&s, h).unwrap();
                assert!(0.0 <= b.lower && b.lower <= b.upper && b.upper <= 1.0, "{t} {b:?}");
                assert!(b.upper < prev);
                prev = b.upper;
            }
            assert!(prev < 1e-9, "{prev}");
        }
    }

    #[test]
    fn asymmetric_noise_is_rejected() {
        let sc = Preset::GaussianEqualSnr.scenario();
        let f = FusionParams::new(-1.0, 3.0, Dist::gaussian(0.0, 10.0).unwrap(), 5.0, 5.0).unwrap();
        let s = Scenario::new(sc.nodes().to_vec(), f, sc.h1_laws().to_vec(), 100).unwrap();
        assert_eq!(error_prob_approx(&s, Hypothesis::H0), Err(TheoryError::AsymmetricNoise));
        assert!(error_prob_approx_mc(&s, Hypothesis::H0, 100, 1).is_ok());
    }

    #[test]
    fn mc_mode_agrees_with_clt_mode() {
        let sc = Preset::GaussianEqualSnr.scenario().with_fusion_thresholds(5.0, 5.0).unwrap();
        let a = error_prob_approx(&sc, Hypothesis::H0).unwrap();
        let b = error_prob_approx_mc(&sc, Hypothesis::H0, 20_000, 3).unwrap();
        assert!((a.upper / b.upper - 1.0).abs() < 0.15, "{a:?} {b:?}");
    }
}
