//! Probability laws used for node observations and fusion-center noise.
//!
//! Four families are supported: Gaussian, lognormal, Pareto and binomial.
//! Every quantity is in nats. Continuous expectations are evaluated in a
//! standardised coordinate (a standard normal `z` for the Gaussian and
//! lognormal families, a unit exponential `u` for Pareto), which keeps the
//! quadrature well conditioned for the heavy tails these laws have.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;
use std::f64::consts::{E, PI};
use thiserror::Error;

use crate::numerics::{self, NumericsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("invalid {family} parameter: {reason}")]
    InvalidParameter {
        family: &'static str,
        reason: String,
    },
    #[error("support of {p} is not contained in support of {q}")]
    SupportMismatch { p: String, q: String },
    #[error("channel gain {gain} cannot be applied to a {family} law")]
    UnsupportedGain { family: &'static str, gain: f64 },
    #[error("expectation diverges")]
    Divergent,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// A probability law from one of the four supported families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum Dist {
    Gaussian {
        mean: f64,
        #[serde(rename = "var")]
        variance: f64,
    },
    Lognormal {
        log_mean: f64,
        #[serde(rename = "log_var")]
        log_variance: f64,
    },
    Pareto {
        scale: f64,
        shape: f64,
    },
    Binomial {
        trials: u32,
        #[serde(rename = "p")]
        success_prob: f64,
    },
}

/// Where a law puts its mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Real,
    Positive,
    AtLeast(f64),
    Integers(u32),
}

impl Support {
    fn contains(&self, other: &Support) -> bool {
        use Support::*;
        match (self, other) {
            (Real, Real | Positive | AtLeast(_)) => true,
            (Positive, Positive) => true,
            (Positive, AtLeast(m)) => *m > 0.0,
            (AtLeast(a), AtLeast(b)) => b >= a,
            (Integers(n), Integers(m)) => m <= n,
            _ => false,
        }
    }
}

fn invalid(family: &'static str, reason: impl Into<String>) -> DistError {
    DistError::InvalidParameter {
        family,
        reason: reason.into(),
    }
}

impl Dist {
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self, DistError> {
        let d = Dist::Gaussian { mean, variance };
        d.validate().map(|_| d)
    }

    pub fn lognormal(log_mean: f64, log_variance: f64) -> Result<Self, DistError> {
        let d = Dist::Lognormal {
            log_mean,
            log_variance,
        };
        d.validate().map(|_| d)
    }

    pub fn pareto(scale: f64, shape: f64) -> Result<Self, DistError> {
        let d = Dist::Pareto { scale, shape };
        d.validate().map(|_| d)
    }

    pub fn binomial(trials: u32, success_prob: f64) -> Result<Self, DistError> {
        let d = Dist::Binomial {
            trials,
            success_prob,
        };
        d.validate().map(|_| d)
    }

    pub fn family(&self) -> &'static str {
        match self {
            Dist::Gaussian { .. } => "gaussian",
            Dist::Lognormal { .. } => "lognormal",
            Dist::Pareto { .. } => "pareto",
            Dist::Binomial { .. } => "binomial",
        }
    }

    pub fn validate(&self) -> Result<(), DistError> {
        let fam = self.family();
        match *self {
            Dist::Gaussian { mean, variance } => {
                if !mean.is_finite() {
                    return Err(invalid(fam, "mean must be finite"));
                }
                if !(variance > 0.0 && variance.is_finite()) {
                    return Err(invalid(fam, format!("variance must be positive, got {variance}")));
                }
            }
            Dist::Lognormal {
                log_mean,
                log_variance,
            } => {
                if !log_mean.is_finite() {
                    return Err(invalid(fam, "log_mean must be finite"));
                }
                if !(log_variance > 0.0 && log_variance.is_finite()) {
                    return Err(invalid(
                        fam,
                        format!("log_variance must be positive, got {log_variance}"),
                    ));
                }
            }
            Dist::Pareto { scale, shape } => {
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(invalid(fam, format!("scale must be positive, got {scale}")));
                }
                if !(shape > 0.0 && shape.is_finite()) {
                    return Err(invalid(fam, format!("shape must be positive, got {shape}")));
                }
            }
            Dist::Binomial {
                trials,
                success_prob,
            } => {
                if trials == 0 {
                    return Err(invalid(fam, "trials must be at least 1"));
                }
                if !(success_prob > 0.0 && success_prob < 1.0) {
                    return Err(invalid(
                        fam,
                        format!("success probability must lie in (0, 1), got {success_prob}"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn support(&self) -> Support {
        match *self {
            Dist::Gaussian { .. } => Support::Real,
            Dist::Lognormal { .. } => Support::Positive,
            Dist::Pareto { scale, .. } => Support::AtLeast(scale),
            Dist::Binomial { trials, .. } => Support::Integers(trials),
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Dist::Binomial { .. })
    }

    /// Natural-log density (or log mass for the binomial); `-∞` outside the
    /// support.
    pub fn log_density(&self, x: f64) -> f64 {
        match *self {
            Dist::Gaussian { mean, variance } => {
                let d = x - mean;
                -0.5 * (2.0 * PI * variance).ln() - d * d / (2.0 * variance)
            }
            Dist::Lognormal {
                log_mean,
                log_variance,
            } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let lx = x.ln();
                let d = lx - log_mean;
                -lx - 0.5 * (2.0 * PI * log_variance).ln() - d * d / (2.0 * log_variance)
            }
            Dist::Pareto { scale, shape } => {
                if x < scale {
                    return f64::NEG_INFINITY;
                }
                shape.ln() + shape * scale.ln() - (shape + 1.0) * x.ln()
            }
            Dist::Binomial {
                trials,
                success_prob,
            } => {
                if x < 0.0 || x > trials as f64 || x.fract() != 0.0 {
                    return f64::NEG_INFINITY;
                }
                let k = x as u64;
                let n = trials as u64;
                ln_binomial(n, k)
                    + k as f64 * success_prob.ln()
                    + (n - k) as f64 * (1.0 - success_prob).ln()
            }
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }

    /// Shannon entropy (binomial, by summation) or differential entropy
    /// (closed form), in nats.
    pub fn entropy(&self) -> f64 {
        match *self {
            Dist::Gaussian { variance, .. } => 0.5 * (2.0 * PI * E * variance).ln(),
            Dist::Lognormal {
                log_mean,
                log_variance,
            } => log_mean + 0.5 * (2.0 * PI * E * log_variance).ln(),
            Dist::Pareto { scale, shape } => (scale / shape).ln() + 1.0 / shape + 1.0,
            Dist::Binomial { trials, .. } => (0..=trials)
                .map(|k| {
                    let lp = self.log_density(k as f64);
                    -lp.exp() * lp
                })
                .sum(),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Dist::Gaussian { mean, .. } => mean,
            Dist::Lognormal {
                log_mean,
                log_variance,
            } => (log_mean + 0.5 * log_variance).exp(),
            Dist::Pareto { scale, shape } => {
                if shape > 1.0 {
                    shape * scale / (shape - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            Dist::Binomial {
                trials,
                success_prob,
            } => trials as f64 * success_prob,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Dist::Gaussian { variance, .. } => variance,
            Dist::Lognormal {
                log_mean,
                log_variance,
            } => (log_variance.exp() - 1.0) * (2.0 * log_mean + log_variance).exp(),
            Dist::Pareto { scale, shape } => {
                if shape > 2.0 {
                    scale * scale * shape / ((shape - 1.0).powi(2) * (shape - 2.0))
                } else {
                    f64::INFINITY
                }
            }
            Dist::Binomial {
                trials,
                success_prob,
            } => trials as f64 * success_prob * (1.0 - success_prob),
        }
    }

    /// Applies a linear amplitude gain to the signal component of the law.
    ///
    /// Only the Gaussian family carries a separable signal (its mean); the
    /// gain scales the mean and leaves the noise variance alone. Other
    /// families accept only the identity gain.
    pub fn with_gain(&self, gain: f64) -> Result<Dist, DistError> {
        if gain == 1.0 {
            return Ok(*self);
        }
        match *self {
            Dist::Gaussian { mean, variance } if gain > 0.0 && gain.is_finite() => {
                Dist::gaussian(mean * gain, variance)
            }
            _ => Err(DistError::UnsupportedGain {
                family: self.family(),
                gain,
            }),
        }
    }

    /// `E[f(X)]`.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64, DistError> {
        match *self {
            Dist::Binomial { trials, .. } => Ok((0..=trials)
                .map(|k| {
                    let x = k as f64;
                    self.density(x) * f(x)
                })
                .sum()),
            _ => {
                let map = self.coordinate_map();
                integrate_outward(|z| f(map.point(z)) * map.weight(z), map.kind)
            }
        }
    }

    /// `E[exp(g(X))]`, evaluated in log space so that large exponents meet
    /// small densities without overflow. Returns [`DistError::Divergent`]
    /// when the expectation is infinite.
    pub fn expect_exp<F: Fn(f64) -> f64>(&self, g: F) -> Result<f64, DistError> {
        match *self {
            Dist::Binomial { trials, .. } => {
                let v: f64 = (0..=trials)
                    .map(|k| {
                        let x = k as f64;
                        (g(x) + self.log_density(x)).exp()
                    })
                    .sum();
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(DistError::Divergent)
                }
            }
            _ => {
                let map = self.coordinate_map();
                integrate_outward(|z| (g(map.point(z)) + map.log_weight(z)).exp(), map.kind)
            }
        }
    }

    fn coordinate_map(&self) -> CoordinateMap {
        match *self {
            Dist::Gaussian { mean, variance } => CoordinateMap {
                kind: MapKind::TwoSided,
                transform: Transform::Affine {
                    loc: mean,
                    scale: variance.sqrt(),
                },
            },
            Dist::Lognormal {
                log_mean,
                log_variance,
            } => CoordinateMap {
                kind: MapKind::TwoSided,
                transform: Transform::ExpAffine {
                    loc: log_mean,
                    scale: log_variance.sqrt(),
                },
            },
            Dist::Pareto { scale, shape } => CoordinateMap {
                kind: MapKind::OneSided,
                transform: Transform::ParetoExp { scale, shape },
            },
            Dist::Binomial { .. } => unreachable!("binomial expectations are summed exactly"),
        }
    }

    /// One draw from the law.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sampler().sample(rng)
    }

    /// A reusable sampler; cheaper than [`Dist::sample`] inside hot loops.
    pub fn sampler(&self) -> Sampler {
        use rand_distr as rd;
        // parameters were validated at construction
        match *self {
            Dist::Gaussian { mean, variance } => {
                Sampler::Gaussian(rd::Normal::new(mean, variance.sqrt()).expect("valid normal"))
            }
            Dist::Lognormal {
                log_mean,
                log_variance,
            } => Sampler::Lognormal(
                rd::LogNormal::new(log_mean, log_variance.sqrt()).expect("valid lognormal"),
            ),
            Dist::Pareto { scale, shape } => {
                Sampler::Pareto(rd::Pareto::new(scale, shape).expect("valid pareto"))
            }
            Dist::Binomial {
                trials,
                success_prob,
            } => Sampler::Binomial(
                rd::Binomial::new(trials as u64, success_prob).expect("valid binomial"),
            ),
        }
    }
}

/// Pre-built sampler for a [`Dist`].
#[derive(Debug, Clone, Copy)]
pub enum Sampler {
    Gaussian(rand_distr::Normal<f64>),
    Lognormal(rand_distr::LogNormal<f64>),
    Pareto(rand_distr::Pareto<f64>),
    Binomial(rand_distr::Binomial),
}

impl Sampler {
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        use rand_distr::Distribution;
        match self {
            Sampler::Gaussian(d) => d.sample(rng),
            Sampler::Lognormal(d) => d.sample(rng),
            Sampler::Pareto(d) => d.sample(rng),
            Sampler::Binomial(d) => d.sample(rng) as f64,
        }
    }
}

#[derive(Clone, Copy)]
enum MapKind {
    /// standard normal coordinate on the whole line
    TwoSided,
    /// unit exponential coordinate on [0, ∞)
    OneSided,
}

#[derive(Clone, Copy)]
enum Transform {
    Affine { loc: f64, scale: f64 },
    ExpAffine { loc: f64, scale: f64 },
    ParetoExp { scale: f64, shape: f64 },
}

#[derive(Clone, Copy)]
struct CoordinateMap {
    kind: MapKind,
    transform: Transform,
}

impl CoordinateMap {
    fn point(&self, z: f64) -> f64 {
        match self.transform {
            Transform::Affine { loc, scale } => loc + scale * z,
            Transform::ExpAffine { loc, scale } => (loc + scale * z).exp(),
            Transform::ParetoExp { scale, shape } => scale * (z / shape).exp(),
        }
    }

    fn log_weight(&self, z: f64) -> f64 {
        match self.kind {
            MapKind::TwoSided => -0.5 * z * z - 0.5 * (2.0 * PI).ln(),
            MapKind::OneSided => -z,
        }
    }

    fn weight(&self, z: f64) -> f64 {
        self.log_weight(z).exp()
    }
}

/// Integrates over a core window and then over geometrically growing tail
/// pieces until their contribution is negligible.
fn integrate_outward<F: Fn(f64) -> f64>(f: F, kind: MapKind) -> Result<f64, DistError> {
    const CORE: f64 = 8.0;
    let piece = |a: f64, b: f64| -> Result<f64, DistError> {
        // unit sub-pieces inside the core keep narrow peaks visible
        let n = ((b - a).abs() / 1.0).ceil().clamp(1.0, 16.0) as usize;
        let h = (b - a) / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            let lo = a + h * i as f64;
            let v = numerics::integrate(&f, lo, lo + h).map_err(|e| match e {
                NumericsError::NonFiniteIntegrand(_) => DistError::Divergent,
                other => DistError::Numerics(other),
            })?;
            s += v;
        }
        if s.is_finite() {
            Ok(s)
        } else {
            Err(DistError::Divergent)
        }
    };
    let (mut total, max_edge) = match kind {
        MapKind::TwoSided => (piece(-CORE, CORE)?, 256.0),
        MapKind::OneSided => (piece(0.0, CORE)?, 65_536.0),
    };
    let mut edge = CORE;
    let mut quiet = 0;
    while edge < max_edge {
        let next = edge * 2.0;
        let mut add = piece(edge, next)?;
        if matches!(kind, MapKind::TwoSided) {
            add += piece(-next, -edge)?;
        }
        total += add;
        if !total.is_finite() {
            return Err(DistError::Divergent);
        }
        if add.abs() <= 1e-14 * total.abs().max(1e-300) {
            quiet += 1;
            if quiet >= 2 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
        edge = next;
    }
    Err(DistError::Divergent)
}

/// Kullback–Leibler divergence `D(p ‖ q)` in nats.
///
/// Closed forms are used within the Gaussian, lognormal and Pareto
/// families; binomial pairs are summed exactly; any other admissible pair is
/// integrated numerically.
pub fn kl_divergence(p: &Dist, q: &Dist) -> Result<f64, DistError> {
    if !q.support().contains(&p.support()) {
        return Err(DistError::SupportMismatch {
            p: format!("{p:?}"),
            q: format!("{q:?}"),
        });
    }
    let d = match (*p, *q) {
        (
            Dist::Gaussian {
                mean: m1,
                variance: v1,
            },
            Dist::Gaussian {
                mean: m2,
                variance: v2,
            },
        )
        | (
            Dist::Lognormal {
                log_mean: m1,
                log_variance: v1,
            },
            Dist::Lognormal {
                log_mean: m2,
                log_variance: v2,
            },
        ) => 0.5 * ((v2 / v1).ln() + (v1 + (m1 - m2).powi(2)) / v2 - 1.0),
        (
            Dist::Pareto {
                scale: s1,
                shape: a1,
            },
            Dist::Pareto {
                scale: s2,
                shape: a2,
            },
        ) => (a1 / a2).ln() + a2 * (s1 / s2).ln() + a2 / a1 - 1.0,
        (Dist::Binomial { trials, .. }, Dist::Binomial { .. }) => (0..=trials)
            .map(|k| {
                let x = k as f64;
                let lp = p.log_density(x);
                lp.exp() * (lp - q.log_density(x))
            })
            .sum(),
        _ => p.expect(|x| p.log_density(x) - q.log_density(x))?,
    };
    // exact identities can round to tiny negatives
    Ok(if d < 0.0 && d > -1e-12 { 0.0 } else { d })
}
