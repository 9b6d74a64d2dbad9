//! Local-node and fusion-center sequential tests.
//!
//! A local node accumulates
//! `W_k = W_{k-1} - ln P0(X_k) - H(P0) - λ/2` from `W_0 = 0` and decides
//! H1 once `W_k ≥ |ln α_l|` or H0 once `W_k ≤ -|ln β_l|`. The upper
//! threshold is checked first and equality counts as a crossing. After a
//! decision the node's statistic is frozen and it keeps transmitting its
//! decision level (`b1` or `b0`) until the fusion center stops.
//!
//! The fusion center accumulates the log-likelihood ratio of the received
//! MAC output between the noise law shifted by `μ1` and by `μ0`, with the
//! same crossing convention.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::Dist;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectionError {
    #[error("invalid detector parameter: {0}")]
    InvalidParams(String),
    #[error("fusion step requested after the fusion center already decided")]
    StepAfterDecision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hypothesis {
    H0,
    H1,
}

impl Hypothesis {
    pub fn other(self) -> Self {
        match self {
            Hypothesis::H0 => Hypothesis::H1,
            Hypothesis::H1 => Hypothesis::H0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Hypothesis::H0 => 0,
            Hypothesis::H1 => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Hypothesis::H0 => "h0",
            Hypothesis::H1 => "h1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Running,
    DecidedH0,
    DecidedH1,
}

impl Status {
    pub fn decision(self) -> Option<Hypothesis> {
        match self {
            Status::Running => None,
            Status::DecidedH0 => Some(Hypothesis::H0),
            Status::DecidedH1 => Some(Hypothesis::H1),
        }
    }

    pub fn is_running(self) -> bool {
        self == Status::Running
    }

    fn check(value: f64, upper: f64, lower: f64) -> Status {
        if value >= upper {
            Status::DecidedH1
        } else if value <= -lower {
            Status::DecidedH0
        } else {
            Status::Running
        }
    }
}

/// Parameters of one local node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalNodeParams {
    null_law: Dist,
    lambda: f64,
    log_alpha: f64,
    log_beta: f64,
    b0: f64,
    b1: f64,
    gain: f64,
    #[serde(skip)]
    null_entropy: f64,
}

impl LocalNodeParams {
    /// `log_alpha` and `log_beta` are the threshold magnitudes `|ln α_l|`
    /// and `|ln β_l|`.
    pub fn new(
        null_law: Dist,
        lambda: f64,
        log_alpha: f64,
        log_beta: f64,
        b0: f64,
        b1: f64,
    ) -> Result<Self, DetectionError> {
        null_law
            .validate()
            .map_err(|e| DetectionError::InvalidParams(e.to_string()))?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(DetectionError::InvalidParams(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        check_thresholds(log_alpha, log_beta)?;
        if !(b0.is_finite() && b1.is_finite()) || b0 == b1 {
            return Err(DetectionError::InvalidParams(format!(
                "transmit levels must be finite and distinct, got b0={b0}, b1={b1}"
            )));
        }
        Ok(Self {
            null_law,
            lambda,
            log_alpha,
            log_beta,
            b0,
            b1,
            gain: 1.0,
            null_entropy: null_law.entropy(),
        })
    }

    /// Sets the linear amplitude gain applied to H1 observations.
    pub fn with_gain(mut self, gain: f64) -> Result<Self, DetectionError> {
        if !(gain > 0.0 && gain.is_finite()) {
            return Err(DetectionError::InvalidParams(format!(
                "gain must be positive, got {gain}"
            )));
        }
        self.gain = gain;
        Ok(self)
    }

    pub fn with_thresholds(mut self, log_alpha: f64, log_beta: f64) -> Result<Self, DetectionError> {
        check_thresholds(log_alpha, log_beta)?;
        self.log_alpha = log_alpha;
        self.log_beta = log_beta;
        Ok(self)
    }

    pub fn null_law(&self) -> &Dist {
        &self.null_law
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn log_alpha(&self) -> f64 {
        self.log_alpha
    }
    pub fn log_beta(&self) -> f64 {
        self.log_beta
    }
    pub fn b0(&self) -> f64 {
        self.b0
    }
    pub fn b1(&self) -> f64 {
        self.b1
    }
    pub fn gain(&self) -> f64 {
        self.gain
    }
    pub fn null_entropy(&self) -> f64 {
        self.null_entropy
    }

    /// Transmit level for a decision.
    pub fn level(&self, h: Hypothesis) -> f64 {
        match h {
            Hypothesis::H0 => self.b0,
            Hypothesis::H1 => self.b1,
        }
    }

    /// Statistic increment for one observation.
    #[inline]
    pub fn increment(&self, x: f64) -> f64 {
        -self.null_law.log_density(x) - self.null_entropy - self.lambda / 2.0
    }

    fn emission(&self, status: Status) -> f64 {
        match status {
            Status::Running => 0.0,
            Status::DecidedH0 => self.b0,
            Status::DecidedH1 => self.b1,
        }
    }
}

fn check_thresholds(log_alpha: f64, log_beta: f64) -> Result<(), DetectionError> {
    if !(log_alpha > 0.0 && log_alpha.is_finite() && log_beta > 0.0 && log_beta.is_finite()) {
        return Err(DetectionError::InvalidParams(format!(
            "threshold magnitudes must be positive, got {log_alpha} and {log_beta}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalNodeState {
    pub w: f64,
    pub k: u64,
    pub status: Status,
}

impl Default for LocalNodeState {
    fn default() -> Self {
        Self {
            w: 0.0,
            k: 0,
            status: Status::Running,
        }
    }
}

/// Advances a local node by one slot and returns the new state together
/// with the node's transmission in that slot.
#[inline]
pub fn local_step(state: LocalNodeState, params: &LocalNodeParams, x: f64) -> (LocalNodeState, f64) {
    let mut next = state;
    next.k += 1;
    if state.status.is_running() {
        next.w = state.w + params.increment(x);
        next.status = Status::check(next.w, params.log_alpha, params.log_beta);
    }
    (next, params.emission(next.status))
}

/// Parameters of the fusion-center test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionParams {
    pub mu0: f64,
    pub mu1: f64,
    pub noise_law: Dist,
    pub log_alpha: f64,
    pub log_beta: f64,
}

impl FusionParams {
    pub fn new(
        mu0: f64,
        mu1: f64,
        noise_law: Dist,
        log_alpha: f64,
        log_beta: f64,
    ) -> Result<Self, DetectionError> {
        let p = Self {
            mu0,
            mu1,
            noise_law,
            log_alpha,
            log_beta,
        };
        p.validate().map(|_| p)
    }

    pub fn validate(&self) -> Result<(), DetectionError> {
        self.noise_law
            .validate()
            .map_err(|e| DetectionError::InvalidParams(e.to_string()))?;
        if !(self.mu0.is_finite() && self.mu1.is_finite()) || self.mu1 <= self.mu0 {
            return Err(DetectionError::InvalidParams(format!(
                "need mu1 > mu0, got mu0={}, mu1={}",
                self.mu0, self.mu1
            )));
        }
        check_thresholds(self.log_alpha, self.log_beta)
    }

    pub fn with_thresholds(&self, log_alpha: f64, log_beta: f64) -> Result<Self, DetectionError> {
        Self::new(self.mu0, self.mu1, self.noise_law, log_alpha, log_beta)
    }

    /// True when the noise is a zero-mean Gaussian and `μ1 = -μ0`, so the
    /// LLR with no transmissions is symmetric about zero.
    pub fn is_symmetric(&self) -> bool {
        matches!(self.noise_law, Dist::Gaussian { mean, .. } if mean == 0.0) && self.mu1 == -self.mu0
    }
}

/// Log-likelihood ratio `ln g_{μ1}(y) / g_{μ0}(y)` for one MAC output.
#[inline]
pub fn fusion_llr(params: &FusionParams, y: f64) -> f64 {
    match params.noise_law {
        Dist::Gaussian { mean, variance } => {
            // normalising constants cancel
            let d0 = y - params.mu0 - mean;
            let d1 = y - params.mu1 - mean;
            (d0 * d0 - d1 * d1) / (2.0 * variance)
        }
        noise => noise.log_density(y - params.mu1) - noise.log_density(y - params.mu0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FusionState {
    pub f: f64,
    pub k: u64,
    pub status: Status,
}

impl Default for FusionState {
    fn default() -> Self {
        Self {
            f: 0.0,
            k: 0,
            status: Status::Running,
        }
    }
}

/// Advances the fusion-center test by one MAC output.
#[inline]
pub fn fusion_step(
    state: FusionState,
    params: &FusionParams,
    y: f64,
) -> Result<FusionState, DetectionError> {
    if !state.status.is_running() {
        return Err(DetectionError::StepAfterDecision);
    }
    let f = state.f + fusion_llr(params, y);
    Ok(FusionState {
        f,
        k: state.k + 1,
        status: Status::check(f, params.log_alpha, params.log_beta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::kl_divergence;
    use crate::rng::StreamKey;

    fn gauss_node(lambda: f64, t: f64) -> LocalNodeParams {
        LocalNodeParams::new(Dist::gaussian(0.0, 1.0).unwrap(), lambda, t, t, -1.0, 1.0).unwrap()
    }

    fn fusion(mu: f64, var: f64, t: f64) -> FusionParams {
        FusionParams::new(-mu, mu, Dist::gaussian(0.0, var).unwrap(), t, t).unwrap()
    }

    #[test]
    fn local_step_hand_evaluation() {
        let p = gauss_node(2.0, 10.0);
        let (s, e) = local_step(LocalNodeState::default(), &p, 0.0);
        assert!((s.w + 1.5).abs() < 1e-12);
        assert_eq!(s.k, 1);
        assert_eq!(e, 0.0);
        assert_eq!(s.status, Status::Running);
    }

    #[test]
    fn decided_node_is_absorbing() {
        let p = gauss_node(1.0, 2.0);
        let start = LocalNodeState {
            w: 2.5,
            k: 4,
            status: Status::DecidedH1,
        };
        for x in [-100.0, 0.0, 3.0, 1e6] {
            let (s, e) = local_step(start, &p, x);
            assert_eq!(e, 1.0);
            assert_eq!(s.w, 2.5);
            assert_eq!(s.k, 5);
            assert_eq!(s.status, Status::DecidedH1);
        }
        let start = LocalNodeState {
            w: -2.5,
            k: 4,
            status: Status::DecidedH0,
        };
        assert_eq!(local_step(start, &p, 7.0).1, -1.0);
    }

    #[test]
    fn equality_counts_as_crossing_and_upper_wins() {
        assert_eq!(Status::check(3.0, 3.0, 2.0), Status::DecidedH1);
        assert_eq!(Status::check(-2.0, 3.0, 2.0), Status::DecidedH0);
        assert_eq!(Status::check(2.999, 3.0, 2.0), Status::Running);
    }

    #[test]
    fn deciding_step_already_transmits() {
        let p = gauss_node(1.0, 0.5);
        // a large observation pushes W well above 0.5
        let (s, e) = local_step(LocalNodeState::default(), &p, 5.0);
        assert_eq!(s.status, Status::DecidedH1);
        assert_eq!(e, 1.0);
    }

    #[test]
    fn h0_and_h1_drift_binomial() {
        let p0 = Dist::binomial(8, 0.2).unwrap();
        let p1 = Dist::binomial(8, 0.5).unwrap();
        let lambda = 1.0;
        let node = LocalNodeParams::new(p0, lambda, 1e9, 1e9, -1.0, 1.0).unwrap();
        let n = 100_000;
        for (law, expected) in [
            (p0, -lambda / 2.0),
            (
                p1,
                kl_divergence(&p1, &p0).unwrap() + p1.entropy() - p0.entropy() - lambda / 2.0,
            ),
        ] {
            let mut rng = StreamKey::new(11, 0, 0).rng();
            let s = law.sampler();
            let incs: Vec<f64> = (0..n).map(|_| node.increment(s.sample(&mut rng))).collect();
            let mean = incs.iter().sum::<f64>() / n as f64;
            let var = incs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            assert!((mean - expected).abs() < 3.0 * se, "{mean} vs {expected} (se {se})");
        }
    }

    #[test]
    fn fusion_llr_examples() {
        let p = fusion(2.0, 1.0, 10.0);
        assert_eq!(fusion_llr(&p, 0.0), 0.0);
        assert_eq!(fusion_llr(&p, 5.0), 20.0);
        for y in [0.3, -1.7, 12.0, 1e-9] {
            assert_eq!(fusion_llr(&p, y), -fusion_llr(&p, -y));
            assert!((fusion_llr(&p, y) - 4.0 * y).abs() < 1e-12);
        }
    }

    #[test]
    fn fusion_llr_general_noise_path() {
        // the generic log-density path agrees with the Gaussian shortcut
        let p = FusionParams::new(-1.0, 3.0, Dist::gaussian(0.5, 2.0).unwrap(), 5.0, 5.0).unwrap();
        let noise = p.noise_law;
        for y in [-3.0, 0.0, 0.7, 4.2] {
            let generic = noise.log_density(y - p.mu1) - noise.log_density(y - p.mu0);
            assert!((fusion_llr(&p, y) - generic).abs() < 1e-12);
        }
    }

    #[test]
    fn fusion_crossings() {
        let p = fusion(2.0, 1.0, 10.0);
        let s = FusionState {
            f: -9.9,
            k: 3,
            status: Status::Running,
        };
        let s = fusion_step(s, &p, -1.0).unwrap();
        assert_eq!(s.status, Status::DecidedH0);
        assert_eq!(fusion_step(s, &p, 0.0), Err(DetectionError::StepAfterDecision));
        let s = fusion_step(FusionState::default(), &p, 2.5).unwrap();
        assert_eq!(s.f, 10.0);
        assert_eq!(s.status, Status::DecidedH1);
    }

    #[test]
    fn driftless_fusion_walk_without_emissions() {
        let p = fusion(2.0, 1.0, 1e12);
        let noise = p.noise_law.sampler();
        let mut rng = StreamKey::new(5, 0, 9).rng();
        let n = 100_000;
        let mut st = FusionState::default();
        for _ in 0..n {
            st = fusion_step(st, &p, noise.sample(&mut rng)).unwrap();
        }
        // per-step llr is N(0, 16); mean increment within 3 SE of zero
        let se = 4.0 / (n as f64).sqrt();
        assert!((st.f / n as f64).abs() < 3.0 * se);
    }

    #[test]
    fn rejects_bad_params() {
        let g = Dist::gaussian(0.0, 1.0).unwrap();
        assert!(LocalNodeParams::new(g, 0.0, 1.0, 1.0, -1.0, 1.0).is_err());
        assert!(LocalNodeParams::new(g, 1.0, 0.0, 1.0, -1.0, 1.0).is_err());
        assert!(LocalNodeParams::new(g, 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(FusionParams::new(2.0, -2.0, g, 1.0, 1.0).is_err());
        assert!(FusionParams::new(-2.0, 2.0, g, 1.0, -1.0).is_err());
    }
}
