//! End-to-end trial simulation and Monte Carlo estimation of detection
//! delay and error probabilities.
//!
//! Trials are independent: trial `i` draws all of its randomness from the
//! streams keyed by `(master_seed, i, channel)` (see [`crate::rng`]).
//! Estimates are aggregated from fixed-size chunks with exact integer sums,
//! so the result is bit-identical for any number of worker threads.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::detection::{
    fusion_step, local_step, DetectionError, FusionParams, FusionState, Hypothesis,
    LocalNodeParams, LocalNodeState,
};
use crate::dist::{kl_divergence, Dist, DistError};
use crate::mac::superpose_parts;
use crate::rng::{StreamKey, NOISE_CHANNEL};

/// Default safety cap on the number of slots per trial.
pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;
/// Tolerance of the class-membership check on H1 laws.
pub const CLASS_TOL: f64 = 1e-6;
/// Truncated fraction above which an estimate is flagged unreliable.
pub const UNRELIABLE_TRUNCATION: f64 = 0.01;

const CHUNK: u64 = 512;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("node {node}: H1 law is outside the alternative class: {reason}")]
    Inadmissible { node: usize, reason: String },
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Full description of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    nodes: Vec<LocalNodeParams>,
    fusion: FusionParams,
    h1_laws: Vec<Dist>,
    /// law observed under H0; the node's null law unless overridden
    h0_laws: Vec<Dist>,
    max_steps: u64,
    class_checked: bool,
    #[serde(skip)]
    received_h1: Vec<Dist>,
}

impl Scenario {
    /// Builds a scenario and checks that every H1 law (after its node's
    /// channel gain) satisfies `D(P1 ‖ P0) ≥ λ` and `H(P1) ≥ H(P0)`.
    pub fn new(
        nodes: Vec<LocalNodeParams>,
        fusion: FusionParams,
        h1_laws: Vec<Dist>,
        max_steps: u64,
    ) -> Result<Self, ScenarioError> {
        let sc = Self::build(nodes, fusion, h1_laws, max_steps, true)?;
        sc.check_class()?;
        Ok(sc)
    }

    /// Builds a scenario without the alternative-class check. Used for
    /// detectors whose reference law is not the true null law, such as the
    /// composite-null designs.
    pub fn new_unchecked_class(
        nodes: Vec<LocalNodeParams>,
        fusion: FusionParams,
        h1_laws: Vec<Dist>,
        max_steps: u64,
    ) -> Result<Self, ScenarioError> {
        Self::build(nodes, fusion, h1_laws, max_steps, false)
    }

    fn build(
        nodes: Vec<LocalNodeParams>,
        fusion: FusionParams,
        h1_laws: Vec<Dist>,
        max_steps: u64,
        class_checked: bool,
    ) -> Result<Self, ScenarioError> {
        if nodes.is_empty() {
            return Err(ScenarioError::Invalid("at least one node is required".into()));
        }
        if h1_laws.len() != nodes.len() {
            return Err(ScenarioError::Invalid(format!(
                "{} nodes but {} H1 laws",
                nodes.len(),
                h1_laws.len()
            )));
        }
        if max_steps == 0 {
            return Err(ScenarioError::Invalid("max_steps must be positive".into()));
        }
        fusion.validate()?;
        let received_h1 = nodes
            .iter()
            .zip(&h1_laws)
            .map(|(n, law)| {
                law.validate()?;
                law.with_gain(n.gain())
            })
            .collect::<Result<Vec<_>, _>>()?;
        let h0_laws = nodes.iter().map(|n| *n.null_law()).collect();
        Ok(Self {
            nodes,
            fusion,
            h1_laws,
            h0_laws,
            max_steps,
            class_checked,
            received_h1,
        })
    }

    fn check_class(&self) -> Result<(), ScenarioError> {
        for (l, (node, p1)) in self.nodes.iter().zip(&self.received_h1).enumerate() {
            let p0 = node.null_law();
            let d = kl_divergence(p1, p0).map_err(|e| ScenarioError::Inadmissible {
                node: l,
                reason: e.to_string(),
            })?;
            if d < node.lambda() - CLASS_TOL {
                return Err(ScenarioError::Inadmissible {
                    node: l,
                    reason: format!("D(P1||P0) = {d:.6} is below lambda = {}", node.lambda()),
                });
            }
            let (h1, h0) = (p1.entropy(), p0.entropy());
            if h1 < h0 - CLASS_TOL {
                return Err(ScenarioError::Inadmissible {
                    node: l,
                    reason: format!("H(P1) = {h1:.6} is below H(P0) = {h0:.6}"),
                });
            }
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }
    pub fn nodes(&self) -> &[LocalNodeParams] {
        &self.nodes
    }
    pub fn fusion(&self) -> &FusionParams {
        &self.fusion
    }
    /// Nominal H1 laws, before channel gains.
    pub fn h1_laws(&self) -> &[Dist] {
        &self.h1_laws
    }
    pub fn max_steps(&self) -> u64 {
        self.max_steps
    }
    pub fn class_checked(&self) -> bool {
        self.class_checked
    }

    /// The law node `l` observes under hypothesis `h`.
    pub fn observation_law(&self, l: usize, h: Hypothesis) -> &Dist {
        match h {
            Hypothesis::H0 => &self.h0_laws[l],
            Hypothesis::H1 => &self.received_h1[l],
        }
    }

    /// True H0 laws, one per node.
    pub fn h0_laws(&self) -> &[Dist] {
        &self.h0_laws
    }

    /// Same scenario with H0 observations drawn from `laws` instead of the
    /// nodes' reference null laws.
    pub fn with_true_h0_laws(&self, laws: Vec<Dist>) -> Result<Self, ScenarioError> {
        if laws.len() != self.nodes.len() {
            return Err(ScenarioError::Invalid("one H0 law per node is required".into()));
        }
        for law in &laws {
            law.validate()?;
        }
        let mut sc = self.clone();
        sc.h0_laws = laws;
        Ok(sc)
    }

    fn rebuild(&self, nodes: Vec<LocalNodeParams>, fusion: FusionParams, max_steps: u64) -> Result<Self, ScenarioError> {
        let mut sc = Self::build(nodes, fusion, self.h1_laws.clone(), max_steps, self.class_checked)?;
        if sc.class_checked {
            sc.check_class()?;
        }
        sc.h0_laws = self.h0_laws.clone();
        Ok(sc)
    }

    /// Same scenario with every node's threshold magnitudes replaced.
    pub fn with_node_thresholds(&self, log_alpha: f64, log_beta: f64) -> Result<Self, ScenarioError> {
        let nodes = self
            .nodes
            .iter()
            .map(|n| n.clone().with_thresholds(log_alpha, log_beta))
            .collect::<Result<Vec<_>, _>>()?;
        self.rebuild(nodes, self.fusion.clone(), self.max_steps)
    }

    /// Same scenario with per-node threshold magnitudes `(|ln α_l|, |ln β_l|)`.
    pub fn with_per_node_thresholds(&self, thresholds: &[(f64, f64)]) -> Result<Self, ScenarioError> {
        if thresholds.len() != self.nodes.len() {
            return Err(ScenarioError::Invalid("one threshold pair per node is required".into()));
        }
        let nodes = self
            .nodes
            .iter()
            .zip(thresholds)
            .map(|(n, &(a, b))| n.clone().with_thresholds(a, b))
            .collect::<Result<Vec<_>, _>>()?;
        self.rebuild(nodes, self.fusion.clone(), self.max_steps)
    }

    pub fn with_fusion_thresholds(&self, log_alpha: f64, log_beta: f64) -> Result<Self, ScenarioError> {
        let fusion = self.fusion.with_thresholds(log_alpha, log_beta)?;
        self.rebuild(self.nodes.clone(), fusion, self.max_steps)
    }

    pub fn with_max_steps(&self, max_steps: u64) -> Result<Self, ScenarioError> {
        self.rebuild(self.nodes.clone(), self.fusion.clone(), max_steps)
    }
}

/// How a node ended a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeStop {
    Decided { time: u64, decision: Hypothesis },
    /// still running when the fusion center stopped
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialOutcome {
    /// `None` when the trial hit the step cap.
    pub decision: Option<Hypothesis>,
    pub fc_stop: u64,
    pub truncated: bool,
    pub node_stops: Vec<NodeStop>,
}

/// Runs one trial of the full distributed algorithm.
pub fn run_trial(sc: &Scenario, truth: Hypothesis, trial_index: u64, master_seed: u64) -> TrialOutcome {
    let l = sc.num_nodes();
    let samplers: Vec<_> = (0..l).map(|i| sc.observation_law(i, truth).sampler()).collect();
    let mut rngs: Vec<ChaCha8Rng> = (0..l)
        .map(|i| StreamKey::new(master_seed, trial_index, i as u64).rng())
        .collect();
    let noise = sc.fusion.noise_law.sampler();
    let mut noise_rng = StreamKey::new(master_seed, trial_index, NOISE_CHANNEL).rng();

    let mut states = vec![LocalNodeState::default(); l];
    let mut stops = vec![NodeStop::Undecided; l];
    let mut emissions = vec![0.0; l];
    let mut fc = FusionState::default();

    for k in 1..=sc.max_steps {
        for i in 0..l {
            let running = states[i].status.is_running();
            // decided nodes ignore observations, so they draw none
            let x = if running { samplers[i].sample(&mut rngs[i]) } else { 0.0 };
            let (s, e) = local_step(states[i], &sc.nodes[i], x);
            if running {
                if let Some(d) = s.status.decision() {
                    stops[i] = NodeStop::Decided { time: k, decision: d };
                }
            }
            states[i] = s;
            emissions[i] = e;
        }
        let y = superpose_parts(&emissions, noise.sample(&mut noise_rng));
        fc = fusion_step(fc, &sc.fusion, y).expect("fusion center is running inside the loop");
        if let Some(d) = fc.status.decision() {
            return TrialOutcome {
                decision: Some(d),
                fc_stop: k,
                truncated: false,
                node_stops: stops,
            };
        }
    }
    TrialOutcome {
        decision: None,
        fc_stop: sc.max_steps,
        truncated: true,
        node_stops: stops,
    }
}

/// Aggregated Monte Carlo estimate for one hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimEstimate {
    pub hypothesis: Hypothesis,
    /// mean fusion stopping time over non-truncated trials
    pub mean_delay: f64,
    pub delay_se: f64,
    /// P_FA for H0 runs, P_MD for H1 runs
    pub error_prob: f64,
    pub error_se: f64,
    pub trials: u64,
    pub truncated: u64,
    pub master_seed: u64,
    pub unreliable: bool,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    finished: u64,
    sum: u128,
    sum_sq: u128,
    errors: u64,
    truncated: u64,
}

impl Tally {
    fn add(&mut self, o: &TrialOutcome, truth: Hypothesis) {
        if o.truncated {
            self.truncated += 1;
            return;
        }
        self.finished += 1;
        self.sum += o.fc_stop as u128;
        self.sum_sq += (o.fc_stop as u128) * (o.fc_stop as u128);
        if o.decision != Some(truth) {
            self.errors += 1;
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.finished += other.finished;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.errors += other.errors;
        self.truncated += other.truncated;
        self
    }
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
        .install(f)
}

/// Monte Carlo estimate using all available cores.
pub fn estimate(sc: &Scenario, truth: Hypothesis, n_trials: u64, master_seed: u64) -> SimEstimate {
    estimate_with_workers(sc, truth, n_trials, master_seed, rayon::current_num_threads())
}

/// Monte Carlo estimate over trials `0..n_trials` on `workers` threads.
/// The result does not depend on `workers`.
pub fn estimate_with_workers(
    sc: &Scenario,
    truth: Hypothesis,
    n_trials: u64,
    master_seed: u64,
    workers: usize,
) -> SimEstimate {
    assert!(n_trials >= 1, "at least one trial is required");
    let chunks = n_trials.div_ceil(CHUNK);
    let tally = with_pool(workers, || {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut t = Tally::default();
                for i in c * CHUNK..((c + 1) * CHUNK).min(n_trials) {
                    t.add(&run_trial(sc, truth, i, master_seed), truth);
                }
                t
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .fold(Tally::default(), Tally::merge);

    let n = tally.finished;
    let (mean_delay, delay_se) = if n == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let mean = tally.sum as f64 / n as f64;
        let se = if n < 2 {
            0.0
        } else {
            // exact integer sums: n·Σx² - (Σx)² ≥ 0
            let num = (n as u128) * tally.sum_sq - tally.sum * tally.sum;
            let var = num as f64 / (n as f64 * (n - 1) as f64);
            (var / n as f64).sqrt()
        };
        (mean, se)
    };
    let p = tally.errors as f64 / n_trials as f64;
    SimEstimate {
        hypothesis: truth,
        mean_delay,
        delay_se,
        error_prob: p,
        error_se: (p * (1.0 - p) / n_trials as f64).sqrt(),
        trials: n_trials,
        truncated: tally.truncated,
        master_seed,
        unreliable: tally.truncated as f64 / n_trials as f64 >= UNRELIABLE_TRUNCATION,
    }
}

/// One operating point of a threshold sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub node_threshold: f64,
    pub fc_threshold: f64,
    pub h0: SimEstimate,
    pub h1: SimEstimate,
    /// ½(E₀N + E₁N)
    pub edd: f64,
    /// ½(P_FA + P_MD)
    pub pe: f64,
}

/// Estimates both hypotheses at every `(node, fusion)` threshold magnitude
/// pair. Thresholds are applied symmetrically (`|ln α| = |ln β|`).
pub fn sweep(
    sc: &Scenario,
    grid: &[(f64, f64)],
    n_trials: u64,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<SweepRow>, ScenarioError> {
    if grid.is_empty() {
        return Err(ScenarioError::Invalid("sweep grid is empty".into()));
    }
    grid.iter()
        .map(|&(node_t, fc_t)| {
            let s = sc
                .with_node_thresholds(node_t, node_t)?
                .with_fusion_thresholds(fc_t, fc_t)?;
            let h0 = estimate_with_workers(&s, Hypothesis::H0, n_trials, master_seed, workers);
            let h1 = estimate_with_workers(&s, Hypothesis::H1, n_trials, master_seed, workers);
            Ok(SweepRow {
                node_threshold: node_t,
                fc_threshold: fc_t,
                edd: 0.5 * (h0.mean_delay + h1.mean_delay),
                pe: 0.5 * (h0.error_prob + h1.error_prob),
                h0,
                h1,
            })
        })
        .collect()
}

/// Runs a single local node in isolation until it decides, returning its
/// stopping time and decision (`None` at the step cap).
pub fn node_stop(
    node: &LocalNodeParams,
    law: &Dist,
    key: StreamKey,
    max_steps: u64,
) -> Option<(u64, Hypothesis)> {
    let s = law.sampler();
    let mut rng = key.rng();
    let mut st = LocalNodeState::default();
    while st.k < max_steps {
        st = local_step(st, node, s.sample(&mut rng)).0;
        if let Some(d) = st.status.decision() {
            return Some((st.k, d));
        }
    }
    None
}

/// Stopping times of node `l` of `sc` run alone under `truth`, for trials
/// `0..n` (node channel `l`). Order follows the trial index.
pub fn node_stop_samples(
    sc: &Scenario,
    l: usize,
    truth: Hypothesis,
    n: u64,
    master_seed: u64,
    workers: usize,
) -> Vec<Option<(u64, Hypothesis)>> {
    let node = &sc.nodes[l];
    let law = *sc.observation_law(l, truth);
    with_pool(workers, || {
        (0..n)
            .into_par_iter()
            .map(|i| node_stop(node, &law, StreamKey::new(master_seed, i, l as u64), sc.max_steps))
            .collect()
    })
}
