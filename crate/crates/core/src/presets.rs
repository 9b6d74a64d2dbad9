//! Built-in scenarios.
//!
//! All multi-node presets use five nodes transmitting `b = ±1`, a fusion
//! center with `μ = ±2` and Gaussian receiver noise of variance 10, node
//! thresholds of 30 and fusion thresholds of 20.

use serde::{Deserialize, Serialize};

use crate::composite::{self, CompositeDesign, CompositeError, PowerBounds};
use crate::detection::{FusionParams, Hypothesis, LocalNodeParams};
use crate::dist::Dist;
use crate::montecarlo::{Scenario, ScenarioError, DEFAULT_MAX_STEPS};

pub const NUM_NODES: usize = 5;
pub const B0: f64 = -1.0;
pub const B1: f64 = 1.0;
pub const MU0: f64 = -2.0;
pub const MU1: f64 = 2.0;
pub const MAC_NOISE_VAR: f64 = 10.0;
pub const NODE_THRESHOLD: f64 = 30.0;
pub const FC_THRESHOLD: f64 = 20.0;
pub const LAMBDA: f64 = 1.0;
/// Per-node channel gains of the unequal-SNR preset, in dB.
pub const UNEQUAL_GAINS_DB: [f64; NUM_NODES] = [0.0, -1.5, -2.5, -4.0, -6.0];
pub const UNEQUAL_LAMBDA: f64 = 0.1;
pub const SINGLE_NODE_THRESHOLD: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Binomial,
    Pareto,
    Lognormal,
    GaussianEqualSnr,
    GaussianUnequalSnr,
    SingleNodeGaussian,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Binomial,
        Preset::Pareto,
        Preset::Lognormal,
        Preset::GaussianEqualSnr,
        Preset::GaussianUnequalSnr,
        Preset::SingleNodeGaussian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Binomial => "binomial",
            Preset::Pareto => "pareto",
            Preset::Lognormal => "lognormal",
            Preset::GaussianEqualSnr => "gaussian-equal-snr",
            Preset::GaussianUnequalSnr => "gaussian-unequal-snr",
            Preset::SingleNodeGaussian => "single-node-gaussian",
        }
    }

    pub fn from_name(name: &str) -> Option<Preset> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    /// `(P0, P1)` of the preset.
    pub fn laws(self) -> (Dist, Dist) {
        let d = match self {
            Preset::Binomial => (Dist::binomial(8, 0.2), Dist::binomial(8, 0.5)),
            Preset::Pareto => (Dist::pareto(2.0, 10.0), Dist::pareto(2.0, 3.0)),
            Preset::Lognormal => (Dist::lognormal(0.0, 3.0), Dist::lognormal(3.0, 3.0)),
            Preset::GaussianEqualSnr | Preset::SingleNodeGaussian => {
                (Dist::gaussian(0.0, 1.0), Dist::gaussian(0.0, 5.0))
            }
            Preset::GaussianUnequalSnr => (Dist::gaussian(0.0, 1.0), Dist::gaussian(1.0, 1.0)),
        };
        (d.0.expect("preset law"), d.1.expect("preset law"))
    }

    pub fn lambda(self) -> f64 {
        match self {
            Preset::GaussianUnequalSnr => UNEQUAL_LAMBDA,
            _ => LAMBDA,
        }
    }

    /// Linear amplitude gains, one per node.
    pub fn gains(self) -> Vec<f64> {
        match self {
            Preset::GaussianUnequalSnr => UNEQUAL_GAINS_DB.iter().map(|&db| db_to_amplitude(db)).collect(),
            Preset::SingleNodeGaussian => vec![1.0],
            _ => vec![1.0; NUM_NODES],
        }
    }

    pub fn scenario(self) -> Scenario {
        let (p0, p1) = self.laws();
        match self {
            Preset::SingleNodeGaussian => single_node(p0, p1, self.lambda(), SINGLE_NODE_THRESHOLD),
            _ => multi_node(p0, p1, self.lambda(), &self.gains()),
        }
        .expect("presets are valid")
    }
}

/// Power bounds of the composite Gaussian scenario; the Gaussian preset
/// laws `N(0,1)` and `N(0,5)` lie inside the resulting classes.
pub const COMPOSITE_BOUNDS: PowerBounds = PowerBounds {
    noise_var_lo: 0.5,
    noise_var_hi: 2.0,
    signal_var_lo: 3.0,
    signal_var_hi: 6.0,
};
pub const COMPOSITE_PRIOR_H0: f64 = 0.5;

/// Minimax design for `pb` with the fusion constants of the standard
/// fusion center.
pub fn composite_design(pb: &PowerBounds, prior_h0: f64) -> Result<CompositeDesign, CompositeError> {
    let sc = Preset::GaussianEqualSnr.scenario();
    let r0 = crate::theory::RateFunctions::new(&sc, Hypothesis::H0).expect("Gaussian rate functions");
    let r1 = crate::theory::RateFunctions::new(&sc, Hypothesis::H1).expect("Gaussian rate functions");
    composite::optimize(pb, prior_h0, NUM_NODES, [r0.theta, r1.theta], [r0.delta_a, r1.delta_a])
}

/// Five nodes observing `N(0,1)` under H0 and `N(0,5)` under H1, running
/// either the optimised composite detector or the unoptimised baseline for
/// the same classes, behind [`standard_fusion`].
pub fn composite_gaussian(
    design: &CompositeDesign,
    optimized: bool,
    node_threshold: f64,
    fc_threshold: f64,
) -> Result<Scenario, ScenarioError> {
    let node = if optimized {
        composite::composite_node(design, node_threshold, node_threshold, B0, B1)
    } else {
        composite::baseline_node(design, node_threshold, node_threshold, B0, B1)
    }
    .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    let (p0, p1) = Preset::GaussianEqualSnr.laws();
    let fusion = standard_fusion().with_thresholds(fc_threshold, fc_threshold)?;
    Scenario::new_unchecked_class(vec![node; NUM_NODES], fusion, vec![p1; NUM_NODES], DEFAULT_MAX_STEPS)?
        .with_true_h0_laws(vec![p0; NUM_NODES])
}

pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// The standard fusion center of the multi-node presets.
pub fn standard_fusion() -> FusionParams {
    FusionParams::new(
        MU0,
        MU1,
        Dist::gaussian(0.0, MAC_NOISE_VAR).expect("valid"),
        FC_THRESHOLD,
        FC_THRESHOLD,
    )
    .expect("valid")
}

/// Identical nodes with the given H1 gains behind [`standard_fusion`].
pub fn multi_node(p0: Dist, p1: Dist, lambda: f64, gains: &[f64]) -> Result<Scenario, ScenarioError> {
    let nodes = gains
        .iter()
        .map(|&g| {
            LocalNodeParams::new(p0, lambda, NODE_THRESHOLD, NODE_THRESHOLD, B0, B1)?.with_gain(g)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Scenario::new(nodes, standard_fusion(), vec![p1; gains.len()], DEFAULT_MAX_STEPS)
}

/// A fusion center that reproduces the single node's decision in the slot
/// the node decides: receiver noise is negligible and one transmission
/// drives the LLR far past the unit thresholds, while silence keeps it
/// near zero.
pub fn transparent_fusion() -> FusionParams {
    FusionParams::new(-1e-10, 1e-10, Dist::gaussian(0.0, 1e-12).expect("valid"), 1.0, 1.0)
        .expect("valid")
}

/// One node with symmetric thresholds `threshold` behind a transparent
/// fusion center, so the system stopping time equals the node's.
pub fn single_node(p0: Dist, p1: Dist, lambda: f64, threshold: f64) -> Result<Scenario, ScenarioError> {
    let node = LocalNodeParams::new(p0, lambda, threshold, threshold, B0, B1)?;
    Scenario::new(vec![node], transparent_fusion(), vec![p1], DEFAULT_MAX_STEPS)
}

/// The single-node Gaussian preset with `N(0,1)` against `N(0, h1_var)`.
pub fn single_node_gaussian(lambda: f64, h1_var: f64) -> Result<Scenario, ScenarioError> {
    single_node(
        Dist::gaussian(0.0, 1.0)?,
        Dist::gaussian(0.0, h1_var)?,
        lambda,
        SINGLE_NODE_THRESHOLD,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_build_and_round_trip_names() {
        for p in Preset::ALL {
            let sc = p.scenario();
            assert_eq!(Preset::from_name(p.name()), Some(p));
            let n = if p == Preset::SingleNodeGaussian { 1 } else { NUM_NODES };
            assert_eq!(sc.num_nodes(), n);
        }
        assert_eq!(Preset::from_name("nope"), None);
    }

    #[test]
    fn unequal_gains() {
        let g = Preset::GaussianUnequalSnr.gains();
        assert_eq!(g[0], 1.0);
        assert!((g[4] - 0.501_187_233_627_272_3).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn composite_scenarios() {
        let d = composite_design(&COMPOSITE_BOUNDS, COMPOSITE_PRIOR_H0).unwrap();
        assert!((d.y_opt - 0.6).abs() < 1e-12);
        let opt = composite_gaussian(&d, true, 10.0, 10.0).unwrap();
        let base = composite_gaussian(&d, false, 10.0, 10.0).unwrap();
        assert_eq!(opt.observation_law(0, Hypothesis::H0), &Dist::gaussian(0.0, 1.0).unwrap());
        assert_eq!(opt.nodes()[0].null_law(), &Dist::gaussian(0.0, 1.25).unwrap());
        assert_eq!(base.nodes()[0].lambda(), d.lambda);
        // both laws are in their classes
        let v0 = d.sigma0_sq;
        assert!(composite::f_center(1.0, v0) <= d.gamma_lambda);
        assert!(composite::f_center(5.0, v0) >= d.lambda);
    }

    #[test]
    fn serde_names_match() {
        for p in Preset::ALL {
            let s = serde_json::to_string(&p).unwrap();
            assert_eq!(s, format!("\"{}\"", p.name()));
        }
    }
}
