//! Distributed nonparametric sequential detection over a multiple-access
//! channel.
//!
//! Local nodes run an entropy-based sequential test against a known null
//! law, transmit their decisions over a coherent MAC, and a fusion center
//! runs an SPRT on the received superposition.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod composite;
pub mod detection;
pub mod dist;
pub mod mac;
pub mod montecarlo;
pub mod numerics;
pub mod presets;
pub mod rng;
pub mod theory;

pub use detection::{FusionParams, Hypothesis, LocalNodeParams};
pub use dist::Dist;
pub use montecarlo::{Scenario, SimEstimate, TrialOutcome};
pub use presets::Preset;
