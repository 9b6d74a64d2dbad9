//! Ideal coherent multiple-access channel: node transmissions superpose
//! and the fusion center adds its receiver noise.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelSlot {
    pub emissions: Vec<f64>,
    pub noise: f64,
}

impl ChannelSlot {
    pub fn new(emissions: Vec<f64>, noise: f64) -> Self {
        Self { emissions, noise }
    }
}

/// MAC output for one slot: the sum of all transmissions plus noise.
pub fn superpose(slot: &ChannelSlot) -> f64 {
    superpose_parts(&slot.emissions, slot.noise)
}

#[inline]
pub(crate) fn superpose_parts(emissions: &[f64], noise: f64) -> f64 {
    emissions.iter().sum::<f64>() + noise
}
