use serde::Serialize;

use super::{
    asymptotic_delay_bound, chernoff_rate, delay_slope, drift_stats, edd_approx, error_exponent,
    error_prob_approx, fusion_drift_profile, node_stopping_gaussian, DriftStats, ErrorBounds,
    FusionDriftProfile, RateFunctions, TheoryError,
};
use crate::detection::Hypothesis;
use crate::montecarlo::Scenario;

/// Gaussian approximation of one node's stopping time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeStopping {
    pub mean: f64,
    pub variance: f64,
}

/// Every analytical quantity for one hypothesis. Quantities whose
/// preconditions fail are `None`, with the reason in the report notes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub hypothesis: Hypothesis,
    pub node_drifts: Vec<DriftStats>,
    pub error_exponents: Vec<Option<f64>>,
    pub delay_slopes: Vec<Option<f64>>,
    pub chernoff_rates: Vec<Option<f64>>,
    pub node_stopping: Vec<Option<NodeStopping>>,
    pub profile: Option<FusionDriftProfile>,
    pub edd_approx: Option<f64>,
    /// brackets on P_FA under H0, P_MD under H1
    pub error_bounds: Option<ErrorBounds>,
    pub rate_functions: Option<RateFunctions>,
    pub asymptotic_delay_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryReport {
    pub h0: HypothesisReport,
    pub h1: HypothesisReport,
    pub notes: Vec<String>,
}

fn keep<T>(notes: &mut Vec<String>, what: String, r: Result<T, TheoryError>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("{what}: {e}"));
            None
        }
    }
}

fn hypothesis_report(sc: &Scenario, h: Hypothesis, notes: &mut Vec<String>) -> Result<HypothesisReport, TheoryError> {
    let tag = h.label();
    let mut r = HypothesisReport {
        hypothesis: h,
        node_drifts: Vec::new(),
        error_exponents: Vec::new(),
        delay_slopes: Vec::new(),
        chernoff_rates: Vec::new(),
        node_stopping: Vec::new(),
        profile: None,
        edd_approx: None,
        error_bounds: None,
        rate_functions: None,
        asymptotic_delay_bound: None,
    };
    for (l, node) in sc.nodes().iter().enumerate() {
        let law = sc.observation_law(l, h);
        let (p0, lam) = (node.null_law(), node.lambda());
        r.node_drifts.push(drift_stats(node, law, h, l)?);
        r.error_exponents
            .push(keep(notes, format!("{tag} node {l} error exponent"), error_exponent(law, p0, lam, h)));
        r.delay_slopes
            .push(keep(notes, format!("{tag} node {l} delay slope"), delay_slope(law, p0, lam, h)));
        r.chernoff_rates
            .push(keep(notes, format!("{tag} node {l} Chernoff rate"), chernoff_rate(law, p0, lam, h)));
        r.node_stopping.push(keep(
            notes,
            format!("{tag} node {l} stopping time"),
            node_stopping_gaussian(node, law, h).map(|(mean, variance)| NodeStopping { mean, variance }),
        ));
    }
    r.profile = keep(notes, format!("{tag} drift profile"), fusion_drift_profile(sc, h));
    r.edd_approx = keep(notes, format!("{tag} delay approximation"), edd_approx(sc, h));
    r.error_bounds = keep(notes, format!("{tag} error brackets"), error_prob_approx(sc, h));
    r.rate_functions = keep(notes, format!("{tag} rate functions"), RateFunctions::new(sc, h));
    r.asymptotic_delay_bound = keep(notes, format!("{tag} asymptotic delay bound"), asymptotic_delay_bound(sc, h));
    Ok(r)
}

/// All analytical quantities for a scenario.
pub fn theory_report(sc: &Scenario) -> Result<TheoryReport, TheoryError> {
    let mut notes = Vec::new();
    let h0 = hypothesis_report(sc, Hypothesis::H0, &mut notes)?;
    let h1 = hypothesis_report(sc, Hypothesis::H1, &mut notes)?;
    Ok(TheoryReport { h0, h1, notes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Preset;

    #[test]
    fn reports_for_all_presets() {
        for p in Preset::ALL {
            let r = theory_report(&p.scenario()).unwrap();
            assert_eq!(r.h0.node_drifts.len(), p.scenario().num_nodes());
            assert!(r.h1.edd_approx.is_some(), "{}: {:?}", p.name(), r.notes);
            assert!(r.h0.edd_approx.is_some(), "{}: {:?}", p.name(), r.notes);
        }
    }
}
