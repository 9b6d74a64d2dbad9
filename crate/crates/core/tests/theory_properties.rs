use npsd_core::presets::{self, Preset};
use npsd_core::theory::{chernoff_rate, error_prob_approx, fusion_drift_profile, FusionDriftProfile};
use npsd_core::{Dist, FusionParams, Hypothesis};
use proptest::prelude::*;

#[test]
fn profile_recursion_is_exact() {
    for p in Preset::ALL {
        let sc = p.scenario();
        for h in [Hypothesis::H0, Hypothesis::H1] {
            let prof = fusion_drift_profile(&sc, h).unwrap();
            let again = FusionDriftProfile::recompute_f_tilde(&prof.drifts, &prof.change_means);
            assert_eq!(prof.f_tilde, again, "{} {:?}", p.name(), h);
        }
    }
}

#[test]
fn chernoff_rates_are_nonnegative() {
    for p in Preset::ALL {
        let sc = p.scenario();
        for h in [Hypothesis::H0, Hypothesis::H1] {
            for (l, n) in sc.nodes().iter().enumerate() {
                let r = chernoff_rate(sc.observation_law(l, h), n.null_law(), n.lambda(), h).unwrap();
                assert!(r > 0.0, "{} {:?} node {l}: {r}", p.name(), h);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn error_brackets_are_ordered_probabilities(
        fc in 1.0f64..30.0,
        node in 5.0f64..40.0,
        var in 1.0f64..30.0,
        mu in 0.5f64..4.0,
    ) {
        let fusion = FusionParams::new(-mu, mu, Dist::gaussian(0.0, var).unwrap(), fc, fc).unwrap();
        let base = Preset::GaussianEqualSnr.scenario();
        let sc = npsd_core::Scenario::new(base.nodes().to_vec(), fusion, base.h1_laws().to_vec(), base.max_steps())
            .unwrap()
            .with_node_thresholds(node, node)
            .unwrap();
        for h in [Hypothesis::H0, Hypothesis::H1] {
            let b = error_prob_approx(&sc, h).unwrap();
            prop_assert!(0.0 <= b.lower && b.lower <= b.upper && b.upper <= 1.0, "{:?}", b);
        }
    }
}

#[test]
fn single_node_preset_has_no_pre_decision_errors() {
    // the transparent fusion center cannot cross on noise alone
    let sc = presets::single_node_gaussian(1.0, 5.0).unwrap();
    let b = error_prob_approx(&sc, Hypothesis::H0).unwrap();
    assert!(b.upper < 1e-12, "{b:?}");
}
