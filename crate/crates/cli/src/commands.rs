//! Command dispatch.

use npsd_core::composite::{self, CompositeDesign};
use npsd_core::montecarlo::{estimate_with_workers, node_stop_samples, sweep, SimEstimate, SweepRow};
use npsd_core::theory::{
    delay_slope, edd_approx, error_prob_approx, node_stopping_gaussian, theory_report, HypothesisReport,
    RateFunctions, TheoryReport,
};
use npsd_core::{Hypothesis, Scenario};
use serde::Serialize;

use crate::config::{Command, Format, RunConfig};
use crate::error::CliError;
use crate::output::{render_csv, render_json, scenario_hash, Cell, Meta, Table};

pub const SIMULATE_HEADER: &[&str] = &[
    "hypothesis",
    "trials",
    "mean_delay",
    "delay_se",
    "error_prob",
    "error_se",
    "truncated",
    "unreliable",
];
pub const THEORY_HEADER: &[&str] = &["hypothesis", "quantity", "node", "value"];
pub const SWEEP_HEADER: &[&str] = &[
    "node_threshold",
    "fc_threshold",
    "edd",
    "pe",
    "h0_edd",
    "h0_edd_se",
    "p_fa",
    "h1_edd",
    "h1_edd_se",
    "p_md",
    "truncated",
];
pub const OPTIMIZE_HEADER: &[&str] = &["quantity", "value"];
pub const COMPARE_HEADER: &[&str] = &[
    "hypothesis",
    "quantity",
    "node",
    "simulated",
    "simulated_se",
    "approx",
    "approx_lower",
    "approx_upper",
    "relative_error",
];

fn run_err(e: impl std::fmt::Display) -> CliError {
    CliError::Run(e.to_string())
}

fn truncation_warnings(est: &SimEstimate, what: &str, warnings: &mut Vec<String>) {
    if est.truncated > 0 {
        warnings.push(format!(
            "{what} {}: {} of {} trials hit the step cap{}",
            est.hypothesis.label(),
            est.truncated,
            est.trials,
            if est.unreliable { "; estimate unreliable" } else { "" }
        ));
    }
}

/// Runs the configured command and returns the rendered output.
pub fn execute(cfg: &RunConfig) -> Result<(Vec<u8>, Meta), CliError> {
    let mut meta = Meta {
        command: command_name(cfg.command),
        scenario_hash: scenario_hash(&cfg.scenario),
        master_seed: cfg.master_seed,
        warnings: Vec::new(),
    };
    let bytes = match cfg.command {
        Command::Simulate => {
            let est = simulate(cfg, &mut meta.warnings);
            emit(cfg, &meta, &est, || simulate_table(&est))
        }
        Command::Theory => {
            let rep = theory_report(&cfg.scenario).map_err(run_err)?;
            emit(cfg, &meta, &rep, || theory_table(&rep))
        }
        Command::Sweep => {
            let rows = sweep(&cfg.scenario, &cfg.sweep_grid(), cfg.trials, cfg.master_seed, cfg.workers)
                .map_err(run_err)?;
            for r in &rows {
                let what = format!("node T={} fc T={}", r.node_threshold, r.fc_threshold);
                truncation_warnings(&r.h0, &what, &mut meta.warnings);
                truncation_warnings(&r.h1, &what, &mut meta.warnings);
            }
            emit(cfg, &meta, &rows, || sweep_table(&rows))
        }
        Command::Optimize => {
            let design = optimize(cfg)?;
            meta.warnings.extend(design.warnings.iter().cloned());
            emit(cfg, &meta, &design, || optimize_table(&design))
        }
        Command::Compare => {
            let rows = compare(cfg, &mut meta.warnings)?;
            emit(cfg, &meta, &rows, || compare_table(&rows))
        }
    };
    Ok((bytes, meta))
}

fn emit<T: Serialize>(cfg: &RunConfig, meta: &Meta, result: &T, table: impl FnOnce() -> Table) -> Vec<u8> {
    match cfg.output_format {
        Format::Json => render_json(meta, result),
        Format::Csv => render_csv(meta, &table()),
    }
}

pub fn command_name(c: Command) -> &'static str {
    match c {
        Command::Simulate => "simulate",
        Command::Theory => "theory",
        Command::Sweep => "sweep",
        Command::Optimize => "optimize",
        Command::Compare => "compare",
    }
}

fn simulate(cfg: &RunConfig, warnings: &mut Vec<String>) -> Vec<SimEstimate> {
    cfg.hypothesis
        .list()
        .into_iter()
        .map(|h| {
            let e = estimate_with_workers(&cfg.scenario, h, cfg.trials, cfg.master_seed, cfg.workers);
            truncation_warnings(&e, "simulate", warnings);
            e
        })
        .collect()
}

fn simulate_table(est: &[SimEstimate]) -> Table {
    let mut t = Table::new(SIMULATE_HEADER);
    for e in est {
        t.push(vec![
            e.hypothesis.label().into(),
            e.trials.into(),
            e.mean_delay.into(),
            e.delay_se.into(),
            e.error_prob.into(),
            e.error_se.into(),
            e.truncated.into(),
            e.unreliable.into(),
        ]);
    }
    t
}

fn theory_rows(t: &mut Table, r: &HypothesisReport) {
    let h = r.hypothesis.label();
    let mut push = |q: &str, node: Cell, v: Cell| t.push(vec![h.into(), q.into(), node, v]);
    for d in &r.node_drifts {
        push("drift_mean", d.node_index.into(), d.mean.into());
        push("drift_variance", d.node_index.into(), d.variance.into());
    }
    let per_node: [(&str, &Vec<Option<f64>>); 3] = [
        ("error_exponent", &r.error_exponents),
        ("delay_slope", &r.delay_slopes),
        ("chernoff_rate", &r.chernoff_rates),
    ];
    for (q, vals) in per_node {
        for (l, v) in vals.iter().enumerate() {
            push(q, l.into(), (*v).into());
        }
    }
    for (l, s) in r.node_stopping.iter().enumerate() {
        push("stop_mean", l.into(), s.map(|s| s.mean).into());
        push("stop_variance", l.into(), s.map(|s| s.variance).into());
    }
    if let Some(p) = &r.profile {
        for (j, d) in p.drifts.iter().enumerate() {
            push("fc_drift", j.into(), (*d).into());
        }
    }
    push("edd_approx", Cell::Empty, r.edd_approx.into());
    push("error_lower", Cell::Empty, r.error_bounds.map(|b| b.lower).into());
    push("error_upper", Cell::Empty, r.error_bounds.map(|b| b.upper).into());
    let rf = r.rate_functions.as_ref();
    push("theta", Cell::Empty, rf.map(|f| f.theta).into());
    push("delta_a", Cell::Empty, rf.map(|f| f.delta_a).into());
    push("mean_abs", Cell::Empty, rf.map(|f| f.mean_abs).into());
    push("asymptotic_delay_bound", Cell::Empty, r.asymptotic_delay_bound.into());
}

fn theory_table(rep: &TheoryReport) -> Table {
    let mut t = Table::new(THEORY_HEADER);
    theory_rows(&mut t, &rep.h0);
    theory_rows(&mut t, &rep.h1);
    t
}

fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(SWEEP_HEADER);
    for r in rows {
        t.push(vec![
            r.node_threshold.into(),
            r.fc_threshold.into(),
            r.edd.into(),
            r.pe.into(),
            r.h0.mean_delay.into(),
            r.h0.delay_se.into(),
            r.h0.error_prob.into(),
            r.h1.mean_delay.into(),
            r.h1.delay_se.into(),
            r.h1.error_prob.into(),
            (r.h0.truncated + r.h1.truncated).into(),
        ]);
    }
    t
}

/// Minimax composite design; `θ` and `Δ(𝒜)` come from the configured
/// scenario's fusion center.
pub fn optimize(cfg: &RunConfig) -> Result<CompositeDesign, CliError> {
    let sc = &cfg.scenario;
    let r0 = RateFunctions::new(sc, Hypothesis::H0).map_err(run_err)?;
    let r1 = RateFunctions::new(sc, Hypothesis::H1).map_err(run_err)?;
    let c = &cfg.composite;
    composite::optimize_with_x(
        &c.bounds(),
        c.prior_h0,
        sc.num_nodes(),
        [r0.theta, r1.theta],
        [r0.delta_a, r1.delta_a],
        c.x,
    )
    .map_err(run_err)
}

fn optimize_table(d: &CompositeDesign) -> Table {
    let mut t = Table::new(OPTIMIZE_HEADER);
    let (d0, d1) = d.denominators();
    for (q, v) in [
        ("sigma0_sq", d.sigma0_sq),
        ("gamma_lambda", d.gamma_lambda),
        ("lambda", d.lambda),
        ("gamma", d.gamma),
        ("gamma_hat_sq", d.gamma_hat_sq),
        ("x", d.x),
        ("y_opt", d.y_opt),
        ("upsilon", d.upsilon),
        ("a", d.a),
        ("b", d.b),
        ("A", d.weight_a),
        ("B", d.weight_b),
        ("h0_denominator", d0),
        ("h1_denominator", d1),
    ] {
        t.push(vec![q.into(), v.into()]);
    }
    t
}

/// One simulated quantity next to its analytical counterpart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub hypothesis: Hypothesis,
    pub quantity: &'static str,
    pub node: Option<usize>,
    pub simulated: f64,
    pub simulated_se: f64,
    /// point approximation; the bracket midpoint for error probabilities
    pub approx: Option<f64>,
    pub approx_lower: Option<f64>,
    pub approx_upper: Option<f64>,
    /// `(simulated - approx) / approx`
    pub relative_error: Option<f64>,
}

impl CompareRow {
    fn new(h: Hypothesis, quantity: &'static str, node: Option<usize>, sim: (f64, f64), approx: Option<f64>) -> Self {
        Self {
            hypothesis: h,
            quantity,
            node,
            simulated: sim.0,
            simulated_se: sim.1,
            approx,
            approx_lower: None,
            approx_upper: None,
            relative_error: approx.map(|a| (sim.0 - a) / a),
        }
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = if xs.len() > 1 {
        xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, v)
}

fn compare_node_rows(sc: &Scenario, cfg: &RunConfig, h: Hypothesis, rows: &mut Vec<CompareRow>, warnings: &mut Vec<String>) {
    for (l, node) in sc.nodes().iter().enumerate() {
        let samples = node_stop_samples(sc, l, h, cfg.trials, cfg.master_seed, cfg.workers);
        let times: Vec<f64> = samples.iter().flatten().map(|&(k, _)| k as f64).collect();
        if times.len() < samples.len() {
            warnings.push(format!(
                "compare {} node {l}: {} of {} runs hit the step cap",
                h.label(),
                samples.len() - times.len(),
                samples.len()
            ));
        }
        if times.is_empty() {
            continue;
        }
        let (m, v) = mean_var(&times);
        let se = (v / times.len() as f64).sqrt();
        let law = sc.observation_law(l, h);
        let threshold = match h {
            Hypothesis::H0 => node.log_beta(),
            Hypothesis::H1 => node.log_alpha(),
        };
        let slope = delay_slope(law, node.null_law(), node.lambda(), h).ok();
        rows.push(CompareRow::new(h, "node_delay_slope", Some(l), (m / threshold, se / threshold), slope));
        let gauss = node_stopping_gaussian(node, law, h).ok();
        rows.push(CompareRow::new(h, "node_stop_mean", Some(l), (m, se), gauss.map(|g| g.0)));
        rows.push(CompareRow::new(h, "node_stop_variance", Some(l), (v, f64::NAN), gauss.map(|g| g.1)));
    }
}

pub fn compare(cfg: &RunConfig, warnings: &mut Vec<String>) -> Result<Vec<CompareRow>, CliError> {
    let sc = &cfg.scenario;
    let mut rows = Vec::new();
    for h in cfg.hypothesis.list() {
        let est = estimate_with_workers(sc, h, cfg.trials, cfg.master_seed, cfg.workers);
        truncation_warnings(&est, "compare", warnings);
        rows.push(CompareRow::new(h, "edd", None, (est.mean_delay, est.delay_se), edd_approx(sc, h).ok()));
        let bounds = error_prob_approx(sc, h).ok();
        let q = match h {
            Hypothesis::H0 => "p_fa",
            Hypothesis::H1 => "p_md",
        };
        let mid = bounds.map(|b| 0.5 * (b.lower + b.upper));
        let mut row = CompareRow::new(h, q, None, (est.error_prob, est.error_se), mid);
        row.approx_lower = bounds.map(|b| b.lower);
        row.approx_upper = bounds.map(|b| b.upper);
        rows.push(row);
        compare_node_rows(sc, cfg, h, &mut rows, warnings);
    }
    Ok(rows)
}

fn compare_table(rows: &[CompareRow]) -> Table {
    let mut t = Table::new(COMPARE_HEADER);
    for r in rows {
        t.push(vec![
            r.hypothesis.label().into(),
            r.quantity.into(),
            r.node.map_or(Cell::Empty, Cell::from),
            r.simulated.into(),
            r.simulated_se.into(),
            r.approx.into(),
            r.approx_lower.into(),
            r.approx_upper.into(),
            r.relative_error.into(),
        ]);
    }
    t
}
