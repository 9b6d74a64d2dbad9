//! TOML run configuration.
//!
//! A config names either a preset or an explicit node list, plus optional
//! overrides. Every key is checked: unknown keys, malformed values and
//! inadmissible scenarios are reported with the offending key and line.

use std::path::{Path, PathBuf};

use npsd_core::composite::PowerBounds;
use npsd_core::detection::FusionParams;
use npsd_core::montecarlo::{ScenarioError, DEFAULT_MAX_STEPS};
use npsd_core::presets::{self, Preset};
use npsd_core::{Dist, Hypothesis, LocalNodeParams, Scenario};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_TRIALS: u64 = 10_000;
pub const DEFAULT_FC_SWEEP: [f64; 4] = [5.0, 10.0, 15.0, 20.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Simulate,
    Theory,
    Sweep,
    Optimize,
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum HypothesisSel {
    H0,
    H1,
    Both,
}

impl HypothesisSel {
    pub fn list(self) -> Vec<Hypothesis> {
        match self {
            HypothesisSel::H0 => vec![Hypothesis::H0],
            HypothesisSel::H1 => vec![Hypothesis::H1],
            HypothesisSel::Both => vec![Hypothesis::H0, Hypothesis::H1],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis: Option<HypothesisSel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<Dist>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub null_law: Dist,
    pub h1_law: Dist,
    /// law actually observed under H0; defaults to `null_law`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h0_law: Option<Dist>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fc_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fusion: Option<FusionSpec>,
    #[serde(default, rename = "node", skip_serializing_if = "Vec::is_empty")]
    pub nodes: Vec<NodeSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_thresholds: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fc_thresholds: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositeSpec {
    pub noise_var_lo: f64,
    pub noise_var_hi: f64,
    pub signal_var_lo: f64,
    pub signal_var_hi: f64,
    #[serde(default = "default_prior")]
    pub prior_h0: f64,
    /// overrides `x = 1/Γ²`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
}

fn default_prior() -> f64 {
    presets::COMPOSITE_PRIOR_H0
}

impl CompositeSpec {
    pub fn bounds(&self) -> PowerBounds {
        PowerBounds {
            noise_var_lo: self.noise_var_lo,
            noise_var_hi: self.noise_var_hi,
            signal_var_lo: self.signal_var_lo,
            signal_var_hi: self.signal_var_hi,
        }
    }
}

impl Default for CompositeSpec {
    fn default() -> Self {
        let b = presets::COMPOSITE_BOUNDS;
        Self {
            noise_var_lo: b.noise_var_lo,
            noise_var_hi: b.noise_var_hi,
            signal_var_lo: b.signal_var_lo,
            signal_var_hi: b.signal_var_hi,
            prior_h0: presets::COMPOSITE_PRIOR_H0,
            x: None,
        }
    }
}

/// The file as written.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub scenario: ScenarioSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub composite: Option<CompositeSpec>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub preset: Option<String>,
    pub hypothesis: Option<HypothesisSel>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

/// A fully resolved and validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: ScenarioSpec,
    pub scenario: Scenario,
    pub command: Command,
    pub hypothesis: HypothesisSel,
    pub trials: u64,
    pub master_seed: u64,
    pub workers: usize,
    pub output_path: Option<PathBuf>,
    pub output_format: Format,
    pub sweep: SweepSpec,
    pub composite: CompositeSpec,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

impl RunConfig {
    /// Writes the run back as a config file in which every run setting is
    /// explicit. Parsing the result yields an equal `RunConfig`.
    pub fn to_toml(&self) -> String {
        let file = ConfigFile {
            run: RunSection {
                command: Some(self.command),
                hypothesis: Some(self.hypothesis),
                trials: Some(self.trials),
                seed: Some(self.master_seed),
                workers: Some(self.workers),
                out: self.output_path.clone(),
                format: Some(self.output_format),
            },
            scenario: self.spec.clone(),
            sweep: Some(self.sweep.clone()),
            composite: Some(self.composite.clone()),
        };
        toml::to_string(&file).expect("config serializes")
    }

    /// Node and fusion threshold pairs of a sweep.
    pub fn sweep_grid(&self) -> Vec<(f64, f64)> {
        let node_t = self
            .sweep
            .node_thresholds
            .clone()
            .unwrap_or_else(|| vec![self.scenario.nodes()[0].log_alpha()]);
        let fc_t = self.sweep.fc_thresholds.clone().unwrap_or_else(|| DEFAULT_FC_SWEEP.to_vec());
        node_t
            .iter()
            .flat_map(|&n| fc_t.iter().map(move |&f| (n, f)))
            .collect()
    }
}

pub fn parse_config(path: &Path, ov: &Overrides) -> Result<RunConfig, CliError> {
    let src = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_str(&src, ov)
}

pub fn parse_str(src: &str, ov: &Overrides) -> Result<RunConfig, CliError> {
    let file: ConfigFile = toml::from_str(src).map_err(|e| parse_error(src, &e))?;
    resolve(file, src, ov)
}

/// Default preset when neither a config file nor `--preset` is given.
pub const DEFAULT_PRESET: &str = "gaussian-equal-snr";

/// Builds a run from command-line values alone.
pub fn from_overrides(ov: &Overrides) -> Result<RunConfig, CliError> {
    let mut file = ConfigFile::default();
    file.scenario.preset = Some(DEFAULT_PRESET.into());
    resolve(file, "", ov)
}

fn parse_error(src: &str, e: &toml::de::Error) -> CliError {
    let (line, key) = match e.span() {
        Some(span) => {
            let line = line_of(src, span.start);
            (line, key_on_line(src, line))
        }
        None => (0, String::new()),
    };
    CliError::Parse {
        key,
        line,
        message: e.message().trim().to_string(),
    }
}

/// 1-based line number of byte offset `pos`.
fn line_of(src: &str, pos: usize) -> usize {
    src[..pos.min(src.len())].matches('\n').count() + 1
}

/// The key assigned on `line`, or the table header when there is none.
fn key_on_line(src: &str, line: usize) -> String {
    let text = src.lines().nth(line.saturating_sub(1)).unwrap_or("").trim();
    if text.starts_with('[') {
        return text.trim_matches(|c| c == '[' || c == ']').trim().to_string();
    }
    text.split('=').next().unwrap_or("").trim().to_string()
}

/// Line of `key` inside table `table`. `nth` picks among repeated
/// `[[table]]` entries. Returns 0 when the key does not appear.
fn locate(src: &str, table: &str, nth: usize, key: Option<&str>) -> usize {
    let mut current = String::new();
    let mut seen = 0usize;
    let mut table_line = 0;
    for (i, raw) in src.lines().enumerate() {
        let t = raw.trim();
        if t.starts_with('[') {
            current = t.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if current == table {
                seen += 1;
                if seen == nth + 1 {
                    table_line = i + 1;
                    if key.is_none() {
                        return table_line;
                    }
                }
            }
            continue;
        }
        if current == table && seen == nth + 1 {
            if let Some(k) = key {
                if t.split('=').next().map(str::trim) == Some(k) {
                    return i + 1;
                }
            }
        }
    }
    table_line
}

fn invalid(src: &str, key: &str, table: &str, nth: usize, field: Option<&str>, message: String) -> CliError {
    CliError::Validation {
        key: key.to_string(),
        line: locate(src, table, nth, field),
        message,
    }
}

fn resolve(mut file: ConfigFile, src: &str, ov: &Overrides) -> Result<RunConfig, CliError> {
    if let Some(p) = &ov.preset {
        file.scenario.preset = Some(p.clone());
        file.scenario.nodes.clear();
    }
    let run = &file.run;
    let command = ov.command.or(run.command).ok_or_else(|| CliError::Validation {
        key: "run.command".into(),
        line: 0,
        message: "no command given on the command line or in [run]".into(),
    })?;
    let trials = ov.trials.or(run.trials).unwrap_or(DEFAULT_TRIALS);
    if trials == 0 {
        return Err(invalid(src, "run.trials", "run", 0, Some("trials"), "trials must be at least 1".into()));
    }
    let workers = ov.workers.or(run.workers).unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(invalid(src, "run.workers", "run", 0, Some("workers"), "workers must be at least 1".into()));
    }
    let output_format = ov.format.or(run.format).unwrap_or(match command {
        Command::Theory | Command::Optimize => Format::Json,
        _ => Format::Csv,
    });
    let scenario = build_scenario(&file.scenario, src)?;
    let composite = file.composite.clone().unwrap_or_default();
    composite
        .bounds()
        .validate()
        .map_err(|e| invalid(src, "composite", "composite", 0, None, e.to_string()))?;
    if !(composite.prior_h0 > 0.0 && composite.prior_h0 < 1.0) {
        return Err(invalid(
            src,
            "composite.prior_h0",
            "composite",
            0,
            Some("prior_h0"),
            format!("prior_h0 must lie in (0, 1), got {}", composite.prior_h0),
        ));
    }
    let sweep = file.sweep.clone().unwrap_or_default();
    for (name, list) in [("node_thresholds", &sweep.node_thresholds), ("fc_thresholds", &sweep.fc_thresholds)] {
        if let Some(v) = list {
            if v.is_empty() || v.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                return Err(invalid(
                    src,
                    &format!("sweep.{name}"),
                    "sweep",
                    0,
                    Some(name),
                    "thresholds must be a non-empty list of positive numbers".into(),
                ));
            }
        }
    }
    Ok(RunConfig {
        spec: file.scenario,
        scenario,
        command,
        hypothesis: ov.hypothesis.or(run.hypothesis).unwrap_or(HypothesisSel::Both),
        trials,
        master_seed: ov.seed.or(run.seed).unwrap_or(0),
        workers,
        output_path: ov.out.clone().or_else(|| run.out.clone()),
        output_format,
        sweep,
        composite,
    })
}

fn build_scenario(spec: &ScenarioSpec, src: &str) -> Result<Scenario, CliError> {
    let scenario_err = |key: &str, field: Option<&str>, e: String| invalid(src, key, "scenario", 0, field, e);
    let sc = match (&spec.preset, spec.nodes.is_empty()) {
        (Some(_), false) => {
            return Err(scenario_err(
                "scenario.preset",
                Some("preset"),
                "give either a preset or [[scenario.node]] entries, not both".into(),
            ))
        }
        (None, true) => {
            return Err(scenario_err(
                "scenario",
                None,
                "a preset or at least one [[scenario.node]] entry is required".into(),
            ))
        }
        (Some(name), true) => preset_scenario(spec, name).map_err(|e| {
            let (key, field) = if spec.lambda.is_some() {
                ("scenario.lambda", "lambda")
            } else {
                ("scenario.preset", "preset")
            };
            scenario_err(key, Some(field), e)
        })?,
        (None, false) => node_scenario(spec, src)?,
    };
    let mut sc = sc;
    if let Some(t) = spec.fc_threshold {
        sc = sc
            .with_fusion_thresholds(t, t)
            .map_err(|e| scenario_err("scenario.fc_threshold", Some("fc_threshold"), e.to_string()))?;
    }
    if let Some(m) = spec.max_steps {
        sc = sc
            .with_max_steps(m)
            .map_err(|e| scenario_err("scenario.max_steps", Some("max_steps"), e.to_string()))?;
    }
    Ok(sc)
}

fn fusion_from(spec: &ScenarioSpec, base: &FusionParams) -> Result<FusionParams, String> {
    let Some(f) = &spec.fusion else {
        return Ok(base.clone());
    };
    FusionParams::new(
        f.mu0.unwrap_or(base.mu0),
        f.mu1.unwrap_or(base.mu1),
        f.noise.unwrap_or(base.noise_law),
        base.log_alpha,
        base.log_beta,
    )
    .map_err(|e| format!("[scenario.fusion]: {e}"))
}

fn preset_scenario(spec: &ScenarioSpec, name: &str) -> Result<Scenario, String> {
    let preset = Preset::from_name(name).ok_or_else(|| {
        let known: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
        format!("unknown preset `{name}`; known presets: {}", known.join(", "))
    })?;
    let lambda = spec.lambda.unwrap_or(preset.lambda());
    let (p0, p1) = preset.laws();
    let sc = match preset {
        Preset::SingleNodeGaussian => presets::single_node(p0, p1, lambda, presets::SINGLE_NODE_THRESHOLD),
        _ => presets::multi_node(p0, p1, lambda, &preset.gains()),
    }
    .map_err(|e| e.to_string())?;
    let sc = match spec.node_threshold {
        Some(t) => sc.with_node_thresholds(t, t).map_err(|e| e.to_string())?,
        None => sc,
    };
    if spec.fusion.is_none() {
        return Ok(sc);
    }
    let fusion = fusion_from(spec, sc.fusion())?;
    Scenario::new(sc.nodes().to_vec(), fusion, sc.h1_laws().to_vec(), sc.max_steps()).map_err(|e| e.to_string())
}

fn node_scenario(spec: &ScenarioSpec, src: &str) -> Result<Scenario, CliError> {
    let table = "scenario.node";
    let node_t = spec.node_threshold.unwrap_or(presets::NODE_THRESHOLD);
    let mut nodes = Vec::with_capacity(spec.nodes.len());
    for (i, n) in spec.nodes.iter().enumerate() {
        let key = format!("scenario.node[{i}]");
        let node = LocalNodeParams::new(
            n.null_law,
            n.lambda.or(spec.lambda).unwrap_or(presets::LAMBDA),
            n.log_alpha.unwrap_or(node_t),
            n.log_beta.unwrap_or(node_t),
            n.b0.unwrap_or(presets::B0),
            n.b1.unwrap_or(presets::B1),
        )
        .and_then(|p| p.with_gain(n.gain.unwrap_or(1.0)))
        .map_err(|e| invalid(src, &key, table, i, None, e.to_string()))?;
        nodes.push(node);
    }
    let fusion = fusion_from(spec, &presets::standard_fusion())
        .map_err(|e| invalid(src, "scenario.fusion", "scenario.fusion", 0, None, e))?;
    let h1: Vec<Dist> = spec.nodes.iter().map(|n| n.h1_law).collect();
    let sc = Scenario::new(nodes, fusion, h1, spec.max_steps.unwrap_or(DEFAULT_MAX_STEPS)).map_err(|e| match e {
        ScenarioError::Inadmissible { node, .. } => invalid(
            src,
            &format!("scenario.node[{node}].h1_law"),
            table,
            node,
            Some("h1_law"),
            e.to_string(),
        ),
        other => invalid(src, "scenario", "scenario", 0, None, other.to_string()),
    })?;
    if spec.nodes.iter().all(|n| n.h0_law.is_none()) {
        return Ok(sc);
    }
    let h0 = spec.nodes.iter().map(|n| n.h0_law.unwrap_or(n.null_law)).collect();
    sc.with_true_h0_laws(h0)
        .map_err(|e| invalid(src, "scenario.node.h0_law", table, 0, Some("h0_law"), e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(cmd: Command) -> Overrides {
        Overrides {
            command: Some(cmd),
            ..Default::default()
        }
    }

    #[test]
    fn preset_equal_snr() {
        let cfg = parse_str("[scenario]\npreset = \"gaussian-equal-snr\"\n", &ov(Command::Simulate)).unwrap();
        let sc = &cfg.scenario;
        assert_eq!(sc.num_nodes(), 5);
        for n in sc.nodes() {
            assert_eq!((n.b0(), n.b1()), (-1.0, 1.0));
            assert_eq!(n.null_law(), &Dist::gaussian(0.0, 1.0).unwrap());
        }
        assert_eq!((sc.fusion().mu0, sc.fusion().mu1), (-2.0, 2.0));
        assert_eq!(sc.h1_laws()[0], Dist::gaussian(0.0, 5.0).unwrap());
        assert_eq!(cfg.output_format, Format::Csv);
        assert_eq!(cfg.trials, DEFAULT_TRIALS);
    }

    #[test]
    fn preset_unequal_gains() {
        let cfg = parse_str("[scenario]\npreset = \"gaussian-unequal-snr\"\n", &ov(Command::Theory)).unwrap();
        let gains: Vec<f64> = cfg.scenario.nodes().iter().map(|n| n.gain()).collect();
        for (g, db) in gains.iter().zip([0.0, -1.5, -2.5, -4.0, -6.0]) {
            assert!((g - 10f64.powf(db / 20.0)).abs() < 1e-15);
        }
        assert_eq!(cfg.output_format, Format::Json);
    }

    #[test]
    fn equal_laws_are_inadmissible() {
        let src = r#"
[scenario]
lambda = 1.0

[[scenario.node]]
null_law = { family = "gaussian", mean = 0.0, var = 1.0 }
h1_law = { family = "gaussian", mean = 0.0, var = 1.0 }
"#;
        match parse_str(src, &ov(Command::Simulate)) {
            Err(CliError::Validation { key, line, .. }) => {
                assert_eq!(key, "scenario.node[0].h1_law");
                assert_eq!(line, 7);
            }
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_names_key_and_line() {
        let src = "[scenario]\npreset = \"binomial\"\nthreshhold = 3\n";
        match parse_str(src, &ov(Command::Simulate)) {
            Err(CliError::Parse { key, line, message }) => {
                assert_eq!(key, "threshhold");
                assert_eq!(line, 3);
                assert!(message.contains("threshhold"), "{message}");
            }
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_value() {
        let src = "[run]\ntrials = \"many\"\n[scenario]\npreset = \"pareto\"\n";
        match parse_str(src, &ov(Command::Simulate)) {
            Err(CliError::Parse { key, line, .. }) => assert_eq!((key.as_str(), line), ("trials", 2)),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_preset() {
        let err = parse_str("[scenario]\npreset = \"gauss\"\n", &ov(Command::Simulate)).unwrap_err();
        assert!(matches!(err, CliError::Validation { ref key, line: 2, .. } if key == "scenario.preset"), "{err:?}");
    }

    #[test]
    fn overrides_win() {
        let src = "[run]\ntrials = 5\nseed = 3\n[scenario]\npreset = \"binomial\"\n";
        let o = Overrides {
            command: Some(Command::Sweep),
            trials: Some(9),
            preset: Some("lognormal".into()),
            ..Default::default()
        };
        let cfg = parse_str(src, &o).unwrap();
        assert_eq!((cfg.trials, cfg.master_seed), (9, 3));
        assert_eq!(cfg.spec.preset.as_deref(), Some("lognormal"));
        assert_eq!(cfg.sweep_grid().len(), 4);
    }

    #[test]
    fn explicit_nodes_and_fusion() {
        let src = r#"
[run]
command = "simulate"
[scenario]
node_threshold = 12.0
fc_threshold = 7.0
[scenario.fusion]
noise = { family = "gaussian", mean = 0.0, var = 4.0 }
[[scenario.node]]
null_law = { family = "pareto", scale = 2.0, shape = 10.0 }
h1_law = { family = "pareto", scale = 2.0, shape = 3.0 }
[[scenario.node]]
null_law = { family = "binomial", trials = 8, p = 0.2 }
h1_law = { family = "binomial", trials = 8, p = 0.5 }
h0_law = { family = "binomial", trials = 8, p = 0.25 }
log_beta = 9.0
"#;
        let cfg = parse_str(src, &Overrides::default()).unwrap();
        let sc = &cfg.scenario;
        assert_eq!(sc.num_nodes(), 2);
        assert_eq!(sc.nodes()[1].log_beta(), 9.0);
        assert_eq!(sc.nodes()[0].log_alpha(), 12.0);
        assert_eq!(sc.fusion().log_alpha, 7.0);
        assert_eq!(sc.fusion().noise_law, Dist::gaussian(0.0, 4.0).unwrap());
        assert_eq!(sc.observation_law(1, Hypothesis::H0), &Dist::binomial(8, 0.25).unwrap());
    }

    #[test]
    fn round_trip() {
        let src = r#"
[run]
command = "sweep"
seed = 11
[scenario]
preset = "gaussian-equal-snr"
node_threshold = 25.0
[sweep]
fc_thresholds = [5.0, 10.0]
[composite]
noise_var_lo = 0.5
noise_var_hi = 2.0
signal_var_lo = 3.0
signal_var_hi = 6.0
"#;
        let cfg = parse_str(src, &Overrides { workers: Some(3), ..Default::default() }).unwrap();
        let again = parse_str(&cfg.to_toml(), &Overrides::default()).unwrap();
        assert_eq!(cfg, again);
    }
}
