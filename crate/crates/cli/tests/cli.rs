use std::path::Path;
use std::process::Command;

use npsd_cli::config::{from_overrides, Overrides};
use npsd_cli::{execute, parse_str, Command as Cmd, Format};
use npsd_core::Preset;

fn npsd(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_npsd")).args(args).output().expect("binary runs")
}

#[test]
fn golden_headers() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for p in Preset::ALL {
        for c in ["simulate", "sweep", "compare", "theory", "optimize"] {
            let out = npsd(&[c, "--preset", p.name(), "--trials", "1", "--seed", "1", "--workers", "1", "--format", "csv"]);
            assert!(out.status.success(), "{c} {}: {}", p.name(), String::from_utf8_lossy(&out.stderr));
            let text = String::from_utf8(out.stdout).unwrap();
            let head: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
            let golden = std::fs::read_to_string(dir.join(format!("{}.{c}.txt", p.name()))).unwrap();
            assert_eq!(head, golden, "{c} {}", p.name());
        }
    }
}

#[test]
fn simulate_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, workers) in [(&a, "1"), (&b, "4")] {
        let out = npsd(&["simulate", "--trials", "1000", "--seed", "7", "--workers", workers, "--out", path.to_str().unwrap()]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn every_command_is_deterministic_across_workers() {
    for cmd in [Cmd::Simulate, Cmd::Theory, Cmd::Sweep, Cmd::Optimize, Cmd::Compare] {
        for format in [Format::Csv, Format::Json] {
            let render = |workers| {
                let cfg = from_overrides(&Overrides {
                    command: Some(cmd),
                    trials: Some(300),
                    seed: Some(99),
                    workers: Some(workers),
                    format: Some(format),
                    ..Default::default()
                })
                .unwrap();
                execute(&cfg).unwrap().0
            };
            let one = render(1);
            assert_eq!(one, render(1), "{cmd:?}");
            assert_eq!(one, render(3), "{cmd:?}");
        }
    }
}

#[test]
fn bad_config_gives_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[scenario]\npreset = \"binomial\"\nnode_treshold = 3.0\n").unwrap();
    let out = npsd(&["simulate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let rec: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(rec["error"]["kind"], "parse");
    assert_eq!(rec["error"]["key"], "node_treshold");
    assert_eq!(rec["error"]["line"], 3);
}

#[test]
fn missing_config_is_io_error() {
    let out = npsd(&["theory", "--config", "/nonexistent/npsd.toml"]);
    assert_eq!(out.status.code(), Some(1));
    let rec: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(rec["error"]["kind"], "io");
}

#[test]
fn truncation_sets_warning_flag_but_succeeds() {
    let src = "[run]\ncommand = \"simulate\"\ntrials = 50\n[scenario]\npreset = \"gaussian-equal-snr\"\nmax_steps = 5\n";
    let cfg = parse_str(src, &Overrides::default()).unwrap();
    let (bytes, meta) = execute(&cfg).unwrap();
    assert!(!meta.warnings.is_empty());
    let first = String::from_utf8(bytes).unwrap().lines().next().unwrap().to_string();
    assert!(first.ends_with(&format!("warnings={}", meta.warnings.len())), "{first}");
}

#[test]
fn sweep_error_rate_falls_with_threshold() {
    let src = "[run]\ncommand = \"sweep\"\ntrials = 4000\nseed = 3\n[scenario]\npreset = \"gaussian-equal-snr\"\n[sweep]\nfc_thresholds = [5.0, 10.0, 15.0, 20.0]\n";
    let cfg = parse_str(src, &Overrides::default()).unwrap();
    let rows = npsd_core::montecarlo::sweep(&cfg.scenario, &cfg.sweep_grid(), cfg.trials, cfg.master_seed, 4).unwrap();
    assert_eq!(rows.len(), 4);
    for w in rows.windows(2) {
        let se = (w[0].h0.error_se.powi(2) + w[0].h1.error_se.powi(2)).sqrt() / 2.0;
        assert!(w[1].pe <= w[0].pe + 3.0 * se, "{} then {}", w[0].pe, w[1].pe);
    }
    let (bytes, _) = execute(&cfg).unwrap();
    assert_eq!(String::from_utf8(bytes).unwrap().lines().count(), 2 + 4);
}

#[test]
fn compare_single_node_h0_slope() {
    let cfg = from_overrides(&Overrides {
        command: Some(Cmd::Compare),
        preset: Some("single-node-gaussian".into()),
        trials: Some(4000),
        seed: Some(5),
        workers: Some(4),
        ..Default::default()
    })
    .unwrap();
    let rows = npsd_cli::commands::compare(&cfg, &mut Vec::new()).unwrap();
    let slope = rows
        .iter()
        .find(|r| r.quantity == "node_delay_slope" && r.hypothesis == npsd_core::Hypothesis::H0)
        .unwrap();
    assert_eq!(slope.approx, Some(2.0));
    assert!(slope.relative_error.unwrap().abs() <= 0.10, "{slope:?}");
}

#[test]
fn config_file_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    let out_path = dir.path().join("design.json");
    std::fs::write(
        &cfg_path,
        format!(
            "[run]\ncommand = \"optimize\"\nout = {:?}\n[scenario]\npreset = \"gaussian-equal-snr\"\n[composite]\nnoise_var_lo = 0.5\nnoise_var_hi = 2.0\nsignal_var_lo = 3.0\nsignal_var_hi = 6.0\n",
            out_path.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = npsd(&["--config", cfg_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
    assert_eq!(doc["command"], "optimize");
    assert!((doc["result"]["y_opt"].as_f64().unwrap() - 0.6).abs() < 1e-12);
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
}
