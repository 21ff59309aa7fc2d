use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use suvsim_cli::config::{Experiment, ExperimentKind, RunConfig};
use suvsim_cli::output::{list_files, RunStatus, MANIFEST};
use suvsim_cli::run;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_suvsim"))
}

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn collapse_cfg(n: Vec<f64>, eps: Vec<f64>) -> RunConfig {
    let mut cfg = RunConfig::with_defaults(ExperimentKind::CollapseSweep);
    if let Experiment::CollapseSweep(p) = &mut cfg.experiment {
        p.n_grid = n;
        p.epsilon_grid = eps;
    }
    cfg
}

/// Every file's bytes, manifest excluded (it carries timestamps).
fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    list_files(dir)
        .unwrap()
        .into_iter()
        .filter(|f| f != MANIFEST)
        .map(|f| {
            let bytes = fs::read(dir.join(&f)).unwrap();
            (f, bytes)
        })
        .collect()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn equilibrium_two_by_two() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::with_defaults(ExperimentKind::EquilibriumScan);
    if let Experiment::EquilibriumScan(p) = &mut cfg.experiment {
        p.n_grid = vec![10.0, 100.0];
        p.b_grid = vec![1e-3, 1e-2];
    }
    let m = run(&cfg, tmp.path()).unwrap();
    let dir = tmp.path().join("equilibrium-scan");
    let text = fs::read_to_string(dir.join("limit_scan.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "N,B,cutoff,op_modulus,converged");
    assert_eq!(lines.len(), 5);
    assert_eq!(m.runs.len(), 4);
    assert!(m.runs.iter().all(|r| r.status == RunStatus::Ok));
    assert!(dir.join(MANIFEST).is_file());
    assert_eq!(m.config_hash, cfg.hash());
}

#[test]
fn collapse_fit_has_unit_slopes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = collapse_cfg(vec![50.0, 100.0], vec![1e-3, 1e-2]);
    let m = run(&cfg, tmp.path()).unwrap();
    assert_eq!(m.failed(), 0);
    let dir = tmp.path().join("collapse-sweep");
    let traj = list_files(&dir).unwrap().into_iter().filter(|f| f.starts_with("trajectories/")).count();
    assert_eq!(traj, 4);
    let fit = json(&dir.join("timescale_fit.json"));
    let primary = fit["fits"].as_array().unwrap().iter().find(|f| f["gamma"] == 0.5).unwrap();
    let (se, sn) = (primary["fit"]["slope_epsilon"].as_f64().unwrap(), primary["fit"]["slope_n"].as_f64().unwrap());
    assert!((se + 1.0).abs() < 0.05, "epsilon slope {se}");
    assert!((sn + 1.0).abs() < 0.1, "N slope {sn}");
    assert_eq!(primary["fit"]["sufficient"], false);
}

#[test]
fn reruns_and_worker_counts_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = collapse_cfg(vec![50.0, 100.0], vec![1e-2, 1e-1]);
    cfg.output_dir = Some("a".into());
    run(&cfg, tmp.path()).unwrap();
    let first = snapshot(&tmp.path().join("a"));
    run(&cfg, tmp.path()).unwrap();
    assert_eq!(first, snapshot(&tmp.path().join("a")));

    cfg.workers = 8;
    cfg.seed = 1234;
    cfg.output_dir = Some("b".into());
    run(&cfg, tmp.path()).unwrap();
    let eight = snapshot(&tmp.path().join("b"));
    // config.json records the worker count and seed; everything else matches.
    let strip = |s: Vec<(String, Vec<u8>)>| s.into_iter().filter(|f| f.0 != "config.json").collect::<Vec<_>>();
    assert_eq!(strip(first), strip(eight));
}

#[test]
fn manifest_lists_every_file() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::with_defaults(ExperimentKind::BathDemo);
    if let Experiment::BathDemo(p) = &mut cfg.experiment {
        p.bath_qubits = 3;
        p.samples = 20;
    }
    let m = run(&cfg, tmp.path()).unwrap();
    let dir = tmp.path().join("bath-demo");
    assert_eq!(m.files, list_files(&dir).unwrap());
    let on_disk: Value = json(&dir.join(MANIFEST));
    assert_eq!(on_disk["config_hash"], Value::String(cfg.hash()));
    let round: RunConfig = serde_json::from_str(&fs::read_to_string(dir.join("config.json")).unwrap()).unwrap();
    assert_eq!(round.hash(), cfg.hash());
}

#[test]
fn example_configs_parse_and_match_the_schema_keys() {
    let schema = json(&repo_file("docs/run-config.schema.json"));
    let defs = &schema["$defs"];
    for entry in fs::read_dir(repo_file("configs")).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let cfg = RunConfig::from_json(&text).unwrap_or_else(|e| panic!("{}: {e:?}", path.display()));
        // Canonical form is a fixed point.
        let again = RunConfig::from_json(&cfg.canonical_json()).unwrap();
        assert_eq!(again.canonical_json(), cfg.canonical_json());
        // Every serialized parameter is declared by the schema, and vice versa.
        let v: Value = serde_json::from_str(&cfg.canonical_json()).unwrap();
        let kind = v["experiment"]["kind"].as_str().unwrap();
        let declared = defs[kind]["properties"]["params"]["properties"].as_object().unwrap();
        let used = v["experiment"]["params"].as_object().unwrap();
        let mut a: Vec<&String> = declared.keys().collect();
        let mut b: Vec<&String> = used.keys().collect();
        a.sort();
        b.sort();
        assert_eq!(a, b, "{kind}");
        for top in v.as_object().unwrap().keys() {
            assert!(schema["properties"].get(top).is_some(), "{top}");
        }
    }
}

#[test]
fn zero_epsilon_point_is_flagged_with_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("c.json");
    let cfg = collapse_cfg(vec![50.0], vec![0.0, 1e-1]);
    fs::write(&cfg_path, cfg.canonical_json()).unwrap();
    let status = bin()
        .args(["collapse", "--config"])
        .arg(&cfg_path)
        .env("SUVSIM_OUT_ROOT", tmp.path())
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(3), "{}", String::from_utf8_lossy(&status.stderr));
    let csv = fs::read_to_string(tmp.path().join("collapse-sweep/collapse_times.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("50,0,") && rows[0].ends_with(",failed"), "{}", rows[0]);
    assert!(rows[1].ends_with(",ok"), "{}", rows[1]);
    let m = json(&tmp.path().join("collapse-sweep").join(MANIFEST));
    assert_eq!(m["runs"][0]["status"], "failed");
    assert_eq!(m["runs"][1]["status"], "ok");
}

#[test]
fn config_errors_exit_two_with_a_list() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"schema_version":1,"experiment":{"kind":"pencil","params":{"b_grid":[],"phi0_grid":[2.0, 3.0]}}}"#)
        .unwrap();
    let out = bin().args(["pencil", "--config"]).arg(&bad).env("SUVSIM_OUT_ROOT", tmp.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(v["errors"].as_array().unwrap().len() >= 3, "{v}");

    // Right file, wrong subcommand.
    let out = bin()
        .args(["collapse", "--config"])
        .arg(repo_file("configs/pencil.json"))
        .env("SUVSIM_OUT_ROOT", tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin().args(["equilibrium", "--eps", "0.1"]).env("SUVSIM_OUT_ROOT", tmp.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(list_files(tmp.path()).unwrap().iter().all(|f| f.ends_with(".json") && !f.contains('/')));
}

#[test]
fn overrides_and_plot_subcommand() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["pencil", "--B", "0.01", "--out", "p"])
        .env("SUVSIM_OUT_ROOT", tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("p/pencil.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.starts_with("0.01,")));
    assert!(tmp.path().join("p/plots/pencil.svg").is_file());

    let svg = tmp.path().join("again.svg");
    let st = bin()
        .args(["plot", "--kind", "pencil", "--input"])
        .arg(tmp.path().join("p/pencil.csv"))
        .arg("--out")
        .arg(&svg)
        .status()
        .unwrap();
    assert!(st.success());
    assert_eq!(fs::read(&svg).unwrap(), fs::read(tmp.path().join("p/plots/pencil.svg")).unwrap());

    let missing = bin()
        .args(["plot", "--kind", "collapse", "--input", "/nonexistent.csv", "--out"])
        .arg(&svg)
        .output()
        .unwrap();
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nonexistent"));
}

#[test]
fn plot_failure_leaves_tables_intact() {
    // A collapse sweep whose only point fails still writes a parseable table
    // and an axes-only figure.
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = collapse_cfg(vec![50.0], vec![0.0]);
    if let Experiment::CollapseSweep(p) = &mut cfg.experiment {
        p.budget = 1.0;
    }
    let m = run(&cfg, tmp.path()).unwrap();
    assert_eq!(m.failed(), 1);
    assert!(m.warnings.is_empty(), "{:?}", m.warnings);
    let svg = fs::read_to_string(tmp.path().join("collapse-sweep/plots/collapse_scaling.svg")).unwrap();
    assert!(!svg.contains("<circle"));
}
