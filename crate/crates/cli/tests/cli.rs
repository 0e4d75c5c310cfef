use std::path::Path;
use std::process::{Command, Output};

use glt::catalog::{self, EXPERIMENTS};
use glt::config::{self, Params};
use serde_json::Value;

fn glt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glt")).args(args).output().expect("spawn glt")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn model_snippet(kind: &str) -> &'static str {
    match kind {
        "majumdar-ghosh" | "heisenberg" => "l = 8",
        "transverse-ising" => "l = 6\nh = 2.0",
        "xxz-torus" => "lx = 3\nly = 3",
        _ => "",
    }
}

fn minimal(e: &catalog::Experiment, with_optional: bool) -> String {
    let mut t = format!("experiment = \"{}\"\n\n[model]\nkind = \"{}\"\n{}\n\n[params]\n", e.kind, e.models[0], model_snippet(e.models[0]));
    for (k, v) in e.required {
        t.push_str(&format!("{k} = {v}\n"));
    }
    if with_optional {
        for o in e.optional {
            t.push_str(&format!("{} = {}\n", o.key, o.example));
        }
    }
    t
}

#[test]
fn list_matches_golden_file() {
    let out = glt(&["list"]);
    assert!(out.status.success());
    let golden = include_str!("golden/list.txt");
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden);
    let bare = glt(&[]);
    assert_eq!(String::from_utf8(bare.stdout).unwrap(), golden);
    assert_eq!(golden.lines().filter(|l| !l.is_empty() && !l.starts_with(' ')).count(), 3 + 7);
}

#[test]
fn catalog_matches_the_run_schema() {
    for e in EXPERIMENTS {
        let full = config::parse(&minimal(e, true), None).unwrap_or_else(|err| panic!("{}: {err}", e.kind));
        assert_eq!(full.kind, e.kind);
        let cfg = config::parse(&minimal(e, false), None).unwrap();
        let keys: Vec<String> = match serde_json::to_value(&cfg.params).unwrap() {
            Value::Object(o) => o.keys().cloned().collect(),
            other => panic!("{other}"),
        };
        let mut listed: Vec<String> = e.required.iter().map(|r| r.0.to_string()).chain(e.optional.iter().map(|o| o.key.to_string())).collect();
        listed.sort();
        assert_eq!(keys, listed, "{}", e.kind);
        assert!(matches!(
            (&cfg.params, e.kind),
            (Params::LrBound(_), "lr-bound")
                | (Params::CorrDecay(_), "corr-decay")
                | (Params::Lsm(_), "lsm")
                | (Params::SpectralFlow(_), "spectral-flow")
                | (Params::Berry(_), "berry")
                | (Params::Hall(_), "hall")
                | (Params::Transport(_), "transport")
        ));
        for m in e.models {
            let text = format!("experiment = \"{}\"\n[model]\nkind = \"{m}\"\n{}\n[params]\n{}", e.kind, model_snippet(m), e.required.iter().map(|(k, v)| format!("{k} = {v}\n")).collect::<String>());
            config::parse(&text, None).unwrap_or_else(|err| panic!("{} with {m}: {err}", e.kind));
        }
    }
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = write(dir.path(), "bad.toml", "experiment = \"lsm\"\n[model]\nkind = \"heisenberg\"\nl = 8\n[params]\nsizes = [8, \n");
    let out = glt(&["run", &cfg, "--output", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["line"].is_u64());
}

#[test]
fn unknown_kind_names_the_nearest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "k.toml", "experiment = \"spectral-flwo\"\n[model]\nkind = \"heisenberg\"\nl = 8\n");
    let out = glt(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    let msg = err["error"]["message"].as_str().unwrap();
    assert!(msg.contains("line 1") && msg.contains("`spectral-flow`"), "{msg}");
}

#[test]
fn invalid_model_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "m.toml", "experiment = \"lsm\"\n[model]\nkind = \"majumdar-ghosh\"\nl = 7\n");
    let out = glt(&["run", &cfg, "--output", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn numeric_failure_exits_1_with_module_payload() {
    let dir = tempfile::tempdir().unwrap();
    // d(0, π) = 0 at mass 0: the gap closes on the grid.
    let cfg = write(dir.path(), "g.toml", "experiment = \"berry\"\n[model]\nkind = \"two-level\"\nmass = 0.0\n[params]\nn = 4\n");
    let out_dir = dir.path().join("o");
    let out = glt(&["run", &cfg, "--output", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out_dir.exists());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "gap-closure");
}

fn data_rows(csv: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    (header, lines.map(|l| l.split(',').map(str::to_string).collect()).collect())
}

#[test]
fn lsm_heisenberg_eight_is_orthogonal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "lsm.toml", "experiment = \"lsm\"\nseed = 5\n[model]\nkind = \"heisenberg\"\nl = 8\n");
    let o = dir.path().join("o");
    let out = glt(&["run", &cfg, "--output", o.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&std::fs::read(o.join("lsm_report.json")).unwrap()).unwrap();
    assert!(report["reports"][0]["overlap"].as_f64().unwrap() < 1e-8);
    assert_eq!(report["seed"], 5);
    assert_eq!(report["config_sha256"].as_str().unwrap().len(), 64);
    let manifest: Value = serde_json::from_slice(&std::fs::read(o.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["model"]["l"], 8);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert!(std::fs::read_to_string(o.join("run.log")).unwrap().contains("wall_time_s="));
}

#[test]
fn lightcone_exact_is_below_every_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "lr.toml",
        "experiment = \"lr-bound\"\n[model]\nkind = \"majumdar-ghosh\"\nl = 10\n[params]\ndistances = [2, 5]\ntimes = [0.5, 1.0, 2.0]\n",
    );
    let o = dir.path().join("o");
    let out = glt(&["run", &cfg, "--output", o.to_str().unwrap(), "--seed", "11"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(o.join("lightcone.csv")).unwrap();
    assert!(text.lines().next().unwrap().contains("seed=11"));
    let (header, rows) = data_rows(&text);
    assert_eq!(rows.len(), 6);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let bound_cols: Vec<usize> = header.iter().enumerate().filter(|(_, h)| h.starts_with("exp_bound_mu_") || *h == "series_total").map(|(i, _)| i).collect();
    assert_eq!(bound_cols.len(), 5);
    for r in &rows {
        let exact: f64 = r[col("exact")].parse().unwrap();
        for &c in &bound_cols {
            assert!(exact <= r[c].parse::<f64>().unwrap());
        }
        assert_eq!(r[col("violations")], "0");
    }
}

#[test]
fn seed_flag_overrides_and_every_file_is_stamped() {
    let dir = tempfile::tempdir().unwrap();
    let text = "experiment = \"berry\"\nseed = 3\n[model]\nkind = \"two-level\"\n[params]\nn = 6\n";
    let cfg = write(dir.path(), "b.toml", text);
    let o = dir.path().join("o");
    assert!(glt(&["run", &cfg, "--output", o.to_str().unwrap(), "--seed", "8"]).status.success());
    let hash = config::parse(text, None).unwrap().hash;
    for name in ["berry_grid.csv", "berry_summary.json", "manifest.json"] {
        let body = std::fs::read_to_string(o.join(name)).unwrap();
        assert!(body.contains(&hash), "{name}");
    }
    let s: Value = serde_json::from_slice(&std::fs::read(o.join("berry_summary.json")).unwrap()).unwrap();
    assert_eq!(s["seed"], 8);
    assert_eq!(s["chern"].as_i64().unwrap().abs(), 1);
}

#[test]
fn threads_flag_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "f.toml", "experiment = \"spectral-flow\"\n[model]\nkind = \"heisenberg\"\nl = 6\n[params]\ngrid_points = 8\n");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(glt(&["run", &cfg, "--output", a.to_str().unwrap(), "--threads", "1"]).status.success());
    assert!(glt(&["--threads", "3", "run", &cfg, "--output", b.to_str().unwrap()]).status.success());
    for name in ["spectral_flow.csv", "spectral_flow.json", "manifest.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}
