use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn squash(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_squash")).args(args).output().unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = squash(args);
    assert!(
        out.status.success(),
        "squash {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

fn verdict(v: &Value) -> &str {
    v["results"][0]["verdict"].as_str().unwrap()
}

#[test]
fn photon_pair_is_certified() {
    let v = json(&["verify-tomography", "--seed", "1"]);
    assert_eq!(v["command"], "verify-tomography");
    assert_eq!(verdict(&v), "entangled (certified lift)");
}

#[test]
fn noisy_werner_pair_is_not_detected() {
    let v = json(&["verify-tomography", "--seed", "1", "--werner", "0.9"]);
    assert_eq!(verdict(&v), "not detected");
}

#[test]
fn three_photon_admixture_is_still_certified() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "mix.toml",
        r#"
seed = 2
[state]
kind = "mixture"
[[state.components]]
weight = 0.9
state = { kind = "photons", terms = [ { a = [1, 0], b = [0, 1] }, { a = [0, 1], b = [1, 0] } ] }
[[state.components]]
weight = 0.1
state = { kind = "photons", terms = [ { a = [2, 0], b = [0, 1] } ] }
"#,
    );
    let v = json(&["verify-tomography", "--config", &cfg]);
    assert_eq!(verdict(&v), "entangled (certified lift)");
    assert_eq!(v["results"][0]["detection"], "npt");
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "seed = \"x\"\n");
    for args in [
        vec!["run", "--config", "/nonexistent/squash.toml"],
        vec!["run", "--config", bad.as_str()],
        vec!["bound"],
        vec!["verify-tomography"],
        vec!["diamond-norm", "--map", "spiral:2"],
    ] {
        let out = squash(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("squash: "));
    }
}

#[test]
fn solver_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "starved.toml",
        "seed = 1\n[tolerances]\nmax_iterations = 1\n[[analyses]]\nkind = \"threshold\"\n",
    );
    let out = squash(&["ion-trap-threshold", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn pair_weight_falls_with_efficiency() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.toml",
        "seed = 3\nparameter = \"eta\"\nvalues = [1.0, 0.8, 0.6, 0.4]\nmetrics = [\"pair-weight\"]\n[model]\nn_max = 2\n",
    );
    let out = squash(&["sweep", "--config", &cfg]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rows.headers().unwrap().iter().collect::<Vec<_>>(), ["eta", "pair_weight"]);
    let w: Vec<f64> = rows.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    assert_eq!(w.len(), 4);
    assert!((w[0] - 1.0).abs() < 1e-12);
    assert!(w.windows(2).all(|p| p[1] < p[0]), "{w:?}");
}

#[test]
fn timing_is_opt_in() {
    let plain = json(&["negativity", "--werner", "0.3"]);
    assert!(plain.get("wall_time_seconds").is_none());
    let timed = json(&["negativity", "--werner", "0.3", "--timing"]);
    assert!(timed["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn diamond_norm_of_transpose() {
    let v = json(&["diamond-norm", "--map", "transpose:2", "--seed", "1"]);
    let value = v["results"][0]["value"]["value"].as_f64().unwrap();
    assert!((value - 2.0).abs() < 1e-6);
    assert_eq!(v["results"][0]["value"]["evidence"], "certified");
}

#[test]
fn threshold_csv_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("th.csv");
    let o = squash(&[
        "ion-trap-threshold",
        "--tol",
        "1e-3",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.starts_with("model,mode,threshold,lo,hi\n"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn werner_negativity_sweep_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let values: Vec<String> = (0..=10).map(|k| format!("{:.1}", k as f64 / 10.0)).collect();
    let cfg = write(
        dir.path(),
        "p.toml",
        &format!(
            "seed = 1\nparameter = \"p\"\nvalues = [{}]\nmetrics = [\"negativity\"]\n",
            values.join(", ")
        ),
    );
    let out = squash(&["sweep", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rows = csv::Reader::from_reader(out.stdout.as_slice());
    let mut n = 0;
    for r in rows.records() {
        let r = r.unwrap();
        let (p, neg): (f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        let oracle = ((2.0 - 3.0 * p) / 4.0).max(0.0);
        assert!((neg - oracle).abs() < 1e-12, "p = {p}: {neg} vs {oracle}");
        n += 1;
    }
    assert_eq!(n, 11);

    let one = write(dir.path(), "one.toml", "seed = 1\nparameter = \"p\"\nvalues = [0.5]\nmetrics = [\"negativity\"]\n");
    let out = squash(&["sweep", "--config", &one]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 2);
}
