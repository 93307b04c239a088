use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_nullflow");

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .output()
        .expect("binary runs")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

const SMALL: [&str; 2] = ["--set", "grid.n_theta=16"];

#[test]
fn run_flow_is_bitwise_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let o = run(&["run-flow", SMALL[0], SMALL[1]], dir);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["history.tsv", "final.txt", "resume.txt", "report.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let (mut ma, mut mb) = (manifest(&a), manifest(&b));
    for m in [&mut ma, &mut mb] {
        m.as_object_mut().unwrap().remove("created_unix");
    }
    assert_eq!(ma, mb);
    assert_eq!(ma["schema"], "nullflow-manifest/1");
    assert_eq!(ma["outputs"].as_array().unwrap().len(), 4);
    assert_eq!(report(&a)["result"]["flow"]["status"]["name"], "converged");
}

#[test]
fn config_hash_ignores_the_output_directory_but_not_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs: Vec<_> = ["a", "b", "c"].iter().map(|d| tmp.path().join(d)).collect();
    run(&["check-energy", SMALL[0], SMALL[1]], &dirs[0]);
    run(&["check-energy", SMALL[0], SMALL[1]], &dirs[1]);
    run(&["check-energy", "--set", "grid.n_theta=18"], &dirs[2]);
    let h: Vec<Value> = dirs.iter().map(|d| manifest(d)["config_sha256"].clone()).collect();
    assert_eq!(h[0], h[1]);
    assert_ne!(h[0], h[2]);
}

#[test]
fn trapped_initial_surface_is_a_precondition_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        &["run-flow", SMALL[0], SMALL[1], "--set", "flow.omega0=\"2 + 0.5*cos(theta)\""],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error[precondition]"));
    let r = report(tmp.path());
    assert_eq!(r["status"], "precondition");
    let nodes = r["error"]["details"]["nodes"].as_array().unwrap();
    assert!(!nodes.is_empty() && nodes.len() < 16);
}

#[test]
fn energy_check_on_schwarzschild_passes_with_zero_slack() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["check-energy", SMALL[0], SMALL[1]], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let r = report(tmp.path());
    assert_eq!(r["result"]["verdict"], "PASS");
    assert_eq!(r["result"]["max_abs_slack"], 0.0);
    let table = fs::read_to_string(tmp.path().join("energy.tsv")).unwrap();
    assert_eq!(table.lines().count(), 602);
}

#[test]
fn affine_gauge_check_fails_and_constructed_gauge_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let affine = run(&["check-gauge", SMALL[0], SMALL[1], "--set", "gauge.kind=affine"], &tmp.path().join("a"));
    assert_eq!(affine.status.code(), Some(1));
    assert_eq!(report(&tmp.path().join("a"))["result"]["verdict"], "FAIL");
    let built = run(&["check-gauge", SMALL[0], SMALL[1]], &tmp.path().join("b"));
    assert_eq!(built.status.code(), Some(0));
}

#[test]
fn invalid_configuration_reports_every_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "[grid]\nn_theta = 3\n[flow]\ncfl = -1.0\nomega0 = \"3 + phi\"\n[extra]\nx = 1\n").unwrap();
    let out = tmp.path().join("out");
    let o = Command::new(BIN)
        .args(["--config", cfg.to_str().unwrap(), "run-flow", "--out", out.to_str().unwrap()])
        .args(["--set", "lambda.step=abc", "--set", "nodot=1"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("6 configuration error(s)"), "{err}");
    for needle in ["n_theta", "cfl", "phi", "extra", "lambda", "nodot"] {
        assert!(err.contains(needle), "missing {needle}: {err}");
    }
    assert!(!out.exists(), "nothing is computed or written for an invalid config");
}

#[test]
fn flags_override_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "[grid]\nn_theta = 12\n[output]\ndir = \"unused\"\n").unwrap();
    let out = tmp.path().join("out");
    let o = Command::new(BIN)
        .current_dir(tmp.path())
        .args(["propagate-background", "--config", cfg.to_str().unwrap(), "-q"])
        .args(["--set", "grid.n_theta=20", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(!tmp.path().join("unused").exists());
    assert_eq!(report(&out)["result"]["grid"]["n_theta"], 20);
}

#[test]
fn resumed_flow_matches_the_straight_run() {
    let tmp = tempfile::tempdir().unwrap();
    let straight = tmp.path().join("straight");
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    let t = ["--set", "flow.max_time=2.0"];
    run(&["run-flow", SMALL[0], SMALL[1], t[0], t[1]], &straight);
    let o = run(&["run-flow", SMALL[0], SMALL[1], "--set", "flow.max_time=1.0"], &first);
    // stopping at max_time is a numerical terminal status
    assert_eq!(o.status.code(), Some(5));
    let resume = format!("flow.resume=\"{}\"", first.join("resume.txt").display());
    run(&["run-flow", SMALL[0], SMALL[1], t[0], t[1], "--set", &resume], &second);
    let load = |d: &Path| nullflow::FieldSnapshot::load(d.join("final.txt")).unwrap();
    let (a, b) = (load(&straight), load(&second));
    assert!((a.meta_f64("t").unwrap() - b.meta_f64("t").unwrap()).abs() < 1e-12);
    let diff = a.field("omega").unwrap().max_abs_diff(&b.field("omega").unwrap()).unwrap();
    assert!(diff < 1e-12, "{diff}");
}

#[test]
fn glued_atlas_exports_and_verifies_again() {
    let tmp = tempfile::tempdir().unwrap();
    let glue = tmp.path().join("glue");
    let o = run(&["glue-foliation", SMALL[0], SMALL[1]], &glue);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(&glue)["result"]["foliation"]["verdict"], "VERIFIED");
    let atlas = format!("foliation.atlas=\"{}\"", glue.join("atlas").display());
    let v = tmp.path().join("verify");
    assert_eq!(run(&["verify", SMALL[0], SMALL[1], "--set", &atlas], &v).status.code(), Some(0));

    // background levels through the horizon fail with witnesses
    let bad = tmp.path().join("bad");
    let o = run(&["verify", SMALL[0], SMALL[1], "--set", "foliation.range=[2.0, 3.0]"], &bad);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(report(&bad)["result"]["foliation"]["witnesses"], 16);
}

#[test]
fn missing_kinematics_is_a_capability_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "run-flow",
            SMALL[0],
            SMALL[1],
            "--set",
            "background.kind=shear-free",
            "--set",
            "background.r0=1",
            "--set",
            "lambda.min=0",
            "--set",
            "flow.omega0=2",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(6));
    assert_eq!(report(tmp.path())["error"]["category"], "capability");
}

#[test]
fn reproduce_runs_a_scenario_and_writes_its_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["reproduce", "uniform-ode"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let checks = fs::read_to_string(tmp.path().join("checks.tsv")).unwrap();
    assert!(checks.lines().skip(1).all(|l| l.contains("\tPASS\t")), "{checks}");
    assert!(run(&["reproduce", "nonsense"], &tmp.path().join("x")).status.code() != Some(0));
}

#[test]
fn reproduce_schwarzschild_mots_asserts_its_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["reproduce", "schwarzschild-mots", "--n-theta", "32", "--no-refine"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(tmp.path());
    let checks = r["result"]["checks"].as_array().unwrap();
    for name in ["mots.converged", "mots.location", "glue.verified", "monitor.positivity"] {
        assert!(checks.iter().any(|c| c["name"] == name && c["pass"] == true), "{name}");
    }
    // wall-clock time is kept out of the hashed outputs
    assert!(manifest(tmp.path())["timings"]["mots.runtime"].is_string());
    assert!(tmp.path().join("artifacts/history.tsv").exists());
}
