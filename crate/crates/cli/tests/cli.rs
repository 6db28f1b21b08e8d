use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn iet(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iet"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn csv_column(path: &Path, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let i = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[i].to_string()).collect()
}

#[test]
fn classes_counts_and_hubs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = iet(&["classes", "--d", "4"], tmp.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("vertices 7"));

    let o = iet(&["classes", "--d", "2"], tmp.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("vertices 1"));

    let o = iet(&["classes", "--d", "5"], tmp.path());
    let s = stdout(&o);
    assert!(s.contains("left hub present: true"), "{s}");
    assert!(s.contains("right hub present: true"), "{s}");
    assert!(s.contains("every vertex 2-in/2-out: true"), "{s}");
}

#[test]
fn classes_budget_exit() {
    let tmp = tempfile::tempdir().unwrap();
    let o = iet(&["classes", "--d", "6", "--budget", "3"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn induct_single_step() {
    let tmp = tempfile::tempdir().unwrap();
    let o = iet(&["induct", "--lengths", "2/3,1/3", "--perm", "s2", "--steps", "1"], tmp.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("step 1: winner 1"), "{}", stdout(&o));
    assert_eq!(csv_column(&tmp.path().join("moves.csv"), "winner"), vec!["1"]);
}

#[test]
fn induct_zero_steps_is_identity() {
    let tmp = tempfile::tempdir().unwrap();
    let o = iet(&["induct", "--lengths", "1/2,1/3,1/6", "--perm", "s3", "--steps", "0"], tmp.path());
    assert!(o.status.success());
    assert!(csv_column(&tmp.path().join("moves.csv"), "winner").is_empty());
    assert_eq!(manifest(tmp.path())["status"], "ok");
}

#[test]
fn induct_until_balanced() {
    let tmp = tempfile::tempdir().unwrap();
    let o = iet(&["induct", "--lengths", "5/13,3/13,4/13,1/13", "--perm", "s4", "--until", "balanced:10"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o).lines().find(|l| l.starts_with("balance ratio")).map(str::to_string).unwrap();
    let ratio: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!(ratio <= 10.0, "{line}");
}

#[test]
fn induct_tie_is_undefined() {
    let tmp = tempfile::tempdir().unwrap();
    let o = iet(&["induct", "--lengths", "1/2,1/2", "--perm", "s2", "--steps", "3"], tmp.path());
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(manifest(tmp.path())["status"], "failed");
}

#[test]
fn induct_needs_stop_rule() {
    let tmp = tempfile::tempdir().unwrap();
    let o = iet(&["induct", "--lengths", "2/3,1/3", "--perm", "s2"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn construct_reference_run() {
    let tmp = tempfile::tempdir().unwrap();
    let o = iet(&["construct"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("condition * (4) B'_k ratio: pass"));
    let stages = tmp.path().join("stages.csv");
    for col in ["first_spread", "last_spread"] {
        let v: Vec<f64> = csv_column(&stages, col).iter().map(|s| s.parse().unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]), "{col} {v:?}");
    }
    let moved: Vec<f64> = csv_column(&stages, "movement").iter().filter(|s| !s.is_empty()).map(|s| s.parse().unwrap()).collect();
    assert!(moved.windows(2).all(|w| w[1] < w[0]), "{moved:?}");
    assert!(tmp.path().join("run.json").exists());
}

#[test]
fn construct_stage_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let o = iet(&["construct", "--step-budget", "20"], tmp.path());
    assert_eq!(o.status.code(), Some(4));
    let m = manifest(tmp.path());
    assert_eq!(m["status"], "failed");
    assert!(m["results"]["failure"].as_str().unwrap().contains("20 steps"));
}

#[test]
fn verify_exact_suites() {
    let tmp = tempfile::tempdir().unwrap();
    let o = iet(&["verify", "symplectic", "--paths", "200"], tmp.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("invariance failures: 0"));

    let o = iet(&["verify", "volume", "--d", "2", "--paths", "200"], tmp.path());
    assert!(o.status.success());
    assert_eq!(manifest(tmp.path())["status"], "ok");
}

#[test]
fn verify_jacobian_consistent() {
    let tmp = tempfile::tempdir().unwrap();
    let o = iet(&["verify", "jacobian", "--d", "3", "--samples", "1e6"], tmp.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("consistent"));
}

#[test]
fn verify_unknown_suite() {
    let tmp = tempfile::tempdir().unwrap();
    let o = iet(&["verify", "nonsense"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn estimate_fixtures() {
    let tmp = tempfile::tempdir().unwrap();
    let o = iet(&["estimate-dim", "--fixture", "cantor"], tmp.path());
    assert!(o.status.success());
    let v: f64 = csv_column(&tmp.path().join("estimates.csv"), "box_dimension")[0].parse().unwrap();
    assert!((v - 2f64.ln() / 3f64.ln()).abs() < 0.02, "{v}");

    let o = iet(&["estimate-dim", "--fixture", "single"], tmp.path());
    assert!(o.status.success());
    let e: f64 = csv_column(&tmp.path().join("estimates.csv"), "ball_mass_exponent")[0].parse().unwrap();
    assert!((e - 2.0).abs() < 0.05, "{e}");
}

#[test]
fn estimate_from_run() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    assert!(iet(&["construct"], &run).status.success());
    let dim = tmp.path().join("dim");
    let m = run.join("manifest.json");
    let o = iet(&["estimate-dim", "--manifest", m.to_str().unwrap(), "--planes", "1"], &dim);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rbar: Vec<f64> = csv_column(&dim.join("levels.csv"), "rbar").iter().map(|s| s.parse().unwrap()).collect();
    assert!(!rbar.is_empty());
    assert!(rbar.windows(2).all(|w| w[1] <= w[0]), "{rbar:?}");
}

#[test]
fn estimate_missing_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.json");
    let o = iet(&["estimate-dim", "--manifest", missing.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn rerun_reproduces_files() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(iet(&["induct", "--lengths", "5/13,3/13,4/13,1/13", "--perm", "s4", "--until", "balanced:4"], &a).status.success());
    let m = a.join("manifest.json");
    let o = iet(&["rerun", "--manifest", m.to_str().unwrap()], &b);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["manifest.json", "trace.json", "moves.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}
