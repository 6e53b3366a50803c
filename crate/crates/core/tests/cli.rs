use std::path::PathBuf;
use std::process::{Command, Output};

fn htype(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_htype")).args(args).output().expect("spawn htype")
}

fn htype_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_htype")).args(args).env("HTYPE_THREADS", threads).output().expect("spawn htype")
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("htype-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn flat_identities_exit_zero() {
    let o = htype(&["check", "--model", "group:2,1", "--suite", "identities"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn collinear_fit_exits_one_with_rank_message() {
    let o = htype(&["fit-c1", "--models", "group:4,3", "qhopf-s7@1", "qhopf-s7@2", "--s-nodes", "16"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("rank-deficient"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(htype(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(htype(&["check", "--model"]).status.code(), Some(2));
    assert_eq!(htype(&["invariants", "--model", "torus"]).status.code(), Some(2));
    assert_eq!(htype(&["invariants"]).status.code(), Some(2));
    assert_eq!(htype(&["check", "--model", "hopf-s3", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(htype(&["ball-volume", "--model", "hopf-s3", "--radii", "0.4:0.1:3"]).status.code(), Some(2));
}

#[test]
fn failing_check_exits_one_and_lists_residuals() {
    let o = htype(&["check", "--model", "hopf-s3", "--suite", "flatness", "--points", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("check failed: flat"));
}

#[test]
fn config_file_and_flag_precedence() {
    let d = scratch("config");
    let cfg = d.join("run.cfg");
    std::fs::write(&cfg, "# identities on the Heisenberg group\nmodel = group:2,1\nsuite = identities\npoints = 3\n").unwrap();
    let out = d.join("r.json");
    let o = htype(&["check", "--config", cfg.to_str().unwrap(), "--points", "2", "--json", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r["config"]["points"], "2");
    assert_eq!(r["config"]["model"], "group:2,1");
    assert_eq!(r["schema"], "htype-report");

    std::fs::write(&cfg, "model = group:2,1\nflavour = mint\n").unwrap();
    let o = htype(&["check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown key"));
}

#[test]
fn clifford_writes_schema() {
    let d = scratch("clifford");
    let out = d.join("rep.json");
    let o = htype(&["clifford", "--n", "8", "--m", "3", "--check", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["n"], 8);
    assert_eq!(v["m"], 3);
    assert_eq!(v["J"].as_array().unwrap().len(), 3);
    assert_eq!(htype(&["clifford", "--n", "6", "--m", "3"]).status.code(), Some(1));
}

#[test]
fn heat_kernel_origin() {
    let o = htype(&["heat-kernel", "--n", "2", "--m", "1", "--t", "1", "--at", "0,0,0", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["payload"]["value"].as_f64().unwrap() - 1.0 / 32.0).abs() < 1e-14);
}

#[test]
fn ball_volume_csv_and_deterministic_json() {
    let d = scratch("volume");
    let run = |tag: &str, threads: &str| {
        let j = d.join(format!("{tag}.json"));
        let c = d.join(format!("{tag}.csv"));
        let o = htype_env(
            &["ball-volume", "--model", "hopf-s3", "--radii", "0.1:0.4:4", "--budget", "2e5", "--seed", "9", "--json", j.to_str().unwrap(), "--csv", c.to_str().unwrap()],
            threads,
        );
        assert!(o.status.code() == Some(0) || o.status.code() == Some(1), "{}", stderr(&o));
        let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&j).unwrap()).unwrap();
        v["timestamp"] = serde_json::Value::Null;
        v["config"]["json"] = serde_json::Value::Null;
        v["config"]["csv"] = serde_json::Value::Null;
        (serde_json::to_string(&v).unwrap(), std::fs::read_to_string(&c).unwrap())
    };
    let (a, csv) = run("a", "1");
    let (b, _) = run("b", "3");
    assert_eq!(a, b);
    assert!(csv.starts_with("r,vol,stderr\n"));
    assert_eq!(csv.lines().count(), 5);
}
