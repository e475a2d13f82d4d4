use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn deffuant(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deffuant"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn read(p: &Path) -> Vec<u8> {
    fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn simulate_is_bitwise_reproducible_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let common = ["simulate", "--sites", "200", "--t-max", "30", "--replicas", "3", "--seed", "11", "--trace-replicas", "3"];
    let mut args_a = common.to_vec();
    args_a.extend(["--threads", "1", "--out", a.to_str().unwrap()]);
    let mut args_b = common.to_vec();
    args_b.extend(["--threads", "3", "--out", b.to_str().unwrap()]);
    assert_eq!(code(&deffuant(&args_a)), 0);
    assert_eq!(code(&deffuant(&args_b)), 0);

    let strip_threads = |p: &Path| {
        let mut v: serde_json::Value = serde_json::from_slice(&read(p)).unwrap();
        v["config"]["threads"] = serde_json::Value::Null;
        v["config"]["out"] = serde_json::Value::Null;
        v
    };
    assert_eq!(strip_threads(&a.join("summary.json")), strip_threads(&b.join("summary.json")));
    for r in 0..3 {
        let rd = format!("replica_{r:04}");
        for f in ["timeseries.csv", "tracker_trace.csv"] {
            assert_eq!(read(&a.join(&rd).join(f)), read(&b.join(&rd).join(f)), "{rd}/{f}");
        }
    }
    assert!(a.join("timing.json").exists());
}

#[test]
fn summary_has_required_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = deffuant(&["simulate", "--sites", "100", "--t-max", "20", "--replicas", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&read(&out.join("summary.json"))).unwrap();
    assert_eq!(v["config"]["sites"], 100);
    let th = v["thresholds"].as_array().unwrap();
    assert_eq!(th.len(), 4);
    for t in th {
        let e = &t["exceedance"];
        let p = e["estimate"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert!(e["wilson_low"].as_f64().unwrap() <= p && p <= e["wilson_high"].as_f64().unwrap());
    }
    assert!(v["total_events"].as_u64().unwrap() > 0);
    let ts = fs::read_to_string(out.join("replica_0000/timeseries.csv")).unwrap();
    assert!(ts.starts_with("t,max_gap,n_gaps_above_theta,mean_abs_opinion\n"));
    let tr = fs::read_to_string(out.join("replica_0000/tracker_trace.csv")).unwrap();
    assert!(tr.starts_with("t,class_id,position,gap\n"));
    assert!(!out.join("replica_0001/tracker_trace.csv").exists());
}

#[test]
fn config_file_merges_with_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out = dir.path().join("m");
    fs::write(&cfg, r#"{"sites": 50, "t_max": 5, "theta": 0.7, "boundary": "segment"}"#).unwrap();
    let o = deffuant(&["simulate", "--config", cfg.to_str().unwrap(), "--theta", "0.9", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&read(&out.join("summary.json"))).unwrap();
    assert_eq!(v["config"]["theta"], 0.9);
    assert_eq!(v["config"]["sites"], 50);
    assert_eq!(v["config"]["t_max"], 5.0);
    assert_eq!(v["config"]["boundary"], "segment");
}

#[test]
fn invalid_configs_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for args in [
        vec!["simulate", "--theta", "2.5", "--out", out],
        vec!["simulate", "--replicas", "0", "--out", out],
        vec!["simulate", "--t-max", "-1", "--out", out],
        vec!["simulate", "--boundary", "torus", "--out", out],
        vec!["c0", "--mu-plus", "0", "--out", out],
        vec!["forced-increase", "--mu-plus", "0", "--out", out],
    ] {
        assert_eq!(code(&deffuant(&args)), 2, "{args:?}");
    }
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"sitez": 10}"#).unwrap();
    assert_eq!(code(&deffuant(&["simulate", "--config", bad.to_str().unwrap(), "--out", out])), 2);
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let under_file = blocker.join("sub");
    assert_eq!(code(&deffuant(&["c0", "--out", under_file.to_str().unwrap()])), 2);
}

#[test]
fn overflow_aborts_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = deffuant(&["simulate", "--sites", "8", "--t-max", "5000", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("aborted at t ="));
}

#[test]
fn c0_prints_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let o = deffuant(&["c0", "--mu-plus", "0.25", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("c* = 0.3678"), "{stdout}");
    assert!(stdout.contains("escape bound = 0.5000"), "{stdout}");
    let v: serde_json::Value = serde_json::from_slice(&read(&dir.path().join("c0.json"))).unwrap();
    assert!(v["certificate"]["phi_value"].as_f64().unwrap() < 0.0);
}

#[test]
fn forced_increase_and_small_verify_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&deffuant(&["forced-increase", "--out", out])), 0);
    let v: serde_json::Value = serde_json::from_slice(&read(&dir.path().join("forced_increase.json"))).unwrap();
    assert_eq!(v["k"], 5);
    assert!(v["final_gap"].as_f64().unwrap() > 7.0);

    let o = deffuant(&["verify", "--sample-scale", "0.05", "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let v: serde_json::Value = serde_json::from_slice(&read(&dir.path().join("verify.json"))).unwrap();
    assert_eq!(v["passed"], true);
    for c in v["checks"].as_array().unwrap() {
        assert!(c["samples"].as_u64().unwrap() >= 1);
        assert!(c["worst_margin"].as_f64().unwrap() >= 0.0);
    }
}
