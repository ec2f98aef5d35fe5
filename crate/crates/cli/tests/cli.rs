use std::path::Path;
use std::process::{Command, Output};

fn nullity(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nullity"));
    cmd.args(args).env_remove("NULLITY_OUT_DIR");
    if let Some(dir) = out_dir {
        cmd.env("NULLITY_OUT_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn theory_regular_three() {
    let out = nullity(&["theory", "--model", "regular:d=3", "--json", "-"], None);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["theory"]["max_m"].as_f64().unwrap().abs() < 1e-10);
    assert!(v["theory"]["point_prediction"].is_number());
}

#[test]
fn theory_writes_curve_under_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = nullity(&["theory", "--model", "regular:d=3", "--grid", "11", "--csv", "curve.csv"], Some(dir.path()));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,M");
    assert_eq!(lines.len(), 12);
    // M(0) = M(1) = 0 for regular graphs.
    assert_eq!(lines[1], "0,0");
    let last: f64 = lines[11].split(',').nth(1).unwrap().parse().unwrap();
    assert!(last.abs() < 1e-12);
}

#[test]
fn rde_record_start() {
    let out = nullity(
        &["rde", "--model", "regular:d=3", "--start-p", "record:1", "--pool", "500", "--iters", "5", "--resamples", "500", "--json", "-"],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["root_mean"]["mean"].as_f64(), Some(0.0));
    assert_eq!(v["trace"].as_array().unwrap().len(), 6);
    let bad = nullity(&["rde", "--model", "regular:d=3", "--start-p", "record:9"], None);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn rank_star_and_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let star = dir.path().join("star.txt");
    std::fs::write(&star, "0 1\n0 2\n0 3\n").unwrap();
    let out = nullity(&["rank", "--edges", star.to_str().unwrap(), "--json", "-"], None);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["kernel_dim"], 2);
    assert_eq!(v["core_size"], 0);

    let c4 = dir.path().join("c4.txt");
    std::fs::write(&c4, "0 1\n1 2\n2 3\n0 3\n").unwrap();
    let ev = dir.path().join("ev.csv");
    let out = nullity(
        &["rank", "--edges", c4.to_str().unwrap(), "--no-ks", "--json", "-", "--eigenvalues", ev.to_str().unwrap()],
        None,
    );
    assert_eq!(json(&out)["kernel_dim"], 2);
    let lambdas: Vec<f64> = std::fs::read_to_string(&ev).unwrap().lines().skip(1).map(|l| l.parse().unwrap()).collect();
    for (got, want) in lambdas.iter().zip([-2.0, 0.0, 0.0, 2.0]) {
        assert!((got - want).abs() < 1e-10);
    }
}

#[test]
fn errors_exit_two() {
    assert_eq!(nullity(&["rank", "--edges", "/nonexistent/edges.txt"], None).status.code(), Some(2));
    assert_eq!(nullity(&["theory", "--model", "poisson:c=oops"], None).status.code(), Some(2));
    assert_eq!(nullity(&["frobnicate"], None).status.code(), Some(2));
}

#[test]
fn pipeline_writes_report_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.json");
    std::fs::write(
        &config,
        r#"{"source": "poisson:c=2", "rde": {"pool": 2000, "iters": 20, "resamples": 2000},
            "spectral": {"samples": 40, "max_depth": 4},
            "simulation": {"n": 600, "seeds": 2},
            "tolerances": {"theory_vs_rde": 0.05, "theory_vs_simulation": 0.05, "bracket_slack": 0.05}}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let run = || {
        nullity(
            &["pipeline", "--config", config.to_str().unwrap(), "--seed", "5", "--out", out_dir.to_str().unwrap()],
            None,
        )
    };
    let first = run();
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stdout));
    let report = std::fs::read(out_dir.join("report.json")).unwrap();
    for f in ["m_curve.csv", "verdicts.csv", "rde_trace.csv", "spectral.csv", "simulation.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let v: serde_json::Value = serde_json::from_slice(&report).unwrap();
    assert_eq!(v["schema"], "nullity-report/1");
    assert_eq!(v["config"]["master_seed"], 5);
    assert_eq!(v["simulation"]["runs"].as_array().unwrap().len(), 2);

    let second = run();
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(std::fs::read(out_dir.join("report.json")).unwrap(), report);
}

#[test]
fn pipeline_failed_verdict_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.json");
    // An impossible tolerance on the simulated point value.
    std::fs::write(
        &config,
        r#"{"source": "er:c=1", "rde": {"enabled": false}, "spectral": {"enabled": false},
            "simulation": {"n": 300, "seeds": 2}, "tolerances": {"theory_vs_simulation": 0.0}}"#,
    )
    .unwrap();
    let out = nullity(&["pipeline", "--config", config.to_str().unwrap(), "--workers", "1"], Some(dir.path()));
    assert_eq!(out.status.code(), Some(1));
    assert!(dir.path().join("report.json").exists());
}
