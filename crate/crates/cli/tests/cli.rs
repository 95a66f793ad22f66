use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use clap::Parser;
use sgm_cli::{Cli, Command as Sub};

fn sgm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgm"))
        .args(args)
        .env("SGM_LOG", "error")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = sgm(args);
    assert!(
        out.status.success(),
        "sgm {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn parses_flags_and_defaults() {
    let cli = Cli::try_parse_from(["sgm", "estimate", "--data", "x.csv", "--out", "o"]).unwrap();
    let Sub::Estimate(a) = cli.command else { panic!("wrong command") };
    assert_eq!((a.method.as_str(), a.rho.as_str(), a.tuning.eps.as_str(), a.tuning.d), ("sgm", "auto", "auto", 2));

    let cli = Cli::try_parse_from([
        "sgm", "evaluate", "--model", "3", "--n", "50", "--p", "20", "--reps", "4", "--method", "naive", "--out", "o",
        "--workers", "2",
    ])
    .unwrap();
    let Sub::Evaluate(a) = cli.command else { panic!("wrong command") };
    assert_eq!((a.p, a.reps, a.tuning.workers), (Some(20), 4, Some(2)));

    assert!(Cli::try_parse_from(["sgm", "score", "--data", "x.csv", "--i", "1"]).is_err());
    assert!(Cli::try_parse_from(["sgm", "estimate", "--bogus"]).is_err());
}

#[test]
fn simulate_writes_data_truth_and_replays() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sim");
    ok(&["simulate", "--model", "1", "--n", "40", "--seed", "3", "--out", s(&out)]);

    assert_eq!(read(&out, "truth.csv"), "i,j\n1,2\n1,3\n1,4\n2,4\n");
    let data = read(&out, "data.csv");
    let lines: Vec<&str> = data.lines().collect();
    assert_eq!(lines[0], "x1,x2,x3,x4,x5");
    assert_eq!(lines.len(), 41);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 5));

    let again = tmp.path().join("again");
    ok(&["simulate", "--replay", s(&out.join("run.json")), "--out", s(&again)]);
    assert_eq!(read(&again, "data.csv"), data);
}

#[test]
fn estimate_score_and_replay_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    ok(&["simulate", "--model", "2", "--n", "60", "--seed", "1", "--out", s(&sim)]);
    let data = sim.join("data.csv");

    let est = tmp.path().join("est");
    ok(&["estimate", "--data", s(&data), "--out", s(&est), "--workers", "1"]);
    let scores = read(&est, "scores.csv");
    assert_eq!(scores.lines().next(), Some("i,j,score"));
    assert_eq!(scores.lines().count(), 1 + 15);
    let edges = read(&est, "edges.csv");
    assert_eq!(edges.lines().next(), Some("i,j,score"));
    let json: serde_json::Value = serde_json::from_str(&read(&est, "run.json")).unwrap();
    assert_eq!(json["command"], "estimate");
    assert_eq!(json["method"], "sgm");

    let again = tmp.path().join("again");
    ok(&["estimate", "--replay", s(&est.join("run.json")), "--out", s(&again), "--workers", "2"]);
    assert_eq!(read(&again, "scores.csv"), scores);
    assert_eq!(read(&again, "edges.csv"), edges);

    for key in ["eps_pair", "eps_minus", "eps_u", "rho"] {
        assert!(json[key].is_number(), "run.json lacks tuned {key}");
    }
}

#[test]
fn score_command_matches_estimate() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    ok(&["simulate", "--model", "1", "--n", "50", "--out", s(&sim)]);
    let data = sim.join("data.csv");
    let est = tmp.path().join("est");
    ok(&["estimate", "--data", s(&data), "--out", s(&est), "--eps", "0.1", "--rho", "0.05"]);

    let stored = read(&est, "scores.csv")
        .lines()
        .find(|l| l.starts_with("x1,x4,"))
        .map(|l| l.rsplit(',').next().unwrap().to_string())
        .unwrap();
    let printed = ok(&["score", "--data", s(&data), "--i", "4", "--j", "1", "--eps", "0.1"]);
    assert!(printed.contains("pair: x1,x4"), "{printed}");
    assert!(printed.contains(&format!("score: {stored}")), "{printed}\nexpected {stored}");

    let edges = read(&est, "edges.csv");
    for line in edges.lines().skip(1) {
        let v: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(v > 0.05);
    }
}

#[test]
fn evaluate_writes_reports_and_replays() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("eval");
    let stdout = ok(&[
        "evaluate", "--model", "1", "--n", "40", "--reps", "2", "--eps", "0.1", "--workers", "1", "--out", s(&out),
    ]);
    assert!(stdout.contains("sgm") && stdout.contains("naive"));

    let auc = read(&out, "auc.csv");
    assert_eq!(auc.lines().next(), Some("seed,method,auc"));
    assert_eq!(auc.lines().count(), 5);
    let roc = read(&out, "roc.csv");
    assert_eq!(roc.lines().next(), Some("fpr,mean_tpr,method"));
    assert_eq!(roc.lines().count(), 1 + 2 * 101);
    assert!(read(&out, "roc.svg").starts_with("<svg"));

    let again = tmp.path().join("again");
    ok(&["evaluate", "--replay", s(&out.join("run.json")), "--out", s(&again)]);
    assert_eq!(read(&again, "auc.csv"), auc);
    assert_eq!(read(&again, "roc.csv"), roc);
}

#[test]
fn failures_exit_nonzero_with_a_message() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");

    let missing = sgm(&["estimate", "--data", "/nonexistent/data.csv", "--out", s(&out)]);
    assert_eq!(missing.status.code(), Some(1));
    let err = String::from_utf8_lossy(&missing.stderr);
    assert!(err.starts_with("error: ") && err.contains("/nonexistent/data.csv"), "{err}");

    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "a,b,c\n1,2,3\n4,x,6\n7,8,9\n1,1,1\n2,2,2\n").unwrap();
    let parsed = sgm(&["estimate", "--data", s(&bad), "--out", s(&out)]);
    assert_eq!(parsed.status.code(), Some(1));
    let err = String::from_utf8_lossy(&parsed.stderr);
    assert!(err.contains("line 3") && err.contains("column 2"), "{err}");

    let method = sgm(&["estimate", "--data", s(&bad), "--out", s(&out), "--method", "glasso"]);
    assert_eq!(method.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&method.stderr).contains("glasso"));

    let model = sgm(&["simulate", "--model", "7", "--n", "10", "--out", s(&out)]);
    assert_eq!(model.status.code(), Some(1));

    let usage = sgm(&["estimate", "--no-such-flag"]);
    assert_eq!(usage.status.code(), Some(2));
}
