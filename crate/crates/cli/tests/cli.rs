use std::process::{Command, Output};

use serde_json::Value;

fn perpetua(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perpetua"))
        .args(args)
        .env_remove("PERPETUA_THREADS")
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

const GAUSS: &str = r#"{"kind":"gaussian-entries","dim":2,"entry_std":0.3,"z_std":1.0}"#;

#[test]
fn constant_diagonal_matrix() {
    let out = perpetua(&["constant", "--matrix", "[[0.5,0],[0,0.25]]"]);
    assert_eq!(out.status.code(), Some(0));
    let a = &json_of(&out)["analysis"];
    assert_eq!(a["c0"]["holds"], Value::Bool(true));
    assert_eq!(a["spectral_radius"].as_f64(), Some(0.5));
    assert_eq!(a["c0_report"]["verdict"], "HOLDS");
}

#[test]
fn gallery_verify_e32() {
    let out = perpetua(&["gallery", "verify", "E32", "--T", "200", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = &json_of(&out)["report"];
    assert_eq!(report["passed"], Value::Bool(true));
    let iii = report["reports"].as_array().unwrap().iter().find(|v| v["condition"] == "iii").unwrap();
    assert_eq!(iii["verdict"], "HOLDS");
}

#[test]
fn gallery_list_names_every_entry() {
    let out = perpetua(&["gallery", "list"]);
    let ids: Vec<String> =
        json_of(&out)["entries"].as_array().unwrap().iter().map(|e| e["id"].as_str().unwrap().to_string()).collect();
    assert_eq!(ids, ["E31", "E32", "E33", "E34", "R34"]);
}

#[test]
fn usage_and_configuration_errors_exit_2() {
    let cases: &[&[&str]] = &[
        &["simulate", "--bogus"],
        &["constant", "--matrix", "[[1,"],
        &["constant", "--matrix", "[[1,2]]"],
        &["simulate", "--law", r#"{"kind":"nope"}"#],
        &["simulate", "--law", "/nonexistent/law.json"],
        &["diagnose", "--law", GAUSS, "--T", "6000"],
        &["gallery", "verify", "E99"],
        &["gallery", "verify", "E31", "--params", r#"{"alpha":2.0}"#],
        &["simulate", "--law", GAUSS, "--quorum", "1.5"],
        &["search", "--family", r#"{"kind":"nope"}"#],
    ];
    for args in cases {
        let out = perpetua(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?} wrote a report");
    }
}

#[test]
fn help_exits_0() {
    assert_eq!(perpetua(&["--help"]).status.code(), Some(0));
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_counts() {
    let base = ["diagnose", "--law", GAUSS, "--T", "200", "--R", "16", "--seed", "3", "--epoch", "2020-01-01"];
    let run = |threads: &str| {
        let mut args = base.to_vec();
        args.extend(["--threads", threads]);
        let out = perpetua(&args);
        assert_eq!(out.status.code(), Some(0));
        out.stdout
    };
    let one = run("1");
    assert_eq!(one, run("1"));
    assert_eq!(one, run("4"));
    assert_eq!(json_of(&perpetua(&[&base[..], &["--threads", "2"]].concat()))["epoch"], "2020-01-01");
}

#[test]
fn out_and_trace_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let trace = dir.path().join("trace.csv");
    let status = perpetua(&[
        "simulate",
        "--law",
        GAUSS,
        "--T",
        "30",
        "--R",
        "3",
        "--out",
        out.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(status.status.code(), Some(0));
    assert!(status.stdout.is_empty());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["config"]["horizon"], 30);
    let csv = std::fs::read_to_string(&trace).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x_1,x_2,v_1,v_2,wTermLog,prodNormLog,yLog,uLog"));
    assert_eq!(lines.count(), 30);
}

#[test]
fn law_file_and_search() {
    let dir = tempfile::tempdir().unwrap();
    let law = dir.path().join("law.json");
    std::fs::write(&law, GAUSS).unwrap();
    let out = perpetua(&["lyapunov", "--law", law.to_str().unwrap(), "--T", "300", "--R", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["c0"]["verdict"], "HOLDS");

    let family = r#"{"kind":"frame-diagonal","dim":2}"#;
    let out = perpetua(&["gallery", "search", family, "--budget", "3", "--T", "80", "--R", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let report = &json_of(&out)["report"];
    assert_eq!(report["label"], "numerical evidence only; does not resolve the open problem");
    assert_eq!(report["evaluations"].as_array().unwrap().len(), 3);
}
