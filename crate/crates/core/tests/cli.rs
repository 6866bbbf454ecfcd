use std::process::Command;

use permlab::runner::{ResultEnvelope, Task};

fn permlab() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_permlab"));
    c.env_remove("PERMLAB_THREADS");
    c
}

#[test]
fn catalan_csv_ends_with_the_tenth_number() {
    let out = permlab().args(["run", "--task", "catalan", "--order", "10", "--format", "csv"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "i,A_i");
    assert_eq!(lines.len(), 12);
    assert_eq!(*lines.last().unwrap(), "10,16796");
}

#[test]
fn restrict_check_envelope() {
    let out = permlab().args(["run", "--task", "restrict-check", "--dim", "1", "--edge", "3", "--r", "0"]).output().unwrap();
    assert!(out.status.success());
    let env = ResultEnvelope::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(env.task, Task::RestrictCheck);
    assert!(env.values["max_defect"].as_f64().unwrap() <= 1e-6);
    assert_eq!(env.values["points"].as_array().unwrap().len(), 5);
    assert!(env.provenance.runtime_seconds.is_none());
}

#[test]
fn exit_codes_and_error_records() {
    let out = permlab().args(["run", "--task", "heat-kernel", "--edge", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["message"], "L must be ≥ 3");
    assert_eq!(err["error"]["kind"], "precondition");

    let out = permlab().args(["run", "--task", "permanent", "--edge", "15"]).output().unwrap();
    assert_eq!(out.status.code(), Some(4));

    let out = permlab().args(["run", "--task", "extend", "--edge", "8"]).output().unwrap();
    assert_eq!(out.status.code(), Some(4));

    let out = permlab().args(["run", "--task", "catalan", "--time", "1", "--time-grid", "0:1:0.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = permlab().args(["run"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"task": "catalan", "order": 20}"#).unwrap();
    let out_path = dir.path().join("out.json");
    let status = permlab()
        .args(["run", "--config", cfg.to_str().unwrap(), "--order", "5", "--out", out_path.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let env = ResultEnvelope::from_json(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(env.parameters.order, Some(5));
    assert_eq!(env.values["A"].as_array().unwrap().len(), 6);

    std::fs::write(&cfg, r#"{"task": "catalan", "bogus": 1}"#).unwrap();
    let out = permlab().args(["run", "--config", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_to_file_writes_an_envelope_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("perm.csv");
    let status = permlab()
        .args(["run", "--task", "permanent", "--edge", "4", "--time-grid", "0:2:1", "--format", "csv", "--out"])
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(&path).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,permanent,target,gap");
    assert_eq!(csv.lines().count(), 4);
    let side = std::fs::read_to_string(dir.path().join("perm.csv.json")).unwrap();
    assert!(ResultEnvelope::from_json(&side).is_ok());
}

#[test]
fn same_output_for_any_thread_count() {
    let args = ["run", "--task", "sample", "--edge", "6", "--time", "1.5", "--samples", "5000", "--seed", "11"];
    let one = permlab().args(args).args(["--threads", "1"]).output().unwrap();
    let many = permlab().args(args).env("PERMLAB_THREADS", "3").output().unwrap();
    assert!(one.status.success() && many.status.success());
    assert_eq!(one.stdout, many.stdout);
}

#[test]
fn timing_is_opt_in() {
    let out = permlab().args(["run", "--task", "genfun", "--z", "0.1", "--timing"]).output().unwrap();
    let env = ResultEnvelope::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert!(env.provenance.runtime_seconds.is_some());
}

#[test]
fn bundle_with_lowered_caps_and_empty_selection() {
    let dir = tempfile::tempdir().unwrap();
    let out = permlab()
        .args(["bundle", "--criteria", "1,8,13", "--cap-states", "10", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().next().unwrap().contains("SKIP"));
    assert!(text.lines().nth(1).unwrap().contains("PASS"));
    assert!(dir.path().join("criterion_08.json").exists());

    let out = permlab().args(["bundle", "--criteria"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
}
