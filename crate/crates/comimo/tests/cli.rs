//! End-to-end checks of the command-line interface.

use std::process::Command;

fn comimo() -> Command {
    Command::new(env!("CARGO_BIN_EXE_comimo"))
}

#[test]
fn secular_demo_prints_roots_and_intervals() {
    let out = comimo().arg("secular-demo").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("(4, 5]"), "missing top interval:\n{text}");
    assert!(text.contains("(3, 4)"));
    assert!(text.contains("(1, 2)"));
}

#[test]
fn tables_prints_counts_and_power() {
    let out = comimo().arg("tables").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("16777216"), "{text}");
    assert!(text.contains("8192"), "{text}");
    assert!(text.contains("2420.6"), "{text}");
    assert!(text.contains("606.2"), "{text}");
}

#[test]
fn histogram_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.cfg");
    std::fs::write(&cfg, "trials = 3\nq = 2\nnc = 1\nn1 = 2\nn2 = 2\nm = 2\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = comimo()
        .args(["histogram", "--config"])
        .arg(&cfg)
        .args(["--seed", "5", "--threads", "1", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("records.csv").exists());
    assert!(out_dir.join("summary.json").exists());
    assert!(out_dir.join("plotdata").join("hist_joint.csv").exists());
    let records = std::fs::read_to_string(out_dir.join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 4); // header + 3 trials
}

#[test]
fn unknown_config_key_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.cfg");
    std::fs::write(&cfg, "not_a_key = 1\n").unwrap();
    let out = comimo().args(["histogram", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unknown key"), "{err}");
}
