use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn verify() -> Command {
    Command::new(env!("CARGO_BIN_EXE_verify"))
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("paraspec-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

#[test]
fn passing_suite_exits_zero_and_is_deterministic() {
    let (a, b) = (scratch("a"), scratch("b"));
    let run = |dir: &PathBuf| verify().args(["paradiff-oracle", "--grid-exp", "7", "--out"]).arg(dir).output().unwrap();
    let (ra, rb) = (run(&a), run(&b));
    assert_eq!(ra.status.code(), Some(0), "{}", String::from_utf8_lossy(&ra.stderr));
    assert_eq!(ra.stdout, rb.stdout);
    for ext in ["json", "csv"] {
        let name = format!("paradiff-oracle.{ext}");
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap());
    }
    let report: serde_json::Value = serde_json::from_slice(&fs::read(a.join("paradiff-oracle.json")).unwrap()).unwrap();
    for key in ["suite_id", "points", "fitted_slope", "r_squared", "expected_bound", "tolerance", "pass", "environment"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["environment"]["seed"], 42);
    let csv = fs::read_to_string(a.join("paradiff-oracle.csv")).unwrap();
    assert!(csv.starts_with("suite_id,j,norm,"));
    assert_eq!(csv.lines().count(), 26);
}

#[test]
fn failing_suite_exits_one() {
    // Scales below the truncation sit in the pre-asymptotic regime and blow the slope bound.
    let out = verify().args(["composition", "--grid-exp", "8", "--jmin", "2", "--jmax", "5", "--out"]).arg(scratch("f")).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_errors_exit_two() {
    let dir = scratch("c");
    for args in [
        vec!["no-such-suite"],
        vec!["dyadic", "--jmin", "9", "--jmax", "3"],
        vec!["dyadic", "--period", "-1"],
        vec!["dyadic", "--format", "xml"],
    ] {
        let out = verify().args(&args).arg("--out").arg(&dir).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn unwritable_output_is_config_error() {
    let file = scratch("w");
    fs::write(&file, b"not a directory").unwrap();
    let out = verify().args(["paradiff-oracle", "--grid-exp", "6", "--out"]).arg(file.join("sub")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    fs::remove_file(file).unwrap();
}
