use std::process::Command;

fn bilevel(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_bilevel")).args(args).output().expect("binary runs")
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(bilevel(&["toy", "--bogus"]).status.code(), Some(2));
    assert_eq!(bilevel(&["toy", "--schedule", "sideways:1"]).status.code(), Some(2));
    assert_eq!(bilevel(&["toy", "--solver", "newton"]).status.code(), Some(2));
    assert_eq!(bilevel(&["regression", "--csv", "x.csv"]).status.code(), Some(2));
}

#[test]
fn toy_run_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = bilevel(&["toy", "--solvers", "cg-bio,cg-upper", "--no-timing", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("criterion_met"), "{stdout}");
    for stem in ["toy__cg-bio__seed0", "toy__cg-upper__seed0"] {
        assert!(dir.path().join(format!("{stem}.csv")).is_file());
        assert!(dir.path().join(format!("{stem}.json")).is_file());
    }
}

#[test]
fn missing_suite_file_is_a_run_failure() {
    assert_eq!(bilevel(&["suite", "/nonexistent/suite.json"]).status.code(), Some(1));
}
