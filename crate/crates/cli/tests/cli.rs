use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn hmgibbs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hmgibbs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn example_file_round_trips_through_check() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("adhoc5.json");
    let o = hmgibbs(&["example", "adhoc5", "--out", path_str(&file)]);
    assert_eq!(code(&o), 0);
    let o = hmgibbs(&["check", path_str(&file)]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("primitive: pass"));
    assert!(text.contains("H1: pass"));
    assert!(text.contains("support pass"));
    assert!(text.contains("bac:"));
    assert!(text.ends_with("verdict: pass\n"));
}

#[test]
fn example_to_stdout_matches_file() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("n.json");
    hmgibbs(&["example", "nongibbs6", "--gamma", "0.26", "--out", path_str(&file)]);
    let o = hmgibbs(&["example", "nongibbs6", "--gamma", "0.26"]);
    assert_eq!(stdout(&o), std::fs::read_to_string(&file).unwrap());
    assert!(stdout(&o).contains("\"gamma\": 0.26"));
}

#[test]
fn converse_example_fails_row_allowability() {
    let o = hmgibbs(&["check", "example:converse_false"]);
    assert_eq!(code(&o), 1);
    let text = stdout(&o);
    assert!(text.contains("block 01 row c"));
    assert!(text.contains("undecided at depth 12 (8190 words"));
}

#[test]
fn counterexample_potential_diverges_without_failing() {
    let o = hmgibbs(&["potential", "example:nongibbs6", "--point", "/0"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("diverged"));
    assert!(text.contains(&(0.625f64).ln().to_string()[..8]));
    assert!(text.contains(&(0.6f64).ln().to_string()[..8]));
}

#[test]
fn certified_potential_on_full_shift() {
    let o = hmgibbs(&["potential", "example:fullshift4", "--point", "01/0", "--tol", "1e-8"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("(certified)"));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&hmgibbs(&["check", path_str(&missing)])), 2);
    assert_eq!(code(&hmgibbs(&["check", "example:nope"])), 2);
    assert_eq!(code(&hmgibbs(&["example", "nongibbs6", "--gamma", "0.4"])), 2);
    assert_eq!(code(&hmgibbs(&["example", "adhoc5", "--gamma", "0.3"])), 2);
    assert_eq!(
        code(&hmgibbs(&["potential", "example:fullshift4", "--point", "01"])),
        2
    );
    assert_eq!(
        code(&hmgibbs(&["potential", "example:fullshift4", "--point", "/x"])),
        2
    );
    assert_eq!(code(&hmgibbs(&["obstruction", "example:adhoc5"])), 2);

    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"alphabet": ["a", "b"], "incidence": [[1, 0], [1, 1]],
            "transition": [[0.5, 0.5], [0.5, 0.5]],
            "projection": {"a": "0", "b": "1"}}"#,
    )
    .unwrap();
    let o = hmgibbs(&["check", path_str(&bad)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn hypothesis_failures_exit_with_one() {
    assert_eq!(code(&hmgibbs(&["holder", "example:nongibbs6", "--n-max", "3"])), 1);
    assert_eq!(code(&hmgibbs(&["check", "example:nongibbs6"])), 1);
}

#[test]
fn gibbs_csv_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let run = |tag: &str| {
        let csv = dir.path().join(format!("bgi{tag}.csv"));
        let inv = dir.path().join(format!("inv{tag}.csv"));
        let o = hmgibbs(&[
            "gibbs",
            "example:fullshift4",
            "--n-max",
            "6",
            "--csv",
            path_str(&csv),
            "--invariance-csv",
            path_str(&inv),
        ]);
        assert_eq!(code(&o), 0, "{}", stdout(&o));
        (
            stdout(&o),
            std::fs::read_to_string(csv).unwrap(),
            std::fs::read_to_string(inv).unwrap(),
        )
    };
    let first = run("1");
    assert_eq!(first, run("2"));
    let mut lines = first.1.lines();
    assert_eq!(lines.next(), Some("n,cylinder_count,K_emp,K_cert,slack,verdict"));
    assert_eq!(lines.count(), 7);
    assert!(first.1.lines().skip(1).all(|l| l.ends_with(",pass")));
    assert!(first.2.starts_with("check,n,worst_residual,tolerance,pass\n"));
}

#[test]
fn gibbs_without_constants_is_uncertified() {
    let o = hmgibbs(&["gibbs", "example:nongibbs6", "--n-max", "4", "--identity-n-max", "4"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.starts_with("uncertified sweep:"));
    assert!(text.contains("uncertified\n"));
}

#[test]
fn periodic_table_agrees_within_radii() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("p.csv");
    let o = hmgibbs(&["periodic", "example:adhoc5", "--max-period", "3", "--csv", path_str(&csv)]);
    assert_eq!(code(&o), 0);
    let body = std::fs::read_to_string(csv).unwrap();
    let mut rows = body.lines();
    assert_eq!(
        rows.next(),
        Some("point,mode,iterate,iterate_radius,terms,formula,formula_radius,gap,within_radii")
    );
    assert!(rows.all(|r| r.ends_with(",true")));
}

#[test]
fn holder_reports_vanishing_variation_for_lumpable_measure() {
    let o = hmgibbs(&["holder", "example:adhoc5", "--n-max", "6"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("variation vanishes"));
}

#[test]
fn obstruction_excludes_finite_range_on_full_shift() {
    let o = hmgibbs(&["obstruction", "example:fullshift4"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).ends_with("finite range: excluded\n"));
}
