use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use heun_sde::ConvergenceReport;

const BIN: &str = env!("CARGO_BIN_EXE_heun-sde");

fn heun(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn simulate_writes_one_file_per_level() {
    let dir = tempfile::tempdir().unwrap();
    let out = heun(&["simulate", "--problem", "autonomous", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let names: Vec<String> = read_dir_sorted(dir.path()).into_iter().map(|(n, _)| n).collect();
    assert_eq!(
        names,
        [
            "autonomous_n128.csv",
            "autonomous_n16.csv",
            "autonomous_n256.csv",
            "autonomous_n32.csv",
            "autonomous_n64.csv"
        ]
    );
    let text = fs::read_to_string(dir.path().join("autonomous_n16.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,X,W"));
    assert_eq!(lines.next(), Some("0e0,0e0,0e0"));
    assert_eq!(text.lines().count(), 18);
}

#[test]
fn simulate_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = heun(&[
            "simulate", "--problem", "ex5", "--levels", "8,64", "--seed", "9", "--dump-paths", "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let files = read_dir_sorted(a.path());
    assert_eq!(files.len(), 3);
    assert_eq!(files, read_dir_sorted(b.path()));
}

#[test]
fn pure_wiener_trajectory_tracks_the_path_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = heun(&["simulate", "--problem", "pure_wiener", "--n", "8", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("pure_wiener_n8.csv")).unwrap();
    for row in text.lines().skip(1) {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[1], cols[2], "X and W differ in `{row}`");
    }
}

#[test]
fn unknown_problem_is_a_usage_error() {
    let out = heun(&["converge", "--problem", "nope"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nope"));
    assert!(stderr.contains("autonomous"), "listing missing from `{stderr}`");
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(heun(&["converge", "--problem", "ex1", "--scheme", "rk4"]).status.code(), Some(1));
    assert_eq!(heun(&["converge", "--problem", "ex1", "--n-fine", "1000"]).status.code(), Some(1));
    assert_eq!(heun(&["converge", "--problem", "vec2", "--scheme", "milstein"]).status.code(), Some(1));
    assert_eq!(heun(&["converge", "--problem", "ex2_strat", "--scheme", "em"]).status.code(), Some(1));
    assert_eq!(heun(&["--help"]).status.code(), Some(0));
}

#[test]
fn check_solutions_fails_at_an_impossible_tolerance() {
    let out = heun(&["check-solutions", "--tolerance", "1e-15"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn check_solutions_single_entry() {
    let out = heun(&["check-solutions", "--problem", "ex3"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 2);
    assert!(stdout.lines().nth(1).unwrap().starts_with("ex3"));
}

#[test]
fn list_problems_names_every_entry() {
    let out = heun(&["list-problems"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    for id in ["autonomous", "nonautonomous", "linear2nd", "ex1", "ex2", "ex3", "ex4", "ex5", "vec2"] {
        assert!(stdout.contains(id), "{id} missing");
    }
}

#[test]
fn csv_and_json_reports_agree() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for format in ["csv", "json"] {
        let path = dir.path().join(format!("r.{format}"));
        let out = heun(&[
            "converge", "--problem", "ex1", "--n-fine", "1024", "--steps", "16,64,256", "--realizations",
            "50", "--format", format, "--out", path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let text = fs::read_to_string(&path).unwrap();
        reports.push(match format {
            "csv" => ConvergenceReport::from_csv(&text).unwrap(),
            _ => ConvergenceReport::from_json(&text).unwrap(),
        });
    }
    assert_eq!(reports[0], reports[1]);
    let steps: Vec<usize> = reports[0].levels.iter().map(|l| l.steps).collect();
    assert_eq!(steps, [256, 64, 16]);
    assert!(reports[0].slope.is_some());
}

#[test]
fn converted_stratonovich_problem_runs() {
    let out = heun(&[
        "converge", "--problem", "ex2_strat", "--to-ito", "--n-fine", "1024", "--levels", "4",
        "--realizations", "50",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = ConvergenceReport::from_csv(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert!(report.slope.is_some_and(|s| s > 0.5));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("missing").join("r.csv");
    let out = heun(&[
        "converge", "--problem", "ex1", "--n-fine", "64", "--levels", "2", "--realizations", "4",
        "--out", target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}
