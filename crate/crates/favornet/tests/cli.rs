mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::*;
use favornet::document::save_society;
use favornet::{Network, Society};

fn favornet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_favornet")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn write(dir: &Path, name: &str, s: &Society, g: &Network) -> PathBuf {
    let p = dir.join(name);
    save_society(&p, s, g).unwrap();
    p
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bound_prints_the_cooperation_bound() {
    let o = favornet(&[
        "bound", "--alpha", "0.1", "--p", "0.2", "--v", "5.3", "--c", "1.5", "--gamma", "1", "--delta",
        "0.95",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("B* = 4"));
    assert_eq!(json(&o)["b_star"], 4);
}

#[test]
fn bound_writes_the_curve() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curve.csv");
    let o = favornet(&[
        "bound",
        "--alpha",
        "0.1",
        "--p",
        "0.2",
        "--v",
        "5.3",
        "--c",
        "1.5",
        "--gamma",
        "1",
        "--delta",
        "0.95",
        "--curve",
        path(&csv),
        "--curve-max",
        "12",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("n,lhs,rhs\n"));
    assert_eq!(text.lines().count(), 13);
}

#[test]
fn check_strong_on_the_clique_example() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "ex1.json", &homogeneous(patient(22)), &cliques(&[10, 8, 4]));
    let o = favornet(&["check", "--society", path(&f), "--strong"]);
    let log = stderr(&o);
    assert_eq!(o.status.code(), Some(0), "{log}");
    assert!(log.contains("stable: true"));
    assert!(log.contains("strongly stable: true"));
    assert!(log.contains("degree-count audit: passes"));
    assert_eq!(json(&o)["strong"]["witness"], serde_json::Value::Null);
}

#[test]
fn check_fails_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "k6.json", &homogeneous(baseline(6)), &Network::complete(6));
    let o = favornet(&["check", "--society", path(&f)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("stable: false"));
    let o = favornet(&["check", "--society", path(&f), "--strong"]);
    assert_eq!(o.status.code(), Some(1));

    // The isolated pair can link profitably.
    let f = write(dir.path(), "empty.json", &homogeneous(baseline(4)), &Network::empty(4));
    let o = favornet(&["check", "--society", path(&f), "--strong"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("strongly stable: false (pair"));
}

#[test]
fn errors_exit_two() {
    assert_eq!(favornet(&["check", "--society", "/nonexistent/file.json"]).status.code(), Some(2));
    assert_eq!(favornet(&["bound", "--alpha", "0.1"]).status.code(), Some(2));
    let o = favornet(&[
        "bound", "--alpha", "0.1", "--p", "0.2", "--v", "1", "--c", "1.5", "--gamma", "1", "--delta", "0.95",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(favornet(&["export-dot", "--society", path(&bad)]).status.code(), Some(2));
    let f = write(dir.path(), "s.json", &homogeneous(baseline(4)), &Network::empty(4));
    assert_eq!(favornet(&["oracle", "--society", path(&f), "--nmax", "9"]).status.code(), Some(2));
    assert_eq!(
        favornet(&[
            "simulate",
            "--society",
            path(&f),
            "--periods",
            "10",
            "--seed",
            "1",
            "--deviate",
            "0,9,1"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn stratify_the_rich_poor_society() {
    let dir = tempfile::tempdir().unwrap();
    let (s, g) = stratified_society(true);
    let f = write(dir.path(), "stratified.json", &s, &g);
    let o = favornet(&["stratify", "--society", path(&f)]);
    let log = stderr(&o);
    assert_eq!(o.status.code(), Some(0), "{log}");
    assert!(log.contains("rich: at-bound 1.0, cross-links 0"), "{log}");
    assert!(log.contains("poor: at-bound 1.0, cross-links 0"), "{log}");
}

#[test]
fn transfers_check_on_the_stratified_network() {
    let dir = tempfile::tempdir().unwrap();
    let (s, g) = stratified_society(true);
    let f = write(dir.path(), "stratified.json", &s, &g);
    let o = favornet(&["check", "--society", path(&f), "--transfers"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("strongly stable with transfers: true"));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "k5.json", &homogeneous(baseline(5)), &Network::complete(5));
    let args = ["simulate", "--society", path(&f), "--periods", "5000", "--seed", "42"];
    let a = favornet(&args);
    let b = favornet(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["link_removals"], 0);

    let o = favornet(&[
        "simulate",
        "--society",
        path(&f),
        "--periods",
        "5000",
        "--seed",
        "42",
        "--deviate",
        "1,0,0",
    ]);
    let r = json(&o);
    assert_eq!(r["refusals"], 1);
    assert_eq!(r["link_removals"], 1);
    let at_most_one = favornet(&[
        "simulate",
        "--society",
        path(&f),
        "--periods",
        "100",
        "--seed",
        "1",
        "--convention",
        "at-most-one",
    ]);
    assert_eq!(at_most_one.status.code(), Some(0));
}

#[test]
fn enforce_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "s.json", &homogeneous(patient(4)), &Network::empty(4));
    let out = dir.path().join("tables");
    let o = favornet(&[
        "enforce",
        "--society",
        path(&f),
        "--kappa",
        "0.01",
        "--costfn",
        "0.001,0.05",
        "--ngrid",
        "10,100,1000",
        "--kappa-grid",
        "0.001,0.01,0.1",
        "--csv-dir",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("winner:"));
    let r = json(&o);
    assert!(r["comparison"]["u_p"].as_f64().unwrap() > 0.0);
    let kappa = std::fs::read_to_string(out.join("kappa.csv")).unwrap();
    assert!(kappa.starts_with("kappa,community_size,u_c,u_p,u_l\n"));
    assert_eq!(kappa.lines().count(), 4);
    let pop = std::fs::read_to_string(out.join("population.csv")).unwrap();
    assert!(pop.starts_with("n,gamma_star,payoff\n"));
    assert_eq!(favornet(&["enforce", "--society", path(&f), "--kappa", "0.01"]).status.code(), Some(2));
}

#[test]
fn oracle_writes_one_header() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "s.json", &homogeneous(baseline(4)), &Network::empty(4));
    let csv = dir.path().join("o.csv");
    let o = favornet(&["oracle", "--society", path(&f), "--nmax", "4", "-o", path(&csv)]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("n,")).count(), 1);
    assert_eq!(text.lines().count(), 1 + 1 + 2 + 4 + 11);
    let o = favornet(&["oracle", "--society", path(&f), "--nmax", "3", "--labeled"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 1 + 1 + 2 + 8);
}

#[test]
fn export_dot_and_find_sst() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "s.json", &homogeneous(baseline(5)), &Network::complete(5));
    let o = favornet(&["export-dot", "--society", path(&f)]);
    let dot = String::from_utf8(o.stdout).unwrap();
    assert!(dot.starts_with("graph"));
    assert_eq!(dot.matches("--").count(), 10);
    let file = dir.path().join("g.dot");
    assert_eq!(favornet(&["export-dot", "--society", path(&f), "-o", path(&file)]).status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(file).unwrap(), dot);

    let o = favornet(&["find-sst", "--society", path(&f), "--n", "10", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("heuristic search (non-exhaustive)"));
    assert!(json(&o).as_array().is_some_and(|a| !a.is_empty()));
}

#[test]
fn help_documents_exit_codes() {
    let o = favornet(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("Exit codes:") && text.contains("CSV schemas:"));
}

#[test]
fn sample_societies_behave_as_documented() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../societies");
    let f = |name: &str| dir.join(name).to_str().unwrap().to_string();
    let o = favornet(&["check", "--society", &f("cliques.json"), "--strong"]);
    assert_eq!(o.status.code(), Some(0));
    let o = favornet(&["check", "--society", &f("rich-poor.json"), "--transfers"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&favornet(&["stratify", "--society", &f("rich-poor.json")]))
        .contains("rich: at-bound 1.0, cross-links 0"));
    assert_eq!(favornet(&["check", "--society", &f("k5.json")]).status.code(), Some(0));
    let o = favornet(&[
        "enforce",
        "--society",
        &f("bilateral.json"),
        "--kappa",
        "0.01",
        "--costfn",
        "0.001,0.05",
    ]);
    assert_eq!(o.status.code(), Some(0));
}
