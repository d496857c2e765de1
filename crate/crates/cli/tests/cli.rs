use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

#[path = "../src/report.rs"]
#[allow(dead_code)]
mod report;

use report::{Body, Report, SCHEMA_VERSION};

fn corpus(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/corpus").join(rel)
}

fn corpus_dir(dir: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(corpus(dir))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "msk"))
        .collect();
    v.sort();
    v
}

fn muspark(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_muspark")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> (i32, Report) {
    let mut all = args.to_vec();
    all.push("--json");
    let o = muspark(&all);
    let r: Report = serde_json::from_str(&stdout(&o)).unwrap_or_else(|e| panic!("{e}: {}", stdout(&o)));
    assert_eq!(r.schema_version, SCHEMA_VERSION);
    (code(&o), r)
}

#[test]
fn check_exit_codes_over_corpus() {
    for f in corpus_dir("accept") {
        let o = muspark(&["check", f.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}: {}", f.display(), stdout(&o));
        assert!(stdout(&o).contains(": ok"));
    }
    for f in corpus_dir("reject") {
        let o = muspark(&["check", f.to_str().unwrap()]);
        assert_eq!(code(&o), 1, "{}", f.display());
    }
}

#[test]
fn check_reports_rule_names() {
    let o = muspark(&["check", corpus("reject/double_borrow.msk").to_str().unwrap()]);
    assert!(stdout(&o).contains("error[P-B-entryPointInOut]"), "{}", stdout(&o));
    let (c, r) = json(&["check", corpus("reject/cycle.msk").to_str().unwrap()]);
    assert_eq!(c, 1);
    let Body::Diagnostics { accepted, diagnostics, .. } = r.body else { panic!() };
    assert!(!accepted);
    assert_eq!(diagnostics[0].rule, "P-assignDeepName");
}

#[test]
fn missing_file_and_bad_usage_exit_2() {
    assert_eq!(code(&muspark(&["check", "/nonexistent/x.msk"])), 2);
    assert_eq!(code(&muspark(&["check"])), 2);
    assert_eq!(code(&muspark(&["frobnicate"])), 2);
    let swap = corpus("accept/swap.msk");
    assert_eq!(code(&muspark(&["run", swap.to_str().unwrap(), "--choices", "012"])), 2);
}

#[test]
fn run_outcomes() {
    let o = muspark(&["run", corpus("runtime/null_deref.msk").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("NullDereference"));

    let (c, r) = json(&["run", corpus("runtime/swap_driver.msk").to_str().unwrap()]);
    assert_eq!(c, 0);
    let Body::Run { outcome, final_memory, .. } = r.body else { panic!() };
    assert_eq!(outcome, "completed");
    assert_eq!(final_memory, ["A = #0 { Data: #1 -> #2 2 }", "B = #3 { Data: #4 -> #5 1 }"]);

    assert_eq!(code(&muspark(&["run", corpus("reject/ill_typed.msk").to_str().unwrap()])), 2);
    assert_eq!(code(&muspark(&["run", corpus("reject/syntax.msk").to_str().unwrap()])), 2);
}

#[test]
fn run_without_enough_choices_is_truncated() {
    let f = corpus("runtime/choices.msk");
    let (c, r) = json(&["run", f.to_str().unwrap()]);
    assert_eq!(c, 1);
    let Body::Run { outcome, .. } = r.body else { panic!() };
    assert_eq!(outcome, "ChoicesExhausted");
    let choices = fs::read_to_string(corpus("runtime/choices.choices")).unwrap();
    assert_eq!(code(&muspark(&["run", f.to_str().unwrap(), "--choices", choices.trim()])), 0);
}

#[test]
fn verify_swap_and_rejected() {
    let (c, r) = json(&["verify", corpus("accept/swap.msk").to_str().unwrap()]);
    assert_eq!(c, 0);
    let Body::Verify(v) = r.body else { panic!() };
    assert!(v.applicable);
    assert_eq!(v.executions, 1);
    assert_eq!(v.completed, 1);
    assert!(v.violations.is_empty());

    let (c, r) = json(&["verify", corpus("reject/double_borrow.msk").to_str().unwrap()]);
    assert_eq!(c, 0);
    let Body::Verify(v) = r.body else { panic!() };
    assert!(!v.applicable);
    assert_eq!(v.executions, 0);
}

#[test]
fn verify_mutated_checker_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("am.msk");
    fs::write(
        &f,
        "procedure Main is\n   X : access integer;\n   Y : access integer;\nbegin\n   X := new integer;\n   Y := X.all'Access;\n   X.all := 1;\nend;\n",
    )
    .unwrap();
    assert_eq!(code(&muspark(&["check", f.to_str().unwrap()])), 1);
    let o = muspark(&["verify", f.to_str().unwrap(), "--mutation", "access-move-disabled"]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
}

#[test]
fn dump_perms_lists_program_points() {
    let o = muspark(&["check", "--dump-perms", corpus("accept/swap.msk").to_str().unwrap()]);
    let out = stdout(&o);
    assert!(out.contains("[entry p1]"), "{out}");
    assert!(out.contains("[exit p1]"));
}

#[test]
fn json_reports_round_trip() {
    let swap = corpus("accept/swap.msk");
    let s = swap.to_str().unwrap();
    for args in [
        vec!["parse", s],
        vec!["typecheck", s],
        vec!["check", s, "--dump-perms"],
        vec!["check", corpus("reject/cycle.msk").to_str().unwrap()],
        vec!["run", s, "--trace"],
        vec!["verify", s],
        vec!["fuzz", "--count", "8", "--seed", "3"],
    ] {
        let (_, r) = json(&args);
        let again: Report = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(r, again, "{args:?}");
    }
}

#[test]
fn fuzz_json_is_deterministic() {
    let a = stdout(&muspark(&["fuzz", "--count", "24", "--seed", "11", "--json"]));
    let b = stdout(&muspark(&["fuzz", "--count", "24", "--seed", "11", "--json"]));
    assert_eq!(a, b);
    let o = Command::new(env!("CARGO_BIN_EXE_muspark"))
        .args(["fuzz", "--count", "24", "--json"])
        .env("MUSPARK_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(stdout(&o), a);
}

#[test]
fn parse_prints_source_back() {
    let f = corpus("accept/minimal.msk");
    let printed = stdout(&muspark(&["parse", f.to_str().unwrap()]));
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("again.msk");
    fs::write(&g, &printed).unwrap();
    assert_eq!(stdout(&muspark(&["parse", g.to_str().unwrap()])), printed);
}
