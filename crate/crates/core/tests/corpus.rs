//! Golden tests over `tests/corpus`. Each `.msk` file has a `.expected` sidecar holding the
//! machine rendering of its diagnostics (empty when accepted). Files under `runtime/` also
//! have a `.run` sidecar with the outcome and final memory, and may have a `.choices` file.
//! Set `MUSPARK_BLESS=1` to rewrite the sidecars.

use std::fs;
use std::path::{Path, PathBuf};

use muspark::borrowck::{analyze, CheckerConfig};
use muspark::interp::{dump_frame, run, Outcome, RunConfig};
use muspark::oracle::{lockstep_verify, VerifyConfig};
use muspark::{parse_source, Diagnostic};

fn corpus(dir: &str) -> Vec<PathBuf> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus").join(dir);
    let mut files: Vec<PathBuf> =
        fs::read_dir(root).unwrap().map(|e| e.unwrap().path()).filter(|p| p.extension().is_some_and(|e| e == "msk")).collect();
    files.sort();
    assert!(!files.is_empty());
    files
}

fn diagnostics(src: &str) -> Vec<Diagnostic> {
    match parse_source(src) {
        Ok(p) => analyze(&p, &CheckerConfig::default()).report.diagnostics,
        Err(e) => vec![Diagnostic::from_parse_error(&e)],
    }
}

fn golden(path: &Path, ext: &str, actual: &str) {
    let side = path.with_extension(ext);
    if std::env::var_os("MUSPARK_BLESS").is_some() {
        fs::write(&side, actual).unwrap();
        return;
    }
    let expected = fs::read_to_string(&side).unwrap_or_else(|_| panic!("missing {}", side.display()));
    assert_eq!(actual, expected, "{}", side.display());
}

fn machine(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| d.machine() + "\n").collect()
}

#[test]
fn accepted_programs() {
    for f in corpus("accept") {
        let src = fs::read_to_string(&f).unwrap();
        let diags = diagnostics(&src);
        assert!(diags.is_empty(), "{}: {diags:?}", f.display());
        golden(&f, "expected", &machine(&diags));
    }
}

#[test]
fn rejected_programs() {
    for f in corpus("reject") {
        let src = fs::read_to_string(&f).unwrap();
        let diags = diagnostics(&src);
        assert!(!diags.is_empty(), "{} was accepted", f.display());
        golden(&f, "expected", &machine(&diags));
    }
}

#[test]
fn runtime_programs() {
    for f in corpus("runtime") {
        let src = fs::read_to_string(&f).unwrap();
        golden(&f, "expected", &machine(&diagnostics(&src)));
        let choices: Vec<bool> = fs::read_to_string(f.with_extension("choices"))
            .map(|s| s.trim().chars().map(|c| c == '1').collect())
            .unwrap_or_default();
        let a = analyze(&parse_source(&src).unwrap(), &CheckerConfig::default());
        let r = run(&a.checked, &choices, &RunConfig::default(), &mut ());
        let outcome = match &r.outcome {
            Outcome::Completed => "completed".to_string(),
            Outcome::Stopped(s) => s.to_string(),
        };
        golden(&f, "run", &format!("{outcome}\n{}", dump_frame(&r.final_frame)));
    }
}

#[test]
fn accepted_corpus_verifies_clean() {
    for dir in ["accept", "runtime"] {
        for f in corpus(dir) {
            let a = analyze(&parse_source(&fs::read_to_string(&f).unwrap()).unwrap(), &CheckerConfig::default());
            if !a.report.accepted {
                continue;
            }
            let r = lockstep_verify(&a, &VerifyConfig::default());
            assert!(r.is_clean(), "{}: {:?}", f.display(), r.violations);
            assert!(r.executions > 0);
        }
    }
}

#[test]
fn worked_examples_identical_under_literal_updates() {
    use muspark::borrowck::PermUpdates;
    let literal = CheckerConfig { updates: PermUpdates::Literal, ..CheckerConfig::default() };
    for name in ["accept/swap.msk", "accept/record_through_access.msk", "accept/tree_builder.msk", "reject/cycle.msk", "reject/double_borrow.msk"] {
        let f = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus").join(name);
        let p = parse_source(&fs::read_to_string(&f).unwrap()).unwrap();
        let meet = analyze(&p, &CheckerConfig::default()).report;
        let lit = analyze(&p, &literal).report;
        assert_eq!(meet.diagnostics, lit.diagnostics, "{name}");
        assert_eq!(meet.snapshots, lit.snapshots, "{name}");
    }
}
