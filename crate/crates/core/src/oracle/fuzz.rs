//! Soundness fuzzing: generate programs, verify the accepted ones, shrink what fails.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gen::{coverage, gen_program, Coverage, GenConfig};
use super::{lockstep_verify, VerifyConfig, Violation, ViolationKind};
use crate::borrowck::{analyze, CheckerConfig};
use crate::syntax::*;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzConfig {
    pub gen: GenConfig,
    pub verify: VerifyConfig,
    /// Stop after the first batch that contains a violation and keep only the first one.
    pub stop_at_first: bool,
    pub shrink: bool,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig { gen: GenConfig::default(), verify: VerifyConfig::default(), stop_at_first: false, shrink: true }
    }
}

impl FuzzConfig {
    pub fn checker(&self) -> CheckerConfig {
        self.gen.checker
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzFinding {
    pub index: usize,
    pub seed: u64,
    pub source: String,
    pub violation: Violation,
    /// Smallest variant found that still shows the same kind of violation.
    pub shrunk_source: Option<String>,
    pub shrunk_stmts: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub programs: u64,
    pub accepted: u64,
    pub rejected: u64,
    pub executions: u64,
    pub truncated: u64,
    pub null_dereferences: u64,
    pub violations: u64,
    pub findings: Vec<FuzzFinding>,
    pub coverage: Coverage,
    pub elapsed_ms: u64,
}

impl FuzzReport {
    pub fn is_clean(&self) -> bool {
        self.violations == 0
    }
}

/// Seed of the `i`-th program of a run.
pub fn program_seed(seed: u64, i: usize) -> u64 {
    seed ^ (i as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

const BATCH: usize = 64;

pub fn fuzz_soundness(n: usize, seed: u64, cfg: &FuzzConfig) -> FuzzReport {
    let start = Instant::now();
    let mut verify = cfg.verify;
    verify.parallel = false;
    let mut report = FuzzReport::default();
    let mut i = 0;
    while i < n {
        let end = (i + BATCH).min(n);
        let batch: Vec<(FuzzReport, Option<(Program, FuzzFinding)>)> =
            (i..end).into_par_iter().map(|k| one_program(k, program_seed(seed, k), cfg, &verify)).collect();
        let mut found = false;
        for (r, finding) in batch {
            report.programs += r.programs;
            report.accepted += r.accepted;
            report.rejected += r.rejected;
            report.executions += r.executions;
            report.truncated += r.truncated;
            report.null_dereferences += r.null_dereferences;
            report.violations += r.violations;
            report.coverage.add(&r.coverage);
            if let Some((program, mut f)) = finding {
                if cfg.stop_at_first && found {
                    continue;
                }
                found = true;
                if cfg.shrink {
                    let small = shrink(&program, &cfg.checker(), &verify, f.violation.kind);
                    f.shrunk_stmts = Some(small.stmt_count());
                    f.shrunk_source = Some(pretty_print(&small));
                }
                report.findings.push(f);
            }
        }
        i = end;
        if found && cfg.stop_at_first {
            break;
        }
    }
    report.elapsed_ms = start.elapsed().as_millis() as u64;
    report
}

fn one_program(index: usize, seed: u64, cfg: &FuzzConfig, verify: &VerifyConfig) -> (FuzzReport, Option<(Program, FuzzFinding)>) {
    let program = gen_program(seed, &cfg.gen);
    let mut r = FuzzReport { programs: 1, coverage: coverage(&program), ..Default::default() };
    let analysis = analyze(&program, &cfg.checker());
    assert!(analysis.checked.is_well_typed(), "generator produced an ill-typed program:\n{}", pretty_print(&program));
    if !analysis.report.accepted {
        r.rejected = 1;
        return (r, None);
    }
    r.accepted = 1;
    let v = lockstep_verify(&analysis, verify);
    r.executions = v.executions;
    r.truncated = v.truncated;
    r.null_dereferences = v.null_dereferences;
    r.violations = v.violations.len() as u64;
    let finding = v.violations.into_iter().next().map(|violation| {
        let f = FuzzFinding { index, seed, source: pretty_print(&program), violation, shrunk_source: None, shrunk_stmts: None };
        (program, f)
    });
    (r, finding)
}

/// Greedily removes statements, branches and declarations while the program stays well
/// typed, accepted, and shows a violation of `kind`.
pub fn shrink(program: &Program, checker: &CheckerConfig, verify: &VerifyConfig, kind: ViolationKind) -> Program {
    let still_fails = |p: &Program| {
        let a = analyze(p, checker);
        a.checked.is_well_typed()
            && a.report.accepted
            && lockstep_verify(&a, verify).violations.iter().any(|v| v.kind == kind)
    };
    let mut best = program.clone();
    'outer: loop {
        for mut cand in proc_variants(&best.main).into_iter().map(|main| Program { main }) {
            cand.renumber();
            if still_fails(&cand) {
                best = cand;
                continue 'outer;
            }
        }
        return best;
    }
}

fn proc_variants(p: &ProcDecl) -> Vec<ProcDecl> {
    let mut out = Vec::new();
    for body in stmt_variants(&p.body) {
        out.push(ProcDecl { body, ..p.clone() });
    }
    for i in 0..p.decls.len() {
        if matches!(p.decls[i], Decl::Var { .. } | Decl::Proc(_)) {
            let mut q = p.clone();
            q.decls.remove(i);
            out.push(q);
        }
    }
    for (i, d) in p.decls.iter().enumerate() {
        if let Decl::Proc(inner) = d {
            for v in proc_variants(inner) {
                let mut q = p.clone();
                q.decls[i] = Decl::Proc(v);
                out.push(q);
            }
        }
    }
    out
}

/// Strictly smaller replacements for `s`.
fn stmt_variants(s: &Stmt) -> Vec<Stmt> {
    let mut out = Vec::new();
    match &s.kind {
        StmtKind::Block(ss) => {
            if ss.len() >= 2 {
                for i in 0..ss.len() {
                    let mut v = ss.clone();
                    v.remove(i);
                    out.push(Stmt { kind: StmtKind::Block(v), ..s.clone() });
                }
            }
            for (i, child) in ss.iter().enumerate() {
                for c in stmt_variants(child) {
                    let mut v = ss.clone();
                    v[i] = c;
                    out.push(Stmt { kind: StmtKind::Block(v), ..s.clone() });
                }
            }
        }
        StmtKind::If { then_branch, else_branch } => {
            out.push((**then_branch).clone());
            out.push((**else_branch).clone());
            for t in stmt_variants(then_branch) {
                out.push(Stmt { kind: StmtKind::If { then_branch: Box::new(t), else_branch: else_branch.clone() }, ..s.clone() });
            }
            for e in stmt_variants(else_branch) {
                out.push(Stmt { kind: StmtKind::If { then_branch: then_branch.clone(), else_branch: Box::new(e) }, ..s.clone() });
            }
        }
        _ => {}
    }
    out
}
