//! Dynamic check of the checker: runs the interpreter over every choice vector up to a
//! bound and, at each checkpoint, compares aliasing in memory with the permission
//! snapshot the checker computed for that point.

mod fuzz;
mod gen;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use fuzz::{fuzz_soundness, shrink, FuzzConfig, FuzzFinding, FuzzReport};
pub use gen::{coverage, gen_program, Coverage, GenConfig};

use crate::borrowck::{Analysis, ProgramPoint, Snapshots};
use crate::interp::{self, Cell, Checkpoint, Frame, MemTree, Observer, Outcome, RunConfig, StopKind};
use crate::permission::{PermEnv, Permission};
use crate::syntax::Path;
use crate::typecheck::Type;

/// All paths of the active frame that reach one cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AliasSet {
    pub cell: Cell,
    pub members: Vec<(Path, u64)>,
}

/// Groups every node reachable in `frame` by cell. Returns `None` if the frame has more
/// than `node_limit` nodes.
pub fn alias_sets(frame: &Frame, frame_id: u64, node_limit: usize) -> Option<Vec<AliasSet>> {
    let mut by_cell: HashMap<Cell, Vec<(Path, u64)>> = HashMap::new();
    let mut limit = node_limit;
    for (name, t) in frame {
        let ok = t.walk(Path::var(name), &mut limit, &mut |p, node| {
            by_cell.entry(node.cell()).or_default().push((p.clone(), frame_id));
        });
        if !ok {
            return None;
        }
    }
    let mut sets: Vec<AliasSet> = by_cell.into_iter().map(|(cell, members)| AliasSet { cell, members }).collect();
    sets.sort_by_key(|s| s.cell);
    Some(sets)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Crew,
    Normalization,
    Readability,
    NoCycle,
    Coherence,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::Crew => "CREW",
            ViolationKind::Normalization => "Normalization",
            ViolationKind::Readability => "Readability",
            ViolationKind::NoCycle => "NoCycle",
            ViolationKind::Coherence => "Coherence",
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub point: ProgramPoint,
    /// Offending paths with their permission where one is defined.
    pub paths: Vec<(String, Option<Permission>)>,
    pub detail: String,
    /// Choice vector that reproduces the execution.
    pub choices: Vec<bool>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violation at {}: {}", self.kind, self.point, self.detail)?;
        if !self.choices.is_empty() {
            let bits: String = self.choices.iter().map(|&c| if c { '1' } else { '0' }).collect();
            write!(f, " (choices {bits})")?;
        }
        Ok(())
    }
}

fn violation(kind: ViolationKind, point: ProgramPoint, paths: Vec<(String, Option<Permission>)>, detail: String) -> Violation {
    Violation { kind, point, paths, detail, choices: Vec::new() }
}

/// CREW: within a set of two or more aliases, a writable member excludes every other
/// readable or writable member.
pub fn crew_check(sets: &[AliasSet], perm: &PermEnv, point: ProgramPoint) -> Vec<Violation> {
    let mut out = Vec::new();
    for set in sets.iter().filter(|s| s.members.len() >= 2) {
        let perms: Vec<(String, Option<Permission>)> =
            set.members.iter().map(|(p, _)| (p.to_string(), perm.try_lookup(p))).collect();
        let usable = |k: &Option<Permission>| k.is_some_and(|k| k.is_readable() || k.is_writable());
        let writable = perms.iter().position(|(_, k)| k.is_some_and(Permission::is_writable));
        if let Some(w) = writable {
            if perms.iter().enumerate().any(|(i, (_, k))| i != w && usable(k)) {
                let detail = perms.iter().map(|(p, k)| format!("{p}:{}", k.map_or("?", |k| k.as_str()))).collect::<Vec<_>>();
                out.push(violation(ViolationKind::Crew, point, perms, format!("aliases {{{}}}", detail.join(", "))));
            }
        }
    }
    out
}

/// Normalization and readability of a permission environment.
pub fn perm_lemmas(perm: &PermEnv, point: ProgramPoint) -> Vec<Violation> {
    let mut out = Vec::new();
    if !perm.is_normalized() {
        out.push(violation(ViolationKind::Normalization, point, Vec::new(), "permission environment is not normalized".into()));
    }
    if !perm.readability_holds() {
        out.push(violation(ViolationKind::Readability, point, Vec::new(), "a readable node has an unreadable child".into()));
    }
    out
}

/// No node shares its cell with one of its descendants.
pub fn no_cycle_check(frame: &Frame, point: ProgramPoint) -> Vec<Violation> {
    fn go(t: &MemTree, p: Path, ancestors: &mut Vec<(Cell, Path)>, out: &mut Vec<Violation>, point: ProgramPoint) {
        if let Some((_, q)) = ancestors.iter().find(|(c, _)| *c == t.cell()) {
            out.push(violation(
                ViolationKind::NoCycle,
                point,
                vec![(q.to_string(), None), (p.to_string(), None)],
                format!("`{p}` has the same cell as its ancestor `{q}`"),
            ));
            return;
        }
        ancestors.push((t.cell(), p.clone()));
        for (sel, c) in t.children() {
            go(c, p.child(sel), ancestors, out, point);
        }
        ancestors.pop();
    }
    let mut out = Vec::new();
    for (name, t) in frame {
        go(t, Path::var(name), &mut Vec::new(), &mut out, point);
    }
    out
}

/// Every memory node has a permission node of the matching type.
pub fn coherence_check(frame: &Frame, perm: &PermEnv, point: ProgramPoint) -> Vec<Violation> {
    let mut out = Vec::new();
    let mem_vars: Vec<&String> = frame.keys().collect();
    let perm_vars: Vec<&String> = perm.vars().map(|(n, _)| n).collect();
    if mem_vars != perm_vars {
        out.push(violation(
            ViolationKind::Coherence,
            point,
            Vec::new(),
            format!("memory binds {mem_vars:?}, permissions bind {perm_vars:?}"),
        ));
        return out;
    }
    for (name, t) in frame {
        let mut limit = usize::MAX;
        t.walk(Path::var(name), &mut limit, &mut |p, node| {
            let fits = matches!(
                (perm.type_of(p), node),
                (Some(Type::Integer), MemTree::Int { .. })
                    | (Some(Type::Record(_)), MemTree::Record { .. })
                    | (Some(Type::Access(_)), MemTree::Access { .. })
            );
            if !fits || perm.try_lookup(p).is_none() {
                out.push(violation(ViolationKind::Coherence, point, vec![(p.to_string(), None)], format!("`{p}` has no matching permission node")));
            }
        });
    }
    out
}

/// All checks for one checkpoint. Chained call environments are not normalized, so only
/// CREW, NoCycle and Coherence apply there. `None` if the frame exceeded `node_limit`.
pub fn check_checkpoint(frame: &Frame, frame_id: u64, perm: &PermEnv, point: ProgramPoint, node_limit: usize) -> Option<Vec<Violation>> {
    let sets = alias_sets(frame, frame_id, node_limit)?;
    let mut out = crew_check(&sets, perm, point);
    if !matches!(point, ProgramPoint::CallChained(_)) {
        out.extend(perm_lemmas(perm, point));
    }
    out.extend(no_cycle_check(frame, point));
    out.extend(coherence_check(frame, perm, point));
    Some(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyConfig {
    /// Maximum length of an explored choice vector.
    pub depth: usize,
    pub run: RunConfig,
    /// Frames larger than this end the execution as truncated.
    pub node_limit: usize,
    pub parallel: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { depth: 12, run: RunConfig::default(), node_limit: 20_000, parallel: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    /// False when the checker rejected the program, in which case nothing was run.
    pub applicable: bool,
    pub executions: u64,
    pub completed: u64,
    /// Executions cut by the choice depth, the step budget or the node limit.
    pub truncated: u64,
    pub null_dereferences: u64,
    pub checkpoints: u64,
    pub violations: Vec<Violation>,
    pub elapsed_ms: u64,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub(crate) fn absorb(&mut self, other: VerifyReport) {
        self.executions += other.executions;
        self.completed += other.completed;
        self.truncated += other.truncated;
        self.null_dereferences += other.null_dereferences;
        self.checkpoints += other.checkpoints;
        self.violations.extend(other.violations);
    }
}

/// Keeps at most this many violations per execution.
const MAX_VIOLATIONS_PER_RUN: usize = 8;

struct Lockstep<'a> {
    snapshots: &'a Snapshots,
    node_limit: usize,
    /// Per-point cache of the permission-only lemmas.
    checked_points: HashSet<ProgramPoint>,
    violations: Vec<Violation>,
    checkpoints: u64,
    oversized: bool,
}

impl Observer for Lockstep<'_> {
    fn checkpoint(&mut self, cp: &Checkpoint<'_>) {
        if self.oversized || self.violations.len() >= MAX_VIOLATIONS_PER_RUN {
            return;
        }
        self.checkpoints += 1;
        let Some(perm) = self.snapshots.get(&cp.point) else {
            self.violations.push(violation(ViolationKind::Coherence, cp.point, Vec::new(), "no permission snapshot for this point".into()));
            return;
        };
        let Some(sets) = alias_sets(cp.frame, cp.frame_id, self.node_limit) else {
            self.oversized = true;
            return;
        };
        self.violations.extend(crew_check(&sets, perm, cp.point));
        if !matches!(cp.point, ProgramPoint::CallChained(_)) && self.checked_points.insert(cp.point) {
            self.violations.extend(perm_lemmas(perm, cp.point));
        }
        self.violations.extend(no_cycle_check(cp.frame, cp.point));
        self.violations.extend(coherence_check(cp.frame, perm, cp.point));
    }
}

/// Runs one execution in lockstep with the snapshots.
fn verify_one(analysis: &Analysis, choices: &[bool], cfg: &VerifyConfig) -> (VerifyReport, Option<interp::RunResult>) {
    let mut obs = Lockstep {
        snapshots: &analysis.report.snapshots,
        node_limit: cfg.node_limit,
        checked_points: HashSet::new(),
        violations: Vec::new(),
        checkpoints: 0,
        oversized: false,
    };
    let result = interp::run(&analysis.checked, choices, &cfg.run, &mut obs);
    let mut report = VerifyReport { applicable: true, executions: 1, checkpoints: obs.checkpoints, ..Default::default() };
    for mut v in obs.violations {
        v.choices = choices.to_vec();
        report.violations.push(v);
    }
    if obs.oversized {
        report.truncated += 1;
        return (report, None);
    }
    match &result.outcome {
        Outcome::Completed => report.completed += 1,
        Outcome::Stopped(s) if s.kind == StopKind::NullDereference => report.null_dereferences += 1,
        Outcome::Stopped(s) if s.kind == StopKind::StepBudgetExceeded => report.truncated += 1,
        Outcome::Stopped(_) => {}
    }
    (report, Some(result))
}

/// Explores every choice vector of length at most `cfg.depth`, checking each checkpoint
/// against the checker's snapshots. Rejected programs are not run. Counts are over maximal
/// executions: a run that needs more choices is replaced by its two extensions.
pub fn lockstep_verify(analysis: &Analysis, cfg: &VerifyConfig) -> VerifyReport {
    let start = Instant::now();
    let mut total = VerifyReport { applicable: analysis.report.accepted, ..Default::default() };
    if !total.applicable {
        return total;
    }
    let mut frontier: Vec<Vec<bool>> = vec![Vec::new()];
    while !frontier.is_empty() {
        let step = |prefix: &Vec<bool>| {
            let (mut report, result) = verify_one(analysis, prefix, cfg);
            let mut next = Vec::new();
            if let Some(r) = result {
                if matches!(&r.outcome, Outcome::Stopped(s) if s.kind == StopKind::ChoicesExhausted) {
                    if prefix.len() < cfg.depth {
                        for c in [false, true] {
                            let mut p = prefix.clone();
                            p.push(c);
                            next.push(p);
                        }
                        // Both extensions replay this run, violations included.
                        report = VerifyReport::default();
                    } else {
                        report.truncated += 1;
                    }
                }
            }
            (report, next)
        };
        let results: Vec<(VerifyReport, Vec<Vec<bool>>)> = if cfg.parallel && frontier.len() > 1 {
            frontier.par_iter().map(step).collect()
        } else {
            frontier.iter().map(step).collect()
        };
        frontier = Vec::new();
        for (report, next) in results {
            total.absorb(report);
            frontier.extend(next);
        }
    }
    total.elapsed_ms = start.elapsed().as_millis() as u64;
    total
}
