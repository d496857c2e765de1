//! The static alias checker: applies the permission rules over a typechecked program and
//! records a permission snapshot at every program point.

mod config;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use config::{CheckerConfig, ExtensionUpdate, Mutation, PermUpdates};

use crate::diag::{DiagKind, Diagnostic};
use crate::permission::{ExtFilter, PermEnv, Permission};
use crate::syntax::*;
use crate::typecheck::*;

use Permission::{No, Rw, R, W};

/// A point at which the checker records, and the interpreter reports, an environment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ProgramPoint {
    /// Formals of a procedure on entry.
    ProcEntry(ProcId),
    /// After the local declaration with this index.
    Decl(ProcId, u32),
    Before(StmtId),
    /// Caller environment after all observes and borrows of a call.
    CallChained(StmtId),
    After(StmtId),
    /// End of the body, before the exit check.
    ProcExit(ProcId),
}

impl fmt::Display for ProgramPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProgramPoint::ProcEntry(p) => write!(f, "entry p{}", p.0),
            ProgramPoint::Decl(p, k) => write!(f, "decl p{}#{k}", p.0),
            ProgramPoint::Before(s) => write!(f, "before {s}"),
            ProgramPoint::CallChained(s) => write!(f, "call {s}"),
            ProgramPoint::After(s) => write!(f, "after {s}"),
            ProgramPoint::ProcExit(p) => write!(f, "exit p{}", p.0),
        }
    }
}

impl From<ProgramPoint> for String {
    fn from(p: ProgramPoint) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for ProgramPoint {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl std::str::FromStr for ProgramPoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("bad program point `{s}`");
        let (tag, rest) = s.split_once(' ').ok_or_else(bad)?;
        let num = |r: &str, c: char| r.strip_prefix(c).and_then(|n| n.parse::<u32>().ok()).ok_or_else(bad);
        Ok(match tag {
            "entry" => ProgramPoint::ProcEntry(ProcId(num(rest, 'p')?)),
            "exit" => ProgramPoint::ProcExit(ProcId(num(rest, 'p')?)),
            "before" => ProgramPoint::Before(StmtId(num(rest, 's')?)),
            "call" => ProgramPoint::CallChained(StmtId(num(rest, 's')?)),
            "after" => ProgramPoint::After(StmtId(num(rest, 's')?)),
            "decl" => {
                let (p, k) = rest.split_once('#').ok_or_else(bad)?;
                ProgramPoint::Decl(ProcId(num(p, 'p')?), k.parse().map_err(|_| bad())?)
            }
            _ => return Err(bad()),
        })
    }
}

/// How a formal parameter is passed, which fixes its permissions on both sides of a call.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamClass {
    /// Mode in, deep, not an access: read-only alias.
    Observed,
    /// Mode in, shallow: passed by copy.
    CopyIn,
    /// Mode in, access type: borrowed.
    BorrowIn,
    BorrowInOut,
    BorrowOut,
}

impl ParamClass {
    pub fn of(param: &ParamSig, table: &TypeTable) -> Self {
        match param.mode {
            Mode::In if param.ty.is_access() => ParamClass::BorrowIn,
            Mode::In if is_deep(&param.ty, table) => ParamClass::Observed,
            Mode::In => ParamClass::CopyIn,
            Mode::InOut => ParamClass::BorrowInOut,
            Mode::Out => ParamClass::BorrowOut,
        }
    }

    /// Permission of the formal in the callee on entry.
    pub fn entry_perm(self) -> Permission {
        match self {
            ParamClass::Observed | ParamClass::CopyIn => R,
            ParamClass::BorrowIn | ParamClass::BorrowInOut => Rw,
            ParamClass::BorrowOut => W,
        }
    }

    pub fn is_borrowed(self) -> bool {
        matches!(self, ParamClass::BorrowIn | ParamClass::BorrowInOut | ParamClass::BorrowOut)
    }

    /// Processing order of actuals: observes first, then in, in-out and out borrows.
    fn group(self) -> u8 {
        match self {
            ParamClass::Observed | ParamClass::CopyIn => 0,
            ParamClass::BorrowIn => 1,
            ParamClass::BorrowInOut => 2,
            ParamClass::BorrowOut => 3,
        }
    }
}

pub type Snapshots = BTreeMap<ProgramPoint, PermEnv>;

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub diagnostics: Vec<Diagnostic>,
    pub snapshots: Snapshots,
    pub accepted: bool,
}

/// A typechecked program together with its permission analysis.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub checked: CheckedProgram,
    pub report: CheckReport,
    pub config: CheckerConfig,
}

/// Runs the legality conditions, the typechecker and the permission rules.
pub fn analyze(program: &Program, config: &CheckerConfig) -> Analysis {
    let mut diagnostics = check_legality(program);
    let checked = check_program(program);
    diagnostics.extend(checked.diagnostics.iter().cloned());
    let mut checker = PermChecker::new(checked.table.clone(), *config, Some(checked.ill_typed.clone()));
    for info in &checked.procs {
        checker.check_proc(info);
    }
    diagnostics.extend(checker.diags);
    let accepted = diagnostics.is_empty();
    Analysis { checked, report: CheckReport { diagnostics, snapshots: checker.snapshots, accepted }, config: *config }
}

/// Permission environment of a procedure's formals on entry.
pub fn entry_env(table: &Arc<TypeTable>, params: &[ParamSig]) -> PermEnv {
    let mut env = PermEnv::new(table.clone());
    for p in params {
        env.declare(&p.name, &p.ty, ParamClass::of(p, table).entry_perm());
    }
    env
}

/// Applies permission rules statement by statement. Failed premises produce diagnostics and
/// the rule's effect is still applied, so later independent errors are also reported.
pub struct PermChecker {
    table: Arc<TypeTable>,
    config: CheckerConfig,
    ill_typed: Option<HashSet<StmtId>>,
    pub diags: Vec<Diagnostic>,
    pub snapshots: Snapshots,
}

impl PermChecker {
    pub fn new(table: Arc<TypeTable>, config: CheckerConfig, ill_typed: Option<HashSet<StmtId>>) -> Self {
        PermChecker { table, config, ill_typed, diags: Vec::new(), snapshots: BTreeMap::new() }
    }

    fn snap(&mut self, point: ProgramPoint, env: &PermEnv) {
        if self.config.snapshots {
            self.snapshots.insert(point, env.clone());
        }
    }

    /// Environment at the start of a procedure body: formals, then each local as pfresh W.
    pub fn body_env(&mut self, info: &ProcInfo) -> PermEnv {
        let mut env = entry_env(&self.table, &info.params);
        self.snap(ProgramPoint::ProcEntry(info.id), &env);
        for (k, (name, ty)) in info.locals.iter().enumerate() {
            env.declare(name, ty, W);
            self.snap(ProgramPoint::Decl(info.id, k as u32), &env);
        }
        env
    }

    pub fn check_proc(&mut self, info: &ProcInfo) {
        let mut env = self.body_env(info);
        self.check_stmt(&info.env, &mut env, &info.body);
        self.snap(ProgramPoint::ProcExit(info.id), &env);
        self.exit_check(info, &env);
    }

    /// Every borrowed formal must be RW when the procedure returns.
    pub fn exit_check(&mut self, info: &ProcInfo, env: &PermEnv) {
        if self.config.mutated(Mutation::ExitCheckDisabled) {
            return;
        }
        for p in &info.params {
            if !ParamClass::of(p, &self.table).is_borrowed() {
                continue;
            }
            let actual = env.lookup(&Path::var(&p.name));
            if actual != Rw {
                self.diags.push(
                    Diagnostic::new(
                        "P-procedureDecl",
                        DiagKind::BorrowedNotRwAtExit,
                        info.body.loc,
                        format!("borrowed parameter `{}` of `{}` must be RW on return, found {actual}", p.name, info.name),
                    )
                    .with_path(&p.name)
                    .with_perms(&[Rw], actual),
                );
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn require(
        &mut self,
        env: &PermEnv,
        p: &Path,
        allowed: &[Permission],
        rule: &str,
        kind: DiagKind,
        loc: SourceLocation,
    ) -> bool {
        let actual = env.lookup(p);
        if allowed.contains(&actual) {
            return true;
        }
        let req: Vec<&str> = allowed.iter().map(|k| k.as_str()).collect();
        self.diags.push(
            Diagnostic::new(rule, kind, loc, format!("`{p}` has permission {actual}, needs {}", req.join(" or ")))
                .with_path(p)
                .with_perms(allowed, actual),
        );
        false
    }

    fn set_ext(&self, env: &mut PermEnv, p: &Path, k: Permission, filter: ExtFilter) {
        match self.config.extension_update {
            ExtensionUpdate::Assign => env.set_extensions(p, k, filter),
            ExtensionUpdate::JoinWithCurrent => env.update_extensions(p, filter, &|c| c.lub(k)),
        }
    }

    pub fn check_stmt(&mut self, tenv: &TypeEnv, env: &mut PermEnv, s: &Stmt) {
        if self.ill_typed.as_ref().is_some_and(|set| set.contains(&s.id)) {
            return;
        }
        self.snap(ProgramPoint::Before(s.id), env);
        match &s.kind {
            StmtKind::Assign { target, rhs } => self.assign(env, target, rhs, s.loc),
            StmtKind::AssignNew { target, .. } => self.assign_target(env, target, "P-assignNew", s.loc),
            StmtKind::Call { proc, args } => {
                if let Some(&pid) = tenv.procs.get(proc) {
                    self.call(env, pid, args, s);
                }
            }
            StmtKind::Block(ss) => {
                for s in ss {
                    self.check_stmt(tenv, env, s);
                }
            }
            StmtKind::If { then_branch, else_branch } => {
                let mut then_env = env.clone();
                self.check_stmt(tenv, &mut then_env, then_branch);
                let mut else_env = env.clone();
                self.check_stmt(tenv, &mut else_env, else_branch);
                let op = if self.config.mutated(Mutation::FusionUsesLub) { Permission::lub } else { Permission::glb };
                *env = then_env.merge(&else_env, op);
                env.release();
            }
        }
        self.snap(ProgramPoint::After(s.id), env);
    }

    /// Checks the assigned path is writable, then grants RW on its subtree and normalizes.
    fn assign_target(&mut self, env: &mut PermEnv, x: &Path, rule: &str, loc: SourceLocation) {
        self.require(env, x, &[W, Rw], rule, DiagKind::AssignRequiresWritable, loc);
        env.set_subtree(x, Rw);
        env.release();
    }

    fn assign(&mut self, env: &mut PermEnv, x: &Path, rhs: &Expr, loc: SourceLocation) {
        match &rhs.kind {
            ExprKind::Null => self.assign_target(env, x, "P-assignNull", loc),
            ExprKind::Int(_) => self.assign_target(env, x, "P-assignLiteral", loc),
            ExprKind::Name(n) if env.is_deep_path(n) => {
                let rule = "P-assignDeepName";
                let early = self.config.mutated(Mutation::AssignCheckBeforeMove);
                if early {
                    self.require(env, x, &[W, Rw], rule, DiagKind::AssignRequiresWritable, loc);
                }
                self.require(env, n, &[Rw], rule, DiagKind::MoveRequiresRw, rhs.loc);
                move_name(env, n, self.config.updates);
                if !self.config.mutated(Mutation::MoveExtensionsDisabled) {
                    self.set_ext(env, n, No, ExtFilter::MoreDerefs);
                }
                self.set_ext(env, n, W, ExtFilter::DeepSameDerefs);
                self.set_ext(env, n, Rw, ExtFilter::ShallowSameDerefs);
                if early {
                    env.set_subtree(x, Rw);
                    env.release();
                } else {
                    self.assign_target(env, x, rule, loc);
                }
            }
            ExprKind::Name(n) => {
                let rule = "P-assignShallowName";
                self.require(env, n, &[R, Rw], rule, DiagKind::ReadRequiresReadable, rhs.loc);
                self.assign_target(env, x, rule, loc);
            }
            ExprKind::AccessOf(n) => {
                let rule = "P-assignAccess";
                self.require(env, n, &[Rw], rule, DiagKind::MoveRequiresRw, rhs.loc);
                if !self.config.mutated(Mutation::AccessMoveDisabled) {
                    access_move_name(env, n, self.config.updates);
                    self.set_ext(env, n, No, ExtFilter::AllStrict);
                }
                self.assign_target(env, x, rule, loc);
            }
        }
    }

    fn call(&mut self, env: &mut PermEnv, pid: ProcId, args: &[Expr], s: &Stmt) {
        let sig = self.table.proc(pid).clone();
        if !sig.valid || sig.params.len() != args.len() {
            return;
        }
        let classes: Vec<ParamClass> = sig.params.iter().map(|p| ParamClass::of(p, &self.table)).collect();
        let mut order: Vec<usize> = (0..args.len()).collect();
        order.sort_by_key(|&i| classes[i].group());
        let mut chained = env.clone();
        for i in order {
            let arg = &args[i];
            match classes[i] {
                ParamClass::Observed => self.observe_entry(&mut chained, arg),
                ParamClass::CopyIn => {
                    if let ExprKind::Name(n) = &arg.kind {
                        self.require(&chained, n, &[R, Rw], "P-call", DiagKind::ReadRequiresReadable, arg.loc);
                    }
                }
                ParamClass::BorrowIn | ParamClass::BorrowInOut => self.borrow_in_out(&mut chained, arg),
                ParamClass::BorrowOut => {
                    if let ExprKind::Name(n) = &arg.kind {
                        self.borrow_out(&mut chained, n, arg.loc);
                    }
                }
            }
        }
        self.snap(ProgramPoint::CallChained(s.id), &chained);
        for (arg, class) in args.iter().zip(&classes) {
            if matches!(class, ParamClass::BorrowInOut | ParamClass::BorrowOut) {
                if let ExprKind::Name(n) = &arg.kind {
                    env.set_subtree(n, Rw);
                }
            }
        }
        env.release();
    }

    /// Observed actual: must be readable; it, its prefixes and its extensions become R.
    pub fn observe_entry(&mut self, env: &mut PermEnv, e: &Expr) {
        let (ExprKind::Name(n) | ExprKind::AccessOf(n)) = &e.kind else { return };
        self.require(env, n, &[R, Rw], "P-O-entryPoint", DiagKind::ObserveRequiresReadable, e.loc);
        if self.config.mutated(Mutation::ObserveNoRestrict) {
            return;
        }
        for q in n.strict_prefixes() {
            env.set_node(&q, R);
        }
        env.set_node(n, R);
        self.set_ext(env, n, R, ExtFilter::AllStrict);
    }

    /// In or in-out actual: must be RW, then is borrowed.
    pub fn borrow_in_out(&mut self, env: &mut PermEnv, e: &Expr) {
        let (ExprKind::Name(n) | ExprKind::AccessOf(n)) = &e.kind else { return };
        if !self.config.mutated(Mutation::BorrowEntryCheckDisabled) {
            self.require(env, n, &[Rw], "P-B-entryPointInOut", DiagKind::BorrowRequiresRw, e.loc);
        }
        self.borrow_name(env, n);
    }

    /// Out actual: must be writable, then is borrowed.
    pub fn borrow_out(&mut self, env: &mut PermEnv, n: &Path, loc: SourceLocation) {
        if !self.config.mutated(Mutation::BorrowEntryCheckDisabled) {
            self.require(env, n, &[W, Rw], "P-B-entryPointOut", DiagKind::BorrowOutRequiresW, loc);
        }
        self.borrow_name(env, n);
    }

    /// The path and its prefixes become NO if deep and R if shallow; so do its extensions.
    fn borrow_name(&self, env: &mut PermEnv, n: &Path) {
        if self.config.mutated(Mutation::BorrowNoPropagation) {
            return;
        }
        for q in n.strict_prefixes().iter().chain(std::iter::once(n)) {
            let k = if env.is_deep_path(q) { No } else { R };
            env.set_node(q, k);
        }
        match self.config.updates {
            PermUpdates::Meet => {
                env.update_extensions(n, ExtFilter::Deep, &|_| No);
                env.update_extensions(n, ExtFilter::Shallow, &|c| c.glb(R));
            }
            PermUpdates::Literal => {
                self.set_ext(env, n, No, ExtFilter::Deep);
                self.set_ext(env, n, R, ExtFilter::Shallow);
            }
        }
    }
}

fn write(env: &mut PermEnv, p: &Path, k: Permission, updates: PermUpdates) {
    let k = match updates {
        PermUpdates::Meet => env.lookup(p).glb(k),
        PermUpdates::Literal => k,
    };
    env.set_node(p, k);
}

/// Move of a name: the path and all its prefixes become W.
pub fn move_name(env: &mut PermEnv, p: &Path, updates: PermUpdates) {
    for q in p.strict_prefixes() {
        write(env, &q, W, updates);
    }
    write(env, p, W, updates);
}

/// Move under 'Access: the path becomes NO; a prefix reached through a field is itself
/// access-moved, a prefix reached through `.all` is plainly moved.
pub fn access_move_name(env: &mut PermEnv, p: &Path, updates: PermUpdates) {
    env.set_node(p, No);
    match (p.last(), p.parent()) {
        (Some(Selector::Field(_)), Some(q)) => access_move_name(env, &q, updates),
        (Some(Selector::Deref), Some(q)) => move_name(env, &q, updates),
        _ => {}
    }
}
