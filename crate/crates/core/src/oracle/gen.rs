//! Seeded generator of well-typed programs. Bodies are grown one statement at a time and
//! each candidate is run through the permission checker, so most generated programs are
//! accepted; a small fraction of rejected candidates is kept on purpose.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::borrowck::{CheckerConfig, PermChecker};
use crate::permission::PermEnv;
use crate::syntax::*;
use crate::typecheck::{check_program, CheckedProgram, ProcInfo, Type, TypeTable};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    /// Maximum number of nested procedures.
    pub procs: usize,
    /// Maximum number of variables in the main procedure.
    pub vars: usize,
    /// Statements attempted per body.
    pub stmts: usize,
    pub max_if_depth: usize,
    /// Probability of keeping a candidate the checker rejects.
    pub keep_rejected: f64,
    /// Checker used for guidance, possibly mutated.
    pub checker: CheckerConfig,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { procs: 3, vars: 5, stmts: 7, max_if_depth: 2, keep_rejected: 0.02, checker: CheckerConfig::default() }
    }
}

const RECORDS: &str = "
   type Pair is record x : integer; y : integer; end record;
   type Node is record val : integer; next : access Node; end record;
   type Holder is record p : access integer; n : access Node; q : Pair; end record;";

fn type_pool() -> [TypeExpr; 7] {
    [
        TypeExpr::Named("integer".into()),
        TypeExpr::AccessTo("integer".into()),
        TypeExpr::Named("Pair".into()),
        TypeExpr::AccessTo("Pair".into()),
        TypeExpr::Named("Node".into()),
        TypeExpr::AccessTo("Node".into()),
        TypeExpr::Named("Holder".into()),
    ]
}

/// Generates a well-typed program from `seed`.
pub fn gen_program(seed: u64, cfg: &GenConfig) -> Program {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut program = skeleton(&mut rng, cfg);
    program.renumber();
    let checked = check_program(&program);
    assert!(checked.is_well_typed(), "generated skeleton is ill-typed: {:?}", checked.diagnostics);

    let mut g = Gen { rng, cfg, checked: &checked };
    let nested = program.main.decls.iter().filter(|d| matches!(d, Decl::Proc(_))).count();
    let mut bodies = Vec::new();
    for id in 0..=nested {
        bodies.push(g.body(&checked.procs[id]));
    }
    let mut bodies = bodies.into_iter();
    program.main.body = bodies.next().expect("main body");
    for d in &mut program.main.decls {
        if let Decl::Proc(p) = d {
            p.body = bodies.next().expect("one body per procedure");
        }
    }
    program.renumber();
    program
}

fn skeleton(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> Program {
    let records = crate::syntax::parse_source(&format!("procedure M is {RECORDS} begin T := 0; end;"))
        .expect("record pool parses")
        .main
        .decls;
    let pool = type_pool();
    let mut decls = records;
    let nprocs = rng.gen_range(0..=cfg.procs);
    for k in 0..nprocs {
        let nparams = rng.gen_range(1..=3);
        let mut params: Vec<Param> = Vec::new();
        for i in 0..nparams {
            // Repeated types make aliasing actuals possible.
            let ty = match params.last() {
                Some(prev) if rng.gen_bool(0.5) => prev.ty.clone(),
                _ => pool.choose(rng).unwrap().clone(),
            };
            params.push(Param {
                name: format!("P{k}_{}", (b'a' + i as u8) as char),
                mode: *[Mode::In, Mode::InOut, Mode::Out].choose(rng).unwrap(),
                ty,
                loc: SourceLocation::default(),
            });
        }
        let mut locals = vec![Decl::Var {
            name: format!("T{k}"),
            ty: TypeExpr::Named("integer".into()),
            loc: SourceLocation::default(),
        }];
        for i in 0..rng.gen_range(0..=2) {
            locals.push(Decl::Var { name: format!("L{k}_{i}"), ty: pool.choose(rng).unwrap().clone(), loc: SourceLocation::default() });
        }
        decls.push(Decl::Proc(ProcDecl {
            name: format!("Q{k}"),
            params,
            decls: locals,
            body: Stmt::new(StmtKind::Block(Vec::new())),
            loc: SourceLocation::default(),
        }));
    }
    decls.push(Decl::Var { name: "T".into(), ty: TypeExpr::Named("integer".into()), loc: SourceLocation::default() });
    for i in 0..rng.gen_range(2..=cfg.vars.max(2)) {
        decls.push(Decl::Var { name: format!("V{i}"), ty: pool.choose(rng).unwrap().clone(), loc: SourceLocation::default() });
    }
    Program {
        main: ProcDecl {
            name: "Main".into(),
            params: Vec::new(),
            decls,
            body: Stmt::new(StmtKind::Block(Vec::new())),
            loc: SourceLocation::default(),
        },
    }
}

struct Gen<'a> {
    rng: ChaCha8Rng,
    cfg: &'a GenConfig,
    checked: &'a CheckedProgram,
}

/// State while generating one body.
struct Scope<'a> {
    info: &'a ProcInfo,
    checker: PermChecker,
    /// Typed paths of the body's variables, at most three selectors long.
    paths: Vec<(Path, Type)>,
    /// Paths that may be written: not a direct path rooted at an in-mode formal.
    writable: Vec<(Path, Type)>,
    skip: String,
}

fn typed_paths(info: &ProcInfo, table: &TypeTable) -> Vec<(Path, Type)> {
    let mut out = Vec::new();
    for (name, ty) in &info.env.vars {
        let mut stack = vec![(Path::var(name), ty.clone())];
        while let Some((p, t)) = stack.pop() {
            if p.len() < 3 {
                for (sel, ct) in table.children(&t) {
                    stack.push((p.child(sel), ct));
                }
            }
            out.push((p, t));
        }
    }
    out.sort_by_key(|(p, _)| p.to_string());
    out
}

impl Gen<'_> {
    fn body(&mut self, info: &ProcInfo) -> Stmt {
        let table = self.checked.table.clone();
        let paths = typed_paths(info, &table);
        let in_formals: Vec<&str> = info.params.iter().filter(|p| p.mode == Mode::In).map(|p| p.name.as_str()).collect();
        let writable = paths
            .iter()
            .filter(|(p, _)| !(in_formals.contains(&p.base.as_str()) && p.deref_count() == 0))
            .cloned()
            .collect();
        let skip = info.locals.iter().find(|(n, _)| n.starts_with('T')).map(|(n, _)| n.clone()).expect("every body has a scratch integer");
        let mut cfg = self.cfg.checker;
        cfg.snapshots = false;
        let mut checker = PermChecker::new(table, cfg, None);
        let mut env = checker.body_env(info);
        let mut scope = Scope { info, checker, paths, writable, skip };

        let mut stmts = Vec::new();
        if info.id == self.checked.main {
            for (p, t) in scope.writable.clone() {
                if p.selectors.is_empty() && t.is_access() && self.rng.gen_bool(0.7) {
                    let cand = self.new_stmt(&p, &t);
                    self.try_push(&mut scope, &mut env, &mut stmts, cand);
                }
            }
        }
        let n = self.rng.gen_range(1..=self.cfg.stmts);
        stmts.extend(self.block(&mut scope, &mut env, n, 0).into_iter().flat_map(flatten));
        self.repair_exit(&mut scope, &mut env, &mut stmts);
        if stmts.is_empty() {
            stmts.push(skip_stmt(&scope.skip));
        }
        Stmt::new(StmtKind::Block(stmts))
    }

    /// Appends `cand` if the checker accepts it, or with a small probability anyway.
    fn try_push(&mut self, scope: &mut Scope, env: &mut PermEnv, out: &mut Vec<Stmt>, cand: Stmt) -> bool {
        let mut next = env.clone();
        scope.checker.diags.clear();
        scope.checker.check_stmt(&scope.info.env, &mut next, &cand);
        if scope.checker.diags.is_empty() || self.rng.gen_bool(self.cfg.keep_rejected) {
            *env = next;
            out.push(cand);
            return true;
        }
        false
    }

    fn block(&mut self, scope: &mut Scope, env: &mut PermEnv, n: usize, if_depth: usize) -> Vec<Stmt> {
        let mut out = Vec::new();
        for _ in 0..n {
            for _attempt in 0..8 {
                let cand = self.stmt(scope, env, if_depth);
                if let Some(cand) = cand {
                    if self.try_push(scope, env, &mut out, cand) {
                        break;
                    }
                }
            }
        }
        out
    }

    fn stmt(&mut self, scope: &mut Scope, env: &PermEnv, if_depth: usize) -> Option<Stmt> {
        let roll = self.rng.gen_range(0..100);
        if roll < 15 && if_depth < self.cfg.max_if_depth {
            let n = self.rng.gen_range(1..=3);
            let mut then_env = env.clone();
            let then_branch = self.block(scope, &mut then_env, n, if_depth + 1);
            let mut else_env = env.clone();
            let else_branch = self.block(scope, &mut else_env, n, if_depth + 1);
            let wrap = |ss: Vec<Stmt>, skip: &str| match ss.len() {
                0 => skip_stmt(skip),
                1 => ss.into_iter().next().unwrap(),
                _ => Stmt::new(StmtKind::Block(ss)),
            };
            return Some(Stmt::new(StmtKind::If {
                then_branch: Box::new(wrap(then_branch, &scope.skip)),
                else_branch: Box::new(wrap(else_branch, &scope.skip)),
            }));
        }
        if roll < 35 {
            if let Some(call) = self.call(scope, if_depth > 0) {
                return Some(call);
            }
        }
        let (x, t) = scope.writable.choose(&mut self.rng)?.clone();
        if roll < 55 && t.is_access() {
            return Some(self.new_stmt(&x, &t));
        }
        let rhs = self.expr(scope, &t, true)?;
        Some(Stmt::new(StmtKind::Assign { target: x, rhs }))
    }

    fn new_stmt(&self, x: &Path, t: &Type) -> Stmt {
        let Type::Access(inner) = t else { unreachable!("`new` needs an access path") };
        Stmt::new(StmtKind::AssignNew { target: x.clone(), type_name: self.checked.table.type_name(inner) })
    }

    /// An expression of type `t`.
    fn expr(&mut self, scope: &Scope, t: &Type, allow_literals: bool) -> Option<Expr> {
        let names: Vec<&Path> = scope.paths.iter().filter(|(_, pt)| pt == t).map(|(p, _)| p).collect();
        let targets: Vec<&Path> = match t {
            Type::Access(inner) => scope.paths.iter().filter(|(_, pt)| pt == &**inner).map(|(p, _)| p).collect(),
            _ => Vec::new(),
        };
        let mut options = Vec::new();
        if allow_literals {
            match t {
                Type::Integer => options.push(ExprKind::Int(self.rng.gen_range(0..10))),
                Type::Access(_) => options.push(ExprKind::Null),
                _ => {}
            }
        }
        if let Some(n) = names.choose(&mut self.rng) {
            options.push(ExprKind::Name((*n).clone()));
            options.push(ExprKind::Name((*n).clone()));
        }
        if let Some(n) = targets.choose(&mut self.rng) {
            options.push(ExprKind::AccessOf((*n).clone()));
        }
        options.choose(&mut self.rng).cloned().map(Expr::new)
    }

    fn call(&mut self, scope: &Scope, in_branch: bool) -> Option<Stmt> {
        let me = scope.info.id;
        let callees: Vec<_> = scope
            .info
            .env
            .procs
            .values()
            .copied()
            .filter(|&p| p != self.checked.main && (p != me || in_branch))
            .collect();
        let callee = &self.checked.procs[callees.choose(&mut self.rng)?.0 as usize];
        let mut args: Vec<Expr> = Vec::new();
        for p in &callee.params {
            let reuse = args.iter().zip(&callee.params).find(|(a, q)| {
                q.ty == p.ty
                    && matches!(&a.kind, ExprKind::Name(n)
                        if p.mode == Mode::In || scope.writable.iter().any(|(w, _)| w == n))
            });
            let arg = if let Some((a, _)) = reuse.filter(|_| self.rng.gen_bool(0.3)) {
                a.clone()
            } else if p.mode == Mode::In {
                self.expr(scope, &p.ty, true)?
            } else {
                let names: Vec<&Path> = scope.writable.iter().filter(|(_, t)| *t == p.ty).map(|(n, _)| n).collect();
                Expr::new(ExprKind::Name((*names.choose(&mut self.rng)?).clone()))
            };
            args.push(arg);
        }
        Some(Stmt::new(StmtKind::Call { proc: callee.name.clone(), args }))
    }

    /// Resets borrowed formals that would fail the exit check.
    fn repair_exit(&mut self, scope: &mut Scope, env: &mut PermEnv, stmts: &mut Vec<Stmt>) {
        scope.checker.diags.clear();
        scope.checker.exit_check(scope.info, env);
        let failing: Vec<String> = scope.checker.diags.iter().filter_map(|d| d.path.clone()).collect();
        for name in failing {
            if scope.info.params.iter().any(|p| p.name == name && p.mode == Mode::In) {
                continue;
            }
            let ty = scope.info.env.vars[&name].clone();
            for s in reset(&Path::var(&name), &ty, &self.checked.table) {
                self.try_push(scope, env, stmts, s);
            }
        }
    }
}

fn skip_stmt(skip: &str) -> Stmt {
    Stmt::new(StmtKind::Assign { target: Path::var(skip), rhs: Expr::new(ExprKind::Int(0)) })
}

/// Statements that overwrite every leaf of `p` with a literal.
fn reset(p: &Path, t: &Type, table: &TypeTable) -> Vec<Stmt> {
    match t {
        Type::Integer => vec![Stmt::new(StmtKind::Assign { target: p.clone(), rhs: Expr::new(ExprKind::Int(0)) })],
        Type::Access(_) | Type::Null => vec![Stmt::new(StmtKind::Assign { target: p.clone(), rhs: Expr::new(ExprKind::Null) })],
        Type::Record(_) => table.children(t).into_iter().flat_map(|(sel, ct)| reset(&p.child(sel), &ct, table)).collect(),
    }
}

fn flatten(s: Stmt) -> Vec<Stmt> {
    match s.kind {
        StmtKind::Block(ss) => ss,
        _ => vec![s],
    }
}

/// How often each statement production occurs in a program.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub assign_null: usize,
    pub assign_literal: usize,
    pub assign_name: usize,
    pub assign_access: usize,
    pub assign_new: usize,
    pub call: usize,
    pub branch: usize,
}

impl Coverage {
    pub fn add(&mut self, o: &Coverage) {
        self.assign_null += o.assign_null;
        self.assign_literal += o.assign_literal;
        self.assign_name += o.assign_name;
        self.assign_access += o.assign_access;
        self.assign_new += o.assign_new;
        self.call += o.call;
        self.branch += o.branch;
    }

    pub fn all_nonzero(&self) -> bool {
        [self.assign_null, self.assign_literal, self.assign_name, self.assign_access, self.assign_new, self.call, self.branch]
            .iter()
            .all(|&n| n > 0)
    }
}

pub fn coverage(program: &Program) -> Coverage {
    fn proc(p: &ProcDecl, c: &mut Coverage) {
        for d in &p.decls {
            if let Decl::Proc(q) = d {
                proc(q, c);
            }
        }
        p.body.visit(&mut |s| match &s.kind {
            StmtKind::Assign { rhs, .. } => match rhs.kind {
                ExprKind::Null => c.assign_null += 1,
                ExprKind::Int(_) => c.assign_literal += 1,
                ExprKind::Name(_) => c.assign_name += 1,
                ExprKind::AccessOf(_) => c.assign_access += 1,
            },
            StmtKind::AssignNew { .. } => c.assign_new += 1,
            StmtKind::Call { .. } => c.call += 1,
            StmtKind::If { .. } => c.branch += 1,
            StmtKind::Block(_) => {}
        });
    }
    let mut c = Coverage::default();
    proc(&program.main, &mut c);
    c
}
