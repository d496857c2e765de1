//! Types, type equivalence, deep/shallow classification and the typing rules.

mod types;

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

pub use types::*;

use crate::diag::{DiagKind, Diagnostic};
use crate::syntax::*;

/// A procedure after typechecking, with everything later phases need to analyze or run it.
#[derive(Clone, Debug)]
pub struct ProcInfo {
    pub id: ProcId,
    pub name: String,
    pub params: Vec<ParamSig>,
    /// Local variables in declaration order.
    pub locals: Vec<(String, Type)>,
    /// Environment of the body: types, procedures, self, formals and locals.
    pub env: TypeEnv,
    pub body: Stmt,
    pub loc: SourceLocation,
}

/// Result of typechecking a whole program.
#[derive(Clone, Debug)]
pub struct CheckedProgram {
    pub table: Arc<TypeTable>,
    pub procs: Vec<ProcInfo>,
    pub main: ProcId,
    pub call_targets: HashMap<StmtId, ProcId>,
    /// Statements whose typing premises failed; later phases skip them.
    pub ill_typed: HashSet<StmtId>,
    pub diagnostics: Vec<Diagnostic>,
}

impl CheckedProgram {
    pub fn proc(&self, id: ProcId) -> &ProcInfo {
        &self.procs[id.0 as usize]
    }

    pub fn is_well_typed(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

pub fn type_of_name(env: &TypeEnv, table: &TypeTable, path: &Path) -> Result<Type, Diagnostic> {
    let loc = SourceLocation::default();
    let mut t = env.vars.get(&path.base).cloned().ok_or_else(|| {
        Diagnostic::new("T-readIdent", DiagKind::UnknownVariable, loc, format!("unknown variable `{}`", path.base))
            .with_path(&path.base)
    })?;
    let mut prefix = Path::var(&path.base);
    for sel in &path.selectors {
        t = match (sel, &t) {
            (Selector::Field(f), Type::Record(id)) => table.field(*id, f).cloned().ok_or_else(|| {
                Diagnostic::new(
                    "T-readField",
                    DiagKind::NoSuchField,
                    loc,
                    format!("`{prefix}` of type {} has no field `{f}`", table.type_name(&t)),
                )
                .with_path(&prefix)
            })?,
            (Selector::Field(f), _) => {
                return Err(Diagnostic::new(
                    "T-readField",
                    DiagKind::NoSuchField,
                    loc,
                    format!("`{prefix}` of type {} is not a record and has no field `{f}`", table.type_name(&t)),
                )
                .with_path(&prefix))
            }
            (Selector::Deref, Type::Access(inner)) => (**inner).clone(),
            (Selector::Deref, _) => {
                return Err(Diagnostic::new(
                    "T-readDeref",
                    DiagKind::DerefOfNonAccess,
                    loc,
                    format!("`{prefix}` of type {} cannot be dereferenced", table.type_name(&t)),
                )
                .with_path(&prefix))
            }
        };
        prefix.selectors.push(sel.clone());
    }
    Ok(t)
}

pub fn type_of_expr(env: &TypeEnv, table: &TypeTable, e: &Expr) -> Result<Type, Diagnostic> {
    let with_loc = |mut d: Diagnostic| {
        d.location = e.loc;
        d
    };
    match &e.kind {
        ExprKind::Null => Ok(Type::Null),
        ExprKind::Int(_) => Ok(Type::Integer),
        ExprKind::Name(p) => type_of_name(env, table, p).map_err(with_loc),
        ExprKind::AccessOf(p) => type_of_name(env, table, p).map(Type::access).map_err(with_loc),
    }
}

fn resolve_type(env: &TypeEnv, t: &TypeExpr) -> Option<Type> {
    let named = env.types.get(t.name())?.clone();
    Some(match t {
        TypeExpr::Named(_) => named,
        TypeExpr::AccessTo(_) => Type::access(named),
    })
}

/// Checks one statement and returns its diagnostics.
pub fn check_stmt(env: &TypeEnv, table: &TypeTable, s: &Stmt) -> Vec<Diagnostic> {
    let mut cx = Checker::new(table.clone());
    cx.stmt(env, s);
    cx.diags
}

/// Typechecks the program, declarations left to right.
pub fn check_program(program: &Program) -> CheckedProgram {
    let mut cx = Checker::new(TypeTable::default());
    let mut root = TypeEnv::default();
    for t in crate::syntax::legality::PREDEFINED_TYPES {
        root.types.insert(t.to_string(), Type::Integer);
    }
    let main = cx.proc(&root, &program.main);
    CheckedProgram {
        table: Arc::new(cx.table),
        procs: cx.procs.into_iter().map(|p| p.expect("every procedure is registered")).collect(),
        main,
        call_targets: cx.call_targets,
        ill_typed: cx.ill_typed,
        diagnostics: cx.diags,
    }
}

struct Checker {
    table: TypeTable,
    procs: Vec<Option<ProcInfo>>,
    call_targets: HashMap<StmtId, ProcId>,
    ill_typed: HashSet<StmtId>,
    diags: Vec<Diagnostic>,
}

impl Checker {
    fn new(table: TypeTable) -> Self {
        Checker {
            table,
            procs: Vec::new(),
            call_targets: HashMap::new(),
            ill_typed: HashSet::new(),
            diags: Vec::new(),
        }
    }

    fn unknown_type(&mut self, rule: &str, t: &TypeExpr, loc: SourceLocation) {
        self.diags.push(
            Diagnostic::new(rule, DiagKind::UnknownType, loc, format!("unknown type `{}`", t.name())).with_path(t.name()),
        );
    }

    /// Registers and checks a procedure declared in `outer`. Returns its id.
    fn proc(&mut self, outer: &TypeEnv, p: &ProcDecl) -> ProcId {
        let mut params = Vec::new();
        let mut valid = true;
        for param in &p.params {
            match resolve_type(outer, &param.ty) {
                Some(ty) => params.push(ParamSig { name: param.name.clone(), mode: param.mode, ty }),
                None => {
                    valid = false;
                    self.unknown_type("T-procedureDecl", &param.ty, param.loc);
                }
            }
        }
        let id = ProcId(self.table.procs.len() as u32);
        self.table.procs.push(ProcSig { name: p.name.clone(), params: params.clone(), valid });
        self.procs.push(None);

        let mut env = outer.restricted();
        env.procs.insert(p.name.clone(), id);
        for param in &params {
            env.vars.insert(param.name.clone(), param.ty.clone());
        }
        let mut locals = Vec::new();
        for d in &p.decls {
            match d {
                Decl::Record { name, fields, loc } => self.record(&mut env, name, fields, *loc),
                Decl::Var { name, ty, loc } => match resolve_type(&env, ty) {
                    Some(t) => {
                        env.vars.insert(name.clone(), t.clone());
                        locals.push((name.clone(), t));
                    }
                    None => self.unknown_type("T-uninitDecl", ty, *loc),
                },
                Decl::Proc(q) => {
                    let qid = self.proc(&env, q);
                    env.procs.insert(q.name.clone(), qid);
                }
            }
        }
        self.stmt(&env, &p.body);
        self.procs[id.0 as usize] = Some(ProcInfo {
            id,
            name: p.name.clone(),
            params,
            locals,
            env,
            body: p.body.clone(),
            loc: p.loc,
        });
        id
    }

    fn record(&mut self, env: &mut TypeEnv, name: &str, fields: &[FieldDecl], loc: SourceLocation) {
        let id = RecordId(self.table.records.len() as u32);
        self.table.records.push(RecordDef { name: name.to_string(), fields: Vec::new(), deep: false });
        let mut scope = env.clone();
        scope.types.insert(name.to_string(), Type::Record(id));
        let mut resolved = Vec::new();
        for f in fields {
            if f.ty == TypeExpr::Named(name.to_string()) {
                // reported by the legality check
                continue;
            }
            match resolve_type(&scope, &f.ty) {
                Some(t) => resolved.push((f.name.clone(), t)),
                None => self.unknown_type("T-recordDecl", &f.ty, f.loc),
            }
        }
        let deep = compute_record_deep(&resolved, &self.table);
        let def = &mut self.table.records[id.0 as usize];
        def.fields = resolved;
        def.deep = deep;
        let _ = loc;
        env.types.insert(name.to_string(), Type::Record(id));
    }

    fn fail(&mut self, s: &Stmt, mut d: Diagnostic) {
        if d.location == SourceLocation::default() {
            d.location = s.loc;
        }
        self.diags.push(d);
        self.ill_typed.insert(s.id);
    }

    fn name(&mut self, env: &TypeEnv, s: &Stmt, p: &Path) -> Option<Type> {
        match type_of_name(env, &self.table, p) {
            Ok(t) => Some(t),
            Err(d) => {
                self.fail(s, d);
                None
            }
        }
    }

    fn stmt(&mut self, env: &TypeEnv, s: &Stmt) {
        match &s.kind {
            StmtKind::Assign { target, rhs } => {
                let tt = self.name(env, s, target);
                let et = match type_of_expr(env, &self.table, rhs) {
                    Ok(t) => Some(t),
                    Err(d) => {
                        self.fail(s, d);
                        None
                    }
                };
                if let (Some(tt), Some(et)) = (tt, et) {
                    if !type_equiv(&tt, &et) {
                        let msg = format!(
                            "cannot assign {} to `{target}` of type {}",
                            self.table.type_name(&et),
                            self.table.type_name(&tt)
                        );
                        self.fail(s, Diagnostic::new("T-assignExpr", DiagKind::TypeMismatch, s.loc, msg).with_path(target));
                    }
                }
            }
            StmtKind::AssignNew { target, type_name } => {
                let tt = self.name(env, s, target);
                let Some(named) = env.types.get(type_name).cloned() else {
                    let d = Diagnostic::new("T-assignNew", DiagKind::UnknownType, s.loc, format!("unknown type `{type_name}`"))
                        .with_path(type_name);
                    self.fail(s, d);
                    return;
                };
                if let Some(tt) = tt {
                    let allocated = Type::access(named);
                    if !type_equiv(&allocated, &tt) {
                        let msg = format!(
                            "cannot assign {} to `{target}` of type {}",
                            self.table.type_name(&allocated),
                            self.table.type_name(&tt)
                        );
                        self.fail(s, Diagnostic::new("T-assignNew", DiagKind::TypeMismatch, s.loc, msg).with_path(target));
                    }
                }
            }
            StmtKind::Call { proc, args } => {
                let Some(&pid) = env.procs.get(proc) else {
                    let d = Diagnostic::new(
                        "T-procedureCall",
                        DiagKind::UnknownProcedure,
                        s.loc,
                        format!("unknown procedure `{proc}`"),
                    )
                    .with_path(proc);
                    self.fail(s, d);
                    return;
                };
                self.call_targets.insert(s.id, pid);
                let sig = self.table.proc(pid).clone();
                if !sig.valid {
                    self.ill_typed.insert(s.id);
                    return;
                }
                if sig.params.len() != args.len() {
                    let msg = format!("`{proc}` expects {} actuals, found {}", sig.params.len(), args.len());
                    self.fail(s, Diagnostic::new("T-procedureCall", DiagKind::ArityMismatch, s.loc, msg));
                    return;
                }
                for (arg, param) in args.iter().zip(&sig.params) {
                    if param.mode != Mode::In && !matches!(arg.kind, ExprKind::Name(_)) {
                        // reported by the legality check
                        self.ill_typed.insert(s.id);
                        continue;
                    }
                    match type_of_expr(env, &self.table, arg) {
                        Ok(t) if type_equiv(&t, &param.ty) => {}
                        Ok(t) => {
                            let msg = format!(
                                "actual {} has type {}, parameter `{}` expects {}",
                                expr_to_string(arg),
                                self.table.type_name(&t),
                                param.name,
                                self.table.type_name(&param.ty)
                            );
                            let mut d = Diagnostic::new("T-procedureCall", DiagKind::TypeMismatch, arg.loc, msg);
                            if let Some(p) = arg.path() {
                                d = d.with_path(p);
                            }
                            self.fail(s, d);
                        }
                        Err(d) => self.fail(s, d),
                    }
                }
            }
            StmtKind::If { then_branch, else_branch } => {
                self.stmt(env, then_branch);
                self.stmt(env, else_branch);
            }
            StmtKind::Block(ss) => ss.iter().for_each(|s| self.stmt(env, s)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diags(src: &str) -> Vec<(String, DiagKind)> {
        let p = parse_source(src).unwrap();
        check_program(&p).diagnostics.into_iter().map(|d| (d.rule, d.kind)).collect()
    }

    const SWAP: &str = "procedure M is
        type T is record Data : access integer; end record;
        procedure Swap (X : in out T; Y : in out T) is Temp : T;
        begin Temp := Y; Y := X; X := Temp; end;
        A : T; B : T;
    begin Swap (A, B); end;";

    #[test]
    fn swap_typechecks() {
        let p = parse_source(SWAP).unwrap();
        let c = check_program(&p);
        assert!(c.diagnostics.is_empty(), "{:?}", c.diagnostics);
        assert_eq!(c.procs.len(), 2);
        assert_eq!(c.proc(c.main).name, "M");
        assert_eq!(c.call_targets.len(), 1);
    }

    #[test]
    fn name_resolution() {
        let src = "procedure M is
            type S is record x : integer; y : access integer; end record;
            My_Var : access S;
            X : integer;
        begin X := 1; end;";
        let p = parse_source(src).unwrap();
        let c = check_program(&p);
        let env = &c.proc(c.main).env;
        let t = type_of_name(env, &c.table, &Path::var("My_Var").deref().field("y")).unwrap();
        assert_eq!(t, Type::access(Type::Integer));
        assert_eq!(type_of_name(env, &c.table, &Path::var("X")).unwrap(), Type::Integer);
        let e = type_of_name(env, &c.table, &Path::var("X").deref()).unwrap_err();
        assert_eq!(e.kind, DiagKind::DerefOfNonAccess);
        let e = type_of_name(env, &c.table, &Path::var("My_Var").deref().field("z")).unwrap_err();
        assert_eq!(e.kind, DiagKind::NoSuchField);
        assert_eq!(e.path.as_deref(), Some("My_Var.all"));
    }

    #[test]
    fn expressions() {
        let src = "procedure M is
            type S is record x : integer; end record;
            N : S;
        begin N.x := 1; end;";
        let p = parse_source(src).unwrap();
        let c = check_program(&p);
        let env = &c.proc(c.main).env;
        let ty = |k| type_of_expr(env, &c.table, &Expr::new(k)).unwrap();
        assert_eq!(ty(ExprKind::Null), Type::Null);
        assert_eq!(ty(ExprKind::Int(42)), Type::Integer);
        assert_eq!(ty(ExprKind::AccessOf(Path::var("N"))), Type::access(Type::Record(RecordId(0))));
    }

    #[test]
    fn statements() {
        let ok = "procedure M is type T is record F : integer; end record; X : access T; Y : integer;
            begin X := null; Y := Y; end;";
        assert!(diags(ok).is_empty());
        let bad = "procedure M is type S is record F : integer; end record; X : access S;
            begin X := new integer; end;";
        assert_eq!(diags(bad), vec![("T-assignNew".into(), DiagKind::TypeMismatch)]);
        let bad = "procedure M is X : access integer; Y : integer; begin X := Y; end;";
        assert_eq!(diags(bad), vec![("T-assignExpr".into(), DiagKind::TypeMismatch)]);
    }

    #[test]
    fn declaration_order_and_globals() {
        let before = "procedure M is begin X := 1; end;";
        assert_eq!(diags(before), vec![("T-readIdent".into(), DiagKind::UnknownVariable)]);
        let global = "procedure M is
            G : integer;
            procedure P (A : in integer) is begin G := A; end;
        begin P (1); end;";
        assert_eq!(diags(global), vec![("T-readIdent".into(), DiagKind::UnknownVariable)]);
    }

    #[test]
    fn calls() {
        let src = "procedure M is
            procedure P (A : in integer; B : in out access integer) is begin B := null; end;
            X : access integer;
            Y : integer;
        begin
            P (1);
            P (X, X);
            Q (1);
            P (1, X);
        end;";
        assert_eq!(
            diags(src),
            vec![
                ("T-procedureCall".into(), DiagKind::ArityMismatch),
                ("T-procedureCall".into(), DiagKind::TypeMismatch),
                ("T-procedureCall".into(), DiagKind::UnknownProcedure),
            ]
        );
    }

    #[test]
    fn recursion_and_local_records() {
        let src = "procedure M is
            type Node is record Child : access Node; end record;
            procedure Free (N : in out access Node) is
            begin
               if * then Free (N.all.Child); else N := N; end if;
            end;
            procedure A (X : in integer) is type L is record F : integer; end record; V : L; begin V.F := X; end;
            procedure B (X : in integer) is type L is record G : access integer; end record; V : L; begin V.G := null; end;
            R : access Node;
        begin Free (R); end;";
        let p = parse_source(src).unwrap();
        let c = check_program(&p);
        assert!(c.diagnostics.is_empty(), "{:?}", c.diagnostics);
        assert_eq!(c.table.records.len(), 3);
        assert!(!c.table.records[1].deep);
        assert!(c.table.records[2].deep);
    }

    #[test]
    fn mutual_recursion_is_rejected() {
        let src = "procedure M is
            procedure A (X : in integer) is begin B (X); end;
            procedure B (X : in integer) is begin A (X); end;
            Y : integer;
        begin A (1); end;";
        assert_eq!(diags(src), vec![("T-procedureCall".into(), DiagKind::UnknownProcedure)]);
    }
}
