//! The syntactic conditions a parsed program must satisfy on top of the grammar.

use std::collections::{HashMap, HashSet};

use super::ast::*;
use crate::diag::{DiagKind, Diagnostic};

/// Names that are visible everywhere and may not be redeclared.
pub const PREDEFINED_TYPES: [&str; 2] = ["integer", "Integer"];

pub fn check_legality(program: &Program) -> Vec<Diagnostic> {
    let mut root = HashMap::new();
    for t in PREDEFINED_TYPES {
        root.insert(t.to_string(), None);
    }
    let mut cx = Legality { scopes: vec![root], in_formals: HashSet::new(), diags: Vec::new() };
    cx.declare(&program.main.name, program.main.loc, None);
    cx.proc(&program.main);
    cx.diags
}

fn diag(kind: DiagKind, loc: SourceLocation, message: String) -> Diagnostic {
    Diagnostic::new(kind.as_str(), kind, loc, message)
}

struct Legality {
    /// Each scope maps a declared name to the parameter modes when it is a procedure.
    scopes: Vec<HashMap<String, Option<Vec<Mode>>>>,
    in_formals: HashSet<String>,
    diags: Vec<Diagnostic>,
}

impl Legality {
    fn visible(&self, name: &str) -> bool {
        self.scopes.iter().any(|s| s.contains_key(name))
    }

    fn declare(&mut self, name: &str, loc: SourceLocation, modes: Option<Vec<Mode>>) {
        if self.visible(name) {
            self.diags.push(
                diag(DiagKind::NoShadowing, loc, format!("declaration of `{name}` shadows an existing declaration"))
                    .with_path(name),
            );
        }
        self.scopes.last_mut().unwrap().insert(name.to_string(), modes);
    }

    fn modes_of(&self, name: &str) -> Option<&Vec<Mode>> {
        self.scopes.iter().rev().find_map(|s| s.get(name)).and_then(Option::as_ref)
    }

    fn proc(&mut self, p: &ProcDecl) {
        let saved = std::mem::take(&mut self.in_formals);
        self.scopes.push(HashMap::new());
        let mut seen = HashSet::new();
        for param in &p.params {
            if !seen.insert(param.name.as_str()) {
                self.diags.push(
                    diag(
                        DiagKind::DuplicateParameter,
                        param.loc,
                        format!("parameter `{}` is declared twice", param.name),
                    )
                    .with_path(&param.name),
                );
                continue;
            }
            self.declare(&param.name, param.loc, None);
            if param.mode == Mode::In {
                self.in_formals.insert(param.name.clone());
            }
        }
        for d in &p.decls {
            match d {
                Decl::Record { name, fields, loc } => {
                    let mut names = HashSet::new();
                    for f in fields {
                        if !names.insert(f.name.as_str()) {
                            self.diags.push(
                                diag(
                                    DiagKind::DuplicateField,
                                    f.loc,
                                    format!("record `{name}` has two fields named `{}`", f.name),
                                )
                                .with_path(&f.name),
                            );
                        }
                        if f.ty == TypeExpr::Named(name.clone()) {
                            self.diags.push(
                                diag(
                                    DiagKind::RecordSelfUse,
                                    f.loc,
                                    format!("record `{name}` can only refer to itself under an access type"),
                                )
                                .with_path(&f.name),
                            );
                        }
                    }
                    self.declare(name, *loc, None);
                }
                Decl::Var { name, loc, .. } => self.declare(name, *loc, None),
                Decl::Proc(q) => {
                    self.declare(&q.name, q.loc, Some(q.params.iter().map(|x| x.mode).collect()));
                    self.proc(q);
                }
            }
        }
        self.stmt(&p.body);
        self.scopes.pop();
        self.in_formals = saved;
    }

    fn check_write(&mut self, target: &Path, loc: SourceLocation) {
        if target.is_direct() && self.in_formals.contains(&target.base) {
            self.diags.push(
                diag(
                    DiagKind::WriteToInParameter,
                    loc,
                    format!("`{target}` is part of a parameter of mode in and cannot be written"),
                )
                .with_path(target),
            );
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Assign { target, .. } | StmtKind::AssignNew { target, .. } => self.check_write(target, s.loc),
            StmtKind::Call { proc, args } => {
                let Some(modes) = self.modes_of(proc).cloned() else { return };
                for (arg, mode) in args.iter().zip(modes) {
                    if mode == Mode::In {
                        continue;
                    }
                    match &arg.kind {
                        ExprKind::Name(p) => self.check_write(p, arg.loc),
                        _ => self.diags.push(diag(
                            DiagKind::ActualMustBeName,
                            arg.loc,
                            format!("actual for a parameter of mode {mode} must be a name"),
                        )),
                    }
                }
            }
            StmtKind::If { then_branch, else_branch } => {
                self.stmt(then_branch);
                self.stmt(else_branch);
            }
            StmtKind::Block(ss) => ss.iter().for_each(|s| self.stmt(s)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_source;

    fn kinds(src: &str) -> Vec<DiagKind> {
        check_legality(&parse_source(src).unwrap()).into_iter().map(|d| d.kind).collect()
    }

    #[test]
    fn literal_out_actual() {
        let src = "procedure M is
            procedure P (X : out integer) is begin X := 1; end;
        begin P (3); end;";
        assert_eq!(kinds(src), vec![DiagKind::ActualMustBeName]);
    }

    #[test]
    fn record_self_use() {
        let src = "procedure M is type R is record N : R; end record; X : integer; begin X := 1; end;";
        assert_eq!(kinds(src), vec![DiagKind::RecordSelfUse]);
        let ok = "procedure M is type R is record N : access R; end record; X : integer; begin X := 1; end;";
        assert!(kinds(ok).is_empty());
    }

    #[test]
    fn swap_is_legal() {
        let src = "procedure M is
            type T is record Data : access integer; end record;
            procedure Swap (X : in out T; Y : in out T) is Temp : T;
            begin Temp := Y; Y := X; X := Temp; end;
            A : T; B : T;
        begin Swap (A, B); end;";
        assert!(kinds(src).is_empty());
    }

    #[test]
    fn writes_to_in_parameters() {
        let src = "procedure M is
            type R is record F : integer; P : access integer; end record;
            procedure Q (X : out R) is begin X.F := 0; end;
            procedure P (A : in R; B : in access R) is
            begin
               A.F := 1;
               A.P.all := 2;
               B.all.F := 3;
               B := null;
               Q (A);
            end;
        begin Q (Y); end;";
        assert_eq!(
            kinds(src),
            vec![DiagKind::WriteToInParameter, DiagKind::WriteToInParameter, DiagKind::WriteToInParameter]
        );
    }

    #[test]
    fn shadowing_and_duplicates() {
        let src = "procedure M is
            X : integer;
            type R is record F : integer; F : integer; end record;
            procedure P (X : in integer; A : in integer; A : in integer) is begin A := 1; end;
            integer : R;
        begin X := 1; end;";
        assert_eq!(
            kinds(src),
            vec![
                DiagKind::DuplicateField,
                DiagKind::NoShadowing,
                DiagKind::DuplicateParameter,
                DiagKind::WriteToInParameter,
                DiagKind::NoShadowing,
            ]
        );
    }
}
