use std::fmt;

use serde::{Deserialize, Serialize};

/// Position of a token or AST node in the source text. Lines and columns are 1-based.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceLocation {
    pub line: u32,
    pub column: u32,
    pub offset: u32,
}

impl fmt::Display for SourceLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Selector {
    Field(String),
    Deref,
}

/// A name: a base identifier followed by field selections and dereferences.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Path {
    pub base: String,
    pub selectors: Vec<Selector>,
}

impl Path {
    pub fn var(base: impl Into<String>) -> Self {
        Path { base: base.into(), selectors: Vec::new() }
    }

    pub fn field(mut self, name: impl Into<String>) -> Self {
        self.selectors.push(Selector::Field(name.into()));
        self
    }

    pub fn deref(mut self) -> Self {
        self.selectors.push(Selector::Deref);
        self
    }

    pub fn child(&self, sel: Selector) -> Self {
        let mut p = self.clone();
        p.selectors.push(sel);
        p
    }

    pub fn deref_count(&self) -> usize {
        self.selectors.iter().filter(|s| matches!(s, Selector::Deref)).count()
    }

    pub fn len(&self) -> usize {
        self.selectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selectors.is_empty()
    }

    /// The path without its last selector, or `None` for a bare identifier.
    pub fn parent(&self) -> Option<Path> {
        if self.selectors.is_empty() {
            return None;
        }
        let mut p = self.clone();
        p.selectors.pop();
        Some(p)
    }

    pub fn last(&self) -> Option<&Selector> {
        self.selectors.last()
    }

    /// True if `self` is a prefix of `other` (including equality).
    pub fn is_prefix_of(&self, other: &Path) -> bool {
        self.base == other.base
            && self.selectors.len() <= other.selectors.len()
            && other.selectors[..self.selectors.len()] == self.selectors[..]
    }

    pub fn is_strict_prefix_of(&self, other: &Path) -> bool {
        self.is_prefix_of(other) && self.selectors.len() < other.selectors.len()
    }

    /// All strict prefixes, shortest first.
    pub fn strict_prefixes(&self) -> Vec<Path> {
        (0..self.selectors.len())
            .map(|k| Path { base: self.base.clone(), selectors: self.selectors[..k].to_vec() })
            .collect()
    }

    /// True if the path crosses no dereference, i.e. names storage owned by the base variable.
    pub fn is_direct(&self) -> bool {
        self.deref_count() == 0
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.base)?;
        for s in &self.selectors {
            match s {
                Selector::Field(name) => write!(f, ".{name}")?,
                Selector::Deref => f.write_str(".all")?,
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExprKind {
    Null,
    Int(i64),
    Name(Path),
    AccessOf(Path),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expr {
    pub kind: ExprKind,
    pub loc: SourceLocation,
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Expr { kind, loc: SourceLocation::default() }
    }

    /// The name mentioned by the expression, if any.
    pub fn path(&self) -> Option<&Path> {
        match &self.kind {
            ExprKind::Name(p) | ExprKind::AccessOf(p) => Some(p),
            _ => None,
        }
    }
}

/// Statement identifier, unique within a program and assigned in pre-order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StmtId(pub u32);

impl fmt::Display for StmtId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StmtKind {
    Assign { target: Path, rhs: Expr },
    AssignNew { target: Path, type_name: String },
    Call { proc: String, args: Vec<Expr> },
    If { then_branch: Box<Stmt>, else_branch: Box<Stmt> },
    Block(Vec<Stmt>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stmt {
    pub id: StmtId,
    pub kind: StmtKind,
    pub loc: SourceLocation,
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Self {
        Stmt { id: StmtId::default(), kind, loc: SourceLocation::default() }
    }

    /// Number of non-block statements in this statement tree.
    pub fn count(&self) -> usize {
        match &self.kind {
            StmtKind::Block(ss) => ss.iter().map(Stmt::count).sum(),
            StmtKind::If { then_branch, else_branch } => 1 + then_branch.count() + else_branch.count(),
            _ => 1,
        }
    }

    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        f(self);
        match &self.kind {
            StmtKind::Block(ss) => ss.iter().for_each(|s| s.visit(f)),
            StmtKind::If { then_branch, else_branch } => {
                then_branch.visit(f);
                else_branch.visit(f);
            }
            _ => {}
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    In,
    InOut,
    Out,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::In => "in",
            Mode::InOut => "in out",
            Mode::Out => "out",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TypeExpr {
    Named(String),
    AccessTo(String),
}

impl TypeExpr {
    pub fn name(&self) -> &str {
        match self {
            TypeExpr::Named(n) | TypeExpr::AccessTo(n) => n,
        }
    }
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Named(n) => f.write_str(n),
            TypeExpr::AccessTo(n) => write!(f, "access {n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDecl {
    pub name: String,
    pub ty: TypeExpr,
    pub loc: SourceLocation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub mode: Mode,
    pub ty: TypeExpr,
    pub loc: SourceLocation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub decls: Vec<Decl>,
    pub body: Stmt,
    pub loc: SourceLocation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decl {
    Record { name: String, fields: Vec<FieldDecl>, loc: SourceLocation },
    Proc(ProcDecl),
    Var { name: String, ty: TypeExpr, loc: SourceLocation },
}

impl Decl {
    pub fn name(&self) -> &str {
        match self {
            Decl::Record { name, .. } | Decl::Var { name, .. } => name,
            Decl::Proc(p) => &p.name,
        }
    }

    pub fn loc(&self) -> SourceLocation {
        match self {
            Decl::Record { loc, .. } | Decl::Var { loc, .. } => *loc,
            Decl::Proc(p) => p.loc,
        }
    }
}

/// A source file: exactly one parameterless procedure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub main: ProcDecl,
}

impl Program {
    /// Renumbers every statement in pre-order over the whole program, nested procedures included.
    pub fn renumber(&mut self) {
        fn stmt(s: &mut Stmt, next: &mut u32) {
            s.id = StmtId(*next);
            *next += 1;
            match &mut s.kind {
                StmtKind::Block(ss) => ss.iter_mut().for_each(|s| stmt(s, next)),
                StmtKind::If { then_branch, else_branch } => {
                    stmt(then_branch, next);
                    stmt(else_branch, next);
                }
                _ => {}
            }
        }
        fn proc(p: &mut ProcDecl, next: &mut u32) {
            for d in &mut p.decls {
                if let Decl::Proc(q) = d {
                    proc(q, next);
                }
            }
            stmt(&mut p.body, next);
        }
        let mut next = 0;
        proc(&mut self.main, &mut next);
    }

    /// Copy of the program with every source location cleared, for structural comparison.
    pub fn without_locations(&self) -> Program {
        fn expr(e: &mut Expr) {
            e.loc = SourceLocation::default();
        }
        fn stmt(s: &mut Stmt) {
            s.loc = SourceLocation::default();
            match &mut s.kind {
                StmtKind::Assign { rhs, .. } => expr(rhs),
                StmtKind::Call { args, .. } => args.iter_mut().for_each(expr),
                StmtKind::Block(ss) => ss.iter_mut().for_each(stmt),
                StmtKind::If { then_branch, else_branch } => {
                    stmt(then_branch);
                    stmt(else_branch);
                }
                StmtKind::AssignNew { .. } => {}
            }
        }
        fn proc(p: &mut ProcDecl) {
            p.loc = SourceLocation::default();
            p.params.iter_mut().for_each(|x| x.loc = SourceLocation::default());
            for d in &mut p.decls {
                match d {
                    Decl::Record { fields, loc, .. } => {
                        *loc = SourceLocation::default();
                        fields.iter_mut().for_each(|f| f.loc = SourceLocation::default());
                    }
                    Decl::Var { loc, .. } => *loc = SourceLocation::default(),
                    Decl::Proc(q) => proc(q),
                }
            }
            stmt(&mut p.body);
        }
        let mut p = self.clone();
        proc(&mut p.main);
        p
    }

    /// Number of non-block statements across all procedure bodies.
    pub fn stmt_count(&self) -> usize {
        fn proc(p: &ProcDecl) -> usize {
            p.body.count()
                + p.decls
                    .iter()
                    .map(|d| if let Decl::Proc(q) = d { proc(q) } else { 0 })
                    .sum::<usize>()
        }
        proc(&self.main)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefixes() {
        let p = Path::var("a").field("b").deref();
        assert_eq!(p.to_string(), "a.b.all");
        assert_eq!(p.deref_count(), 1);
        let pre = p.strict_prefixes();
        assert_eq!(pre.len(), 2);
        assert_eq!(pre[1].to_string(), "a.b");
        assert!(pre[0].is_strict_prefix_of(&p));
        assert!(p.is_prefix_of(&p));
        assert!(!p.is_strict_prefix_of(&p));
        assert!(!Path::var("ab").is_prefix_of(&p));
        assert_eq!(p.parent(), Some(Path::var("a").field("b")));
        assert_eq!(Path::var("x").parent(), None);
    }
}
