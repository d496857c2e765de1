//! Canonical source rendering. Reparsing the output yields the same AST up to locations.

use std::fmt::Write;

use super::ast::*;

pub fn pretty_print(program: &Program) -> String {
    let mut out = String::new();
    proc_decl(&mut out, &program.main, 0);
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("   ");
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Null => "null".into(),
        ExprKind::Int(v) => v.to_string(),
        ExprKind::Name(p) => p.to_string(),
        ExprKind::AccessOf(p) => format!("{p}'Access"),
    }
}

fn proc_decl(out: &mut String, p: &ProcDecl, level: usize) {
    indent(out, level);
    write!(out, "procedure {}", p.name).unwrap();
    if !p.params.is_empty() {
        let params: Vec<String> =
            p.params.iter().map(|x| format!("{} : {} {}", x.name, x.mode, x.ty)).collect();
        write!(out, " ({})", params.join("; ")).unwrap();
    }
    out.push_str(" is\n");
    for d in &p.decls {
        decl(out, d, level + 1);
    }
    indent(out, level);
    out.push_str("begin\n");
    body(out, &p.body, level + 1);
    indent(out, level);
    out.push_str("end;\n");
}

fn decl(out: &mut String, d: &Decl, level: usize) {
    match d {
        Decl::Record { name, fields, .. } => {
            indent(out, level);
            writeln!(out, "type {name} is record").unwrap();
            for f in fields {
                indent(out, level + 1);
                writeln!(out, "{} : {};", f.name, f.ty).unwrap();
            }
            indent(out, level);
            out.push_str("end record;\n");
        }
        Decl::Var { name, ty, .. } => {
            indent(out, level);
            writeln!(out, "{name} : {ty};").unwrap();
        }
        Decl::Proc(p) => proc_decl(out, p, level),
    }
}

/// A statement sequence position (procedure body or branch): a Block of two or more
/// statements is written inline, anything else as a single statement.
fn body(out: &mut String, s: &Stmt, level: usize) {
    match &s.kind {
        StmtKind::Block(ss) if ss.len() >= 2 => ss.iter().for_each(|s| stmt(out, s, level)),
        _ => stmt(out, s, level),
    }
}

fn stmt(out: &mut String, s: &Stmt, level: usize) {
    indent(out, level);
    match &s.kind {
        StmtKind::Assign { target, rhs } => writeln!(out, "{target} := {};", expr_to_string(rhs)).unwrap(),
        StmtKind::AssignNew { target, type_name } => writeln!(out, "{target} := new {type_name};").unwrap(),
        StmtKind::Call { proc, args } => {
            let args: Vec<String> = args.iter().map(expr_to_string).collect();
            writeln!(out, "{proc} ({});", args.join(", ")).unwrap();
        }
        StmtKind::If { then_branch, else_branch } => {
            out.push_str("if * then\n");
            body(out, then_branch, level + 1);
            indent(out, level);
            out.push_str("else\n");
            body(out, else_branch, level + 1);
            indent(out, level);
            out.push_str("end if;\n");
        }
        StmtKind::Block(ss) => {
            out.push_str("begin\n");
            ss.iter().for_each(|s| stmt(out, s, level + 1));
            indent(out, level);
            out.push_str("end;\n");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_source;

    #[test]
    fn round_trip_nested_blocks() {
        let src = "procedure M is
            type R is record F : access R; G : integer; end record;
            X : R;
            procedure P (A : in R; B : in out access R; C : out integer) is begin C := 1; end;
        begin
            begin X.G := 1; end;
            if * then begin X.G := 2; end; else X.G := 3; X.F := null; end if;
            P (X, X.F, X.G);
        end;";
        let p = parse_source(src).unwrap();
        let text = pretty_print(&p);
        let q = parse_source(&text).unwrap();
        assert_eq!(p.without_locations(), q.without_locations());
        assert_eq!(text, pretty_print(&q));
    }
}
