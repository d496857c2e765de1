use thiserror::Error;

use super::ast::*;
use super::lexer::{tokenize, LexError, Spanned, Token};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("{loc}: expected {}, found {found}", expected.join(" or "))]
    Unexpected { loc: SourceLocation, expected: Vec<String>, found: String },
}

impl ParseError {
    pub fn loc(&self) -> SourceLocation {
        match self {
            ParseError::Lex(e) => e.loc(),
            ParseError::Unexpected { loc, .. } => *loc,
        }
    }
}

/// Tokenizes and parses a whole source file.
pub fn parse_source(src: &str) -> Result<Program, ParseError> {
    let tokens = tokenize(src)?;
    parse_program(&tokens, src.len())
}

pub fn parse_program(tokens: &[Spanned], src_len: usize) -> Result<Program, ParseError> {
    let end = tokens.last().map_or(SourceLocation { line: 1, column: 1, offset: 0 }, |t| {
        SourceLocation { offset: src_len as u32, ..t.loc }
    });
    let mut p = Parser { tokens, pos: 0, end };
    let loc = p.expect(Token::KwProcedure)?;
    let name = p.ident()?;
    p.expect(Token::KwIs)?;
    let (decls, body) = p.proc_rest()?;
    if let Some(t) = p.tokens.get(p.pos) {
        return Err(ParseError::Unexpected {
            loc: t.loc,
            expected: vec!["end of input".into()],
            found: t.token.to_string(),
        });
    }
    let mut program = Program { main: ProcDecl { name, params: Vec::new(), decls, body, loc } };
    program.renumber();
    Ok(program)
}

struct Parser<'a> {
    tokens: &'a [Spanned],
    pos: usize,
    end: SourceLocation,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|t| &t.token)
    }

    fn peek_at(&self, k: usize) -> Option<&Token> {
        self.tokens.get(self.pos + k).map(|t| &t.token)
    }

    fn loc(&self) -> SourceLocation {
        self.tokens.get(self.pos).map_or(self.end, |t| t.loc)
    }

    fn error<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        Err(ParseError::Unexpected {
            loc: self.loc(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().map_or("end of input".into(), |t| t.to_string()),
        })
    }

    fn eat(&mut self, tok: &Token) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Token) -> Result<SourceLocation, ParseError> {
        let loc = self.loc();
        if self.eat(&tok) {
            Ok(loc)
        } else {
            self.error(&[&tok.to_string()])
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Token::Ident(name)) => {
                let name = name.clone();
                self.pos += 1;
                Ok(name)
            }
            _ => self.error(&["identifier"]),
        }
    }

    /// `decl* begin instr+ end ;`
    fn proc_rest(&mut self) -> Result<(Vec<Decl>, Stmt), ParseError> {
        let mut decls = Vec::new();
        while self.peek() != Some(&Token::KwBegin) {
            decls.push(self.decl()?);
        }
        let loc = self.expect(Token::KwBegin)?;
        let body = self.instrs_until(&[Token::KwEnd], loc)?;
        self.expect(Token::KwEnd)?;
        self.expect(Token::Semi)?;
        Ok((decls, body))
    }

    fn decl(&mut self) -> Result<Decl, ParseError> {
        let loc = self.loc();
        match self.peek() {
            Some(Token::KwType) => {
                self.pos += 1;
                let name = self.ident()?;
                self.expect(Token::KwIs)?;
                self.expect(Token::KwRecord)?;
                let mut fields = Vec::new();
                loop {
                    let floc = self.loc();
                    let fname = self.ident()?;
                    self.expect(Token::Colon)?;
                    let ty = self.type_expr()?;
                    self.expect(Token::Semi)?;
                    fields.push(FieldDecl { name: fname, ty, loc: floc });
                    if self.peek() == Some(&Token::KwEnd) {
                        break;
                    }
                }
                self.expect(Token::KwEnd)?;
                self.expect(Token::KwRecord)?;
                self.expect(Token::Semi)?;
                Ok(Decl::Record { name, fields, loc })
            }
            Some(Token::KwProcedure) => {
                self.pos += 1;
                let name = self.ident()?;
                self.expect(Token::LParen)?;
                let mut params = vec![self.param()?];
                while self.eat(&Token::Semi) {
                    params.push(self.param()?);
                }
                self.expect(Token::RParen)?;
                self.expect(Token::KwIs)?;
                let (decls, body) = self.proc_rest()?;
                Ok(Decl::Proc(ProcDecl { name, params, decls, body, loc }))
            }
            Some(Token::Ident(_)) => {
                let name = self.ident()?;
                self.expect(Token::Colon)?;
                let ty = self.type_expr()?;
                self.expect(Token::Semi)?;
                Ok(Decl::Var { name, ty, loc })
            }
            _ => self.error(&["`type`", "`procedure`", "identifier", "`begin`"]),
        }
    }

    fn param(&mut self) -> Result<Param, ParseError> {
        let loc = self.loc();
        let name = self.ident()?;
        self.expect(Token::Colon)?;
        let mode = match self.peek() {
            Some(Token::KwIn) => {
                self.pos += 1;
                if self.peek() == Some(&Token::Dash) && self.peek_at(1) == Some(&Token::KwOut) {
                    self.pos += 2;
                    Mode::InOut
                } else if self.eat(&Token::KwOut) {
                    Mode::InOut
                } else {
                    Mode::In
                }
            }
            Some(Token::KwOut) => {
                self.pos += 1;
                Mode::Out
            }
            _ => return self.error(&["`in`", "`in out`", "`out`"]),
        };
        let ty = self.type_expr()?;
        Ok(Param { name, mode, ty, loc })
    }

    fn type_expr(&mut self) -> Result<TypeExpr, ParseError> {
        if self.eat(&Token::KwAccess) {
            Ok(TypeExpr::AccessTo(self.ident()?))
        } else {
            match self.peek() {
                Some(Token::Ident(_)) => Ok(TypeExpr::Named(self.ident()?)),
                _ => self.error(&["identifier", "`access`"]),
            }
        }
    }

    /// One or more statements up to (not including) one of `stops`. Several become a Block.
    fn instrs_until(&mut self, stops: &[Token], loc: SourceLocation) -> Result<Stmt, ParseError> {
        let mut stmts = vec![self.instr()?];
        while !self.peek().is_some_and(|t| stops.contains(t)) {
            if self.peek().is_none() {
                let expected: Vec<String> = stops.iter().map(|t| t.to_string()).collect();
                let expected: Vec<&str> = expected.iter().map(String::as_str).collect();
                return self.error(&expected);
            }
            stmts.push(self.instr()?);
        }
        Ok(if stmts.len() == 1 {
            stmts.pop().unwrap()
        } else {
            Stmt { id: StmtId::default(), kind: StmtKind::Block(stmts), loc }
        })
    }

    fn instr(&mut self) -> Result<Stmt, ParseError> {
        let loc = self.loc();
        let kind = match self.peek() {
            Some(Token::KwIf) => {
                self.pos += 1;
                self.expect(Token::Star)?;
                let tloc = self.expect(Token::KwThen)?;
                let then_branch = self.instrs_until(&[Token::KwElse], tloc)?;
                let eloc = self.expect(Token::KwElse)?;
                let else_branch = self.instrs_until(&[Token::KwEnd], eloc)?;
                self.expect(Token::KwEnd)?;
                self.expect(Token::KwIf)?;
                self.expect(Token::Semi)?;
                StmtKind::If { then_branch: Box::new(then_branch), else_branch: Box::new(else_branch) }
            }
            Some(Token::KwBegin) => {
                self.pos += 1;
                let mut stmts = vec![self.instr()?];
                while self.peek() != Some(&Token::KwEnd) {
                    stmts.push(self.instr()?);
                }
                self.expect(Token::KwEnd)?;
                self.expect(Token::Semi)?;
                StmtKind::Block(stmts)
            }
            Some(Token::Ident(_)) if self.peek_at(1) == Some(&Token::LParen) => {
                let proc = self.ident()?;
                self.pos += 1;
                let mut args = vec![self.expr()?];
                while self.eat(&Token::Comma) {
                    args.push(self.expr()?);
                }
                self.expect(Token::RParen)?;
                self.expect(Token::Semi)?;
                StmtKind::Call { proc, args }
            }
            Some(Token::Ident(_)) => {
                let target = self.name()?;
                self.expect(Token::Assign)?;
                if self.eat(&Token::KwNew) {
                    let type_name = self.ident()?;
                    self.expect(Token::Semi)?;
                    StmtKind::AssignNew { target, type_name }
                } else {
                    let rhs = self.expr()?;
                    self.expect(Token::Semi)?;
                    StmtKind::Assign { target, rhs }
                }
            }
            _ => return self.error(&["identifier", "`if`", "`begin`"]),
        };
        Ok(Stmt { id: StmtId::default(), kind, loc })
    }

    fn name(&mut self) -> Result<Path, ParseError> {
        let mut path = Path::var(self.ident()?);
        while self.eat(&Token::Dot) {
            if self.eat(&Token::KwAll) {
                path.selectors.push(Selector::Deref);
            } else {
                match self.peek() {
                    Some(Token::Ident(_)) => {
                        let f = self.ident()?;
                        path.selectors.push(Selector::Field(f));
                    }
                    _ => return self.error(&["identifier", "`all`"]),
                }
            }
        }
        Ok(path)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let loc = self.loc();
        let kind = match self.peek() {
            Some(Token::KwNull) => {
                self.pos += 1;
                ExprKind::Null
            }
            Some(Token::Int(v)) => {
                let v = *v;
                self.pos += 1;
                ExprKind::Int(v)
            }
            Some(Token::Ident(_)) => {
                let path = self.name()?;
                if self.eat(&Token::Tick) {
                    match self.peek() {
                        Some(Token::Ident(a)) if a == "Access" || a == "access" => self.pos += 1,
                        Some(Token::KwAccess) => self.pos += 1,
                        _ => return self.error(&["`Access`"]),
                    }
                    ExprKind::AccessOf(path)
                } else {
                    ExprKind::Name(path)
                }
            }
            _ => return self.error(&["`null`", "integer", "identifier"]),
        };
        Ok(Expr { kind, loc })
    }
}
