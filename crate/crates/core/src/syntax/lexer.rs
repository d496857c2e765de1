use std::fmt;

use thiserror::Error;

use super::ast::SourceLocation;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Token {
    Ident(String),
    Int(i64),
    KwProcedure,
    KwIs,
    KwBegin,
    KwEnd,
    KwIf,
    KwThen,
    KwElse,
    KwType,
    KwRecord,
    KwAccess,
    KwNew,
    KwNull,
    KwIn,
    KwOut,
    KwAll,
    Assign,
    Colon,
    Semi,
    Dot,
    Comma,
    LParen,
    RParen,
    Tick,
    Star,
    Dash,
}

impl Token {
    fn keyword(word: &str) -> Option<Token> {
        Some(match word {
            "procedure" => Token::KwProcedure,
            "is" => Token::KwIs,
            "begin" => Token::KwBegin,
            "end" => Token::KwEnd,
            "if" => Token::KwIf,
            "then" => Token::KwThen,
            "else" => Token::KwElse,
            "type" => Token::KwType,
            "record" => Token::KwRecord,
            "access" => Token::KwAccess,
            "new" => Token::KwNew,
            "null" => Token::KwNull,
            "in" => Token::KwIn,
            "out" => Token::KwOut,
            "all" => Token::KwAll,
            _ => return None,
        })
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Token::Ident(name) => return write!(f, "identifier `{name}`"),
            Token::Int(v) => return write!(f, "integer `{v}`"),
            Token::KwProcedure => "`procedure`",
            Token::KwIs => "`is`",
            Token::KwBegin => "`begin`",
            Token::KwEnd => "`end`",
            Token::KwIf => "`if`",
            Token::KwThen => "`then`",
            Token::KwElse => "`else`",
            Token::KwType => "`type`",
            Token::KwRecord => "`record`",
            Token::KwAccess => "`access`",
            Token::KwNew => "`new`",
            Token::KwNull => "`null`",
            Token::KwIn => "`in`",
            Token::KwOut => "`out`",
            Token::KwAll => "`all`",
            Token::Assign => "`:=`",
            Token::Colon => "`:`",
            Token::Semi => "`;`",
            Token::Dot => "`.`",
            Token::Comma => "`,`",
            Token::LParen => "`(`",
            Token::RParen => "`)`",
            Token::Tick => "`'`",
            Token::Star => "`*`",
            Token::Dash => "`-`",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spanned {
    pub token: Token,
    pub loc: SourceLocation,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("{loc}: unexpected character {ch:?}")]
    UnexpectedChar { ch: char, loc: SourceLocation },
    #[error("{loc}: integer literal out of range")]
    IntOverflow { loc: SourceLocation },
}

impl LexError {
    pub fn loc(&self) -> SourceLocation {
        match self {
            LexError::UnexpectedChar { loc, .. } | LexError::IntOverflow { loc } => *loc,
        }
    }
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn loc(&self) -> SourceLocation {
        SourceLocation { line: self.line, column: self.col, offset: self.pos as u32 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Spanned>, LexError> {
    let mut cur = Cursor { src, pos: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    while let Some(c) = cur.peek() {
        let loc = cur.loc();
        if c.is_ascii_whitespace() {
            cur.bump();
            continue;
        }
        if c == '-' && cur.peek2() == Some('-') {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        let token = if c.is_ascii_alphabetic() {
            let start = cur.pos;
            while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                cur.bump();
            }
            let word = &src[start..cur.pos];
            Token::keyword(word).unwrap_or_else(|| Token::Ident(word.to_string()))
        } else if c.is_ascii_digit() {
            let start = cur.pos;
            while matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
                cur.bump();
            }
            let value = src[start..cur.pos].parse().map_err(|_| LexError::IntOverflow { loc })?;
            Token::Int(value)
        } else {
            cur.bump();
            match c {
                ':' if cur.peek() == Some('=') => {
                    cur.bump();
                    Token::Assign
                }
                ':' => Token::Colon,
                ';' => Token::Semi,
                '.' => Token::Dot,
                ',' => Token::Comma,
                '(' => Token::LParen,
                ')' => Token::RParen,
                '\'' => Token::Tick,
                '*' => Token::Star,
                '-' => Token::Dash,
                ch => return Err(LexError::UnexpectedChar { ch, loc }),
            }
        };
        out.push(Spanned { token, loc });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Token> {
        tokenize(src).unwrap().into_iter().map(|t| t.token).collect()
    }

    #[test]
    fn name_with_deref() {
        assert_eq!(kinds("My_Var.all"), vec![Token::Ident("My_Var".into()), Token::Dot, Token::KwAll]);
    }

    #[test]
    fn empty_input() {
        assert!(kinds("").is_empty());
    }

    #[test]
    fn assignment() {
        assert_eq!(
            kinds("x := 42;"),
            vec![Token::Ident("x".into()), Token::Assign, Token::Int(42), Token::Semi]
        );
    }

    #[test]
    fn comments_and_modes() {
        assert_eq!(
            kinds("in-out -- trailing\nout"),
            vec![Token::KwIn, Token::Dash, Token::KwOut, Token::KwOut]
        );
    }

    #[test]
    fn locations_are_monotone() {
        let toks = tokenize("procedure P is\n  X : integer;").unwrap();
        assert!(toks.windows(2).all(|w| w[0].loc.offset < w[1].loc.offset));
        assert_eq!(toks[3].loc, SourceLocation { line: 2, column: 3, offset: 17 });
    }

    #[test]
    fn rejects_foreign_characters() {
        assert!(matches!(tokenize("x := y + 1;"), Err(LexError::UnexpectedChar { ch: '+', .. })));
        assert!(matches!(tokenize("é"), Err(LexError::UnexpectedChar { .. })));
    }

    #[test]
    fn case_sensitive_keywords() {
        assert_eq!(kinds("Begin"), vec![Token::Ident("Begin".into())]);
    }
}
