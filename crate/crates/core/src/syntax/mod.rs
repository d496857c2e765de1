//! Lexing, parsing, pretty-printing and the syntactic legality conditions.

pub mod ast;
pub mod legality;
pub mod lexer;
pub mod parser;
pub mod pretty;

pub use ast::*;
pub use legality::check_legality;
pub use lexer::{tokenize, LexError, Spanned, Token};
pub use parser::{parse_program, parse_source, ParseError};
pub use pretty::{expr_to_string, pretty_print};
