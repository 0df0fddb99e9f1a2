//! Lexing, layout and parsing of the supported Haskell subset.

pub mod ast;
pub mod lexer;
mod parser;
mod printer;

use std::fmt;

use thiserror::Error;

pub use ast::*;
pub use lexer::{lex, Tok, Token};
pub(crate) use parser::escape_char;
pub use parser::{parse_expr, parse_expr_tokens, parse_program, parse_program_tokens, parse_type};

/// Standard fixities for the operators in scope.
pub fn fixity(op: &str) -> (u8, Assoc) {
    match op {
        "." => (9, Assoc::Right),
        "!!" => (9, Assoc::Left),
        "*" | "div" | "mod" => (7, Assoc::Left),
        "+" | "-" => (6, Assoc::Left),
        ":" | "++" => (5, Assoc::Right),
        "==" | "/=" | "<" | "<=" | ">" | ">=" => (4, Assoc::None),
        "&&" => (3, Assoc::Right),
        "||" => (2, Assoc::Right),
        "$" | "$!" | "seq" => (0, Assoc::Right),
        _ => (9, Assoc::Left),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assoc {
    Left,
    Right,
    None,
}

/// A 1-based line/column position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

/// Source region. Spans never take part in syntax-tree equality, so two
/// trees compare equal when they have the same shape.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span {
    pub start: Pos,
    pub end: Pos,
}

impl Span {
    pub fn new(start: Pos, end: Pos) -> Span {
        Span { start, end }
    }

    pub fn to(self, other: Span) -> Span {
        Span { start: self.start.min(other.start), end: self.end.max(other.end) }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {},col {}", self.start.line, self.start.col)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("{span}: {message}")]
pub struct SyntaxError {
    pub span: Span,
    pub message: String,
}

impl SyntaxError {
    pub fn new(span: Span, message: impl Into<String>) -> SyntaxError {
        SyntaxError { span, message: message.into() }
    }
}
