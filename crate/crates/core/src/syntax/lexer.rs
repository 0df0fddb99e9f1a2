//! Tokenizer for the source language.
//!
//! Layout is not resolved here; every token records whether it is the first
//! token on its line so the parser can apply the offside rule.

use std::fmt;

use super::{Pos, Span, SyntaxError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    VarId(String),
    ConId(String),
    /// Symbolic operator, including `:` and `-`.
    Op(String),
    Int(i64),
    Char(char),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Backtick,
    Underscore,
    Backslash,
    Equals,
    Bar,
    Arrow,
    LArrow,
    DColon,
    DotDot,
    Data,
    Type,
    Where,
    Let,
    In,
    If,
    Then,
    Else,
    Case,
    Of,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::VarId(s) | Tok::ConId(s) | Tok::Op(s) => write!(f, "{s}"),
            Tok::Int(n) => write!(f, "{n}"),
            Tok::Char(c) => write!(f, "{c:?}"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
            Tok::LBracket => f.write_str("["),
            Tok::RBracket => f.write_str("]"),
            Tok::LBrace => f.write_str("{"),
            Tok::RBrace => f.write_str("}"),
            Tok::Comma => f.write_str(","),
            Tok::Semi => f.write_str(";"),
            Tok::Backtick => f.write_str("`"),
            Tok::Underscore => f.write_str("_"),
            Tok::Backslash => f.write_str("\\"),
            Tok::Equals => f.write_str("="),
            Tok::Bar => f.write_str("|"),
            Tok::Arrow => f.write_str("->"),
            Tok::LArrow => f.write_str("<-"),
            Tok::DColon => f.write_str("::"),
            Tok::DotDot => f.write_str(".."),
            Tok::Data => f.write_str("data"),
            Tok::Type => f.write_str("type"),
            Tok::Where => f.write_str("where"),
            Tok::Let => f.write_str("let"),
            Tok::In => f.write_str("in"),
            Tok::If => f.write_str("if"),
            Tok::Then => f.write_str("then"),
            Tok::Else => f.write_str("else"),
            Tok::Case => f.write_str("case"),
            Tok::Of => f.write_str("of"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
    /// Byte range in the source text.
    pub start: usize,
    pub end: usize,
    pub first_on_line: bool,
}

fn is_symbol(c: char) -> bool {
    "!#$%&*+./<=>?@\\^|-~:".contains(c)
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

struct Lexer<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    i: usize,
    line: u32,
    col: u32,
    last_token_line: u32,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).map(|&(_, c)| c)
    }

    fn peek_at(&self, k: usize) -> Option<char> {
        self.chars.get(self.i + k).map(|&(_, c)| c)
    }

    fn offset(&self) -> usize {
        self.chars.get(self.i).map_or(self.src.len(), |&(o, _)| o)
    }

    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, pos: Pos, msg: impl Into<String>) -> SyntaxError {
        SyntaxError::new(Span::new(pos, pos), msg)
    }

    fn skip_trivia(&mut self) -> Result<(), SyntaxError> {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('-') if self.peek_at(1) == Some('-') => {
                    // a run of dashes is a comment unless it is part of an operator
                    let mut k = 2;
                    while self.peek_at(k) == Some('-') {
                        k += 1;
                    }
                    if self.peek_at(k).is_some_and(|c| is_symbol(c)) {
                        return Ok(());
                    }
                    while self.peek().is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                }
                Some('{') if self.peek_at(1) == Some('-') => {
                    let start = self.pos();
                    self.bump();
                    self.bump();
                    let mut depth = 1;
                    while depth > 0 {
                        match self.bump() {
                            None => return Err(self.error(start, "unterminated block comment")),
                            Some('{') if self.peek() == Some('-') => {
                                self.bump();
                                depth += 1;
                            }
                            Some('-') if self.peek() == Some('}') => {
                                self.bump();
                                depth -= 1;
                            }
                            Some(_) => {}
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn escape(&mut self, start: Pos) -> Result<char, SyntaxError> {
        match self.bump() {
            Some('n') => Ok('\n'),
            Some('t') => Ok('\t'),
            Some('r') => Ok('\r'),
            Some('0') if !self.peek().is_some_and(|c| c.is_ascii_digit()) => Ok('\0'),
            Some('\\') => Ok('\\'),
            Some('\'') => Ok('\''),
            Some('"') => Ok('"'),
            Some(d) if d.is_ascii_digit() => {
                let mut code = d.to_digit(10).unwrap();
                while let Some(d) = self.peek().and_then(|c| c.to_digit(10)) {
                    self.bump();
                    code = code.saturating_mul(10).saturating_add(d);
                }
                char::from_u32(code).ok_or_else(|| self.error(start, "invalid character code in escape"))
            }
            _ => Err(self.error(start, "invalid escape sequence")),
        }
    }

    fn next_token(&mut self) -> Result<Option<(Tok, Pos, usize)>, SyntaxError> {
        self.skip_trivia()?;
        let start = self.pos();
        let offset = self.offset();
        let Some(c) = self.peek() else {
            return Ok(None);
        };
        let tok = if c.is_ascii_digit() {
            let mut n: i64 = 0;
            while let Some(d) = self.peek().and_then(|c| c.to_digit(10)) {
                self.bump();
                n = n
                    .checked_mul(10)
                    .and_then(|n| n.checked_add(d as i64))
                    .ok_or_else(|| self.error(start, "integer literal too large"))?;
            }
            Tok::Int(n)
        } else if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(c) = self.peek().filter(|&c| is_ident_char(c)) {
                self.bump();
                s.push(c);
            }
            match s.as_str() {
                "_" => Tok::Underscore,
                "data" => Tok::Data,
                "type" => Tok::Type,
                "where" => Tok::Where,
                "let" => Tok::Let,
                "in" => Tok::In,
                "if" => Tok::If,
                "then" => Tok::Then,
                "else" => Tok::Else,
                "case" => Tok::Case,
                "of" => Tok::Of,
                _ if s.starts_with(|c: char| c.is_uppercase()) => Tok::ConId(s),
                _ => Tok::VarId(s),
            }
        } else if c == '\'' {
            self.bump();
            let ch = match self.bump() {
                Some('\\') => self.escape(start)?,
                Some('\n') | None => return Err(self.error(start, "unterminated character literal")),
                Some('\'') => return Err(self.error(start, "empty character literal")),
                Some(ch) => ch,
            };
            if self.bump() != Some('\'') {
                return Err(self.error(start, "unterminated character literal"));
            }
            Tok::Char(ch)
        } else if c == '"' {
            self.bump();
            let mut s = String::new();
            loop {
                match self.bump() {
                    Some('"') => break,
                    Some('\\') => s.push(self.escape(start)?),
                    Some('\n') | None => return Err(self.error(start, "unterminated string literal")),
                    Some(ch) => s.push(ch),
                }
            }
            Tok::Str(s)
        } else {
            match c {
                '(' => self.single(Tok::LParen),
                ')' => self.single(Tok::RParen),
                '[' => self.single(Tok::LBracket),
                ']' => self.single(Tok::RBracket),
                '{' => self.single(Tok::LBrace),
                '}' => self.single(Tok::RBrace),
                ',' => self.single(Tok::Comma),
                ';' => self.single(Tok::Semi),
                '`' => self.single(Tok::Backtick),
                c if is_symbol(c) => {
                    let mut s = String::new();
                    while let Some(c) = self.peek().filter(|&c| is_symbol(c)) {
                        self.bump();
                        s.push(c);
                    }
                    match s.as_str() {
                        "=" => Tok::Equals,
                        "|" => Tok::Bar,
                        "->" => Tok::Arrow,
                        "<-" => Tok::LArrow,
                        "::" => Tok::DColon,
                        ".." => Tok::DotDot,
                        "\\" => Tok::Backslash,
                        _ => Tok::Op(s),
                    }
                }
                other => {
                    return Err(self.error(start, format!("illegal character {other:?}")));
                }
            }
        };
        Ok(Some((tok, start, offset)))
    }

    fn single(&mut self, tok: Tok) -> Tok {
        self.bump();
        tok
    }
}

/// Tokenize `src`. The returned stream always ends with an `Eof` token.
pub fn lex(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut lx = Lexer {
        src,
        chars: src.char_indices().collect(),
        i: 0,
        line: 1,
        col: 1,
        last_token_line: 0,
    };
    let mut out = Vec::new();
    while let Some((tok, start, offset)) = lx.next_token()? {
        // span end is the position of the last character of the token
        let end = Pos { line: lx.line, col: lx.col.saturating_sub(1).max(1) };
        let first_on_line = start.line != lx.last_token_line;
        lx.last_token_line = lx.line;
        out.push(Token {
            tok,
            span: Span::new(start, end),
            start: offset,
            end: lx.offset(),
            first_on_line,
        });
    }
    let pos = lx.pos();
    out.push(Token {
        tok: Tok::Eof,
        span: Span::new(pos, pos),
        start: src.len(),
        end: src.len(),
        first_on_line: true,
    });
    Ok(out)
}
