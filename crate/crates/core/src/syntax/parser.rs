//! Recursive-descent parser with a simplified offside rule.
//!
//! Each layout context records the column of its items. A token that starts a
//! line at or left of that column (other than the first token of the current
//! item) ends the item, and the parser sees it as a virtual `;`.

use std::collections::HashSet;

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::{fixity, Assoc, Span, SyntaxError};

type PResult<T> = Result<T, SyntaxError>;

const MAX_TUPLE: usize = 4;

#[derive(Debug, Clone, Copy)]
struct Layout {
    /// `None` inside explicit braces.
    col: Option<u32>,
    item_start: usize,
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    layout: Vec<Layout>,
}

static SEMI: Tok = Tok::Semi;

impl<'a> Parser<'a> {
    fn new(tokens: &'a [Token]) -> Parser<'a> {
        Parser { tokens, pos: 0, layout: Vec::new() }
    }

    fn raw(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn at_boundary(&self) -> bool {
        let t = self.raw();
        if t.tok == Tok::Eof {
            return false;
        }
        match self.layout.last() {
            Some(Layout { col: Some(c), item_start }) => {
                t.first_on_line && t.span.start.col <= *c && self.pos != *item_start
            }
            _ => false,
        }
    }

    /// Current token as seen through the layout rule.
    fn tok(&self) -> &Tok {
        if self.at_boundary() {
            &SEMI
        } else {
            &self.raw().tok
        }
    }

    fn peek_tok(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        let t = &self.tokens[i];
        if let Some(Layout { col: Some(c), .. }) = self.layout.last() {
            if t.first_on_line && t.span.start.col <= *c {
                return &SEMI;
            }
        }
        &t.tok
    }

    fn span(&self) -> Span {
        self.raw().span
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn span_from(&self, start: Span) -> Span {
        start.to(self.prev_span())
    }

    fn bump(&mut self) -> Token {
        let t = self.raw().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.tok() == tok && !self.at_boundary() {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error_here(&self, msg: impl Into<String>) -> SyntaxError {
        SyntaxError::new(self.span(), msg)
    }

    fn expecting(&self, what: &str) -> SyntaxError {
        self.error_here(format!("expecting {what}"))
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> PResult<Token> {
        if self.tok() == tok && !self.at_boundary() {
            Ok(self.bump())
        } else {
            Err(self.expecting(what))
        }
    }

    /// Source text of tokens `from..to`, with any gap between tokens
    /// collapsed to a single space.
    fn text(&self, from: usize, to: usize) -> String {
        let mut out = String::new();
        let mut prev_end: Option<usize> = None;
        for t in &self.tokens[from..to] {
            if let Some(pe) = prev_end {
                if t.start > pe {
                    out.push(' ');
                }
            }
            out.push_str(&token_source(t));
            prev_end = Some(t.end);
        }
        out
    }

    // ---- layout blocks ----

    /// Parse a layout block of items (after `where`, `let` or `of`).
    fn block<T>(&mut self, mut item: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<T>> {
        let mut items = Vec::new();
        if self.tok() == &Tok::LBrace {
            self.bump();
            self.layout.push(Layout { col: None, item_start: self.pos });
            loop {
                if self.tok() == &Tok::RBrace {
                    break;
                }
                items.push(item(self)?);
                if !self.eat(&Tok::Semi) {
                    break;
                }
            }
            self.layout.pop();
            self.expect(&Tok::RBrace, "'}'")?;
            return Ok(items);
        }
        let first = self.raw();
        if first.tok == Tok::Eof || self.at_boundary() {
            return Err(self.expecting("a binding"));
        }
        let col = first.span.start.col;
        self.layout.push(Layout { col: Some(col), item_start: self.pos });
        let result = (|| {
            loop {
                if let Some(l) = self.layout.last_mut() {
                    l.item_start = self.pos;
                }
                items.push(item(self)?);
                let t = self.raw();
                if t.tok == Tok::Semi {
                    self.bump();
                    continue;
                }
                if t.tok != Tok::Eof && t.first_on_line && t.span.start.col == col {
                    continue;
                }
                break;
            }
            Ok(())
        })();
        self.layout.pop();
        result.map(|_| items)
    }

    // ---- declarations ----

    fn program(&mut self) -> PResult<Program> {
        self.layout.push(Layout { col: Some(1), item_start: 0 });
        let mut decls = Vec::new();
        loop {
            while self.raw().tok == Tok::Semi {
                self.bump();
            }
            if self.raw().tok == Tok::Eof {
                break;
            }
            self.layout.last_mut().unwrap().item_start = self.pos;
            decls.push(self.top_decl()?);
            if self.raw().tok == Tok::Eof || self.at_boundary() || self.raw().tok == Tok::Semi {
                continue;
            }
            return Err(self.error_here(format!("unexpected {}", self.raw().tok)));
        }
        self.layout.pop();
        Ok(Program { decls: group_decls(decls)? })
    }

    fn top_decl(&mut self) -> PResult<RawDecl> {
        match self.tok() {
            Tok::Data => self.data_decl().map(RawDecl::Data),
            Tok::Type => self.type_alias().map(RawDecl::Alias),
            _ if self.is_signature() => self.signature().map(RawDecl::Sig),
            _ => self.equation().map(RawDecl::Eq),
        }
    }

    fn is_signature(&self) -> bool {
        match self.tok() {
            Tok::VarId(_) => matches!(self.peek_tok(1), Tok::DColon | Tok::Comma),
            Tok::LParen => {
                matches!(self.peek_tok(1), Tok::Op(_))
                    && self.peek_tok(2) == &Tok::RParen
                    && matches!(self.peek_tok(3), Tok::DColon | Tok::Comma)
            }
            _ => false,
        }
    }

    fn var_or_op_name(&mut self) -> PResult<String> {
        match self.tok().clone() {
            Tok::VarId(v) => {
                self.bump();
                Ok(v)
            }
            Tok::LParen => {
                self.bump();
                let op = match self.tok().clone() {
                    Tok::Op(op) => op,
                    _ => return Err(self.expecting("operator")),
                };
                self.bump();
                self.expect(&Tok::RParen, "')'")?;
                Ok(op)
            }
            _ => Err(self.expecting("variable")),
        }
    }

    fn signature(&mut self) -> PResult<Signature> {
        let start = self.span();
        let mut names = vec![self.var_or_op_name()?];
        while self.eat(&Tok::Comma) {
            names.push(self.var_or_op_name()?);
        }
        self.expect(&Tok::DColon, "'::'")?;
        let ty = self.type_expr()?;
        Ok(Signature { names, ty, span: self.span_from(start) })
    }

    fn type_params(&mut self) -> PResult<Vec<String>> {
        let mut params = Vec::new();
        while let Tok::VarId(v) = self.tok().clone() {
            if params.contains(&v) {
                return Err(self.error_here(format!("duplicate type parameter {v}")));
            }
            self.bump();
            params.push(v);
        }
        Ok(params)
    }

    fn con_name(&mut self) -> PResult<String> {
        match self.tok().clone() {
            Tok::ConId(c) => {
                self.bump();
                Ok(c)
            }
            _ => Err(self.expecting("constructor")),
        }
    }

    fn data_decl(&mut self) -> PResult<DataDecl> {
        let start = self.span();
        self.bump();
        let name = self.con_name()?;
        let params = self.type_params()?;
        self.expect(&Tok::Equals, "'='")?;
        let mut constructors = Vec::new();
        loop {
            let cstart = self.span();
            let cname = self.con_name()?;
            let mut args = Vec::new();
            while self.starts_atype() {
                args.push(self.atype()?);
            }
            constructors.push(ConstructorDecl { name: cname, args, span: self.span_from(cstart) });
            if !self.eat(&Tok::Bar) {
                break;
            }
        }
        Ok(DataDecl { name, params, constructors, span: self.span_from(start) })
    }

    fn type_alias(&mut self) -> PResult<TypeAlias> {
        let start = self.span();
        self.bump();
        let name = self.con_name()?;
        let params = self.type_params()?;
        self.expect(&Tok::Equals, "'='")?;
        let ty = self.type_expr()?;
        Ok(TypeAlias { name, params, ty, span: self.span_from(start) })
    }

    // ---- types ----

    fn type_expr(&mut self) -> PResult<TypeExpr> {
        let lhs = self.btype()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.type_expr()?;
            Ok(TypeExpr::Fun(Box::new(lhs), Box::new(rhs)))
        } else {
            Ok(lhs)
        }
    }

    fn btype(&mut self) -> PResult<TypeExpr> {
        if let Tok::ConId(c) = self.tok().clone() {
            self.bump();
            let mut args = Vec::new();
            while self.starts_atype() {
                args.push(self.atype()?);
            }
            return Ok(TypeExpr::Con(c, args));
        }
        self.atype()
    }

    fn starts_atype(&self) -> bool {
        matches!(self.tok(), Tok::VarId(_) | Tok::ConId(_) | Tok::LParen | Tok::LBracket)
    }

    fn atype(&mut self) -> PResult<TypeExpr> {
        match self.tok().clone() {
            Tok::VarId(v) => {
                self.bump();
                Ok(TypeExpr::Var(v))
            }
            Tok::ConId(c) => {
                self.bump();
                Ok(TypeExpr::Con(c, Vec::new()))
            }
            Tok::LBracket => {
                self.bump();
                let t = self.type_expr()?;
                self.expect(&Tok::RBracket, "']'")?;
                Ok(TypeExpr::List(Box::new(t)))
            }
            Tok::LParen => {
                self.bump();
                let t = self.type_expr()?;
                if self.tok() == &Tok::Comma {
                    let mut ts = vec![t];
                    while self.eat(&Tok::Comma) {
                        ts.push(self.type_expr()?);
                    }
                    if ts.len() > MAX_TUPLE {
                        return Err(self.error_here("tuples with more than 4 components are not supported"));
                    }
                    self.expect(&Tok::RParen, "')'")?;
                    Ok(TypeExpr::Tuple(ts))
                } else {
                    self.expect(&Tok::RParen, "')'")?;
                    Ok(t)
                }
            }
            _ => Err(self.expecting("type")),
        }
    }

    // ---- equations ----

    fn is_varop_tok(tok: &Tok) -> bool {
        match tok {
            Tok::Op(op) => op != ":" && op != "!",
            Tok::Backtick => true,
            _ => false,
        }
    }

    fn infix_op(&mut self) -> PResult<String> {
        match self.tok().clone() {
            Tok::Op(op) => {
                self.bump();
                Ok(op)
            }
            Tok::Backtick => {
                self.bump();
                let name = match self.tok().clone() {
                    Tok::VarId(v) | Tok::ConId(v) => v,
                    _ => return Err(self.expecting("identifier")),
                };
                self.bump();
                self.expect(&Tok::Backtick, "'`'")?;
                Ok(name)
            }
            _ => Err(self.expecting("operator")),
        }
    }

    fn equation(&mut self) -> PResult<Equation> {
        let start_idx = self.pos;
        let start = self.span();
        let (name, patterns) = match self.tok().clone() {
            Tok::VarId(v) if !Self::is_varop_tok(self.peek_tok(1)) => {
                self.bump();
                let mut pats = Vec::new();
                while self.starts_apat() {
                    pats.push(self.apat()?);
                }
                (v, pats)
            }
            Tok::LParen
                if matches!(self.peek_tok(1), Tok::Op(_)) && self.peek_tok(2) == &Tok::RParen =>
            {
                let op = self.var_or_op_name()?;
                let mut pats = Vec::new();
                while self.starts_apat() {
                    pats.push(self.apat()?);
                }
                (op, pats)
            }
            _ => {
                let lhs = self.pattern()?;
                if self.tok() == &Tok::Equals {
                    return Err(SyntaxError::new(lhs.span, "pattern bindings are not supported"));
                }
                if !Self::is_varop_tok(self.tok()) {
                    return Err(self.expecting("operator"));
                }
                let op = self.infix_op()?;
                let rhs = self.pattern()?;
                (op, vec![lhs, rhs])
            }
        };
        check_linear(&patterns)?;
        let lhs_text = self.text(start_idx, self.pos);
        let rhs = self.rhs(&Tok::Equals)?;
        let text = self.text(start_idx, self.pos);
        let mut where_binds = Vec::new();
        if self.tok() == &Tok::Where {
            self.bump();
            let eqs = self.block(|p| p.equation())?;
            where_binds = group_equations(eqs)?;
        }
        Ok(Equation { name, patterns, rhs, where_binds, lhs_text, text, span: self.span_from(start) })
    }

    /// `= e` or one or more `| g = e` clauses; `sep` is `=` or `->`.
    fn rhs(&mut self, sep: &Tok) -> PResult<Rhs> {
        let what = if sep == &Tok::Equals { "'='" } else { "'->'" };
        if self.tok() == &Tok::Bar {
            let mut clauses = Vec::new();
            while self.tok() == &Tok::Bar {
                let from = self.pos;
                self.bump();
                let guard = self.expr()?;
                self.expect(sep, what)?;
                let body = self.expr()?;
                clauses.push(GuardedExpr { guard, body, text: self.text(from, self.pos) });
            }
            Ok(Rhs::Guarded(clauses))
        } else {
            self.expect(sep, what)?;
            Ok(Rhs::Plain(self.expr()?))
        }
    }

    // ---- patterns ----

    fn starts_apat(&self) -> bool {
        match self.tok() {
            Tok::VarId(_)
            | Tok::Underscore
            | Tok::ConId(_)
            | Tok::Int(_)
            | Tok::Char(_)
            | Tok::Str(_)
            | Tok::LParen
            | Tok::LBracket => true,
            Tok::Op(op) => op == "!",
            _ => false,
        }
    }

    fn pattern(&mut self) -> PResult<Pattern> {
        let start = self.span();
        let head = self.lpat()?;
        if matches!(self.tok(), Tok::Op(op) if op == ":") {
            self.bump();
            let tail = self.pattern()?;
            return Ok(Pattern {
                kind: PatternKind::Cons(Box::new(head), Box::new(tail)),
                span: self.span_from(start),
            });
        }
        Ok(head)
    }

    fn lpat(&mut self) -> PResult<Pattern> {
        let start = self.span();
        match self.tok().clone() {
            Tok::ConId(c) => {
                self.bump();
                let mut args = Vec::new();
                while self.starts_apat() {
                    args.push(self.apat()?);
                }
                Ok(Pattern { kind: PatternKind::Con(c, args), span: self.span_from(start) })
            }
            Tok::Op(op) if op == "-" => {
                self.bump();
                match self.tok().clone() {
                    Tok::Int(n) => {
                        self.bump();
                        Ok(Pattern { kind: PatternKind::Int(-n), span: self.span_from(start) })
                    }
                    _ => Err(self.expecting("integer literal")),
                }
            }
            _ => self.apat(),
        }
    }

    fn apat(&mut self) -> PResult<Pattern> {
        let start = self.span();
        let kind = match self.tok().clone() {
            Tok::VarId(v) => {
                self.bump();
                PatternKind::Var(v)
            }
            Tok::Underscore => {
                self.bump();
                PatternKind::Wildcard
            }
            Tok::ConId(c) => {
                self.bump();
                PatternKind::Con(c, Vec::new())
            }
            Tok::Int(n) => {
                self.bump();
                PatternKind::Int(n)
            }
            Tok::Char(c) => {
                self.bump();
                PatternKind::Char(c)
            }
            Tok::Str(s) => {
                self.bump();
                PatternKind::Str(s)
            }
            Tok::Op(op) if op == "!" => {
                self.bump();
                let inner = self.apat()?;
                PatternKind::Bang(Box::new(inner))
            }
            Tok::LParen => {
                self.bump();
                let first = self.pattern()?;
                if self.tok() == &Tok::Comma {
                    let mut ps = vec![first];
                    while self.eat(&Tok::Comma) {
                        ps.push(self.pattern()?);
                    }
                    if ps.len() > MAX_TUPLE {
                        return Err(self.error_here("tuples with more than 4 components are not supported"));
                    }
                    self.expect(&Tok::RParen, "')'")?;
                    PatternKind::Tuple(ps)
                } else {
                    self.expect(&Tok::RParen, "')'")?;
                    return Ok(Pattern { kind: first.kind, span: self.span_from(start) });
                }
            }
            Tok::LBracket => {
                self.bump();
                let mut ps = Vec::new();
                if self.tok() != &Tok::RBracket {
                    ps.push(self.pattern()?);
                    while self.eat(&Tok::Comma) {
                        ps.push(self.pattern()?);
                    }
                }
                self.expect(&Tok::RBracket, "']'")?;
                PatternKind::List(ps)
            }
            Tok::Op(op) if op == "@" || op == "~" => {
                return Err(self.error_here(format!("'{op}' patterns are not supported")));
            }
            _ => return Err(self.expecting("pattern")),
        };
        Ok(Pattern { kind, span: self.span_from(start) })
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<Expr> {
        let e = self.infix(0)?;
        if self.tok() == &Tok::DColon {
            return Err(self.error_here("type annotations in expressions are not supported"));
        }
        Ok(e)
    }

    /// The infix operator at the current position, if any, without consuming it.
    fn peek_infix(&self) -> Option<(String, usize)> {
        match self.tok() {
            Tok::Op(op) => Some((op.clone(), 1)),
            Tok::Backtick => match (self.peek_tok(1), self.peek_tok(2)) {
                (Tok::VarId(v) | Tok::ConId(v), Tok::Backtick) => Some((v.clone(), 3)),
                _ => None,
            },
            _ => None,
        }
    }

    fn infix(&mut self, min_prec: u8) -> PResult<Expr> {
        let start = self.span();
        let mut lhs = if matches!(self.tok(), Tok::Op(op) if op == "-") {
            self.bump();
            let operand = self.infix(7)?;
            Expr { kind: ExprKind::Neg(Box::new(operand)), span: self.span_from(start) }
        } else {
            self.lexp()?
        };
        let mut last_nonassoc: Option<u8> = None;
        while let Some((op, width)) = self.peek_infix() {
            let (prec, assoc) = fixity(&op);
            if prec < min_prec {
                break;
            }
            // `(e op)` is a left section; leave the operator for the caller
            if self.peek_tok(width) == &Tok::RParen {
                break;
            }
            if last_nonassoc == Some(prec) {
                return Err(self.error_here(format!("cannot mix non-associative operators at precedence {prec}")));
            }
            for _ in 0..width {
                self.bump();
            }
            let next_min = if assoc == Assoc::Right { prec } else { prec + 1 };
            let rhs = self.infix(next_min)?;
            last_nonassoc = (assoc == Assoc::None).then_some(prec);
            lhs = Expr {
                kind: ExprKind::BinOp(op, Box::new(lhs), Box::new(rhs)),
                span: self.span_from(start),
            };
        }
        Ok(lhs)
    }

    fn lexp(&mut self) -> PResult<Expr> {
        let start = self.span();
        match self.tok() {
            Tok::Backslash => {
                self.bump();
                let mut pats = Vec::new();
                while self.starts_apat() {
                    pats.push(self.apat()?);
                }
                if pats.is_empty() {
                    return Err(self.expecting("pattern"));
                }
                check_linear(&pats)?;
                self.expect(&Tok::Arrow, "'->'")?;
                let body = self.expr()?;
                Ok(Expr { kind: ExprKind::Lambda(pats, Box::new(body)), span: self.span_from(start) })
            }
            Tok::Let => {
                self.bump();
                let eqs = self.block(|p| p.equation())?;
                let binds = group_equations(eqs)?;
                self.expect(&Tok::In, "'in'")?;
                let body = self.expr()?;
                Ok(Expr { kind: ExprKind::Let(binds, Box::new(body)), span: self.span_from(start) })
            }
            Tok::If => {
                self.bump();
                let c = self.expr()?;
                self.eat(&Tok::Semi);
                self.expect(&Tok::Then, "'then'")?;
                let t = self.expr()?;
                self.eat(&Tok::Semi);
                self.expect(&Tok::Else, "'else'")?;
                let e = self.expr()?;
                Ok(Expr {
                    kind: ExprKind::If(Box::new(c), Box::new(t), Box::new(e)),
                    span: self.span_from(start),
                })
            }
            Tok::Case => {
                self.bump();
                let scrut = self.expr()?;
                self.expect(&Tok::Of, "'of'")?;
                let alts = self.block(|p| p.case_alt())?;
                Ok(Expr { kind: ExprKind::Case(Box::new(scrut), alts), span: self.span_from(start) })
            }
            _ => self.fexp(),
        }
    }

    fn case_alt(&mut self) -> PResult<CaseAlt> {
        let from = self.pos;
        let start = self.span();
        let pattern = self.pattern()?;
        let rhs = self.rhs(&Tok::Arrow)?;
        Ok(CaseAlt { pattern, rhs, text: self.text(from, self.pos), span: self.span_from(start) })
    }

    fn starts_aexp(&self) -> bool {
        matches!(
            self.tok(),
            Tok::VarId(_) | Tok::ConId(_) | Tok::Int(_) | Tok::Char(_) | Tok::Str(_) | Tok::LParen | Tok::LBracket
        )
    }

    fn fexp(&mut self) -> PResult<Expr> {
        let start = self.span();
        if !self.starts_aexp() {
            return Err(self.expecting("expression"));
        }
        let mut e = self.aexp()?;
        while self.starts_aexp() {
            let arg = self.aexp()?;
            e = Expr { kind: ExprKind::App(Box::new(e), Box::new(arg)), span: self.span_from(start) };
        }
        Ok(e)
    }

    fn aexp(&mut self) -> PResult<Expr> {
        let start = self.span();
        let kind = match self.tok().clone() {
            Tok::VarId(v) => {
                self.bump();
                ExprKind::Var(v)
            }
            Tok::ConId(c) => {
                self.bump();
                ExprKind::Con(c)
            }
            Tok::Int(n) => {
                self.bump();
                ExprKind::Int(n)
            }
            Tok::Char(c) => {
                self.bump();
                ExprKind::Char(c)
            }
            Tok::Str(s) => {
                self.bump();
                ExprKind::Str(s)
            }
            Tok::LParen => return self.paren(),
            Tok::LBracket => return self.bracket(),
            _ => return Err(self.expecting("expression")),
        };
        Ok(Expr { kind, span: self.span_from(start) })
    }

    fn paren(&mut self) -> PResult<Expr> {
        let start = self.span();
        self.bump();
        // operator reference or right section
        if let Some((op, width)) = self.peek_infix() {
            let is_minus = op == "-" && width == 1;
            if self.peek_tok(width) == &Tok::RParen {
                for _ in 0..width {
                    self.bump();
                }
                self.bump();
                return Ok(Expr { kind: ExprKind::OpRef(op), span: self.span_from(start) });
            }
            if !is_minus {
                for _ in 0..width {
                    self.bump();
                }
                let (prec, _) = fixity(&op);
                let operand = self.infix(prec)?;
                self.expect(&Tok::RParen, "')'")?;
                return Ok(Expr {
                    kind: ExprKind::RightSection(op, Box::new(operand)),
                    span: self.span_from(start),
                });
            }
        }
        if self.tok() == &Tok::RParen {
            return Err(self.expecting("expression"));
        }
        let first = self.expr()?;
        if let Some((op, width)) = self.peek_infix() {
            if self.peek_tok(width) == &Tok::RParen {
                for _ in 0..=width {
                    self.bump();
                }
                return Ok(Expr {
                    kind: ExprKind::LeftSection(Box::new(first), op),
                    span: self.span_from(start),
                });
            }
        }
        if self.tok() == &Tok::Comma {
            let mut es = vec![first];
            while self.eat(&Tok::Comma) {
                es.push(self.expr()?);
            }
            if es.len() > MAX_TUPLE {
                return Err(self.error_here("tuples with more than 4 components are not supported"));
            }
            self.expect(&Tok::RParen, "')'")?;
            return Ok(Expr { kind: ExprKind::Tuple(es), span: self.span_from(start) });
        }
        self.expect(&Tok::RParen, "')'")?;
        Ok(Expr { kind: first.kind, span: self.span_from(start) })
    }

    fn bracket(&mut self) -> PResult<Expr> {
        let from = self.pos;
        let start = self.span();
        self.bump();
        let mk = |p: &Self, kind| Expr { kind, span: p.span_from(start) };
        if self.eat(&Tok::RBracket) {
            return Ok(mk(self, ExprKind::List(Vec::new())));
        }
        let first = self.expr()?;
        match self.tok() {
            Tok::DotDot => {
                self.bump();
                if self.eat(&Tok::RBracket) {
                    return Ok(mk(self, ExprKind::EnumFrom(Box::new(first))));
                }
                let to = self.expr()?;
                self.expect(&Tok::RBracket, "']'")?;
                Ok(mk(self, ExprKind::EnumFromTo(Box::new(first), Box::new(to))))
            }
            Tok::Bar => {
                self.bump();
                let mut quals = vec![self.qualifier()?];
                while self.eat(&Tok::Comma) {
                    quals.push(self.qualifier()?);
                }
                self.expect(&Tok::RBracket, "']'")?;
                let text = self.text(from, self.pos);
                Ok(mk(self, ExprKind::Comprehension { text, head: Box::new(first), quals }))
            }
            Tok::Comma => {
                self.bump();
                let second = self.expr()?;
                if self.eat(&Tok::DotDot) {
                    if self.eat(&Tok::RBracket) {
                        return Ok(mk(self, ExprKind::EnumFromThen(Box::new(first), Box::new(second))));
                    }
                    let to = self.expr()?;
                    self.expect(&Tok::RBracket, "']'")?;
                    return Ok(mk(
                        self,
                        ExprKind::EnumFromThenTo(Box::new(first), Box::new(second), Box::new(to)),
                    ));
                }
                let mut es = vec![first, second];
                while self.eat(&Tok::Comma) {
                    es.push(self.expr()?);
                }
                self.expect(&Tok::RBracket, "']'")?;
                Ok(mk(self, ExprKind::List(es)))
            }
            _ => {
                self.expect(&Tok::RBracket, "']'")?;
                Ok(mk(self, ExprKind::List(vec![first])))
            }
        }
    }

    fn qualifier(&mut self) -> PResult<Qualifier> {
        if self.tok() == &Tok::Let {
            self.bump();
            let eqs = self.block(|p| p.equation())?;
            return Ok(Qualifier::Let(group_equations(eqs)?));
        }
        let save = self.pos;
        if let Ok(p) = self.pattern() {
            if self.eat(&Tok::LArrow) {
                let e = self.expr()?;
                return Ok(Qualifier::Generator(p, e));
            }
        }
        self.pos = save;
        Ok(Qualifier::Guard(self.expr()?))
    }
}

fn token_source(t: &Token) -> String {
    match &t.tok {
        Tok::Char(c) => format!("'{}'", escape_char(*c, '\'')),
        Tok::Str(s) => {
            let mut out = String::from("\"");
            for c in s.chars() {
                out.push_str(&escape_char(c, '"'));
            }
            out.push('"');
            out
        }
        other => other.to_string(),
    }
}

pub(crate) fn escape_char(c: char, quote: char) -> String {
    match c {
        '\n' => "\\n".into(),
        '\t' => "\\t".into(),
        '\r' => "\\r".into(),
        '\\' => "\\\\".into(),
        '\0' => "\\0".into(),
        c if c == quote => format!("\\{c}"),
        c if c.is_control() => format!("\\{}", c as u32),
        c => c.to_string(),
    }
}

fn check_linear(pats: &[Pattern]) -> PResult<()> {
    let mut seen = HashSet::new();
    for p in pats {
        for (v, span) in p.vars() {
            if !seen.insert(v) {
                return Err(SyntaxError::new(span, format!("conflicting definitions for {v} in pattern")));
            }
        }
    }
    Ok(())
}

enum RawDecl {
    Sig(Signature),
    Data(DataDecl),
    Alias(TypeAlias),
    Eq(Equation),
}

fn group_equations(eqs: Vec<Equation>) -> PResult<Vec<FunGroup>> {
    let decls = group_decls(eqs.into_iter().map(RawDecl::Eq).collect())?;
    Ok(decls
        .into_iter()
        .filter_map(|d| match d {
            Decl::Fun(g) => Some(g),
            _ => None,
        })
        .collect())
}

/// Group contiguous equations by name, checking arities and duplicates.
fn group_decls(raw: Vec<RawDecl>) -> PResult<Vec<Decl>> {
    let mut out: Vec<Decl> = Vec::new();
    let mut defined: HashSet<String> = HashSet::new();
    for d in raw {
        match d {
            RawDecl::Eq(eq) => {
                if let Some(Decl::Fun(g)) = out.last_mut() {
                    if g.name == eq.name {
                        if eq.patterns.len() != g.arity() {
                            return Err(SyntaxError::new(
                                eq.span,
                                format!("equations for {} have different numbers of arguments", eq.name),
                            ));
                        }
                        g.span = g.span.to(eq.span);
                        g.equations.push(eq);
                        continue;
                    }
                }
                if !defined.insert(eq.name.clone()) {
                    return Err(SyntaxError::new(eq.span, format!("conflicting definitions for {}", eq.name)));
                }
                out.push(Decl::Fun(FunGroup { name: eq.name.clone(), span: eq.span, equations: vec![eq] }));
            }
            RawDecl::Sig(s) => out.push(Decl::Sig(s)),
            RawDecl::Data(d) => out.push(Decl::Data(d)),
            RawDecl::Alias(a) => out.push(Decl::Alias(a)),
        }
    }
    Ok(out)
}

pub fn parse_program_tokens(tokens: &[Token]) -> Result<Program, SyntaxError> {
    Parser::new(tokens).program()
}

pub fn parse_expr_tokens(tokens: &[Token]) -> Result<Expr, SyntaxError> {
    let mut p = Parser::new(tokens);
    let e = p.expr()?;
    if p.raw().tok != Tok::Eof {
        return Err(p.error_here(format!("unexpected {}", p.raw().tok)));
    }
    Ok(e)
}

/// Lex and parse a whole program.
pub fn parse_program(src: &str) -> Result<Program, SyntaxError> {
    parse_program_tokens(&lex(src)?)
}

/// Lex and parse a single expression.
pub fn parse_expr(src: &str) -> Result<Expr, SyntaxError> {
    parse_expr_tokens(&lex(src)?)
}

/// Parse a type expression such as `(a -> b) -> [a] -> [b]`.
pub fn parse_type(src: &str) -> Result<TypeExpr, SyntaxError> {
    let tokens = lex(src)?;
    let mut p = Parser::new(&tokens);
    let t = p.type_expr()?;
    if p.raw().tok != Tok::Eof {
        return Err(p.error_here(format!("unexpected {}", p.raw().tok)));
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prog(src: &str) -> Program {
        parse_program(src).unwrap_or_else(|e| panic!("{e}"))
    }

    #[test]
    fn insert_groups_two_equations_with_guards() {
        let p = prog(
            "insert x [] = [x]\ninsert x (y:ys) | x<=y = x:y:ys\n                | otherwise = y:insert x ys\n",
        );
        let groups: Vec<_> = p.functions().collect();
        assert_eq!(groups.len(), 1);
        let g = groups[0];
        assert_eq!(g.equations.len(), 2);
        match &g.equations[1].rhs {
            Rhs::Guarded(cs) => {
                assert_eq!(cs.len(), 2);
                assert_eq!(cs[1].text, "| otherwise = y:insert x ys");
            }
            _ => panic!("expected guards"),
        }
        assert_eq!(g.equations[1].lhs_text, "insert x (y:ys)");
    }

    #[test]
    fn comprehension_is_parsed() {
        let p = prog("squares n = [x*x | x <- [1..n]]");
        let eq = &p.functions().next().unwrap().equations[0];
        match &eq.rhs {
            Rhs::Plain(Expr { kind: ExprKind::Comprehension { text, quals, .. }, .. }) => {
                assert_eq!(text, "[x*x | x <- [1..n]]");
                assert!(matches!(quals[0], Qualifier::Generator(..)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn identity_lambda() {
        let p = prog("f = \\x -> x");
        let eq = &p.functions().next().unwrap().equations[0];
        assert!(matches!(&eq.rhs, Rhs::Plain(Expr { kind: ExprKind::Lambda(ps, _), .. }) if ps.len() == 1));
    }

    #[test]
    fn rev_acc_cons_pattern() {
        let p = prog("revAcc (x:xs) ys = revAcc xs (x:ys)");
        let eq = &p.functions().next().unwrap().equations[0];
        assert!(matches!(eq.patterns[0].kind, PatternKind::Cons(..)));
        assert!(matches!(&eq.rhs, Rhs::Plain(Expr { kind: ExprKind::App(..), .. })));
    }

    #[test]
    fn where_block_and_text() {
        let p = prog("repeat' x = xs\n   where xs = x:xs\n");
        let eq = &p.functions().next().unwrap().equations[0];
        assert_eq!(eq.text, "repeat' x = xs");
        assert_eq!(eq.where_binds.len(), 1);
        assert_eq!(eq.where_binds[0].equations[0].text, "xs = x:xs");
    }

    #[test]
    fn where_block_multiple_bindings() {
        let p = prog("f x = a + b\n  where a = x\n        b = 2\ng = f 1\n");
        let groups: Vec<_> = p.functions().collect();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].equations[0].where_binds.len(), 2);
    }

    #[test]
    fn infix_definitions() {
        let p = prog("[] ++ ys = ys\n(x:xs) ++ ys = x : (xs ++ ys)\nf . g = \\x -> f (g x)\n");
        let names: Vec<_> = p.functions().map(|g| g.name.as_str()).collect();
        assert_eq!(names, vec!["++", "."]);
    }

    #[test]
    fn signatures_and_data() {
        let p = prog(
            "data BST a = Leaf | Node a (BST a) (BST a)\n\ninsert :: a -> BST a -> BST a -- no Ord typeclass\ninsert x Leaf = Node x Leaf Leaf\n",
        );
        assert_eq!(p.data_decls().next().unwrap().constructors.len(), 2);
        assert_eq!(p.signatures().next().unwrap().names, vec!["insert"]);
    }

    #[test]
    fn different_arities_rejected() {
        let err = parse_program("f x = 1\nf x y = 2").unwrap_err();
        assert!(err.message.contains("different numbers"), "{err}");
    }

    #[test]
    fn non_contiguous_equations_rejected() {
        assert!(parse_program("f 0 = 1\ng = 2\nf n = 3").is_err());
    }

    #[test]
    fn expressions() {
        assert!(matches!(parse_expr("insert 3 [1,2,4]").unwrap().kind, ExprKind::App(..)));
        let e = parse_expr("takeWhile (\\x -> x*x<50) [1..]").unwrap();
        match e.kind {
            ExprKind::App(f, arg) => {
                assert!(matches!(arg.kind, ExprKind::EnumFrom(_)));
                assert!(matches!(f.kind, ExprKind::App(_, ref l) if matches!(l.kind, ExprKind::Lambda(..))));
            }
            _ => panic!(),
        }
        assert!(parse_expr("(1,)").is_err());
        assert!(parse_expr("(1,2,3,4,5)").is_err());
    }

    #[test]
    fn fixity_and_sections() {
        let e = parse_expr("x:y:ys").unwrap();
        match e.kind {
            ExprKind::BinOp(op, _, r) => {
                assert_eq!(op, ":");
                assert!(matches!(r.kind, ExprKind::BinOp(..)));
            }
            _ => panic!(),
        }
        assert!(matches!(parse_expr("(+1)").unwrap().kind, ExprKind::RightSection(..)));
        assert!(matches!(parse_expr("(1+)").unwrap().kind, ExprKind::LeftSection(..)));
        assert!(matches!(parse_expr("(:)").unwrap().kind, ExprKind::OpRef(_)));
        assert!(matches!(parse_expr("(`div` 2)").unwrap().kind, ExprKind::RightSection(..)));
        assert!(matches!(parse_expr("(-1)").unwrap().kind, ExprKind::Neg(_)));
        assert!(parse_expr("1 == 2 == 3").is_err());
    }

    #[test]
    fn negation_binds_at_six() {
        match parse_expr("- x * y").unwrap().kind {
            ExprKind::Neg(inner) => assert!(matches!(inner.kind, ExprKind::BinOp(ref o, ..) if o == "*")),
            _ => panic!(),
        }
        match parse_expr("-1 + 2").unwrap().kind {
            ExprKind::BinOp(op, l, _) => {
                assert_eq!(op, "+");
                assert!(matches!(l.kind, ExprKind::Neg(_)));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn case_and_let_layout() {
        let p = prog("f xs = case xs of\n  [] -> 0\n  (y:_) -> let a = y\n               b = 1\n           in a + b\n");
        let eq = &p.functions().next().unwrap().equations[0];
        match &eq.rhs {
            Rhs::Plain(Expr { kind: ExprKind::Case(_, alts), .. }) => {
                assert_eq!(alts.len(), 2);
                assert_eq!(alts[0].text, "[] -> 0");
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_expr("let { a = 1; b = 2 } in a + b").is_ok());
        assert!(parse_expr("let a = 1; b = 2 in a + b").is_ok());
        assert!(parse_expr("case 1 of { 0 -> 1; _ -> 2 }").is_ok());
    }

    #[test]
    fn sign_with_negative_literal() {
        let p = prog("sign :: Int -> Int\nsign x | x>0 = 1\n       | x<0 = -1\n       | otherwise = 0\n");
        assert_eq!(p.functions().next().unwrap().equations[0].patterns.len(), 1);
    }

    #[test]
    fn bang_patterns() {
        let p = prog("foldl' f !z [] = z");
        let eq = &p.functions().next().unwrap().equations[0];
        assert_eq!(eq.name, "foldl'");
        assert!(matches!(eq.patterns[1].kind, PatternKind::Bang(_)));
    }

    #[test]
    fn non_linear_patterns_rejected() {
        assert!(parse_program("f x x = 1").is_err());
    }

    #[test]
    fn pattern_binding_rejected() {
        let err = parse_program("(a, b) = (1, 2)").unwrap_err();
        assert!(err.message.contains("pattern bindings"));
    }

    #[test]
    fn syntax_error_shape() {
        let err = parse_program("f x = (x").unwrap_err();
        assert_eq!(err.to_string(), "line 1,col 9: expecting ')'");
    }
}
