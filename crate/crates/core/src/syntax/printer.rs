//! Source-level printing of syntax trees. Printed output re-parses to a tree that prints the same.

use std::fmt::{self, Display, Formatter};

use super::ast::*;
use super::parser::escape_char;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Ctx {
    Top,
    Operand,
    Arg,
}

fn is_symbolic(op: &str) -> bool {
    !op.starts_with(|c: char| c.is_alphanumeric() || c == '_')
}

fn op_infix(op: &str) -> String {
    if is_symbolic(op) {
        op.to_string()
    } else {
        format!("`{op}`")
    }
}

fn op_prefix(op: &str) -> String {
    if is_symbolic(op) {
        format!("({op})")
    } else {
        op.to_string()
    }
}

fn string_lit(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        out.push_str(&escape_char(c, '"'));
    }
    out.push('"');
    out
}

fn expr_to(e: &Expr, ctx: Ctx) -> String {
    let (s, needs) = match &e.kind {
        ExprKind::Var(v) => (op_prefix(v), false),
        ExprKind::Con(c) => (c.clone(), false),
        ExprKind::Int(n) => (n.to_string(), *n < 0 && ctx > Ctx::Top),
        ExprKind::Char(c) => (format!("'{}'", escape_char(*c, '\'')), false),
        ExprKind::Str(s) => (string_lit(s), false),
        ExprKind::App(f, a) => {
            let head = match &f.kind {
                ExprKind::App(..) => expr_to(f, Ctx::Top),
                _ => expr_to(f, Ctx::Arg),
            };
            (format!("{head} {}", expr_to(a, Ctx::Arg)), ctx == Ctx::Arg)
        }
        ExprKind::BinOp(op, l, r) => (
            format!("{} {} {}", expr_to(l, Ctx::Operand), op_infix(op), expr_to(r, Ctx::Operand)),
            ctx > Ctx::Top,
        ),
        ExprKind::Neg(inner) => (format!("-{}", expr_to(inner, Ctx::Operand)), ctx > Ctx::Top),
        ExprKind::Lambda(ps, body) => {
            let ps: Vec<String> = ps.iter().map(|p| pat_to(p, true)).collect();
            (format!("\\{} -> {}", ps.join(" "), expr_to(body, Ctx::Top)), ctx > Ctx::Top)
        }
        ExprKind::LeftSection(l, op) => (format!("({} {})", expr_to(l, Ctx::Operand), op_infix(op)), false),
        ExprKind::RightSection(op, r) => (format!("({} {})", op_infix(op), expr_to(r, Ctx::Operand)), false),
        ExprKind::OpRef(op) => (format!("({})", op_infix(op)), false),
        ExprKind::If(c, t, f) => (
            format!("if {} then {} else {}", expr_to(c, Ctx::Top), expr_to(t, Ctx::Top), expr_to(f, Ctx::Top)),
            ctx > Ctx::Top,
        ),
        ExprKind::Case(scrut, alts) => {
            let alts: Vec<&str> = alts.iter().map(|a| a.text.as_str()).collect();
            (format!("case {} of {{ {} }}", expr_to(scrut, Ctx::Top), alts.join("; ")), ctx > Ctx::Top)
        }
        ExprKind::Let(binds, body) => {
            (format!("let {{ {} }} in {}", binds_to(binds), expr_to(body, Ctx::Top)), ctx > Ctx::Top)
        }
        ExprKind::Tuple(es) => {
            let es: Vec<String> = es.iter().map(|e| expr_to(e, Ctx::Top)).collect();
            (format!("({})", es.join(", ")), false)
        }
        ExprKind::List(es) => {
            let es: Vec<String> = es.iter().map(|e| expr_to(e, Ctx::Top)).collect();
            (format!("[{}]", es.join(", ")), false)
        }
        ExprKind::EnumFrom(a) => (format!("[{} ..]", expr_to(a, Ctx::Top)), false),
        ExprKind::EnumFromTo(a, b) => (format!("[{} .. {}]", expr_to(a, Ctx::Top), expr_to(b, Ctx::Top)), false),
        ExprKind::EnumFromThen(a, b) => {
            (format!("[{}, {} ..]", expr_to(a, Ctx::Top), expr_to(b, Ctx::Top)), false)
        }
        ExprKind::EnumFromThenTo(a, b, c) => (
            format!("[{}, {} .. {}]", expr_to(a, Ctx::Top), expr_to(b, Ctx::Top), expr_to(c, Ctx::Top)),
            false,
        ),
        ExprKind::Comprehension { text, .. } => (text.clone(), false),
    };
    if needs {
        format!("({s})")
    } else {
        s
    }
}

fn binds_to(groups: &[FunGroup]) -> String {
    let mut eqs = Vec::new();
    for g in groups {
        for eq in &g.equations {
            eqs.push(equation_to(eq));
        }
    }
    eqs.join("; ")
}

fn equation_to(eq: &Equation) -> String {
    let mut s = eq.text.clone();
    if !eq.where_binds.is_empty() {
        s.push_str(&format!(" where {{ {} }}", binds_to(&eq.where_binds)));
    }
    s
}

fn pat_to(p: &Pattern, atomic: bool) -> String {
    match &p.kind {
        PatternKind::Var(v) => v.clone(),
        PatternKind::Wildcard => "_".into(),
        PatternKind::Int(n) if *n < 0 && atomic => format!("({n})"),
        PatternKind::Int(n) => n.to_string(),
        PatternKind::Char(c) => format!("'{}'", escape_char(*c, '\'')),
        PatternKind::Str(s) => string_lit(s),
        PatternKind::Con(c, args) if args.is_empty() => c.clone(),
        PatternKind::Con(c, args) => {
            let args: Vec<String> = args.iter().map(|a| pat_to(a, true)).collect();
            let s = format!("{c} {}", args.join(" "));
            if atomic {
                format!("({s})")
            } else {
                s
            }
        }
        PatternKind::Tuple(ps) => {
            let ps: Vec<String> = ps.iter().map(|p| pat_to(p, false)).collect();
            format!("({})", ps.join(", "))
        }
        PatternKind::List(ps) => {
            let ps: Vec<String> = ps.iter().map(|p| pat_to(p, false)).collect();
            format!("[{}]", ps.join(", "))
        }
        PatternKind::Cons(h, t) => {
            let s = format!("{}:{}", pat_to(h, true), pat_to(t, matches!(t.kind, PatternKind::Con(..))));
            if atomic {
                format!("({s})")
            } else {
                s
            }
        }
        PatternKind::Bang(inner) => format!("!{}", pat_to(inner, true)),
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str(&expr_to(self, Ctx::Top))
    }
}

impl Display for Pattern {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str(&pat_to(self, false))
    }
}

impl Display for TypeExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        fn go(t: &TypeExpr, prec: u8) -> String {
            match t {
                TypeExpr::Var(v) => v.clone(),
                TypeExpr::Con(c, args) if args.is_empty() => c.clone(),
                TypeExpr::Con(c, args) => {
                    let args: Vec<String> = args.iter().map(|a| go(a, 2)).collect();
                    let s = format!("{c} {}", args.join(" "));
                    if prec >= 2 {
                        format!("({s})")
                    } else {
                        s
                    }
                }
                TypeExpr::List(t) => format!("[{}]", go(t, 0)),
                TypeExpr::Tuple(ts) => {
                    let ts: Vec<String> = ts.iter().map(|t| go(t, 0)).collect();
                    format!("({})", ts.join(", "))
                }
                TypeExpr::Fun(a, b) => {
                    let s = format!("{} -> {}", go(a, 1), go(b, 0));
                    if prec >= 1 {
                        format!("({s})")
                    } else {
                        s
                    }
                }
            }
        }
        f.write_str(&go(self, 0))
    }
}
