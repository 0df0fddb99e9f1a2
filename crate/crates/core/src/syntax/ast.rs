//! Surface syntax tree.

use super::Span;

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Var(String),
    Con(String),
    Int(i64),
    Char(char),
    Str(String),
    App(Box<Expr>, Box<Expr>),
    /// Infix application; backtick-quoted identifiers are stored by name.
    BinOp(String, Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Lambda(Vec<Pattern>, Box<Expr>),
    /// `(e op)`
    LeftSection(Box<Expr>, String),
    /// `(op e)`
    RightSection(String, Box<Expr>),
    /// An operator used as a value: `(+)`, `(:)`.
    OpRef(String),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Case(Box<Expr>, Vec<CaseAlt>),
    Let(Vec<FunGroup>, Box<Expr>),
    Tuple(Vec<Expr>),
    List(Vec<Expr>),
    EnumFrom(Box<Expr>),
    EnumFromTo(Box<Expr>, Box<Expr>),
    EnumFromThen(Box<Expr>, Box<Expr>),
    EnumFromThenTo(Box<Expr>, Box<Expr>, Box<Expr>),
    /// Parsed but rejected by the type checker.
    Comprehension {
        text: String,
        head: Box<Expr>,
        quals: Vec<Qualifier>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Qualifier {
    Generator(Pattern, Expr),
    Guard(Expr),
    Let(Vec<FunGroup>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseAlt {
    pub pattern: Pattern,
    pub rhs: Rhs,
    /// Source text of the alternative, whitespace normalized.
    pub text: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub kind: PatternKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PatternKind {
    Var(String),
    Wildcard,
    Int(i64),
    Char(char),
    Str(String),
    Con(String, Vec<Pattern>),
    Tuple(Vec<Pattern>),
    List(Vec<Pattern>),
    Cons(Box<Pattern>, Box<Pattern>),
    Bang(Box<Pattern>),
}

impl Pattern {
    /// Variables bound by this pattern, left to right.
    pub fn vars(&self) -> Vec<(&str, Span)> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<(&'a str, Span)>) {
        match &self.kind {
            PatternKind::Var(v) => out.push((v, self.span)),
            PatternKind::Wildcard | PatternKind::Int(_) | PatternKind::Char(_) | PatternKind::Str(_) => {}
            PatternKind::Con(_, ps) | PatternKind::Tuple(ps) | PatternKind::List(ps) => {
                ps.iter().for_each(|p| p.collect_vars(out))
            }
            PatternKind::Cons(h, t) => {
                h.collect_vars(out);
                t.collect_vars(out);
            }
            PatternKind::Bang(p) => p.collect_vars(out),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rhs {
    Plain(Expr),
    Guarded(Vec<GuardedExpr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuardedExpr {
    pub guard: Expr,
    pub body: Expr,
    /// `| guard = body`, whitespace normalized.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub name: String,
    pub patterns: Vec<Pattern>,
    pub rhs: Rhs,
    pub where_binds: Vec<FunGroup>,
    /// Left-hand side text, e.g. `insert x (y:ys)`.
    pub lhs_text: String,
    /// Whole equation without its `where` block.
    pub text: String,
    pub span: Span,
}

/// Contiguous equations defining one name.
#[derive(Debug, Clone, PartialEq)]
pub struct FunGroup {
    pub name: String,
    pub equations: Vec<Equation>,
    pub span: Span,
}

impl FunGroup {
    pub fn arity(&self) -> usize {
        self.equations[0].patterns.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypeExpr {
    Var(String),
    Con(String, Vec<TypeExpr>),
    List(Box<TypeExpr>),
    Tuple(Vec<TypeExpr>),
    Fun(Box<TypeExpr>, Box<TypeExpr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    pub names: Vec<String>,
    pub ty: TypeExpr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstructorDecl {
    pub name: String,
    pub args: Vec<TypeExpr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataDecl {
    pub name: String,
    pub params: Vec<String>,
    pub constructors: Vec<ConstructorDecl>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeAlias {
    pub name: String,
    pub params: Vec<String>,
    pub ty: TypeExpr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decl {
    Sig(Signature),
    Data(DataDecl),
    Alias(TypeAlias),
    Fun(FunGroup),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub decls: Vec<Decl>,
}

impl Program {
    pub fn functions(&self) -> impl Iterator<Item = &FunGroup> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Fun(g) => Some(g),
            _ => None,
        })
    }

    pub fn signatures(&self) -> impl Iterator<Item = &Signature> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Sig(s) => Some(s),
            _ => None,
        })
    }

    pub fn data_decls(&self) -> impl Iterator<Item = &DataDecl> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Data(d) => Some(d),
            _ => None,
        })
    }

    pub fn aliases(&self) -> impl Iterator<Item = &TypeAlias> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Alias(a) => Some(a),
            _ => None,
        })
    }
}
