//! Desugaring of the surface language into a small core: one [`Matching`]
//! per function, explicit constructors for all list, string and tuple sugar.

use std::collections::HashMap;
use std::rc::Rc;

use crate::syntax::{self, Expr, ExprKind, FunGroup, Pattern, PatternKind, Rhs};
use crate::typecheck::{tuple_con, TypeEnv};

pub type Name = Rc<str>;
pub type E = Rc<CExpr>;
pub type GlobalId = usize;

#[derive(Debug)]
pub enum CExpr {
    Local(Name),
    Global(GlobalId),
    Int(i64),
    Char(char),
    /// Saturated constructor. `sugar` marks cells written as list or string
    /// literals.
    Con { name: Name, args: Vec<E>, sugar: bool },
    /// Constructor used as a function value.
    ConFun(Name, usize),
    App(E, Vec<E>),
    Lam(Rc<Lambda>),
    Let(Rc<[Binding]>, E),
    Case(E, Rc<Matching>),
    If(E, E, E),
    /// `(op e)`
    RSection(E, E),
    /// Body of a zero-argument binding with guards or local definitions.
    Guarded(Rc<Matching>),
}

#[derive(Debug)]
pub struct Lambda {
    pub matching: Rc<Matching>,
    /// Source lambdas apply silently; local functions justify their steps.
    pub silent: bool,
    pub name: Option<Name>,
}

#[derive(Debug)]
pub struct Binding {
    pub name: Name,
    pub rhs: BindRhs,
    /// Source text of the binding, used as a step justification.
    pub text: Rc<str>,
}

#[derive(Debug)]
pub enum BindRhs {
    Thunk(E),
    Fun(Rc<Lambda>),
    Guarded(Rc<Matching>),
}

#[derive(Debug)]
pub struct Matching {
    pub name: Name,
    pub arity: usize,
    pub alts: Vec<Alt>,
}

#[derive(Debug)]
pub struct Alt {
    pub pats: Vec<CPat>,
    pub wheres: Rc<[Binding]>,
    pub rhs: CRhs,
    pub text: Rc<str>,
}

#[derive(Debug)]
pub enum CRhs {
    Plain(E),
    Guarded(Vec<GuardAlt>),
}

#[derive(Debug)]
pub struct GuardAlt {
    pub guard: E,
    pub body: E,
    pub text: Rc<str>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CPat {
    Var(Name),
    Wild,
    Int(i64),
    Char(char),
    Con(Name, Vec<CPat>),
    Bang(Box<CPat>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prim {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Negate,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Compare,
    Chr,
    Ord,
    IsAlpha,
    IsDigit,
    IsAlphaNum,
    IsUpper,
    IsLower,
    Show,
}

impl Prim {
    pub const ALL: [Prim; 21] = [
        Prim::Add,
        Prim::Sub,
        Prim::Mul,
        Prim::Div,
        Prim::Mod,
        Prim::Negate,
        Prim::Eq,
        Prim::Ne,
        Prim::Lt,
        Prim::Le,
        Prim::Gt,
        Prim::Ge,
        Prim::Compare,
        Prim::Chr,
        Prim::Ord,
        Prim::IsAlpha,
        Prim::IsDigit,
        Prim::IsAlphaNum,
        Prim::IsUpper,
        Prim::IsLower,
        Prim::Show,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Prim::Add => "+",
            Prim::Sub => "-",
            Prim::Mul => "*",
            Prim::Div => "div",
            Prim::Mod => "mod",
            Prim::Negate => "negate",
            Prim::Eq => "==",
            Prim::Ne => "/=",
            Prim::Lt => "<",
            Prim::Le => "<=",
            Prim::Gt => ">",
            Prim::Ge => ">=",
            Prim::Compare => "compare",
            Prim::Chr => "chr",
            Prim::Ord => "ord",
            Prim::IsAlpha => "isAlpha",
            Prim::IsDigit => "isDigit",
            Prim::IsAlphaNum => "isAlphaNum",
            Prim::IsUpper => "isUpper",
            Prim::IsLower => "isLower",
            Prim::Show => "show",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Prim::Negate
            | Prim::Chr
            | Prim::Ord
            | Prim::IsAlpha
            | Prim::IsDigit
            | Prim::IsAlphaNum
            | Prim::IsUpper
            | Prim::IsLower
            | Prim::Show => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub enum GlobalDef {
    Fun(Rc<Matching>),
    Prim(Prim),
}

#[derive(Debug, Clone)]
pub struct Global {
    pub name: Name,
    pub def: GlobalDef,
}

impl Global {
    pub fn arity(&self) -> usize {
        match &self.def {
            GlobalDef::Fun(m) => m.arity,
            GlobalDef::Prim(p) => p.arity(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConMeta {
    pub tag: usize,
    pub arity: usize,
}

/// Desugared definitions. Later programs append to the global table and
/// shadow earlier names in `scope`; earlier code keeps its own references.
#[derive(Debug, Clone, Default)]
pub struct CoreProgram {
    pub globals: Vec<Global>,
    pub scope: HashMap<String, GlobalId>,
    pub constructors: HashMap<String, ConMeta>,
}

impl CoreProgram {
    /// A program containing only the primitive operations.
    pub fn primitives() -> CoreProgram {
        let mut p = CoreProgram::default();
        for prim in Prim::ALL {
            p.scope.insert(prim.name().to_string(), p.globals.len());
            p.globals.push(Global { name: prim.name().into(), def: GlobalDef::Prim(prim) });
        }
        p
    }

    pub fn lookup(&self, name: &str) -> Option<GlobalId> {
        self.scope.get(name).copied()
    }

    /// Adds the functions of a type-checked program. `env` is the type
    /// environment produced for it.
    pub fn extend(&mut self, prog: &syntax::Program, env: &TypeEnv) {
        for (name, info) in &env.constructors {
            self.constructors.insert(name.clone(), ConMeta { tag: info.tag, arity: info.arity });
        }
        let groups: Vec<&FunGroup> = prog.functions().collect();
        let first = self.globals.len();
        for (i, g) in groups.iter().enumerate() {
            self.scope.insert(g.name.clone(), first + i);
            let placeholder = Rc::new(Matching { name: g.name.as_str().into(), arity: g.arity(), alts: vec![] });
            self.globals.push(Global { name: g.name.as_str().into(), def: GlobalDef::Fun(placeholder) });
        }
        for (i, g) in groups.iter().enumerate() {
            let m = Desugarer::new(self).group(g);
            self.globals[first + i].def = GlobalDef::Fun(Rc::new(m));
        }
    }

    pub fn desugar_expr(&self, e: &Expr) -> E {
        Desugarer::new(self).expr(e)
    }
}

struct Desugarer<'a> {
    prog: &'a CoreProgram,
    locals: Vec<String>,
}

fn list_chain(items: Vec<E>, sugar: bool) -> E {
    let nil = Rc::new(CExpr::Con { name: "[]".into(), args: vec![], sugar });
    items.into_iter().rev().fold(nil, |tail, x| Rc::new(CExpr::Con { name: ":".into(), args: vec![x, tail], sugar }))
}

fn pat_list_chain(items: Vec<CPat>) -> CPat {
    items.into_iter().rev().fold(CPat::Con("[]".into(), vec![]), |tail, x| CPat::Con(":".into(), vec![x, tail]))
}

impl<'a> Desugarer<'a> {
    fn new(prog: &'a CoreProgram) -> Desugarer<'a> {
        Desugarer { prog, locals: Vec::new() }
    }

    fn with_locals<T>(&mut self, names: impl IntoIterator<Item = String>, f: impl FnOnce(&mut Self) -> T) -> T {
        let mark = self.locals.len();
        self.locals.extend(names);
        let r = f(self);
        self.locals.truncate(mark);
        r
    }

    fn group(&mut self, g: &FunGroup) -> Matching {
        let alts = g
            .equations
            .iter()
            .map(|eq| {
                let pats: Vec<CPat> = eq.patterns.iter().map(|p| self.pattern(p)).collect();
                let vars: Vec<String> = eq.patterns.iter().flat_map(|p| p.vars()).map(|(v, _)| v.to_string()).collect();
                self.with_locals(vars, |d| {
                    let where_names: Vec<String> = eq.where_binds.iter().map(|w| w.name.clone()).collect();
                    d.with_locals(where_names, |d| {
                        let wheres = d.bindings(&eq.where_binds);
                        let rhs = d.rhs(&eq.rhs, &eq.lhs_text);
                        Alt { pats, wheres, rhs, text: eq.text.as_str().into() }
                    })
                })
            })
            .collect();
        Matching { name: g.name.as_str().into(), arity: g.arity(), alts }
    }

    fn rhs(&mut self, rhs: &Rhs, lhs_text: &str) -> CRhs {
        match rhs {
            Rhs::Plain(e) => CRhs::Plain(self.expr(e)),
            Rhs::Guarded(gs) => CRhs::Guarded(
                gs.iter()
                    .map(|g| GuardAlt {
                        guard: self.expr(&g.guard),
                        body: self.expr(&g.body),
                        text: format!("{lhs_text} {}", g.text).into(),
                    })
                    .collect(),
            ),
        }
    }

    /// Bindings of a let or where block; the caller has put their names in
    /// scope.
    fn bindings(&mut self, groups: &[FunGroup]) -> Rc<[Binding]> {
        groups
            .iter()
            .map(|g| {
                let name: Name = g.name.as_str().into();
                let eq = &g.equations[0];
                let simple = g.arity() == 0 && g.equations.len() == 1 && eq.where_binds.is_empty();
                let rhs = match (&eq.rhs, simple) {
                    (Rhs::Plain(e), true) => BindRhs::Thunk(self.expr(e)),
                    _ if g.arity() == 0 => BindRhs::Guarded(Rc::new(self.group(g))),
                    _ => BindRhs::Fun(Rc::new(Lambda {
                        matching: Rc::new(self.group(g)),
                        silent: false,
                        name: Some(name.clone()),
                    })),
                };
                Binding { name, rhs, text: eq.text.as_str().into() }
            })
            .collect()
    }

    fn pattern(&self, p: &Pattern) -> CPat {
        match &p.kind {
            PatternKind::Var(v) => CPat::Var(v.as_str().into()),
            PatternKind::Wildcard => CPat::Wild,
            PatternKind::Int(n) => CPat::Int(*n),
            PatternKind::Char(c) => CPat::Char(*c),
            PatternKind::Str(s) => pat_list_chain(s.chars().map(CPat::Char).collect()),
            PatternKind::Con(c, ps) => CPat::Con(c.as_str().into(), ps.iter().map(|p| self.pattern(p)).collect()),
            PatternKind::Tuple(ps) => CPat::Con(tuple_con(ps.len()).into(), ps.iter().map(|p| self.pattern(p)).collect()),
            PatternKind::List(ps) => pat_list_chain(ps.iter().map(|p| self.pattern(p)).collect()),
            PatternKind::Cons(h, t) => CPat::Con(":".into(), vec![self.pattern(h), self.pattern(t)]),
            PatternKind::Bang(inner) => CPat::Bang(Box::new(self.pattern(inner))),
        }
    }

    fn var(&self, v: &str) -> E {
        if self.locals.iter().any(|l| l == v) {
            return Rc::new(CExpr::Local(v.into()));
        }
        if let Some(g) = self.prog.lookup(v) {
            return Rc::new(CExpr::Global(g));
        }
        if v == "otherwise" {
            return Rc::new(CExpr::Con { name: "True".into(), args: vec![], sugar: false });
        }
        if v == ":" || v.starts_with(char::is_uppercase) {
            return self.con(v);
        }
        Rc::new(CExpr::Local(v.into()))
    }

    fn con(&self, c: &str) -> E {
        let arity = self.prog.constructors.get(c).map(|m| m.arity).unwrap_or(0);
        if arity == 0 {
            Rc::new(CExpr::Con { name: c.into(), args: vec![], sugar: false })
        } else {
            Rc::new(CExpr::ConFun(c.into(), arity))
        }
    }

    fn global(&self, name: &str) -> E {
        Rc::new(CExpr::Global(self.prog.lookup(name).unwrap_or_else(|| panic!("prelude lacks {name}"))))
    }

    fn app(&self, f: E, args: Vec<E>) -> E {
        if let CExpr::ConFun(c, arity) = &*f {
            if args.len() == *arity {
                return Rc::new(CExpr::Con { name: c.clone(), args, sugar: false });
            }
        }
        if let CExpr::App(g, first) = &*f {
            let mut all = first.clone();
            all.extend(args);
            return self.app(g.clone(), all);
        }
        Rc::new(CExpr::App(f, args))
    }

    fn expr(&mut self, e: &Expr) -> E {
        match &e.kind {
            ExprKind::Var(v) => self.var(v),
            ExprKind::Con(c) => self.con(c),
            ExprKind::Int(n) => Rc::new(CExpr::Int(*n)),
            ExprKind::Char(c) => Rc::new(CExpr::Char(*c)),
            ExprKind::Str(s) => list_chain(s.chars().map(|c| Rc::new(CExpr::Char(c))).collect(), true),
            ExprKind::App(f, a) => {
                let f = self.expr(f);
                let a = self.expr(a);
                self.app(f, vec![a])
            }
            ExprKind::BinOp(op, l, r) => {
                let f = self.var(op);
                let args = vec![self.expr(l), self.expr(r)];
                self.app(f, args)
            }
            ExprKind::Neg(x) => match &x.kind {
                ExprKind::Int(n) => Rc::new(CExpr::Int(-n)),
                _ => {
                    let arg = self.expr(x);
                    self.app(self.global("negate"), vec![arg])
                }
            },
            ExprKind::Lambda(ps, body) => {
                let pats: Vec<CPat> = ps.iter().map(|p| self.pattern(p)).collect();
                let vars: Vec<String> = ps.iter().flat_map(|p| p.vars()).map(|(v, _)| v.to_string()).collect();
                let body = self.with_locals(vars, |d| d.expr(body));
                let alt = Alt { pats, wheres: Rc::from(vec![]), rhs: CRhs::Plain(body), text: "".into() };
                let matching = Rc::new(Matching { name: "lambda".into(), arity: ps.len(), alts: vec![alt] });
                Rc::new(CExpr::Lam(Rc::new(Lambda { matching, silent: true, name: None })))
            }
            ExprKind::LeftSection(l, op) => {
                let f = self.var(op);
                let arg = self.expr(l);
                self.app(f, vec![arg])
            }
            ExprKind::RightSection(op, r) => Rc::new(CExpr::RSection(self.var(op), self.expr(r))),
            ExprKind::OpRef(op) => self.var(op),
            ExprKind::If(c, t, f) => Rc::new(CExpr::If(self.expr(c), self.expr(t), self.expr(f))),
            ExprKind::Case(scrut, alts) => {
                let scrut = self.expr(scrut);
                let alts = alts
                    .iter()
                    .map(|a| {
                        let pats = vec![self.pattern(&a.pattern)];
                        let vars: Vec<String> = a.pattern.vars().into_iter().map(|(v, _)| v.to_string()).collect();
                        let rhs = self.with_locals(vars, |d| match &a.rhs {
                            Rhs::Plain(e) => CRhs::Plain(d.expr(e)),
                            Rhs::Guarded(gs) => CRhs::Guarded(
                                gs.iter()
                                    .map(|g| GuardAlt {
                                        guard: d.expr(&g.guard),
                                        body: d.expr(&g.body),
                                        text: a.text.as_str().into(),
                                    })
                                    .collect(),
                            ),
                        });
                        Alt { pats, wheres: Rc::from(vec![]), rhs, text: a.text.as_str().into() }
                    })
                    .collect();
                Rc::new(CExpr::Case(scrut, Rc::new(Matching { name: "case".into(), arity: 1, alts })))
            }
            ExprKind::Let(groups, body) => {
                let names: Vec<String> = groups.iter().map(|g| g.name.clone()).collect();
                self.with_locals(names, |d| {
                    let binds = d.bindings(groups);
                    Rc::new(CExpr::Let(binds, d.expr(body)))
                })
            }
            ExprKind::Tuple(es) => Rc::new(CExpr::Con {
                name: tuple_con(es.len()).into(),
                args: es.iter().map(|x| self.expr(x)).collect(),
                sugar: false,
            }),
            ExprKind::List(es) => {
                let items = es.iter().map(|x| self.expr(x)).collect();
                list_chain(items, true)
            }
            ExprKind::EnumFrom(a) => {
                let args = vec![self.expr(a)];
                self.app(self.global("enumFrom"), args)
            }
            ExprKind::EnumFromTo(a, b) => {
                let args = vec![self.expr(a), self.expr(b)];
                self.app(self.global("enumFromTo"), args)
            }
            ExprKind::EnumFromThen(a, b) => {
                let args = vec![self.expr(a), self.expr(b)];
                self.app(self.global("enumFromThen"), args)
            }
            ExprKind::EnumFromThenTo(a, b, c) => {
                let args = vec![self.expr(a), self.expr(b), self.expr(c)];
                self.app(self.global("enumFromThenTo"), args)
            }
            ExprKind::Comprehension { .. } => unreachable!("comprehensions are rejected by the type checker"),
        }
    }
}
