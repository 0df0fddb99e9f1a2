//! Naive call-by-name reference evaluator over the surface syntax tree.
//! No sharing: every variable occurrence re-evaluates its expression.
//! Primitives and enumerations are native; prelude functions are
//! interpreted from the prelude source like any user definition.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::HashMap;
use std::rc::Rc;

use stepwise_core::syntax::{Expr, ExprKind, FunGroup, Pattern, PatternKind, Program, Rhs};

type R<T> = Result<T, String>;

#[derive(Clone, Copy, PartialEq)]
enum Scope {
    Prelude,
    User,
}

#[derive(Clone)]
enum Thunk<'a> {
    Expr(&'a Expr, Env<'a>),
    Val(V<'a>),
    /// A zero-argument function group evaluated in an environment.
    Group(&'a FunGroup, Env<'a>),
    Enum { from: i64, step: i64, to: Option<i64> },
}

#[derive(Clone)]
enum V<'a> {
    Int(i64),
    Char(char),
    Con(String, Vec<Thunk<'a>>),
    Fun(Func<'a>, Vec<Thunk<'a>>),
}

#[derive(Clone)]
enum Func<'a> {
    Group(&'a FunGroup, Env<'a>),
    Lambda(&'a [Pattern], &'a Expr, Env<'a>),
    Con(String, usize),
    Prim(&'static str, usize),
    /// Right section: operator and right operand.
    Section(Box<Thunk<'a>>, Box<Thunk<'a>>),
}

#[derive(Clone)]
struct Env<'a>(Rc<Frame<'a>>);

enum Frame<'a> {
    Empty(Scope),
    Bind(&'a str, Thunk<'a>, Env<'a>),
    Rec(&'a [FunGroup], Env<'a>),
}

impl<'a> Env<'a> {
    fn empty(scope: Scope) -> Env<'a> {
        Env(Rc::new(Frame::Empty(scope)))
    }

    fn bind(&self, name: &'a str, t: Thunk<'a>) -> Env<'a> {
        Env(Rc::new(Frame::Bind(name, t, self.clone())))
    }

    fn rec(&self, groups: &'a [FunGroup]) -> Env<'a> {
        Env(Rc::new(Frame::Rec(groups, self.clone())))
    }
}

const PRIMS: &[(&str, usize)] = &[
    ("+", 2),
    ("-", 2),
    ("*", 2),
    ("div", 2),
    ("mod", 2),
    ("negate", 1),
    ("==", 2),
    ("/=", 2),
    ("<", 2),
    ("<=", 2),
    (">", 2),
    (">=", 2),
    ("compare", 2),
    ("chr", 1),
    ("ord", 1),
    ("isAlpha", 1),
    ("isDigit", 1),
    ("isAlphaNum", 1),
    ("isUpper", 1),
    ("isLower", 1),
    ("show", 1),
];

pub struct Oracle<'a> {
    prelude: HashMap<&'a str, &'a FunGroup>,
    user: HashMap<&'a str, &'a FunGroup>,
    tags: HashMap<String, usize>,
    arities: HashMap<String, usize>,
    fuel: Cell<u64>,
}

fn tuple_name(n: usize) -> String {
    format!("({})", ",".repeat(n - 1))
}

fn list_of<'a>(items: Vec<Thunk<'a>>) -> V<'a> {
    let mut v = V::Con("[]".into(), vec![]);
    for t in items.into_iter().rev() {
        v = V::Con(":".into(), vec![t, Thunk::Val(v)]);
    }
    v
}

fn bool_v<'a>(b: bool) -> V<'a> {
    V::Con(if b { "True" } else { "False" }.into(), vec![])
}

fn haskell_div(a: i64, b: i64) -> i64 {
    let (q, r) = (a / b, a % b);
    if r != 0 && (r < 0) != (b < 0) {
        q - 1
    } else {
        q
    }
}

fn haskell_mod(a: i64, b: i64) -> i64 {
    a - b * haskell_div(a, b)
}

impl<'a> Oracle<'a> {
    pub fn new(prelude: &'a Program, user: &'a Program) -> Oracle<'a> {
        let mut tags = HashMap::new();
        let mut arities = HashMap::new();
        let builtin: &[&[(&str, usize)]] = &[
            &[("False", 0), ("True", 0)],
            &[("LT", 0), ("EQ", 0), ("GT", 0)],
            &[("Nothing", 0), ("Just", 1)],
            &[("[]", 0), (":", 2)],
        ];
        for group in builtin {
            for (i, (c, a)) in group.iter().enumerate() {
                tags.insert(c.to_string(), i);
                arities.insert(c.to_string(), *a);
            }
        }
        for n in 2..=4 {
            tags.insert(tuple_name(n), 0);
            arities.insert(tuple_name(n), n);
        }
        for d in user.data_decls() {
            for (i, c) in d.constructors.iter().enumerate() {
                tags.insert(c.name.clone(), i);
                arities.insert(c.name.clone(), c.args.len());
            }
        }
        Oracle {
            prelude: prelude.functions().map(|g| (g.name.as_str(), g)).collect(),
            user: user.functions().map(|g| (g.name.as_str(), g)).collect(),
            tags,
            arities,
            fuel: Cell::new(20_000_000),
        }
    }

    /// Evaluates `e` (in the user scope) and prints it fully evaluated.
    pub fn eval_show(&self, e: &'a Expr) -> R<String> {
        let v = self.eval(e, &Env::empty(Scope::User))?;
        self.show(v, false)
    }

    fn tick(&self) -> R<()> {
        let f = self.fuel.get();
        if f == 0 {
            return Err("oracle ran out of fuel".into());
        }
        self.fuel.set(f - 1);
        Ok(())
    }

    fn global(&self, name: &str, scope: Scope) -> Option<Thunk<'a>> {
        let group = match scope {
            Scope::User => self.user.get(name).or_else(|| self.prelude.get(name)),
            Scope::Prelude => self.prelude.get(name),
        };
        if let Some(g) = group {
            let inner = if self.user.contains_key(name) && scope == Scope::User { Scope::User } else { Scope::Prelude };
            let env = Env::empty(inner);
            return Some(if g.arity() == 0 {
                Thunk::Group(g, env)
            } else {
                Thunk::Val(V::Fun(Func::Group(g, env), vec![]))
            });
        }
        if name == "otherwise" {
            return Some(Thunk::Val(bool_v(true)));
        }
        PRIMS.iter().find(|(p, _)| *p == name).map(|(p, a)| Thunk::Val(V::Fun(Func::Prim(p, *a), vec![])))
    }

    fn lookup(&self, env: &Env<'a>, name: &str) -> R<Thunk<'a>> {
        let mut cur = env;
        loop {
            match &*cur.0 {
                Frame::Empty(scope) => {
                    return self.global(name, *scope).ok_or_else(|| format!("unbound {name}"));
                }
                Frame::Bind(n, t, parent) => {
                    if *n == name {
                        return Ok(t.clone());
                    }
                    cur = parent;
                }
                Frame::Rec(groups, parent) => {
                    if let Some(g) = groups.iter().find(|g| g.name == name) {
                        let eq = &g.equations[0];
                        return Ok(match (&eq.rhs, g.arity()) {
                            (Rhs::Plain(e), 0) if g.equations.len() == 1 && eq.where_binds.is_empty() => {
                                Thunk::Expr(e, cur.clone())
                            }
                            (_, 0) => Thunk::Group(g, cur.clone()),
                            _ => Thunk::Val(V::Fun(Func::Group(g, cur.clone()), vec![])),
                        });
                    }
                    cur = parent;
                }
            }
        }
    }

    fn con_value(&self, c: &str) -> V<'a> {
        match self.arities.get(c).copied().unwrap_or(0) {
            0 => V::Con(c.to_string(), vec![]),
            n => V::Fun(Func::Con(c.to_string(), n), vec![]),
        }
    }

    fn op_value(&self, op: &str, env: &Env<'a>) -> R<V<'a>> {
        if op == ":" || op.starts_with(char::is_uppercase) {
            return Ok(self.con_value(op));
        }
        let t = self.lookup(env, op)?;
        self.whnf(&t)
    }

    fn whnf(&self, t: &Thunk<'a>) -> R<V<'a>> {
        match t {
            Thunk::Val(v) => Ok(v.clone()),
            Thunk::Expr(e, env) => self.eval(e, env),
            Thunk::Group(g, env) => self.apply_group(g, env, vec![]),
            Thunk::Enum { from, step, to } => {
                let done = match to {
                    Some(m) if *step >= 0 => from > m,
                    Some(m) => from < m,
                    None => false,
                };
                if done {
                    return Ok(V::Con("[]".into(), vec![]));
                }
                let rest = Thunk::Enum { from: from + step, step: *step, to: *to };
                Ok(V::Con(":".into(), vec![Thunk::Val(V::Int(*from)), rest]))
            }
        }
    }

    fn int(&self, t: &Thunk<'a>) -> R<i64> {
        match self.whnf(t)? {
            V::Int(i) => Ok(i),
            _ => Err("expected an integer".into()),
        }
    }

    fn truth(&self, e: &'a Expr, env: &Env<'a>) -> R<bool> {
        match self.eval(e, env)? {
            V::Con(c, _) => Ok(c == "True"),
            _ => Err("expected a boolean".into()),
        }
    }

    fn eval(&self, e: &'a Expr, env: &Env<'a>) -> R<V<'a>> {
        self.tick()?;
        let th = |x: &'a Expr| Thunk::Expr(x, env.clone());
        match &e.kind {
            ExprKind::Var(x) => {
                let t = self.lookup(env, x)?;
                self.whnf(&t)
            }
            ExprKind::Con(c) => Ok(self.con_value(c)),
            ExprKind::Int(i) => Ok(V::Int(*i)),
            ExprKind::Char(c) => Ok(V::Char(*c)),
            ExprKind::Str(s) => Ok(list_of(s.chars().map(|c| Thunk::Val(V::Char(c))).collect())),
            ExprKind::App(f, a) => {
                let fv = self.eval(f, env)?;
                self.apply(fv, vec![th(a)])
            }
            ExprKind::BinOp(op, l, r) => {
                let f = self.op_value(op, env)?;
                self.apply(f, vec![th(l), th(r)])
            }
            ExprKind::Neg(x) => Ok(V::Int(self.int(&th(x))?.wrapping_neg())),
            ExprKind::Lambda(ps, body) => Ok(V::Fun(Func::Lambda(ps, body, env.clone()), vec![])),
            ExprKind::LeftSection(l, op) => {
                let f = self.op_value(op, env)?;
                self.apply(f, vec![th(l)])
            }
            ExprKind::RightSection(op, r) => {
                let f = self.op_value(op, env)?;
                Ok(V::Fun(Func::Section(Box::new(Thunk::Val(f)), Box::new(th(r))), vec![]))
            }
            ExprKind::OpRef(op) => self.op_value(op, env),
            ExprKind::If(c, t, f) => {
                if self.truth(c, env)? {
                    self.eval(t, env)
                } else {
                    self.eval(f, env)
                }
            }
            ExprKind::Case(s, alts) => {
                let scrut = th(s);
                for alt in alts {
                    if let Some(env2) = self.match_pat(&alt.pattern, &scrut, env)? {
                        if let Some(v) = self.rhs(&alt.rhs, &env2)? {
                            return Ok(v);
                        }
                    }
                }
                Err("incomplete case".into())
            }
            ExprKind::Let(groups, body) => self.eval(body, &env.rec(groups)),
            ExprKind::Tuple(es) => Ok(V::Con(tuple_name(es.len()), es.iter().map(th).collect())),
            ExprKind::List(es) => Ok(list_of(es.iter().map(th).collect())),
            ExprKind::EnumFrom(a) => self.whnf(&Thunk::Enum { from: self.int(&th(a))?, step: 1, to: None }),
            ExprKind::EnumFromTo(a, b) => {
                self.whnf(&Thunk::Enum { from: self.int(&th(a))?, step: 1, to: Some(self.int(&th(b))?) })
            }
            ExprKind::EnumFromThen(a, b) => {
                let (x, y) = (self.int(&th(a))?, self.int(&th(b))?);
                self.whnf(&Thunk::Enum { from: x, step: y - x, to: None })
            }
            ExprKind::EnumFromThenTo(a, b, c) => {
                let (x, y, z) = (self.int(&th(a))?, self.int(&th(b))?, self.int(&th(c))?);
                self.whnf(&Thunk::Enum { from: x, step: y - x, to: Some(z) })
            }
            ExprKind::Comprehension { .. } => Err("comprehension".into()),
        }
    }

    /// `None` when every guard fails.
    fn rhs(&self, rhs: &'a Rhs, env: &Env<'a>) -> R<Option<V<'a>>> {
        match rhs {
            Rhs::Plain(e) => self.eval(e, env).map(Some),
            Rhs::Guarded(gs) => {
                for g in gs {
                    if self.truth(&g.guard, env)? {
                        return self.eval(&g.body, env).map(Some);
                    }
                }
                Ok(None)
            }
        }
    }

    fn apply(&self, f: V<'a>, args: Vec<Thunk<'a>>) -> R<V<'a>> {
        let V::Fun(func, mut all) = f else { return Err("applied a non-function".into()) };
        all.extend(args);
        let arity = match &func {
            Func::Group(g, _) => g.arity(),
            Func::Lambda(ps, _, _) => ps.len(),
            Func::Con(_, n) | Func::Prim(_, n) => *n,
            Func::Section(..) => 1,
        };
        if all.len() < arity {
            return Ok(V::Fun(func, all));
        }
        let rest = all.split_off(arity);
        let v = match func {
            Func::Group(g, env) => self.apply_group(g, &env, all)?,
            Func::Lambda(ps, body, env) => {
                let mut env2 = env.clone();
                for (p, a) in ps.iter().zip(&all) {
                    env2 = self.match_pat(p, a, &env2)?.ok_or("lambda pattern failed")?;
                }
                self.eval(body, &env2)?
            }
            Func::Con(c, _) => V::Con(c, all),
            Func::Prim(p, _) => self.prim(p, &all)?,
            Func::Section(op, r) => {
                let f = self.whnf(&op)?;
                self.apply(f, vec![all[0].clone(), *r])?
            }
        };
        if rest.is_empty() {
            Ok(v)
        } else {
            self.apply(v, rest)
        }
    }

    fn apply_group(&self, g: &'a FunGroup, env: &Env<'a>, args: Vec<Thunk<'a>>) -> R<V<'a>> {
        'eqs: for eq in &g.equations {
            let mut env2 = env.clone();
            for (p, a) in eq.patterns.iter().zip(&args) {
                match self.match_pat(p, a, &env2)? {
                    Some(e) => env2 = e,
                    None => continue 'eqs,
                }
            }
            if !eq.where_binds.is_empty() {
                env2 = env2.rec(&eq.where_binds);
            }
            if let Some(v) = self.rhs(&eq.rhs, &env2)? {
                return Ok(v);
            }
        }
        Err(format!("incomplete pattern match in {}", g.name))
    }

    fn match_con(&self, c: &str, ps: &'a [Pattern], t: &Thunk<'a>, env: &Env<'a>) -> R<Option<Env<'a>>> {
        match self.whnf(t)? {
            V::Con(name, args) if name == c => {
                let mut env2 = env.clone();
                for (p, a) in ps.iter().zip(&args) {
                    match self.match_pat(p, a, &env2)? {
                        Some(e) => env2 = e,
                        None => return Ok(None),
                    }
                }
                Ok(Some(env2))
            }
            V::Con(..) => Ok(None),
            _ => Err("constructor pattern against a non-constructor".into()),
        }
    }

    fn match_list(&self, items: &[MatchItem<'a>], t: &Thunk<'a>, env: &Env<'a>) -> R<Option<Env<'a>>> {
        let Some((first, rest)) = items.split_first() else {
            return self.match_con("[]", &[], t, env);
        };
        let V::Con(name, args) = self.whnf(t)? else { return Err("list pattern".into()) };
        if name != ":" {
            return Ok(None);
        }
        let env2 = match first {
            MatchItem::Pat(p) => self.match_pat(p, &args[0], env)?,
            MatchItem::Char(c) => match self.whnf(&args[0])? {
                V::Char(x) if x == *c => Some(env.clone()),
                _ => None,
            },
        };
        match env2 {
            Some(e) => self.match_list(rest, &args[1], &e),
            None => Ok(None),
        }
    }

    fn match_pat(&self, p: &'a Pattern, t: &Thunk<'a>, env: &Env<'a>) -> R<Option<Env<'a>>> {
        match &p.kind {
            PatternKind::Var(x) => Ok(Some(env.bind(x, t.clone()))),
            PatternKind::Wildcard => Ok(Some(env.clone())),
            PatternKind::Bang(inner) => {
                let v = self.whnf(t)?;
                self.match_pat(inner, &Thunk::Val(v), env)
            }
            PatternKind::Int(k) => Ok((self.int(t)? == *k).then(|| env.clone())),
            PatternKind::Char(k) => match self.whnf(t)? {
                V::Char(c) => Ok((c == *k).then(|| env.clone())),
                _ => Err("char pattern".into()),
            },
            PatternKind::Str(s) => {
                let items: Vec<MatchItem> = s.chars().map(MatchItem::Char).collect();
                self.match_list(&items, t, env)
            }
            PatternKind::Con(c, ps) => self.match_con(c, ps, t, env),
            PatternKind::Tuple(ps) => self.match_con(&tuple_name(ps.len()), ps, t, env),
            PatternKind::List(ps) => {
                let items: Vec<MatchItem> = ps.iter().map(MatchItem::Pat).collect();
                self.match_list(&items, t, env)
            }
            PatternKind::Cons(h, tl) => {
                let V::Con(name, args) = self.whnf(t)? else { return Err("cons pattern".into()) };
                if name != ":" {
                    return Ok(None);
                }
                match self.match_pat(h, &args[0], env)? {
                    Some(e) => self.match_pat(tl, &args[1], &e),
                    None => Ok(None),
                }
            }
        }
    }

    fn compare(&self, a: &Thunk<'a>, b: &Thunk<'a>) -> R<Ordering> {
        match (self.whnf(a)?, self.whnf(b)?) {
            (V::Int(x), V::Int(y)) => Ok(x.cmp(&y)),
            (V::Char(x), V::Char(y)) => Ok(x.cmp(&y)),
            (V::Con(c1, a1), V::Con(c2, a2)) => {
                let o = self.tags[&c1].cmp(&self.tags[&c2]);
                if o != Ordering::Equal {
                    return Ok(o);
                }
                for (x, y) in a1.iter().zip(&a2) {
                    let o = self.compare(x, y)?;
                    if o != Ordering::Equal {
                        return Ok(o);
                    }
                }
                Ok(Ordering::Equal)
            }
            _ => Err("cannot compare functions".into()),
        }
    }

    fn prim(&self, p: &str, args: &[Thunk<'a>]) -> R<V<'a>> {
        let ch = |t: &Thunk<'a>| match self.whnf(t)? {
            V::Char(c) => Ok(c),
            _ => Err("expected a char".to_string()),
        };
        Ok(match p {
            "+" => V::Int(self.int(&args[0])?.wrapping_add(self.int(&args[1])?)),
            "-" => V::Int(self.int(&args[0])?.wrapping_sub(self.int(&args[1])?)),
            "*" => V::Int(self.int(&args[0])?.wrapping_mul(self.int(&args[1])?)),
            "div" | "mod" => {
                let (a, b) = (self.int(&args[0])?, self.int(&args[1])?);
                if b == 0 {
                    return Err("division by zero".into());
                }
                V::Int(if p == "div" { haskell_div(a, b) } else { haskell_mod(a, b) })
            }
            "negate" => V::Int(-self.int(&args[0])?),
            "==" => bool_v(self.compare(&args[0], &args[1])?.is_eq()),
            "/=" => bool_v(self.compare(&args[0], &args[1])?.is_ne()),
            "<" => bool_v(self.compare(&args[0], &args[1])?.is_lt()),
            "<=" => bool_v(self.compare(&args[0], &args[1])?.is_le()),
            ">" => bool_v(self.compare(&args[0], &args[1])?.is_gt()),
            ">=" => bool_v(self.compare(&args[0], &args[1])?.is_ge()),
            "compare" => {
                let name = match self.compare(&args[0], &args[1])? {
                    Ordering::Less => "LT",
                    Ordering::Equal => "EQ",
                    Ordering::Greater => "GT",
                };
                V::Con(name.into(), vec![])
            }
            "chr" => V::Char(char::from_u32(self.int(&args[0])? as u32).ok_or("chr range")?),
            "ord" => V::Int(ch(&args[0])? as i64),
            "isAlpha" => bool_v(ch(&args[0])?.is_alphabetic()),
            "isDigit" => bool_v(ch(&args[0])?.is_ascii_digit()),
            "isAlphaNum" => bool_v(ch(&args[0])?.is_alphanumeric()),
            "isUpper" => bool_v(ch(&args[0])?.is_uppercase()),
            "isLower" => bool_v(ch(&args[0])?.is_lowercase()),
            "show" => list_of(self.int(&args[0])?.to_string().chars().map(|c| Thunk::Val(V::Char(c))).collect()),
            _ => return Err(format!("unknown primitive {p}")),
        })
    }

    fn show_char(c: char, quote: char) -> String {
        match c {
            '\n' => "\\n".into(),
            '\t' => "\\t".into(),
            '\\' => "\\\\".into(),
            c if c == quote => format!("\\{c}"),
            c => c.to_string(),
        }
    }

    /// Fully evaluates and prints a value; `nested` asks for parentheses
    /// around applications and negative numbers.
    fn show(&self, v: V<'a>, nested: bool) -> R<String> {
        let paren = |s: String| if nested { format!("({s})") } else { s };
        Ok(match v {
            V::Int(i) if i < 0 => paren(i.to_string()),
            V::Int(i) => i.to_string(),
            V::Char(c) => format!("'{}'", Self::show_char(c, '\'')),
            V::Con(c, args) if c == ":" => {
                let mut items = Vec::new();
                let mut cur = V::Con(c, args);
                loop {
                    match cur {
                        V::Con(c, args) if c == ":" => {
                            items.push(self.whnf(&args[0])?);
                            cur = self.whnf(&args[1])?;
                        }
                        _ => break,
                    }
                }
                if items.iter().all(|v| matches!(v, V::Char(_))) {
                    let s: String = items
                        .iter()
                        .map(|v| match v {
                            V::Char(c) => Self::show_char(*c, '"'),
                            _ => unreachable!(),
                        })
                        .collect();
                    format!("\"{s}\"")
                } else {
                    let shown = items.into_iter().map(|v| self.show(v, false)).collect::<R<Vec<_>>>()?;
                    format!("[{}]", shown.join(", "))
                }
            }
            V::Con(c, args) if c.starts_with("(,") => {
                let shown = args.iter().map(|a| self.show(self.whnf(a)?, false)).collect::<R<Vec<_>>>()?;
                format!("({})", shown.join(", "))
            }
            V::Con(c, args) if args.is_empty() => c,
            V::Con(c, args) => {
                let mut s = c;
                for a in &args {
                    s.push(' ');
                    s.push_str(&self.show(self.whnf(a)?, true)?);
                }
                paren(s)
            }
            V::Fun(..) => "<function>".into(),
        })
    }
}

enum MatchItem<'a> {
    Pat(&'a Pattern),
    Char(char),
}
