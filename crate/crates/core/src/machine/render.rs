//! Term view of the machine graph.

use std::collections::HashMap;

use super::{Env, Head, Machine, NodeId, NodeState, Pending, Value, SHADOW};
use crate::desugar::{CExpr, CPat, Lambda, E};
use crate::syntax::escape_char;
use crate::typecheck::is_tuple_con;

#[derive(Clone, Debug)]
pub(crate) enum Term {
    /// Never needs parentheses.
    Atom(String),
    /// Needs parentheses in any nested position.
    Text(String),
    App(Box<Term>, Vec<Term>),
    Op(String, Box<Term>, Box<Term>),
    /// `h1 : (h2 : (... : tail))` kept flat.
    Cons(Vec<Term>, Box<Term>),
}

impl Term {
    pub(crate) fn show(&self, nested: bool) -> String {
        let s = match self {
            Term::Atom(s) => return s.clone(),
            Term::Text(s) => s.clone(),
            Term::App(h, args) => {
                let mut s = match **h {
                    Term::Op(..) | Term::Cons(..) | Term::Text(_) => format!("({})", h.show(false)),
                    _ => h.show(true),
                };
                for a in args {
                    s.push(' ');
                    s.push_str(&a.show(true));
                }
                s
            }
            Term::Op(op, l, r) => format!("{} {op} {}", l.show(true), r.show(true)),
            Term::Cons(heads, tail) => {
                let mut s = String::new();
                for (i, h) in heads.iter().enumerate() {
                    if i > 0 {
                        s.push('(');
                    }
                    s.push_str(&h.show(true));
                    s.push_str(" : ");
                }
                s.push_str(&tail.show(true));
                s.push_str(&")".repeat(heads.len() - 1));
                s
            }
        };
        if nested {
            format!("({s})")
        } else {
            s
        }
    }
}

pub(crate) enum Callee {
    Name(String),
    Term(Term),
    /// Right section: operator name and right operand.
    Section(String, Term),
}

fn is_symbolic(name: &str) -> bool {
    name.chars().next().is_some_and(|c| !c.is_alphanumeric() && c != '_' && c != '(' && c != '[' && c != '\'')
}

fn op_name(name: &str) -> String {
    if is_symbolic(name) {
        name.to_string()
    } else {
        format!("`{name}`")
    }
}

fn cons(h: Term, t: Term) -> Term {
    match t {
        Term::Cons(mut heads, tail) => {
            heads.insert(0, h);
            Term::Cons(heads, tail)
        }
        t => Term::Cons(vec![h], Box::new(t)),
    }
}

fn int_term(i: i64) -> Term {
    if i < 0 {
        Term::Text(i.to_string())
    } else {
        Term::Atom(i.to_string())
    }
}

fn char_lit(c: char) -> String {
    format!("'{}'", escape_char(c, '\''))
}

fn pat_vars(p: &CPat, out: &mut Vec<String>) {
    match p {
        CPat::Var(v) => out.push(v.to_string()),
        CPat::Con(_, ps) => ps.iter().for_each(|p| pat_vars(p, out)),
        CPat::Bang(p) => pat_vars(p, out),
        _ => {}
    }
}

pub(crate) fn pat_text(p: &CPat, nested: bool) -> String {
    match p {
        CPat::Var(v) => v.to_string(),
        CPat::Wild => "_".into(),
        CPat::Int(i) if *i < 0 && nested => format!("({i})"),
        CPat::Int(i) => i.to_string(),
        CPat::Char(c) => char_lit(*c),
        CPat::Bang(p) => format!("!{}", pat_text(p, true)),
        CPat::Con(c, ps) if &**c == ":" && ps.len() == 2 => {
            format!("({}:{})", pat_text(&ps[0], true), pat_text(&ps[1], true))
        }
        CPat::Con(c, ps) if is_tuple_con(c) => {
            format!("({})", ps.iter().map(|p| pat_text(p, false)).collect::<Vec<_>>().join(", "))
        }
        CPat::Con(c, ps) if ps.is_empty() => c.to_string(),
        CPat::Con(c, ps) => {
            let s = format!("{c} {}", ps.iter().map(|p| pat_text(p, true)).collect::<Vec<_>>().join(" "));
            if nested {
                format!("({s})")
            } else {
                s
            }
        }
    }
}

pub(crate) struct Renderer<'a> {
    m: &'a Machine,
    holes: HashMap<NodeId, Term>,
    path: HashMap<NodeId, usize>,
    allowance: usize,
    final_mode: bool,
}

impl<'a> Renderer<'a> {
    pub(crate) fn new(m: &'a Machine, allowance: usize, final_mode: bool) -> Renderer<'a> {
        Renderer { m, holes: HashMap::new(), path: HashMap::new(), allowance, final_mode }
    }

    pub(crate) fn add_hole(&mut self, n: NodeId, t: Term) {
        self.holes.insert(n, t);
    }

    fn hole(&self, n: NodeId) -> Option<Term> {
        self.holes.get(&n).or_else(|| self.holes.get(&self.m.resolve(n))).cloned()
    }

    fn enter_path(&mut self, n: NodeId) {
        *self.path.entry(n).or_default() += 1;
    }

    fn leave_path(&mut self, n: NodeId) {
        if let Some(c) = self.path.get_mut(&n) {
            *c -= 1;
            if *c == 0 {
                self.path.remove(&n);
            }
        }
    }

    fn global_name(&self, g: usize) -> String {
        self.m.core().globals[g].name.to_string()
    }

    pub(crate) fn node(&mut self, n: NodeId) -> Term {
        if let Some(t) = self.hole(n) {
            return t;
        }
        let r = self.m.resolve(n);
        let node = self.m.node(r);
        let is_value = matches!(node.state, NodeState::Value(_));
        if self.path.contains_key(&r) {
            if node.name.is_some() && is_value && self.allowance > 0 {
                self.allowance -= 1;
            } else {
                return Term::Atom(node.name.as_deref().unwrap_or("...").to_string());
            }
        }
        match &node.state {
            NodeState::Thunk(_, _) | NodeState::Evaluating(_) if node.name.is_some() => {
                Term::Atom(node.name.as_deref().unwrap_or_default().to_string())
            }
            NodeState::Caf(g) | NodeState::Evaluating(Pending::Caf(g)) => Term::Atom(self.global_name(*g)),
            NodeState::Thunk(e, env) | NodeState::Evaluating(Pending::Thunk(e, env)) => {
                self.enter_path(r);
                let t = self.expr(e, env);
                self.leave_path(r);
                t
            }
            NodeState::Value(v) => {
                self.enter_path(r);
                let t = self.value(r, v);
                self.leave_path(r);
                t
            }
            NodeState::Ind(_) => unreachable!("resolved node is an indirection"),
        }
    }

    fn value(&mut self, r: NodeId, v: &Value) -> Term {
        match v {
            Value::Int(i) => int_term(*i),
            Value::Char(c) => Term::Atom(char_lit(*c)),
            Value::Con { name, args, .. } => {
                if &**name == ":" && args.len() == 2 {
                    self.list_value(r, args[0], args[1])
                } else if is_tuple_con(name) {
                    let items: Vec<String> = args.iter().map(|a| self.node(*a).show(false)).collect();
                    Term::Atom(format!("({})", items.join(", ")))
                } else if args.is_empty() {
                    Term::Atom(name.to_string())
                } else {
                    let args = args.iter().map(|a| self.node(*a)).collect();
                    Term::App(Box::new(Term::Atom(name.to_string())), args)
                }
            }
            Value::Fun { head, args } => {
                let (callee, mut pre) = self.head_callee(head);
                pre.extend(args.iter().map(|a| self.node(*a)));
                self.call(callee, pre)
            }
        }
    }

    /// Cells of a list literal starting at `r`, if the whole spine renders
    /// with brackets.
    fn sugared_spine(&self, r: NodeId) -> Option<Vec<NodeId>> {
        let mut elems = Vec::new();
        let mut seen = Vec::new();
        let mut cur = r;
        loop {
            if cur != r && self.hole(cur).is_some() {
                return None;
            }
            let c = self.m.resolve(cur);
            if seen.contains(&c) || (c != r && self.path.contains_key(&c)) {
                return None;
            }
            seen.push(c);
            match &self.m.node(c).state {
                NodeState::Value(Value::Con { name, args, sugar }) if &**name == ":" && (*sugar || self.final_mode) => {
                    elems.push(args[0]);
                    cur = args[1];
                }
                NodeState::Value(Value::Con { name, .. }) if &**name == "[]" => return Some(elems),
                _ => return None,
            }
        }
    }

    fn list_value(&mut self, r: NodeId, head: NodeId, tail: NodeId) -> Term {
        if let Some(elems) = self.sugared_spine(r) {
            let chars: Option<String> = elems
                .iter()
                .map(|e| {
                    if self.hole(*e).is_some() {
                        return None;
                    }
                    match self.m.node(self.m.resolve(*e)).state {
                        NodeState::Value(Value::Char(c)) => Some(escape_char(c, '"')),
                        _ => None,
                    }
                })
                .collect();
            if let Some(s) = chars {
                return Term::Atom(format!("\"{s}\""));
            }
            let items: Vec<String> = elems.iter().map(|e| self.node(*e).show(false)).collect();
            return Term::Atom(format!("[{}]", items.join(", ")));
        }
        let mut heads = vec![self.node(head)];
        let mut entered = Vec::new();
        let mut cur = tail;
        let last = loop {
            if self.hole(cur).is_some() {
                break self.node(cur);
            }
            let c = self.m.resolve(cur);
            let node = self.m.node(c);
            let NodeState::Value(Value::Con { name, args, .. }) = &node.state else { break self.node(cur) };
            if &**name != ":" || args.len() != 2 || self.sugared_spine(c).is_some() {
                break self.node(cur);
            }
            if self.path.contains_key(&c) {
                if node.name.is_some() && self.allowance > 0 {
                    self.allowance -= 1;
                } else {
                    break self.node(cur);
                }
            }
            let (h, t) = (args[0], args[1]);
            self.enter_path(c);
            entered.push(c);
            heads.push(self.node(h));
            cur = t;
        };
        for c in entered {
            self.leave_path(c);
        }
        Term::Cons(heads, Box::new(last))
    }

    fn head_callee(&mut self, head: &Head) -> (Callee, Vec<Term>) {
        match head {
            Head::Global(g) => (Callee::Name(self.global_name(*g)), vec![]),
            Head::Con(c, _) => (Callee::Name(c.to_string()), vec![]),
            Head::Closure(lam, env) => match &lam.name {
                Some(n) => (Callee::Name(n.to_string()), vec![]),
                None => (Callee::Term(Term::Text(self.lambda_text(lam, env))), vec![]),
            },
            Head::RSection(op, a) => {
                let name = self.node_op_name(*op);
                let a = self.node(*a);
                (Callee::Section(name, a), vec![])
            }
        }
    }

    fn node_op_name(&mut self, op: NodeId) -> String {
        match self.node_callee(op) {
            (Callee::Name(n), pre) if pre.is_empty() => op_name(&n),
            (c, pre) => format!("`{}`", self.call(c, pre).show(true)),
        }
    }

    /// How a node in function position renders, with arguments it already
    /// carries.
    fn node_callee(&mut self, n: NodeId) -> (Callee, Vec<Term>) {
        if let Some(t) = self.hole(n) {
            return (Callee::Term(t), vec![]);
        }
        let r = self.m.resolve(n);
        if let NodeState::Value(Value::Fun { head, args }) = &self.m.node(r).state {
            if !self.path.contains_key(&r) {
                self.enter_path(r);
                let (callee, mut pre) = self.head_callee(head);
                pre.extend(args.iter().map(|a| self.node(*a)));
                self.leave_path(r);
                return (callee, pre);
            }
        }
        (Callee::Term(self.node(n)), vec![])
    }

    fn expr_callee(&mut self, e: &E, env: &Env) -> (Callee, Vec<Term>) {
        match &**e {
            CExpr::Global(g) => (Callee::Name(self.global_name(*g)), vec![]),
            CExpr::ConFun(c, _) => (Callee::Name(c.to_string()), vec![]),
            CExpr::Local(x) => match env.lookup(x) {
                Some(n) if n != SHADOW => self.node_callee(n),
                _ => (Callee::Name(x.to_string()), vec![]),
            },
            _ => (Callee::Term(self.expr(e, env)), vec![]),
        }
    }

    pub(crate) fn call(&mut self, callee: Callee, args: Vec<Term>) -> Term {
        let mut args = args.into_iter();
        match callee {
            Callee::Name(n) if is_symbolic(&n) => match (args.next(), args.next()) {
                (None, _) => Term::Atom(format!("({n})")),
                (Some(a), None) => Term::Atom(format!("({} {n})", a.show(true))),
                (Some(a), Some(b)) if n == ":" => app(cons(a, b), args.collect()),
                (Some(a), Some(b)) => app(Term::Op(n, Box::new(a), Box::new(b)), args.collect()),
            },
            Callee::Name(n) => app(Term::Atom(n), args.collect()),
            Callee::Term(t) => app(t, args.collect()),
            Callee::Section(op, b) => match args.next() {
                None => Term::Atom(format!("({op} {})", b.show(true))),
                Some(a) => app(Term::Op(op, Box::new(a), Box::new(b)), args.collect()),
            },
        }
    }

    fn shadow(env: &Env, names: impl IntoIterator<Item = String>) -> Env {
        names.into_iter().fold(env.clone(), |e, n| e.bind(n.into(), SHADOW))
    }

    fn lambda_text(&mut self, lam: &Lambda, env: &Env) -> String {
        let Some(alt) = lam.matching.alts.first() else { return "\\ -> ?".into() };
        let mut vars = Vec::new();
        alt.pats.iter().for_each(|p| pat_vars(p, &mut vars));
        let inner = Self::shadow(env, vars);
        let pats: Vec<String> = alt.pats.iter().map(|p| pat_text(p, true)).collect();
        let body = match &alt.rhs {
            crate::desugar::CRhs::Plain(b) => self.expr(b, &inner).show(false),
            crate::desugar::CRhs::Guarded(_) => alt.text.to_string(),
        };
        format!("\\{} -> {body}", pats.join(" "))
    }

    pub(crate) fn expr(&mut self, e: &E, env: &Env) -> Term {
        match &**e {
            CExpr::Local(x) => match env.lookup(x) {
                Some(n) if n != SHADOW => self.node(n),
                _ => Term::Atom(x.to_string()),
            },
            CExpr::Global(g) => self.call(Callee::Name(self.global_name(*g)), vec![]),
            CExpr::Int(i) => int_term(*i),
            CExpr::Char(c) => Term::Atom(char_lit(*c)),
            CExpr::Con { name, args, .. } => {
                if &**name == ":" && args.len() == 2 {
                    self.list_expr(e, env)
                } else if is_tuple_con(name) {
                    let items: Vec<String> = args.iter().map(|a| self.expr(a, env).show(false)).collect();
                    Term::Atom(format!("({})", items.join(", ")))
                } else if args.is_empty() {
                    Term::Atom(name.to_string())
                } else {
                    let args = args.iter().map(|a| self.expr(a, env)).collect();
                    Term::App(Box::new(Term::Atom(name.to_string())), args)
                }
            }
            CExpr::ConFun(c, _) => self.call(Callee::Name(c.to_string()), vec![]),
            CExpr::App(h, args) => {
                let (callee, mut pre) = self.expr_callee(h, env);
                pre.extend(args.iter().map(|a| self.expr(a, env)));
                self.call(callee, pre)
            }
            CExpr::Lam(l) => Term::Text(self.lambda_text(l, env)),
            CExpr::Let(binds, body) => {
                let inner = Self::shadow(env, binds.iter().map(|b| b.name.to_string()));
                let texts: Vec<&str> = binds.iter().map(|b| &*b.text).collect();
                Term::Text(format!("let {} in {}", texts.join("; "), self.expr(body, &inner).show(false)))
            }
            CExpr::Case(s, m) => {
                let texts: Vec<&str> = m.alts.iter().map(|a| &*a.text).collect();
                Term::Text(format!("case {} of {}", self.expr(s, env).show(false), texts.join("; ")))
            }
            CExpr::If(c, t, f) => Term::Text(format!(
                "if {} then {} else {}",
                self.expr(c, env).show(false),
                self.expr(t, env).show(false),
                self.expr(f, env).show(false)
            )),
            CExpr::RSection(op, a) => {
                let name = match self.expr_callee(op, env) {
                    (Callee::Name(n), pre) if pre.is_empty() => op_name(&n),
                    (c, pre) => format!("`{}`", self.call(c, pre).show(true)),
                };
                let a = self.expr(a, env);
                self.call(Callee::Section(name, a), vec![])
            }
            CExpr::Guarded(m) => Term::Atom(m.name.to_string()),
        }
    }

    fn list_expr(&mut self, e: &E, env: &Env) -> Term {
        let mut elems = Vec::new();
        let mut cur = e;
        let sugared = loop {
            match &**cur {
                CExpr::Con { name, args, sugar: true } if &**name == ":" => {
                    elems.push(&args[0]);
                    cur = &args[1];
                }
                CExpr::Con { name, sugar: true, .. } if &**name == "[]" => break true,
                _ => break false,
            }
        };
        if sugared {
            if let Some(s) = elems
                .iter()
                .map(|x| match &***x {
                    CExpr::Char(c) => Some(escape_char(*c, '"')),
                    _ => None,
                })
                .collect::<Option<String>>()
            {
                return Term::Atom(format!("\"{s}\""));
            }
            let items: Vec<String> = elems.iter().map(|x| self.expr(x, env).show(false)).collect();
            return Term::Atom(format!("[{}]", items.join(", ")));
        }
        let CExpr::Con { args, .. } = &**e else { unreachable!("cons cell") };
        let h = self.expr(&args[0], env);
        let t = self.expr(&args[1], env);
        cons(h, t)
    }
}

fn app(t: Term, args: Vec<Term>) -> Term {
    if args.is_empty() {
        return t;
    }
    match t {
        Term::App(h, mut first) => {
            first.extend(args);
            Term::App(h, first)
        }
        t => Term::App(Box::new(t), args),
    }
}
