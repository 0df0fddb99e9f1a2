use std::collections::{HashMap, HashSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::types::canonical_all;
use super::{AliasInfo, ConInfo, DataInfo, Scheme, Type, TypeEnv, TypeError, TypeErrorKind};
use crate::syntax::*;

enum Tv {
    Unbound(u32),
    Link(Type),
}

struct Checker {
    env: TypeEnv,
    vars: Vec<Tv>,
    level: u32,
    locals: Vec<(String, Scheme)>,
    context: String,
}

type TResult<T> = Result<T, TypeError>;

/// Type checks a program against `base`, returning `base` extended (and
/// shadowed) by the program's types, constructors and top-level bindings.
pub fn infer_program(prog: &Program, base: &TypeEnv) -> TResult<TypeEnv> {
    let mut c = Checker::new(base.clone());
    c.declare_types(prog)?;
    c.check_bindings(prog)?;
    Ok(c.env)
}

/// Principal type of a goal expression.
pub fn infer_expr(e: &Expr, env: &TypeEnv) -> TResult<Scheme> {
    let mut c = Checker::new(env.clone());
    c.context = "expression".into();
    c.level = 1;
    let t = c.infer(e)?;
    c.level = 0;
    Ok(c.generalize(&t))
}

fn free_vars(e: &Expr, out: &mut HashSet<String>) {
    match &e.kind {
        ExprKind::Var(v) => {
            out.insert(v.clone());
        }
        ExprKind::BinOp(op, l, r) => {
            out.insert(op.clone());
            free_vars(l, out);
            free_vars(r, out);
        }
        ExprKind::LeftSection(x, op) | ExprKind::RightSection(op, x) => {
            out.insert(op.clone());
            free_vars(x, out);
        }
        ExprKind::OpRef(op) => {
            out.insert(op.clone());
        }
        ExprKind::App(a, b) => {
            free_vars(a, out);
            free_vars(b, out);
        }
        ExprKind::Neg(a) | ExprKind::EnumFrom(a) | ExprKind::Lambda(_, a) => free_vars(a, out),
        ExprKind::EnumFromTo(a, b) | ExprKind::EnumFromThen(a, b) => {
            free_vars(a, out);
            free_vars(b, out);
        }
        ExprKind::If(a, b, c) | ExprKind::EnumFromThenTo(a, b, c) => {
            free_vars(a, out);
            free_vars(b, out);
            free_vars(c, out);
        }
        ExprKind::Case(s, alts) => {
            free_vars(s, out);
            for a in alts {
                rhs_free_vars(&a.rhs, out);
            }
        }
        ExprKind::Let(groups, body) => {
            for g in groups {
                group_free_vars(g, out);
            }
            free_vars(body, out);
        }
        ExprKind::Tuple(es) | ExprKind::List(es) => es.iter().for_each(|x| free_vars(x, out)),
        ExprKind::Comprehension { head, quals, .. } => {
            free_vars(head, out);
            for q in quals {
                match q {
                    Qualifier::Generator(_, x) | Qualifier::Guard(x) => free_vars(x, out),
                    Qualifier::Let(gs) => gs.iter().for_each(|g| group_free_vars(g, out)),
                }
            }
        }
        ExprKind::Con(_) | ExprKind::Int(_) | ExprKind::Char(_) | ExprKind::Str(_) => {}
    }
}

fn rhs_free_vars(rhs: &Rhs, out: &mut HashSet<String>) {
    match rhs {
        Rhs::Plain(e) => free_vars(e, out),
        Rhs::Guarded(gs) => {
            for g in gs {
                free_vars(&g.guard, out);
                free_vars(&g.body, out);
            }
        }
    }
}

/// Over-approximates the names a group mentions; shadowing is ignored,
/// which can only add dependency edges.
fn group_free_vars(g: &FunGroup, out: &mut HashSet<String>) {
    for eq in &g.equations {
        rhs_free_vars(&eq.rhs, out);
        for w in &eq.where_binds {
            group_free_vars(w, out);
        }
    }
}

/// Splits groups into strongly connected components, dependencies first.
fn sccs<'a>(groups: &[&'a FunGroup]) -> Vec<Vec<&'a FunGroup>> {
    let mut graph = DiGraph::<usize, ()>::new();
    let nodes: Vec<_> = (0..groups.len()).map(|i| graph.add_node(i)).collect();
    let index: HashMap<&str, usize> = groups.iter().enumerate().map(|(i, g)| (g.name.as_str(), i)).collect();
    for (i, g) in groups.iter().enumerate() {
        let mut fv = HashSet::new();
        group_free_vars(g, &mut fv);
        for name in fv {
            if let Some(&j) = index.get(name.as_str()) {
                graph.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    tarjan_scc(&graph)
        .into_iter()
        .map(|comp| {
            let mut comp: Vec<usize> = comp.into_iter().map(|n| graph[n]).collect();
            comp.sort_unstable();
            comp.into_iter().map(|i| groups[i]).collect()
        })
        .collect()
}

impl Checker {
    fn new(env: TypeEnv) -> Checker {
        Checker { env, vars: Vec::new(), level: 0, locals: Vec::new(), context: String::new() }
    }

    fn error(&self, span: Span, message: impl Into<String>) -> TypeError {
        TypeError {
            span: Some(span),
            context: self.context.clone(),
            message: message.into(),
            kind: TypeErrorKind::General,
        }
    }

    // ---- declarations ----

    fn declare_types(&mut self, prog: &Program) -> TResult<()> {
        let mut seen_cons: HashSet<String> = HashSet::new();
        for d in prog.data_decls() {
            self.context = format!("declaration of {}", d.name);
            if prog.data_decls().filter(|x| x.name == d.name).count() > 1
                || prog.aliases().any(|a| a.name == d.name)
            {
                return Err(self.error(d.span, format!("multiple declarations of type {}", d.name)));
            }
            check_distinct(&d.params).map_err(|m| self.error(d.span, m))?;
            self.env.aliases.remove(&d.name);
            self.env.types.insert(
                d.name.clone(),
                DataInfo { arity: d.params.len(), constructors: d.constructors.iter().map(|c| c.name.clone()).collect() },
            );
        }
        for a in prog.aliases() {
            self.context = format!("declaration of {}", a.name);
            if prog.aliases().filter(|x| x.name == a.name).count() > 1 {
                return Err(self.error(a.span, format!("multiple declarations of type {}", a.name)));
            }
            check_distinct(&a.params).map_err(|m| self.error(a.span, m))?;
            self.env.types.remove(&a.name);
            self.env.aliases.insert(a.name.clone(), AliasInfo { params: a.params.clone(), ty: a.ty.clone() });
        }
        for a in prog.aliases() {
            self.context = format!("declaration of {}", a.name);
            let mut vars = a.params.clone();
            self.env.convert(&a.ty, &mut vars, false, 0).map_err(|m| self.error(a.span, m))?;
        }
        for d in prog.data_decls() {
            self.context = format!("declaration of {}", d.name);
            let result = Type::Con(d.name.clone(), (0..d.params.len() as u32).map(Type::Gen).collect());
            for (tag, c) in d.constructors.iter().enumerate() {
                if !seen_cons.insert(c.name.clone()) {
                    return Err(self.error(c.span, format!("multiple declarations of constructor {}", c.name)));
                }
                if let Some(old) = self.env.constructors.get(&c.name) {
                    if !prog.data_decls().any(|x| x.name == old.type_name) {
                        return Err(self.error(c.span, format!("constructor {} is already defined", c.name)));
                    }
                }
                let mut vars = d.params.clone();
                let fields: Vec<Type> = c
                    .args
                    .iter()
                    .map(|t| self.env.convert(t, &mut vars, false, 0))
                    .collect::<Result<_, _>>()
                    .map_err(|m| self.error(c.span, m))?;
                let info = ConInfo {
                    type_name: d.name.clone(),
                    tag,
                    arity: fields.len(),
                    scheme: Scheme { arity: d.params.len() as u32, ty: Type::arrows(fields, result.clone()) },
                };
                self.env.constructors.insert(c.name.clone(), info);
            }
        }
        Ok(())
    }

    fn check_bindings(&mut self, prog: &Program) -> TResult<()> {
        let groups: Vec<&FunGroup> = prog.functions().collect();
        let mut sigs: HashMap<String, (Scheme, Vec<String>, Span)> = HashMap::new();
        for s in prog.signatures() {
            for name in &s.names {
                self.context = format!("definition of {name}");
                if sigs.contains_key(name) {
                    return Err(self.error(s.span, format!("duplicate type signature for {name}")));
                }
                if !groups.iter().any(|g| &g.name == name) {
                    return Err(self.error(s.span, format!("type signature for {name} lacks an accompanying binding")));
                }
                let (scheme, names) = self.env.scheme_of(&s.ty).map_err(|m| self.error(s.span, m))?;
                sigs.insert(name.clone(), (scheme, names, s.span));
            }
        }
        for g in &groups {
            self.env.values.remove(&g.name);
        }
        for (name, (scheme, _, _)) in &sigs {
            self.env.values.insert(name.clone(), scheme.clone());
        }
        let unsigned: Vec<&FunGroup> = groups.iter().copied().filter(|g| !sigs.contains_key(&g.name)).collect();
        for comp in sccs(&unsigned) {
            self.context = format!("definition of {}", comp[0].name);
            for (name, scheme) in self.infer_block(&comp)? {
                self.env.values.insert(name, scheme);
            }
        }
        for g in groups.iter().filter(|g| sigs.contains_key(&g.name)) {
            self.context = format!("definition of {}", g.name);
            let (scheme, names, _) = &sigs[&g.name];
            self.level = 1;
            let t = self.infer_group(g)?;
            self.level = 0;
            let skolems: Vec<Type> = names.iter().map(|n| Type::con(n)).collect();
            let expected = super::substitute_gens(&scheme.ty, &skolems);
            self.unify(&t, &expected, g.span)?;
        }
        Ok(())
    }

    /// Infers a recursive block of bindings and generalizes it.
    fn infer_block(&mut self, groups: &[&FunGroup]) -> TResult<Vec<(String, Scheme)>> {
        self.level += 1;
        let mark = self.locals.len();
        let tvs: Vec<Type> = groups.iter().map(|_| self.fresh()).collect();
        for (g, t) in groups.iter().zip(&tvs) {
            self.locals.push((g.name.clone(), Scheme::mono(t.clone())));
        }
        let mut result = Ok(());
        for (g, t) in groups.iter().zip(&tvs) {
            result = self.infer_group(g).and_then(|ty| self.unify(&ty, t, g.span));
            if result.is_err() {
                break;
            }
        }
        self.locals.truncate(mark);
        self.level -= 1;
        result?;
        Ok(groups.iter().zip(&tvs).map(|(g, t)| (g.name.clone(), self.generalize(t))).collect())
    }

    fn infer_group(&mut self, g: &FunGroup) -> TResult<Type> {
        let t = self.fresh();
        for eq in &g.equations {
            let te = self.infer_equation(eq)?;
            self.unify(&te, &t, eq.span)?;
        }
        Ok(t)
    }

    fn infer_equation(&mut self, eq: &Equation) -> TResult<Type> {
        let mark = self.locals.len();
        let mut args = Vec::new();
        for p in &eq.patterns {
            args.push(self.infer_pattern(p)?);
        }
        self.bind_block(&eq.where_binds)?;
        let res = self.infer_rhs(&eq.rhs)?;
        self.locals.truncate(mark);
        Ok(Type::arrows(args, res))
    }

    /// Pushes a generalized let/where block onto the local scope.
    fn bind_block(&mut self, groups: &[FunGroup]) -> TResult<()> {
        let refs: Vec<&FunGroup> = groups.iter().collect();
        for comp in sccs(&refs) {
            for (name, scheme) in self.infer_block(&comp)? {
                self.locals.push((name, scheme));
            }
        }
        Ok(())
    }

    fn infer_rhs(&mut self, rhs: &Rhs) -> TResult<Type> {
        match rhs {
            Rhs::Plain(e) => self.infer(e),
            Rhs::Guarded(gs) => {
                let res = self.fresh();
                for g in gs {
                    let tg = self.infer(&g.guard)?;
                    self.unify(&tg, &Type::bool(), g.guard.span)?;
                    let tb = self.infer(&g.body)?;
                    self.unify(&tb, &res, g.body.span)?;
                }
                Ok(res)
            }
        }
    }

    // ---- patterns ----

    fn infer_pattern(&mut self, p: &Pattern) -> TResult<Type> {
        Ok(match &p.kind {
            PatternKind::Var(v) => {
                let t = self.fresh();
                self.locals.push((v.clone(), Scheme::mono(t.clone())));
                t
            }
            PatternKind::Wildcard => self.fresh(),
            PatternKind::Int(_) => Type::int(),
            PatternKind::Char(_) => Type::char(),
            PatternKind::Str(_) => Type::list(Type::char()),
            PatternKind::Bang(inner) => self.infer_pattern(inner)?,
            PatternKind::Con(c, args) => {
                let info = self.constructor(c, p.span)?;
                if info.arity != args.len() {
                    return Err(self.error(
                        p.span,
                        format!("constructor {c} should have {} argument(s) but has {}", info.arity, args.len()),
                    ));
                }
                let mut t = self.instantiate(&info.scheme);
                for a in args {
                    let ta = self.infer_pattern(a)?;
                    let Type::Fun(param, res) = t else { unreachable!("constructor arity") };
                    self.unify(&ta, &param, a.span)?;
                    t = *res;
                }
                t
            }
            PatternKind::Tuple(ps) => {
                let ts = ps.iter().map(|p| self.infer_pattern(p)).collect::<TResult<Vec<_>>>()?;
                Type::tuple(ts)
            }
            PatternKind::List(ps) => {
                let elem = self.fresh();
                for q in ps {
                    let t = self.infer_pattern(q)?;
                    self.unify(&t, &elem, q.span)?;
                }
                Type::list(elem)
            }
            PatternKind::Cons(h, t) => {
                let th = self.infer_pattern(h)?;
                let tt = self.infer_pattern(t)?;
                let lt = Type::list(th);
                self.unify(&tt, &lt, t.span)?;
                lt
            }
        })
    }

    fn constructor(&self, c: &str, span: Span) -> TResult<ConInfo> {
        self.env.constructors.get(c).cloned().ok_or_else(|| self.error(span, format!("unknown constructor {c}")))
    }

    // ---- expressions ----

    fn lookup(&mut self, name: &str, span: Span) -> TResult<Type> {
        if let Some((_, s)) = self.locals.iter().rev().find(|(n, _)| n == name) {
            let s = s.clone();
            return Ok(self.instantiate(&s));
        }
        if name == ":" {
            let info = self.constructor(":", span)?;
            return Ok(self.instantiate(&info.scheme));
        }
        match self.env.values.get(name) {
            Some(s) => {
                let s = s.clone();
                Ok(self.instantiate(&s))
            }
            None => Err(self.error(span, format!("variable not in scope: {name}"))),
        }
    }

    fn apply(&mut self, tf: Type, ta: Type, arg_span: Span) -> TResult<Type> {
        match self.prune(&tf) {
            Type::Fun(p, r) => {
                self.unify(&ta, &p, arg_span)?;
                Ok(*r)
            }
            other => {
                let r = self.fresh();
                self.unify(&other, &Type::fun(ta, r.clone()), arg_span)?;
                Ok(r)
            }
        }
    }

    fn infer(&mut self, e: &Expr) -> TResult<Type> {
        Ok(match &e.kind {
            ExprKind::Var(v) => self.lookup(v, e.span)?,
            ExprKind::Con(c) => {
                let info = self.constructor(c, e.span)?;
                self.instantiate(&info.scheme)
            }
            ExprKind::Int(_) => Type::int(),
            ExprKind::Char(_) => Type::char(),
            ExprKind::Str(_) => Type::list(Type::char()),
            ExprKind::App(f, a) => {
                let tf = self.infer(f)?;
                let ta = self.infer(a)?;
                self.apply(tf, ta, a.span)?
            }
            ExprKind::BinOp(op, l, r) => {
                let top = self.lookup(op, e.span)?;
                let tl = self.infer(l)?;
                let t1 = self.apply(top, tl, l.span)?;
                let tr = self.infer(r)?;
                self.apply(t1, tr, r.span)?
            }
            ExprKind::Neg(x) => {
                let t = self.infer(x)?;
                self.unify(&t, &Type::int(), x.span)?;
                Type::int()
            }
            ExprKind::Lambda(ps, body) => {
                let mark = self.locals.len();
                let mut args = Vec::new();
                for p in ps {
                    args.push(self.infer_pattern(p)?);
                }
                let res = self.infer(body);
                self.locals.truncate(mark);
                Type::arrows(args, res?)
            }
            ExprKind::LeftSection(l, op) => {
                let top = self.lookup(op, e.span)?;
                let tl = self.infer(l)?;
                self.apply(top, tl, l.span)?
            }
            ExprKind::RightSection(op, r) => {
                let top = self.lookup(op, e.span)?;
                let (a, b, c) = (self.fresh(), self.fresh(), self.fresh());
                self.unify(&top, &Type::arrows(vec![a.clone(), b.clone()], c.clone()), e.span)?;
                let tr = self.infer(r)?;
                self.unify(&tr, &b, r.span)?;
                Type::fun(a, c)
            }
            ExprKind::OpRef(op) => self.lookup(op, e.span)?,
            ExprKind::If(c, t, f) => {
                let tc = self.infer(c)?;
                self.unify(&tc, &Type::bool(), c.span)?;
                let tt = self.infer(t)?;
                let tf = self.infer(f)?;
                self.unify(&tf, &tt, f.span)?;
                tt
            }
            ExprKind::Case(scrut, alts) => {
                let ts = self.infer(scrut)?;
                let res = self.fresh();
                for alt in alts {
                    let mark = self.locals.len();
                    let tp = self.infer_pattern(&alt.pattern)?;
                    self.unify(&tp, &ts, alt.pattern.span)?;
                    let tr = self.infer_rhs(&alt.rhs)?;
                    self.unify(&tr, &res, alt.span)?;
                    self.locals.truncate(mark);
                }
                res
            }
            ExprKind::Let(groups, body) => {
                let mark = self.locals.len();
                self.bind_block(groups)?;
                let t = self.infer(body);
                self.locals.truncate(mark);
                t?
            }
            ExprKind::Tuple(es) => {
                let ts = es.iter().map(|x| self.infer(x)).collect::<TResult<Vec<_>>>()?;
                Type::tuple(ts)
            }
            ExprKind::List(es) => {
                let elem = self.fresh();
                for x in es {
                    let t = self.infer(x)?;
                    self.unify(&t, &elem, x.span)?;
                }
                Type::list(elem)
            }
            ExprKind::EnumFrom(a) => {
                self.expect_int(a)?;
                Type::list(Type::int())
            }
            ExprKind::EnumFromTo(a, b) | ExprKind::EnumFromThen(a, b) => {
                self.expect_int(a)?;
                self.expect_int(b)?;
                Type::list(Type::int())
            }
            ExprKind::EnumFromThenTo(a, b, c) => {
                self.expect_int(a)?;
                self.expect_int(b)?;
                self.expect_int(c)?;
                Type::list(Type::int())
            }
            ExprKind::Comprehension { text, .. } => {
                return Err(TypeError {
                    span: Some(e.span),
                    context: self.context.clone(),
                    message: "list comprehensions are not supported".into(),
                    kind: TypeErrorKind::Comprehension { text: text.clone() },
                })
            }
        })
    }

    fn expect_int(&mut self, e: &Expr) -> TResult<()> {
        let t = self.infer(e)?;
        self.unify(&t, &Type::int(), e.span)
    }

    // ---- unification ----

    fn fresh(&mut self) -> Type {
        self.vars.push(Tv::Unbound(self.level));
        Type::Var(self.vars.len() as u32 - 1)
    }

    fn prune(&self, t: &Type) -> Type {
        match t {
            Type::Var(v) => match &self.vars[*v as usize] {
                Tv::Link(t) => self.prune(t),
                Tv::Unbound(_) => t.clone(),
            },
            _ => t.clone(),
        }
    }

    fn zonk(&self, t: &Type) -> Type {
        match self.prune(t) {
            Type::Con(c, ts) => Type::Con(c, ts.iter().map(|t| self.zonk(t)).collect()),
            Type::Fun(a, b) => Type::fun(self.zonk(&a), self.zonk(&b)),
            other => other,
        }
    }

    fn instantiate(&mut self, s: &Scheme) -> Type {
        if s.arity == 0 {
            return s.ty.clone();
        }
        let fresh: Vec<Type> = (0..s.arity).map(|_| self.fresh()).collect();
        super::substitute_gens(&s.ty, &fresh)
    }

    fn generalize(&self, t: &Type) -> Scheme {
        let mut map: HashMap<u32, u32> = HashMap::new();
        let ty = self.gen(t, &mut map);
        Scheme { arity: map.len() as u32, ty }
    }

    fn gen(&self, t: &Type, map: &mut HashMap<u32, u32>) -> Type {
        match self.prune(t) {
            Type::Var(v) => match self.vars[v as usize] {
                Tv::Unbound(l) if l > self.level => {
                    let next = map.len() as u32;
                    Type::Gen(*map.entry(v).or_insert(next))
                }
                _ => Type::Var(v),
            },
            Type::Con(c, ts) => Type::Con(c, ts.iter().map(|t| self.gen(t, map)).collect()),
            Type::Fun(a, b) => Type::fun(self.gen(&a, map), self.gen(&b, map)),
            Type::Gen(g) => Type::Gen(g),
        }
    }

    /// Checks `v` does not occur in `t`, lowering levels along the way.
    fn occurs_adjust(&mut self, v: u32, level: u32, t: &Type) -> bool {
        match self.prune(t) {
            Type::Var(w) => {
                if w == v {
                    return true;
                }
                if let Tv::Unbound(l) = self.vars[w as usize] {
                    self.vars[w as usize] = Tv::Unbound(l.min(level));
                }
                false
            }
            Type::Con(_, ts) => ts.iter().any(|t| self.occurs_adjust(v, level, t)),
            Type::Fun(a, b) => self.occurs_adjust(v, level, &a) || self.occurs_adjust(v, level, &b),
            Type::Gen(_) => false,
        }
    }

    /// Unifies the type found (`actual`) with the type required (`expected`).
    fn unify(&mut self, actual: &Type, expected: &Type, span: Span) -> TResult<()> {
        if self.unify_inner(actual, expected).is_err() {
            let (a, b) = (self.zonk(actual), self.zonk(expected));
            let names = canonical_all(&[&a, &b]);
            return Err(self.error(span, format!("cannot unify {} with {}", names[0], names[1])));
        }
        Ok(())
    }

    fn unify_inner(&mut self, a: &Type, b: &Type) -> Result<(), ()> {
        let (a, b) = (self.prune(a), self.prune(b));
        match (&a, &b) {
            (Type::Var(x), Type::Var(y)) if x == y => Ok(()),
            (Type::Var(x), other) | (other, Type::Var(x)) => {
                let Tv::Unbound(level) = self.vars[*x as usize] else { unreachable!("pruned") };
                if self.occurs_adjust(*x, level, other) {
                    return Err(());
                }
                self.vars[*x as usize] = Tv::Link(other.clone());
                Ok(())
            }
            (Type::Con(c1, t1), Type::Con(c2, t2)) if c1 == c2 && t1.len() == t2.len() => {
                for (x, y) in t1.iter().zip(t2) {
                    self.unify_inner(x, y)?;
                }
                Ok(())
            }
            (Type::Fun(a1, r1), Type::Fun(a2, r2)) => {
                self.unify_inner(a1, a2)?;
                self.unify_inner(r1, r2)
            }
            _ => Err(()),
        }
    }
}

fn check_distinct(params: &[String]) -> Result<(), String> {
    for (i, p) in params.iter().enumerate() {
        if params[..i].contains(p) {
            return Err(format!("type variable {p} appears more than once"));
        }
    }
    Ok(())
}
