//! Lazy graph-reduction machine. Every call to [`Machine::forward`] runs
//! silent transitions until one observable reduction happens and records
//! the rendered step.

mod render;

use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use crate::desugar::{BindRhs, Binding, CExpr, CPat, CRhs, CoreProgram, GlobalDef, GlobalId, Lambda, Matching, Name, Prim, E};
use crate::trace::{JustificationKind, Status, Step, Trace};

use render::{Callee, Renderer, Term};

pub type NodeId = usize;

/// Marks a name bound by an enclosing lambda or let while rendering.
const SHADOW: NodeId = usize::MAX;

/// Default number of constructor cells forced between two `continue?` steps.
pub const DEFAULT_BUDGET: usize = 10;

/// Silent transitions allowed between two observable steps.
const SILENT_LIMIT: usize = 5_000_000;

#[derive(Clone, Default, Debug)]
pub(crate) struct Env(Option<Rc<EnvCell>>);

#[derive(Debug)]
pub(crate) struct EnvCell {
    name: Name,
    node: NodeId,
    next: Env,
}

impl Env {
    fn bind(&self, name: Name, node: NodeId) -> Env {
        Env(Some(Rc::new(EnvCell { name, node, next: self.clone() })))
    }

    pub(crate) fn lookup(&self, name: &str) -> Option<NodeId> {
        let mut cur = &self.0;
        while let Some(cell) = cur {
            if &*cell.name == name {
                return Some(cell.node);
            }
            cur = &cell.next.0;
        }
        None
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Head {
    Global(GlobalId),
    Con(Name, usize),
    Closure(Rc<Lambda>, Env),
    /// `(op x)`: the operator node and its right operand.
    RSection(NodeId, NodeId),
}

#[derive(Clone, Debug)]
pub(crate) enum Value {
    Int(i64),
    Char(char),
    Con { name: Name, args: Vec<NodeId>, sugar: bool },
    Fun { head: Head, args: Vec<NodeId> },
}

#[derive(Clone, Debug)]
pub(crate) enum Pending {
    Thunk(E, Env),
    Caf(GlobalId),
}

#[derive(Clone, Debug)]
pub(crate) enum NodeState {
    Thunk(E, Env),
    Caf(GlobalId),
    Evaluating(Pending),
    Value(Value),
    Ind(NodeId),
}

#[derive(Clone, Debug)]
pub(crate) struct Node {
    pub(crate) state: NodeState,
    pub(crate) name: Option<Name>,
    pub(crate) expanded: bool,
    pub(crate) binding_text: Option<Rc<str>>,
}

#[derive(Clone, Debug)]
enum Control {
    Eval(E, Env),
    Return(NodeId),
    Resume,
    Done,
}

#[derive(Clone, Debug)]
struct MatchState {
    m: Rc<Matching>,
    args: Vec<NodeId>,
    env: Env,
    alt: usize,
    work: Vec<(CPat, NodeId)>,
    bound: Env,
    silent: bool,
}

impl MatchState {
    fn new(m: Rc<Matching>, args: Vec<NodeId>, env: Env, silent: bool) -> MatchState {
        let mut st = MatchState { m, args, bound: env.clone(), env, alt: 0, work: Vec::new(), silent };
        st.reset();
        st
    }

    fn reset(&mut self) {
        self.bound = self.env.clone();
        self.work.clear();
        if let Some(alt) = self.m.alts.get(self.alt) {
            for (p, n) in alt.pats.iter().zip(&self.args).rev() {
                self.work.push((p.clone(), *n));
            }
        }
    }
}

#[derive(Clone, Debug)]
struct GuardState {
    st: MatchState,
    env: Env,
    gi: usize,
}

#[derive(Clone, Debug, PartialEq)]
enum DeepPhase {
    Start,
    Forcing(NodeId),
    Resume,
    Cycling,
}

#[derive(Clone, Debug)]
struct DeepState {
    root: NodeId,
    path: Vec<(NodeId, usize)>,
    done: HashSet<NodeId>,
    count: usize,
    cycles: bool,
    cycle_k: usize,
    phase: DeepPhase,
}

#[derive(Clone, Debug)]
enum Frame {
    Update(NodeId),
    Apply(Vec<NodeId>),
    Prim { prim: Prim, g: GlobalId, args: Vec<NodeId>, next: usize },
    Compare { prim: Prim, g: GlobalId, a: NodeId, b: NodeId, work: Vec<(NodeId, NodeId)> },
    Match(Box<MatchState>),
    Guard(Box<GuardState>),
    If { then: E, els: E, env: Env },
    Deep(Box<DeepState>),
}

impl Frame {
    fn elided(&self) -> bool {
        matches!(self, Frame::Match(_) | Frame::Guard(_) | Frame::If { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Frontier {
    Running,
    Suspended,
    Finished,
    Failed(String),
    Diverged,
}

/// Outcome of computing one more step at the frontier.
#[derive(Debug, Clone, PartialEq)]
pub enum Advance {
    Step(Step),
    Finished,
    Error(String),
    /// Too many silent transitions without an observable step.
    Diverged,
}

/// Machine state plus the history of rendered steps.
pub struct Machine {
    core: Rc<CoreProgram>,
    heap: Vec<Node>,
    control: Control,
    stack: Vec<Frame>,
    globals: HashMap<GlobalId, NodeId>,
    counter: usize,
    root: NodeId,
    budget: usize,
    events: usize,
    event: Option<(JustificationKind, String)>,
    frontier: Frontier,
    history: Vec<Step>,
    pos: usize,
}

fn bool_value(b: bool) -> Value {
    Value::Con { name: if b { "True".into() } else { "False".into() }, args: vec![], sugar: false }
}

fn floor_div(a: i64, b: i64) -> i64 {
    let q = a.wrapping_div(b);
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn floor_mod(a: i64, b: i64) -> i64 {
    let r = a.wrapping_rem(b);
    if r != 0 && ((r < 0) != (b < 0)) {
        r + b
    } else {
        r
    }
}

impl Machine {
    pub fn new(core: Rc<CoreProgram>, goal: E, budget: usize) -> Machine {
        let mut m = Machine {
            core,
            heap: Vec::new(),
            control: Control::Eval(goal.clone(), Env::default()),
            stack: Vec::new(),
            globals: HashMap::new(),
            counter: 0,
            root: 0,
            budget: budget.max(1),
            events: 0,
            event: None,
            frontier: Frontier::Running,
            history: Vec::new(),
            pos: 0,
        };
        m.root = m.new_node(NodeState::Evaluating(Pending::Thunk(goal.clone(), Env::default())), None);
        let deep = DeepState {
            root: m.root,
            path: Vec::new(),
            done: HashSet::new(),
            count: 0,
            cycles: false,
            cycle_k: 0,
            phase: DeepPhase::Start,
        };
        m.stack.push(Frame::Deep(Box::new(deep)));
        m.stack.push(Frame::Update(m.root));
        let display = Renderer::new(&m, 0, false).expr(&goal, &Env::default()).show(false);
        m.history.push(Step { index: 0, display, kind: JustificationKind::Goal, text: String::new(), depth: 0 });
        m
    }

    // ---- navigation ----

    pub fn current(&self) -> &Step {
        &self.history[self.pos]
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    /// Steps computed so far, whatever the current position.
    pub fn history(&self) -> &[Step] {
        &self.history
    }

    /// Moves one step forward, computing it if needed. Returns false at the
    /// end of the evaluation.
    pub fn forward(&mut self) -> bool {
        if self.pos + 1 < self.history.len() {
            self.pos += 1;
            return true;
        }
        match self.advance() {
            Advance::Step(_) => {
                self.pos += 1;
                true
            }
            _ => false,
        }
    }

    /// Moves one step back; no-op at the goal.
    pub fn back(&mut self) -> bool {
        if self.pos == 0 {
            return false;
        }
        self.pos -= 1;
        true
    }

    /// Status of the evaluation frontier: `None` while more steps may follow
    /// without user intervention.
    pub fn status(&self) -> Option<Status> {
        match &self.frontier {
            Frontier::Running => None,
            Frontier::Suspended => Some(Status::Suspended),
            Frontier::Finished => Some(Status::Final),
            Frontier::Failed(m) => Some(Status::Error(m.clone())),
            Frontier::Diverged => Some(Status::Truncated),
        }
    }

    /// Computes the step after the last one in the history and appends it.
    pub fn advance(&mut self) -> Advance {
        match &self.frontier {
            Frontier::Finished => return Advance::Finished,
            Frontier::Failed(m) => return Advance::Error(m.clone()),
            Frontier::Diverged => return Advance::Diverged,
            Frontier::Suspended => self.frontier = Frontier::Running,
            Frontier::Running => {}
        }
        for _ in 0..SILENT_LIMIT {
            match self.transition() {
                Err(msg) => {
                    self.frontier = Frontier::Failed(msg.clone());
                    return Advance::Error(msg);
                }
                Ok(false) => {
                    self.frontier = Frontier::Finished;
                    return Advance::Finished;
                }
                Ok(true) => {}
            }
            if let Some((kind, text)) = self.event.take() {
                self.events += 1;
                let (display, depth) = if kind == JustificationKind::Final {
                    (self.result_display(), 0)
                } else {
                    self.render_display()
                };
                let step = Step { index: self.history.len(), display, kind, text, depth };
                if kind == JustificationKind::Continue {
                    self.frontier = Frontier::Suspended;
                }
                self.history.push(step.clone());
                return Advance::Step(step);
            }
        }
        self.frontier = Frontier::Diverged;
        Advance::Diverged
    }

    fn render_display(&self) -> (String, usize) {
        let mut allowance = 0;
        if let (Control::Resume, Some(Frame::Deep(d))) = (&self.control, self.stack.last()) {
            if d.phase == DeepPhase::Cycling {
                allowance = d.cycle_k * self.budget - 1;
            }
        }
        let mut r = Renderer::new(self, allowance, false);
        let mut term = match &self.control {
            Control::Eval(e, env) => r.expr(e, env),
            Control::Return(n) => r.node(*n),
            Control::Resume | Control::Done => Term::Atom(String::new()),
        };
        for f in self.stack.iter().rev() {
            match f {
                Frame::Update(n) => r.add_hole(*n, term.clone()),
                Frame::Apply(args) => {
                    let args = args.iter().map(|a| r.node(*a)).collect();
                    term = r.call(Callee::Term(term), args);
                }
                Frame::Prim { g, args, .. } => {
                    let args = args.iter().map(|a| r.node(*a)).collect();
                    term = r.call(Callee::Name(self.core.globals[*g].name.to_string()), args);
                }
                Frame::Compare { g, a, b, .. } => {
                    let args = vec![r.node(*a), r.node(*b)];
                    term = r.call(Callee::Name(self.core.globals[*g].name.to_string()), args);
                }
                Frame::Deep(d) => term = r.node(d.root),
                Frame::Match(_) | Frame::Guard(_) | Frame::If { .. } => break,
            }
        }
        let depth = self.stack.iter().filter(|f| f.elided()).count();
        (term.show(false), depth)
    }

    /// The result rendered fully evaluated, as in a final step.
    pub fn result_display(&self) -> String {
        Renderer::new(self, 0, true).node(self.root).show(false)
    }

    // ---- heap ----

    fn new_node(&mut self, state: NodeState, name: Option<Name>) -> NodeId {
        self.heap.push(Node { state, name, expanded: false, binding_text: None });
        self.heap.len() - 1
    }

    fn new_value(&mut self, v: Value) -> NodeId {
        self.new_node(NodeState::Value(v), None)
    }

    pub(crate) fn resolve(&self, mut n: NodeId) -> NodeId {
        while let NodeState::Ind(m) = self.heap[n].state {
            n = m;
        }
        n
    }

    pub(crate) fn node(&self, n: NodeId) -> &Node {
        &self.heap[n]
    }

    pub(crate) fn core(&self) -> &CoreProgram {
        &self.core
    }

    fn value(&self, n: NodeId) -> Option<&Value> {
        match &self.heap[self.resolve(n)].state {
            NodeState::Value(v) => Some(v),
            _ => None,
        }
    }

    fn fresh(&mut self, base: &str) -> Name {
        let name = format!("{base}${}", self.counter);
        self.counter += 1;
        name.into()
    }

    fn global_node(&mut self, g: GlobalId) -> NodeId {
        if let Some(n) = self.globals.get(&g) {
            return *n;
        }
        let global = &self.core.globals[g];
        let n = if global.arity() == 0 {
            let name = global.name.clone();
            self.new_node(NodeState::Caf(g), Some(name))
        } else {
            self.new_value(Value::Fun { head: Head::Global(g), args: vec![] })
        };
        self.globals.insert(g, n);
        n
    }

    fn alloc_arg(&mut self, e: &E, env: &Env) -> Result<NodeId, String> {
        Ok(match &**e {
            CExpr::Local(x) => env.lookup(x).ok_or_else(|| format!("variable not in scope: {x}"))?,
            CExpr::Global(g) => self.global_node(*g),
            CExpr::Int(i) => self.new_value(Value::Int(*i)),
            CExpr::Char(c) => self.new_value(Value::Char(*c)),
            CExpr::Con { name, args, sugar } => {
                let args = args.iter().map(|a| self.alloc_arg(a, env)).collect::<Result<_, _>>()?;
                self.new_value(Value::Con { name: name.clone(), args, sugar: *sugar })
            }
            CExpr::ConFun(c, arity) => self.new_value(Value::Fun { head: Head::Con(c.clone(), *arity), args: vec![] }),
            CExpr::Lam(l) => self.new_value(Value::Fun { head: Head::Closure(l.clone(), env.clone()), args: vec![] }),
            CExpr::RSection(op, a) => {
                let op = self.alloc_arg(op, env)?;
                let a = self.alloc_arg(a, env)?;
                self.new_value(Value::Fun { head: Head::RSection(op, a), args: vec![] })
            }
            _ => self.new_node(NodeState::Thunk(e.clone(), env.clone()), None),
        })
    }

    /// Allocates a recursive binding group and returns the extended scope.
    fn alloc_bindings(&mut self, binds: &[Binding], env: &Env) -> Env {
        let ids: Vec<NodeId> = binds.iter().map(|_| self.new_node(NodeState::Ind(usize::MAX), None)).collect();
        let mut scope = env.clone();
        for (b, id) in binds.iter().zip(&ids) {
            scope = scope.bind(b.name.clone(), *id);
        }
        for (b, id) in binds.iter().zip(&ids) {
            let node = match &b.rhs {
                BindRhs::Thunk(e) => Node {
                    state: NodeState::Thunk(e.clone(), scope.clone()),
                    name: Some(self.fresh(&b.name)),
                    expanded: false,
                    binding_text: Some(b.text.clone()),
                },
                BindRhs::Fun(lam) => Node {
                    state: NodeState::Value(Value::Fun { head: Head::Closure(lam.clone(), scope.clone()), args: vec![] }),
                    name: Some(b.name.clone()),
                    expanded: false,
                    binding_text: None,
                },
                BindRhs::Guarded(m) => Node {
                    state: NodeState::Thunk(Rc::new(CExpr::Guarded(m.clone())), scope.clone()),
                    name: Some(self.fresh(&b.name)),
                    expanded: false,
                    binding_text: None,
                },
            };
            self.heap[*id] = node;
        }
        scope
    }

    // ---- transitions ----

    /// One silent transition; `Ok(false)` once evaluation is over.
    fn transition(&mut self) -> Result<bool, String> {
        let control = std::mem::replace(&mut self.control, Control::Done);
        match control {
            Control::Eval(e, env) => self.eval(e, env)?,
            Control::Return(n) => match self.stack.pop() {
                None => self.control = Control::Done,
                Some(f) => self.ret(n, f)?,
            },
            Control::Resume => match self.stack.pop() {
                Some(Frame::Deep(d)) => self.deep(d)?,
                _ => self.control = Control::Done,
            },
            Control::Done => return Ok(false),
        }
        Ok(true)
    }

    fn eval(&mut self, e: E, env: Env) -> Result<(), String> {
        match &*e {
            CExpr::Local(x) => {
                let n = env.lookup(x).ok_or_else(|| format!("variable not in scope: {x}"))?;
                self.enter(n)
            }
            CExpr::Global(g) => {
                let n = self.global_node(*g);
                self.enter(n)
            }
            CExpr::Int(_) | CExpr::Char(_) | CExpr::Con { .. } | CExpr::ConFun(..) | CExpr::Lam(_) | CExpr::RSection(..) => {
                let n = self.alloc_arg(&e, &env)?;
                self.control = Control::Return(n);
                Ok(())
            }
            CExpr::App(head, args) => {
                let nodes = args.iter().map(|a| self.alloc_arg(a, &env)).collect::<Result<Vec<_>, _>>()?;
                match &**head {
                    CExpr::Global(g) if self.core.globals[*g].arity() > 0 => self.call(Head::Global(*g), nodes),
                    CExpr::ConFun(c, a) => self.call(Head::Con(c.clone(), *a), nodes),
                    _ => {
                        self.stack.push(Frame::Apply(nodes));
                        self.control = Control::Eval(head.clone(), env);
                        Ok(())
                    }
                }
            }
            CExpr::Let(binds, body) => {
                let scope = self.alloc_bindings(binds, &env);
                self.control = Control::Eval(body.clone(), scope);
                Ok(())
            }
            CExpr::Case(scrut, m) => {
                let n = self.alloc_arg(scrut, &env)?;
                self.run_match(MatchState::new(m.clone(), vec![n], env, false))
            }
            CExpr::If(c, t, f) => {
                self.stack.push(Frame::If { then: t.clone(), els: f.clone(), env: env.clone() });
                self.control = Control::Eval(c.clone(), env);
                Ok(())
            }
            CExpr::Guarded(m) => self.run_match(MatchState::new(m.clone(), vec![], env, false)),
        }
    }

    fn enter(&mut self, n: NodeId) -> Result<(), String> {
        let r = self.resolve(n);
        let state = self.heap[r].state.clone();
        match state {
            NodeState::Value(_) => self.control = Control::Return(r),
            NodeState::Thunk(e, env) => {
                let node = &mut self.heap[r];
                node.state = NodeState::Evaluating(Pending::Thunk(e.clone(), env.clone()));
                if node.name.is_some() && !node.expanded {
                    if let Some(text) = &node.binding_text {
                        node.expanded = true;
                        self.event = Some((JustificationKind::Binding, text.to_string()));
                    }
                }
                self.stack.push(Frame::Update(r));
                self.control = Control::Eval(e, env);
            }
            NodeState::Caf(g) => {
                self.heap[r].state = NodeState::Evaluating(Pending::Caf(g));
                self.stack.push(Frame::Update(r));
                let GlobalDef::Fun(m) = &self.core.globals[g].def else {
                    return Err(format!("{} is not a constant", self.core.globals[g].name));
                };
                let m = m.clone();
                return self.run_match(MatchState::new(m, vec![], Env::default(), false));
            }
            NodeState::Evaluating(_) => return Err("<<loop>>".into()),
            NodeState::Ind(_) => unreachable!("resolved node is an indirection"),
        }
        Ok(())
    }

    fn update(&mut self, target: NodeId, n: NodeId) {
        let n = self.resolve(n);
        if n == target {
            return;
        }
        if self.heap[n].name.is_none() && self.heap[target].name.is_some() {
            self.heap[target].state = self.heap[n].state.clone();
            self.heap[n].state = NodeState::Ind(target);
        } else {
            self.heap[target].state = NodeState::Ind(n);
        }
    }

    fn ret(&mut self, n: NodeId, frame: Frame) -> Result<(), String> {
        match frame {
            Frame::Update(m) => {
                self.update(m, n);
                self.control = Control::Return(self.resolve(m));
                Ok(())
            }
            Frame::Apply(args) => match self.value(n).cloned() {
                Some(Value::Fun { head, args: pre }) => {
                    let mut all = pre;
                    all.extend(args);
                    self.call(head, all)
                }
                _ => Err("application of a non-function".into()),
            },
            Frame::Prim { prim, g, args, next } => self.prim_step(prim, g, args, next),
            Frame::Compare { prim, g, a, b, work } => self.compare_step(prim, g, a, b, work),
            Frame::Match(st) => self.run_match(*st),
            Frame::Guard(mut gs) => {
                if self.is_true(n)? {
                    self.choose_guard(*gs);
                    Ok(())
                } else {
                    gs.gi += 1;
                    self.run_guards(*gs)
                }
            }
            Frame::If { then, els, env } => {
                let b = self.is_true(n)?;
                let text = {
                    let mut r = Renderer::new(self, 0, false);
                    let t = r.expr(&then, &env).show(false);
                    let e = r.expr(&els, &env).show(false);
                    let chosen = if b { &t } else { &e };
                    format!("if {} then {t} else {e} = {chosen}", if b { "True" } else { "False" })
                };
                self.event = Some((JustificationKind::Equation, text));
                self.control = Control::Eval(if b { then } else { els }, env);
                Ok(())
            }
            Frame::Deep(d) => self.deep(d),
        }
    }

    fn is_true(&self, n: NodeId) -> Result<bool, String> {
        match self.value(n) {
            Some(Value::Con { name, .. }) => Ok(&**name == "True"),
            _ => Err("expected a boolean".into()),
        }
    }

    fn head_arity(&self, head: &Head) -> usize {
        match head {
            Head::Global(g) => self.core.globals[*g].arity(),
            Head::Con(_, a) => *a,
            Head::Closure(l, _) => l.matching.arity,
            Head::RSection(..) => 1,
        }
    }

    fn call(&mut self, head: Head, mut args: Vec<NodeId>) -> Result<(), String> {
        let arity = self.head_arity(&head);
        if args.len() < arity {
            let n = self.new_value(Value::Fun { head, args });
            self.control = Control::Return(n);
            return Ok(());
        }
        if args.len() > arity {
            let rest = args.split_off(arity);
            self.stack.push(Frame::Apply(rest));
        }
        match head {
            Head::Global(g) => match &self.core.globals[g].def {
                GlobalDef::Fun(m) => {
                    let m = m.clone();
                    self.run_match(MatchState::new(m, args, Env::default(), false))
                }
                GlobalDef::Prim(p) => {
                    let p = *p;
                    self.prim_step(p, g, args, 0)
                }
            },
            Head::Con(name, _) => {
                let n = self.new_value(Value::Con { name, args, sugar: false });
                self.control = Control::Return(n);
                Ok(())
            }
            Head::Closure(lam, env) => self.run_match(MatchState::new(lam.matching.clone(), args, env, lam.silent)),
            Head::RSection(op, a) => {
                self.stack.push(Frame::Apply(vec![args[0], a]));
                self.enter(op)
            }
        }
    }

    // ---- matching ----

    fn run_match(&mut self, mut st: MatchState) -> Result<(), String> {
        'alts: loop {
            if st.alt >= st.m.alts.len() {
                return Err(format!("incomplete pattern match in {}", st.m.name));
            }
            while let Some((pat, node)) = st.work.pop() {
                let ok = match pat {
                    CPat::Var(x) => {
                        st.bound = st.bound.bind(x, node);
                        true
                    }
                    CPat::Wild => true,
                    pat => {
                        let Some(v) = self.value(node).cloned() else {
                            st.work.push((pat, node));
                            self.stack.push(Frame::Match(Box::new(st)));
                            return self.enter(node);
                        };
                        match (pat, v) {
                            (CPat::Bang(p), _) => {
                                st.work.push((*p, node));
                                true
                            }
                            (CPat::Int(k), Value::Int(i)) => k == i,
                            (CPat::Char(k), Value::Char(c)) => k == c,
                            (CPat::Con(c, ps), Value::Con { name, args, .. }) => {
                                if c == name {
                                    for (p, a) in ps.into_iter().zip(args).rev() {
                                        st.work.push((p, a));
                                    }
                                    true
                                } else {
                                    false
                                }
                            }
                            (_, Value::Fun { .. }) => return Err("cannot match a function against a pattern".into()),
                            _ => false,
                        }
                    }
                };
                if !ok {
                    st.alt += 1;
                    st.reset();
                    continue 'alts;
                }
            }
            let m = st.m.clone();
            let alt = &m.alts[st.alt];
            let env = if alt.wheres.is_empty() { st.bound.clone() } else { self.alloc_bindings(&alt.wheres, &st.bound) };
            return match &alt.rhs {
                CRhs::Plain(body) => {
                    if !st.silent {
                        self.event = Some((JustificationKind::Equation, alt.text.to_string()));
                    }
                    self.control = Control::Eval(body.clone(), env);
                    Ok(())
                }
                CRhs::Guarded(_) => self.run_guards(GuardState { st, env, gi: 0 }),
            };
        }
    }

    fn run_guards(&mut self, mut gs: GuardState) -> Result<(), String> {
        let m = gs.st.m.clone();
        let CRhs::Guarded(guards) = &m.alts[gs.st.alt].rhs else { unreachable!("guarded alternative") };
        if let Some(g) = guards.get(gs.gi) {
            if matches!(&*g.guard, CExpr::Con { name, args, .. } if &**name == "True" && args.is_empty()) {
                self.choose_guard(gs);
                return Ok(());
            }
            let (guard, env) = (g.guard.clone(), gs.env.clone());
            self.stack.push(Frame::Guard(Box::new(gs)));
            self.control = Control::Eval(guard, env);
            return Ok(());
        }
        gs.st.alt += 1;
        gs.st.reset();
        self.run_match(gs.st)
    }

    fn choose_guard(&mut self, gs: GuardState) {
        let m = gs.st.m.clone();
        let CRhs::Guarded(guards) = &m.alts[gs.st.alt].rhs else { unreachable!("guarded alternative") };
        let g = &guards[gs.gi];
        if !gs.st.silent {
            self.event = Some((JustificationKind::Equation, g.text.to_string()));
        }
        self.control = Control::Eval(g.body.clone(), gs.env);
    }

    // ---- primitives ----

    fn prim_step(&mut self, prim: Prim, g: GlobalId, args: Vec<NodeId>, mut next: usize) -> Result<(), String> {
        while next < args.len() {
            if self.value(args[next]).is_none() {
                let n = args[next];
                self.stack.push(Frame::Prim { prim, g, args, next });
                return self.enter(n);
            }
            next += 1;
        }
        let vals: Vec<Value> = args.iter().map(|a| self.value(*a).cloned().expect("forced")).collect();
        let int = |i: usize| match &vals[i] {
            Value::Int(n) => Ok(*n),
            _ => Err(format!("{} expects an integer", prim.name())),
        };
        let chr = |i: usize| match &vals[i] {
            Value::Char(c) => Ok(*c),
            _ => Err(format!("{} expects a character", prim.name())),
        };
        let result = match prim {
            Prim::Add => Value::Int(int(0)?.wrapping_add(int(1)?)),
            Prim::Sub => Value::Int(int(0)?.wrapping_sub(int(1)?)),
            Prim::Mul => Value::Int(int(0)?.wrapping_mul(int(1)?)),
            Prim::Div | Prim::Mod => {
                let (a, b) = (int(0)?, int(1)?);
                if b == 0 {
                    return Err("division by zero".into());
                }
                Value::Int(if prim == Prim::Div { floor_div(a, b) } else { floor_mod(a, b) })
            }
            Prim::Negate => Value::Int(int(0)?.wrapping_neg()),
            Prim::Eq | Prim::Ne | Prim::Lt | Prim::Le | Prim::Gt | Prim::Ge | Prim::Compare => {
                return self.compare_step(prim, g, args[0], args[1], vec![(args[0], args[1])]);
            }
            Prim::Chr => {
                let i = int(0)?;
                let c = u32::try_from(i).ok().and_then(char::from_u32).ok_or_else(|| format!("chr: argument {i} out of range"))?;
                Value::Char(c)
            }
            Prim::Ord => Value::Int(chr(0)? as i64),
            Prim::IsAlpha => bool_value(chr(0)?.is_alphabetic()),
            Prim::IsDigit => bool_value(chr(0)?.is_ascii_digit()),
            Prim::IsAlphaNum => bool_value(chr(0)?.is_alphanumeric()),
            Prim::IsUpper => bool_value(chr(0)?.is_uppercase()),
            Prim::IsLower => bool_value(chr(0)?.is_lowercase()),
            Prim::Show => {
                let s = int(0)?.to_string();
                return self.finish_prim(g, &args, |m| m.string_value(&s));
            }
        };
        self.finish_prim(g, &args, |m| m.new_value(result))
    }

    fn string_value(&mut self, s: &str) -> NodeId {
        let mut tail = self.new_value(Value::Con { name: "[]".into(), args: vec![], sugar: true });
        for c in s.chars().rev() {
            let h = self.new_value(Value::Char(c));
            tail = self.new_value(Value::Con { name: ":".into(), args: vec![h, tail], sugar: true });
        }
        tail
    }

    fn finish_prim(&mut self, g: GlobalId, args: &[NodeId], make: impl FnOnce(&mut Machine) -> NodeId) -> Result<(), String> {
        let n = make(self);
        let text = {
            let mut r = Renderer::new(self, 0, false);
            let args = args.iter().map(|a| r.node(*a)).collect();
            let lhs = r.call(Callee::Name(self.core.globals[g].name.to_string()), args);
            let rhs = r.node(n);
            format!("{} = {}", lhs.show(false), rhs.show(false))
        };
        self.event = Some((JustificationKind::Primitive, text));
        self.control = Control::Return(n);
        Ok(())
    }

    fn compare_step(
        &mut self,
        prim: Prim,
        g: GlobalId,
        a: NodeId,
        b: NodeId,
        mut work: Vec<(NodeId, NodeId)>,
    ) -> Result<(), String> {
        use std::cmp::Ordering;
        let mut outcome = Ordering::Equal;
        while let Some((x, y)) = work.pop() {
            for n in [x, y] {
                if self.value(n).is_none() {
                    work.push((x, y));
                    self.stack.push(Frame::Compare { prim, g, a, b, work });
                    return self.enter(n);
                }
            }
            let (vx, vy) = (self.value(x).cloned().expect("forced"), self.value(y).cloned().expect("forced"));
            let o = match (vx, vy) {
                (Value::Int(i), Value::Int(j)) => i.cmp(&j),
                (Value::Char(i), Value::Char(j)) => i.cmp(&j),
                (Value::Con { name: n1, args: a1, .. }, Value::Con { name: n2, args: a2, .. }) => {
                    let tag = |n: &str| self.core.constructors.get(n).map(|c| c.tag).unwrap_or(0);
                    let o = tag(&n1).cmp(&tag(&n2));
                    if o == Ordering::Equal {
                        for pair in a1.into_iter().zip(a2).rev() {
                            work.push(pair);
                        }
                    }
                    o
                }
                (Value::Fun { .. }, _) | (_, Value::Fun { .. }) => return Err("cannot compare functions".into()),
                _ => return Err("comparison of values of different types".into()),
            };
            if o != Ordering::Equal {
                outcome = o;
                break;
            }
        }
        let result = match prim {
            Prim::Eq => bool_value(outcome == Ordering::Equal),
            Prim::Ne => bool_value(outcome != Ordering::Equal),
            Prim::Lt => bool_value(outcome == Ordering::Less),
            Prim::Le => bool_value(outcome != Ordering::Greater),
            Prim::Gt => bool_value(outcome == Ordering::Greater),
            Prim::Ge => bool_value(outcome != Ordering::Less),
            _ => {
                let name = match outcome {
                    Ordering::Less => "LT",
                    Ordering::Equal => "EQ",
                    Ordering::Greater => "GT",
                };
                Value::Con { name: name.into(), args: vec![], sugar: false }
            }
        };
        self.finish_prim(g, &[a, b], |m| m.new_value(result))
    }

    // ---- deep forcing of the result ----

    fn con_args(&self, n: NodeId) -> Option<&[NodeId]> {
        match self.value(n) {
            Some(Value::Con { args, .. }) if !args.is_empty() => Some(args),
            _ => None,
        }
    }

    fn deep(&mut self, mut d: Box<DeepState>) -> Result<(), String> {
        let on_path = |d: &DeepState, n: NodeId| d.path.iter().any(|(p, _)| *p == n);
        match d.phase.clone() {
            DeepPhase::Start => {
                let r = self.resolve(d.root);
                if self.con_args(r).is_some() {
                    d.path.push((r, 0));
                }
            }
            DeepPhase::Forcing(child) => {
                let r = self.resolve(child);
                if self.con_args(r).is_some() {
                    d.count += 1;
                    if on_path(&d, r) {
                        d.cycles = true;
                    } else if !d.done.contains(&r) {
                        d.path.push((r, 0));
                    }
                }
            }
            DeepPhase::Resume => {}
            DeepPhase::Cycling => {
                d.cycle_k += 1;
                self.event = Some((JustificationKind::Continue, "continue?".into()));
                self.stack.push(Frame::Deep(d));
                self.control = Control::Resume;
                return Ok(());
            }
        }
        while let Some(&(node, i)) = d.path.last() {
            let args = self.con_args(node).map(|a| a.to_vec()).unwrap_or_default();
            if i >= args.len() {
                d.done.insert(node);
                d.path.pop();
                continue;
            }
            let c = self.resolve(args[i]);
            if on_path(&d, c) {
                d.cycles = true;
                d.path.last_mut().expect("non-empty").1 += 1;
                continue;
            }
            if d.done.contains(&c) || self.value(c).is_some() {
                d.path.last_mut().expect("non-empty").1 += 1;
                if !d.done.contains(&c) && self.con_args(c).is_some() {
                    d.path.push((c, 0));
                }
                continue;
            }
            if d.count >= self.budget {
                d.count = 0;
                d.phase = DeepPhase::Resume;
                self.event = Some((JustificationKind::Continue, "continue?".into()));
                self.stack.push(Frame::Deep(d));
                self.control = Control::Resume;
                return Ok(());
            }
            d.path.last_mut().expect("non-empty").1 += 1;
            d.phase = DeepPhase::Forcing(c);
            self.stack.push(Frame::Deep(d));
            return self.enter(c);
        }
        if d.cycles {
            d.cycle_k = 1;
            d.phase = DeepPhase::Cycling;
            self.event = Some((JustificationKind::Continue, "continue?".into()));
            self.stack.push(Frame::Deep(d));
            self.control = Control::Resume;
            return Ok(());
        }
        let structured = matches!(self.value(self.root), Some(Value::Con { .. } | Value::Fun { .. }));
        let shown = self.history.last().map(|s| s.display.as_str()) == Some(&*self.result_display());
        if structured || self.events == 0 || !shown {
            self.event = Some((JustificationKind::Final, "final result".into()));
        }
        self.control = Control::Done;
        Ok(())
    }
}

/// Evaluates `goal` for at most `max_steps` steps after the goal itself.
/// Stops early at the first `continue?` suspension.
pub fn run(core: Rc<CoreProgram>, goal: E, max_steps: usize, budget: usize) -> Trace {
    let mut m = Machine::new(core, goal, budget);
    let mut status = None;
    while status.is_none() && m.history.len() <= max_steps {
        status = match m.advance() {
            Advance::Step(s) if s.kind == JustificationKind::Continue => Some(Status::Suspended),
            Advance::Step(_) => None,
            Advance::Finished => Some(Status::Final),
            Advance::Error(e) => Some(Status::Error(e)),
            Advance::Diverged => Some(Status::Truncated),
        };
    }
    let status = status.unwrap_or_else(|| {
        let len = m.history.len();
        let probe = m.advance();
        m.history.truncate(len);
        if probe == Advance::Finished {
            Status::Final
        } else {
            Status::Truncated
        }
    });
    Trace { steps: m.history, status }
}
