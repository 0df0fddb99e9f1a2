#![allow(dead_code)]

pub mod oracle;

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stepwise_core::prelude::PRELUDE_SOURCE;
use stepwise_core::syntax::{parse_expr, parse_program, Expr, ExprKind, FunGroup, Pattern, PatternKind, Rhs};
use stepwise_core::trace::Status;
use stepwise_core::Session;

pub fn tests_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests")
}

pub fn stepwise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stepwise")).args(args).output().expect("run stepwise")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn write_temp(name: &str, source: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("stepwise-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, source).unwrap();
    path
}

/// Step count of a run read from the structured output.
pub fn step_count(file: &Path, goal: &str) -> f64 {
    let out = stepwise(&[
        "eval",
        file.to_str().unwrap(),
        "-e",
        goal,
        "--format",
        "json",
        "--continue-budget",
        "1000000",
        "--max-steps",
        "1000000",
    ]);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).expect("json trace");
    assert_eq!(doc["status"], "final", "{goal}: {doc}");
    doc["step_count"].as_f64().unwrap()
}

/// Least squares fit of `ys` against the given basis; returns the
/// coefficients and R².
pub fn fit(xs: &[f64], ys: &[f64], basis: &[fn(f64) -> f64]) -> (Vec<f64>, f64) {
    let k = basis.len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for (&x, &y) in xs.iter().zip(ys) {
        let row: Vec<f64> = basis.iter().map(|b| b(x)).collect();
        for i in 0..k {
            for j in 0..k {
                a[i][j] += row[i] * row[j];
            }
            a[i][k] += row[i] * y;
        }
    }
    for c in 0..k {
        let p = (c..k).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        for r in 0..k {
            if r != c {
                let f = a[r][c] / a[c][c];
                for j in c..=k {
                    a[r][j] -= f * a[c][j];
                }
            }
        }
    }
    let coef: Vec<f64> = (0..k).map(|i| a[i][k] / a[i][i]).collect();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let predict = |x: f64| basis.iter().zip(&coef).map(|(b, c)| c * b(x)).sum::<f64>();
    let ss_res: f64 = xs.iter().zip(ys).map(|(&x, &y)| (y - predict(x)).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    (coef, r2)
}

pub const AFFINE: &[fn(f64) -> f64] = &[|_| 1.0, |x| x];
pub const QUADRATIC: &[fn(f64) -> f64] = &[|_| 1.0, |x| x, |x| x * x];

pub struct CorpusEntry {
    pub name: String,
    pub source: String,
    pub goals: Vec<String>,
}

pub fn corpus() -> Vec<CorpusEntry> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(tests_dir().join("corpus"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "hs"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let source = std::fs::read_to_string(&p).unwrap();
            let goals = source.lines().filter_map(|l| l.strip_prefix("-- goal: ")).map(str::to_string).collect();
            CorpusEntry { name: p.file_stem().unwrap().to_string_lossy().into_owned(), source, goals }
        })
        .collect()
}

/// Compares the machine's final value with the oracle for every corpus
/// goal; returns the disagreements and the number of goals checked.
pub fn oracle_disagreements() -> (Vec<String>, usize) {
    let handle = std::thread::Builder::new()
        .stack_size(1 << 30)
        .spawn(|| {
            let prelude = parse_program(PRELUDE_SOURCE).unwrap();
            let mut bad = Vec::new();
            let mut total = 0;
            for entry in corpus() {
                let session = match Session::load(&entry.source) {
                    Ok(s) => s,
                    Err(e) => {
                        bad.push(format!("{}: {e}", entry.name));
                        continue;
                    }
                };
                let user = parse_program(&entry.source).unwrap();
                for goal in &entry.goals {
                    total += 1;
                    let Ok(expr) = parse_expr(goal) else {
                        bad.push(format!("{}: {goal}: does not parse", entry.name));
                        continue;
                    };
                    let expected = oracle::Oracle::new(&prelude, &user).eval_show(&expr);
                    let trace = match session.run(goal, 2_000_000, usize::MAX) {
                        Ok(t) => t,
                        Err(e) => {
                            bad.push(format!("{}: {goal}: {e}", entry.name));
                            continue;
                        }
                    };
                    let got = match &trace.status {
                        Status::Final => Ok(trace.result().to_string()),
                        Status::Error(m) => Err(m.clone()),
                        other => Err(format!("status {}", other.name())),
                    };
                    if got != expected {
                        bad.push(format!("{}: {goal}: machine {got:?}, oracle {expected:?}", entry.name));
                    }
                }
            }
            (bad, total)
        })
        .unwrap();
    handle.join().unwrap()
}

/// Renames type variables by first occurrence, expands `String` and
/// normalizes spacing.
pub fn canonical_type(t: &str) -> String {
    let mut out = String::new();
    let mut names: Vec<String> = Vec::new();
    let chars: Vec<char> = t.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '\'' || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            if word == "String" {
                out.push_str("[ Char ]");
            } else if c.is_lowercase() {
                let k = names.iter().position(|n| *n == word).unwrap_or_else(|| {
                    names.push(word.clone());
                    names.len() - 1
                });
                out.push_str(&format!("t{k}"));
            } else {
                out.push_str(&word);
            }
            out.push(' ');
            continue;
        }
        if !c.is_whitespace() {
            if c == '-' && chars.get(i + 1) == Some(&'>') {
                out.push_str("-> ");
                i += 2;
                continue;
            }
            out.push(c);
            out.push(' ');
        }
        i += 1;
    }
    out.trim_end().to_string()
}

fn walk_pattern(p: &Pattern, seen: &mut HashSet<String>) {
    let tag = match &p.kind {
        PatternKind::Var(_) => "pat:var",
        PatternKind::Wildcard => "pat:wildcard",
        PatternKind::Int(_) => "pat:int",
        PatternKind::Char(_) => "pat:char",
        PatternKind::Str(_) => "pat:string",
        PatternKind::Con(_, ps) | PatternKind::Tuple(ps) | PatternKind::List(ps) => {
            ps.iter().for_each(|q| walk_pattern(q, seen));
            match &p.kind {
                PatternKind::Con(..) => "pat:constructor",
                PatternKind::Tuple(_) => "pat:tuple",
                _ => "pat:list",
            }
        }
        PatternKind::Cons(h, t) => {
            walk_pattern(h, seen);
            walk_pattern(t, seen);
            "pat:cons"
        }
        PatternKind::Bang(q) => {
            walk_pattern(q, seen);
            "pat:bang"
        }
    };
    seen.insert(tag.into());
}

fn walk_rhs(rhs: &Rhs, seen: &mut HashSet<String>) {
    match rhs {
        Rhs::Plain(e) => walk_expr(e, seen),
        Rhs::Guarded(gs) => {
            seen.insert("guard".into());
            for g in gs {
                walk_expr(&g.guard, seen);
                walk_expr(&g.body, seen);
            }
        }
    }
}

fn walk_group(g: &FunGroup, seen: &mut HashSet<String>) {
    for eq in &g.equations {
        eq.patterns.iter().for_each(|p| walk_pattern(p, seen));
        walk_rhs(&eq.rhs, seen);
        if !eq.where_binds.is_empty() {
            seen.insert("where".into());
        }
        eq.where_binds.iter().for_each(|w| walk_group(w, seen));
    }
}

/// Names referenced and constructs used by an expression, as tags such as
/// `name:map` or `expr:lambda`.
fn walk_expr(e: &Expr, seen: &mut HashSet<String>) {
    let sub = |x: &Expr, seen: &mut HashSet<String>| walk_expr(x, seen);
    let tag: String = match &e.kind {
        ExprKind::Var(x) => {
            seen.insert(format!("name:{x}"));
            "expr:var".into()
        }
        ExprKind::Con(_) => "expr:constructor".into(),
        ExprKind::Int(_) => "expr:int".into(),
        ExprKind::Char(_) => "expr:char".into(),
        ExprKind::Str(_) => "expr:string".into(),
        ExprKind::App(f, a) => {
            sub(f, seen);
            sub(a, seen);
            "expr:application".into()
        }
        ExprKind::BinOp(op, l, r) => {
            seen.insert(format!("name:{op}"));
            sub(l, seen);
            sub(r, seen);
            "expr:operator".into()
        }
        ExprKind::Neg(x) => {
            sub(x, seen);
            "expr:negation".into()
        }
        ExprKind::Lambda(ps, b) => {
            ps.iter().for_each(|p| walk_pattern(p, seen));
            sub(b, seen);
            "expr:lambda".into()
        }
        ExprKind::LeftSection(x, op) => {
            seen.insert(format!("name:{op}"));
            sub(x, seen);
            "expr:left-section".into()
        }
        ExprKind::RightSection(op, x) => {
            seen.insert(format!("name:{op}"));
            sub(x, seen);
            "expr:right-section".into()
        }
        ExprKind::OpRef(op) => {
            seen.insert(format!("name:{op}"));
            "expr:operator-reference".into()
        }
        ExprKind::If(c, t, f) => {
            [c, t, f].into_iter().for_each(|x| sub(x, seen));
            "expr:if".into()
        }
        ExprKind::Case(s, alts) => {
            sub(s, seen);
            for a in alts {
                walk_pattern(&a.pattern, seen);
                walk_rhs(&a.rhs, seen);
            }
            "expr:case".into()
        }
        ExprKind::Let(gs, b) => {
            gs.iter().for_each(|g| walk_group(g, seen));
            sub(b, seen);
            "expr:let".into()
        }
        ExprKind::Tuple(xs) | ExprKind::List(xs) => {
            xs.iter().for_each(|x| sub(x, seen));
            if matches!(e.kind, ExprKind::Tuple(_)) { "expr:tuple" } else { "expr:list" }.into()
        }
        ExprKind::EnumFrom(a) => {
            sub(a, seen);
            "expr:enum-from".into()
        }
        ExprKind::EnumFromTo(a, b) => {
            sub(a, seen);
            sub(b, seen);
            "expr:enum-from-to".into()
        }
        ExprKind::EnumFromThen(a, b) => {
            sub(a, seen);
            sub(b, seen);
            "expr:enum-from-then".into()
        }
        ExprKind::EnumFromThenTo(a, b, c) => {
            [a, b, c].into_iter().for_each(|x| sub(x, seen));
            "expr:enum-from-then-to".into()
        }
        ExprKind::Comprehension { .. } => "expr:comprehension".into(),
    };
    seen.insert(tag);
}

/// Every construct tag the corpus must exercise.
pub const CONSTRUCTS: &[&str] = &[
    "expr:var", "expr:constructor", "expr:int", "expr:char", "expr:string", "expr:application",
    "expr:operator", "expr:negation", "expr:lambda", "expr:left-section", "expr:right-section",
    "expr:operator-reference", "expr:if", "expr:case", "expr:let", "expr:tuple", "expr:list",
    "expr:enum-from", "expr:enum-from-to", "expr:enum-from-then", "expr:enum-from-then-to",
    "pat:var", "pat:wildcard", "pat:int", "pat:char", "pat:string", "pat:constructor", "pat:tuple",
    "pat:list", "pat:cons", "pat:bang", "guard", "where", "data", "type",
];

/// Tags used across the corpus programs and goals. Names a program
/// redefines do not count as uses of the prelude function.
pub fn corpus_coverage() -> HashSet<String> {
    let mut seen = HashSet::new();
    for entry in corpus() {
        let prog = parse_program(&entry.source).unwrap();
        let mut local = HashSet::new();
        prog.functions().for_each(|g| walk_group(g, &mut local));
        for goal in &entry.goals {
            walk_expr(&parse_expr(goal).unwrap(), &mut local);
        }
        for g in prog.functions() {
            local.remove(&format!("name:{}", g.name));
        }
        if prog.data_decls().next().is_some() {
            local.insert("data".into());
        }
        if prog.aliases().next().is_some() {
            local.insert("type".into());
        }
        seen.extend(local);
    }
    seen
}
