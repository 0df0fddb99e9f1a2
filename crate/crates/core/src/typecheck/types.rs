use std::collections::HashMap;
use std::fmt;

/// A monotype. `Var` is a unification variable of one checker run; `Gen`
/// is a variable quantified by an enclosing [`Scheme`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Type {
    Var(u32),
    Gen(u32),
    Con(String, Vec<Type>),
    Fun(Box<Type>, Box<Type>),
}

impl Type {
    pub fn con(name: &str) -> Type {
        Type::Con(name.to_string(), Vec::new())
    }

    pub fn int() -> Type {
        Type::con("Int")
    }

    pub fn bool() -> Type {
        Type::con("Bool")
    }

    pub fn char() -> Type {
        Type::con("Char")
    }

    pub fn list(t: Type) -> Type {
        Type::Con("[]".into(), vec![t])
    }

    pub fn tuple(ts: Vec<Type>) -> Type {
        Type::Con(tuple_con(ts.len()), ts)
    }

    pub fn fun(a: Type, b: Type) -> Type {
        Type::Fun(Box::new(a), Box::new(b))
    }

    /// Curried function type from argument types to a result.
    pub fn arrows(args: Vec<Type>, res: Type) -> Type {
        args.into_iter().rev().fold(res, |acc, a| Type::fun(a, acc))
    }
}

/// Constructor name of the tuple type and data constructor of `n` components.
pub fn tuple_con(n: usize) -> String {
    format!("({})", ",".repeat(n - 1))
}

pub fn is_tuple_con(name: &str) -> bool {
    name.starts_with("(,")
}

/// A type with `arity` quantified variables `Gen(0)..Gen(arity-1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scheme {
    pub arity: u32,
    pub ty: Type,
}

impl Scheme {
    pub fn mono(ty: Type) -> Scheme {
        Scheme { arity: 0, ty }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&canonical(&self.ty))
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&canonical(self))
    }
}

fn var_name(i: usize) -> String {
    let letter = (b'a' + (i % 26) as u8) as char;
    if i < 26 {
        letter.to_string()
    } else {
        format!("{letter}{}", i / 26)
    }
}

/// Prints a type with its variables renamed `a`, `b`, ... in order of first
/// occurrence.
pub fn canonical(t: &Type) -> String {
    canonical_all(&[t]).pop().unwrap_or_default()
}

/// Like [`canonical`], sharing one variable naming across several types.
pub fn canonical_all(ts: &[&Type]) -> Vec<String> {
    let mut names: HashMap<(bool, u32), String> = HashMap::new();
    ts.iter()
        .map(|t| {
            let mut out = String::new();
            print(t, 0, &mut names, &mut out);
            out
        })
        .collect()
}

fn print(t: &Type, prec: u8, names: &mut HashMap<(bool, u32), String>, out: &mut String) {
    match t {
        Type::Var(v) | Type::Gen(v) => {
            let key = (matches!(t, Type::Gen(_)), *v);
            let next = names.len();
            out.push_str(names.entry(key).or_insert_with(|| var_name(next)));
        }
        Type::Con(c, args) if c == "[]" && args.len() == 1 => {
            out.push('[');
            print(&args[0], 0, names, out);
            out.push(']');
        }
        Type::Con(c, args) if is_tuple_con(c) => {
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print(a, 0, names, out);
            }
            out.push(')');
        }
        Type::Con(c, args) if args.is_empty() => out.push_str(c),
        Type::Con(c, args) => {
            if prec >= 2 {
                out.push('(');
            }
            out.push_str(c);
            for a in args {
                out.push(' ');
                print(a, 2, names, out);
            }
            if prec >= 2 {
                out.push(')');
            }
        }
        Type::Fun(a, b) => {
            if prec >= 1 {
                out.push('(');
            }
            print(a, 1, names, out);
            out.push_str(" -> ");
            print(b, 0, names, out);
            if prec >= 1 {
                out.push(')');
            }
        }
    }
}
