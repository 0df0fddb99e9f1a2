//! Hindley–Milner inference without type classes.

mod infer;
mod types;

use std::collections::HashMap;
use std::fmt;

use crate::syntax::{self, Span, TypeExpr};

pub use infer::{infer_expr, infer_program};
pub use types::{canonical, canonical_all, is_tuple_con, tuple_con, Scheme, Type};

#[derive(Debug, Clone, PartialEq)]
pub struct ConInfo {
    pub type_name: String,
    /// Position among the constructors of its type; drives structural ordering.
    pub tag: usize,
    pub arity: usize,
    pub scheme: Scheme,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataInfo {
    pub arity: usize,
    pub constructors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AliasInfo {
    pub params: Vec<String>,
    pub ty: TypeExpr,
}

/// Everything in scope for type checking: value schemes, data types,
/// constructors and aliases.
#[derive(Debug, Clone, Default)]
pub struct TypeEnv {
    pub values: HashMap<String, Scheme>,
    pub types: HashMap<String, DataInfo>,
    pub constructors: HashMap<String, ConInfo>,
    pub aliases: HashMap<String, AliasInfo>,
}

const BUILTIN_VALUES: &[(&str, &str)] = &[
    ("+", "Int -> Int -> Int"),
    ("-", "Int -> Int -> Int"),
    ("*", "Int -> Int -> Int"),
    ("div", "Int -> Int -> Int"),
    ("mod", "Int -> Int -> Int"),
    ("negate", "Int -> Int"),
    ("==", "a -> a -> Bool"),
    ("/=", "a -> a -> Bool"),
    ("<", "a -> a -> Bool"),
    ("<=", "a -> a -> Bool"),
    (">", "a -> a -> Bool"),
    (">=", "a -> a -> Bool"),
    ("otherwise", "Bool"),
    ("compare", "a -> a -> Ordering"),
    ("chr", "Int -> Char"),
    ("ord", "Char -> Int"),
    ("isAlpha", "Char -> Bool"),
    ("isDigit", "Char -> Bool"),
    ("isAlphaNum", "Char -> Bool"),
    ("isUpper", "Char -> Bool"),
    ("isLower", "Char -> Bool"),
    ("show", "Int -> String"),
];

impl TypeEnv {
    /// Built-in types and constructors plus the primitive operators.
    pub fn builtin() -> TypeEnv {
        let mut env = TypeEnv::default();
        env.types.insert("Int".into(), DataInfo { arity: 0, constructors: vec![] });
        env.types.insert("Char".into(), DataInfo { arity: 0, constructors: vec![] });
        let a = || Type::Gen(0);
        env.add_data("Bool", 0, vec![("False", vec![]), ("True", vec![])]);
        env.add_data("Ordering", 0, vec![("LT", vec![]), ("EQ", vec![]), ("GT", vec![])]);
        env.add_data("Maybe", 1, vec![("Nothing", vec![]), ("Just", vec![a()])]);
        env.add_data("[]", 1, vec![("[]", vec![]), (":", vec![a(), Type::list(a())])]);
        for n in 2..=4 {
            let name = tuple_con(n);
            let fields: Vec<Type> = (0..n as u32).map(Type::Gen).collect();
            env.add_data(&name, n, vec![(&name, fields)]);
        }
        env.aliases.insert(
            "String".into(),
            AliasInfo { params: vec![], ty: TypeExpr::List(Box::new(TypeExpr::Con("Char".into(), vec![]))) },
        );
        for (name, sig) in BUILTIN_VALUES {
            let te = syntax::parse_type(sig).expect("builtin signature");
            let (scheme, _) = env.scheme_of(&te).expect("builtin signature");
            env.values.insert(name.to_string(), scheme);
        }
        env
    }

    fn add_data(&mut self, name: &str, arity: usize, cons: Vec<(&str, Vec<Type>)>) {
        let result = Type::Con(name.to_string(), (0..arity as u32).map(Type::Gen).collect());
        let mut names = Vec::new();
        for (tag, (c, fields)) in cons.into_iter().enumerate() {
            let info = ConInfo {
                type_name: name.to_string(),
                tag,
                arity: fields.len(),
                scheme: Scheme { arity: arity as u32, ty: Type::arrows(fields, result.clone()) },
            };
            self.constructors.insert(c.to_string(), info);
            names.push(c.to_string());
        }
        self.types.insert(name.to_string(), DataInfo { arity, constructors: names });
    }

    /// Converts a signature to a scheme, quantifying its variables in order
    /// of first occurrence. Also returns the variable names.
    pub fn scheme_of(&self, te: &TypeExpr) -> Result<(Scheme, Vec<String>), String> {
        let mut vars = Vec::new();
        let ty = self.convert(te, &mut vars, true, 0)?;
        Ok((Scheme { arity: vars.len() as u32, ty }, vars))
    }

    /// Converts a type expression. Variables map to `Gen` indices in `vars`;
    /// new variables are appended when `extend` is set.
    pub(crate) fn convert(
        &self,
        te: &TypeExpr,
        vars: &mut Vec<String>,
        extend: bool,
        depth: usize,
    ) -> Result<Type, String> {
        if depth > 64 {
            return Err("type synonym expansion does not terminate".into());
        }
        Ok(match te {
            TypeExpr::Var(v) => match vars.iter().position(|x| x == v) {
                Some(i) => Type::Gen(i as u32),
                None if extend => {
                    vars.push(v.clone());
                    Type::Gen(vars.len() as u32 - 1)
                }
                None => return Err(format!("type variable {v} is not in scope")),
            },
            TypeExpr::List(t) => Type::list(self.convert(t, vars, extend, depth)?),
            TypeExpr::Tuple(ts) => {
                let ts = ts.iter().map(|t| self.convert(t, vars, extend, depth)).collect::<Result<_, _>>()?;
                Type::tuple(ts)
            }
            TypeExpr::Fun(a, b) => {
                Type::fun(self.convert(a, vars, extend, depth)?, self.convert(b, vars, extend, depth)?)
            }
            TypeExpr::Con(c, args) => {
                let args: Vec<Type> =
                    args.iter().map(|t| self.convert(t, vars, extend, depth)).collect::<Result<_, _>>()?;
                if let Some(alias) = self.aliases.get(c) {
                    if alias.params.len() != args.len() {
                        return Err(format!(
                            "type synonym {c} expects {} argument(s) but was given {}",
                            alias.params.len(),
                            args.len()
                        ));
                    }
                    let mut inner = alias.params.clone();
                    let body = self.convert(&alias.ty, &mut inner, false, depth + 1)?;
                    substitute_gens(&body, &args)
                } else if let Some(info) = self.types.get(c) {
                    if info.arity != args.len() {
                        return Err(format!(
                            "type {c} expects {} argument(s) but was given {}",
                            info.arity,
                            args.len()
                        ));
                    }
                    Type::Con(c.clone(), args)
                } else {
                    return Err(format!("unknown type {c}"));
                }
            }
        })
    }
}

pub(crate) fn substitute_gens(t: &Type, args: &[Type]) -> Type {
    match t {
        Type::Gen(i) => args[*i as usize].clone(),
        Type::Var(_) => t.clone(),
        Type::Con(c, ts) => Type::Con(c.clone(), ts.iter().map(|t| substitute_gens(t, args)).collect()),
        Type::Fun(a, b) => Type::fun(substitute_gens(a, args), substitute_gens(b, args)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypeErrorKind {
    General,
    Comprehension { text: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeError {
    pub span: Option<Span>,
    /// `definition of f`, `declaration of T` or `expression`.
    pub context: String,
    pub message: String,
    pub kind: TypeErrorKind,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            TypeErrorKind::Comprehension { text } => {
                if self.context == "expression" {
                    write!(f, "expression {text}: {}", self.message)
                } else {
                    write!(f, "{}, expression {text}: {}", self.context, self.message)
                }
            }
            TypeErrorKind::General => {
                if let Some(span) = self.span {
                    write!(f, "{span}: ")?;
                }
                write!(f, "type error in {}: {}", self.context, self.message)
            }
        }
    }
}

impl std::error::Error for TypeError {}
