//! The predefined functions: an embedded source text plus primitives.

use std::rc::Rc;

use crate::desugar::CoreProgram;
use crate::syntax;
use crate::typecheck::{self, TypeEnv};

/// Source of the equationally defined prelude functions.
pub const PRELUDE_SOURCE: &str = include_str!("prelude.hs");

/// Names the prelude provides, equational or primitive.
pub const PRELUDE_NAMES: &[&str] = &[
    "even", "odd", "max", "min", "compare", "fst", "snd", "&&", "||", "head", "tail", "++", "!!", "length",
    "reverse", "init", "last", "sum", "product", "and", "or", "take", "drop", "maximum", "minimum", "concat",
    "repeat", "replicate", "cycle", "iterate", "map", "filter", "foldr", "foldl", "foldl'", ".", "$", "$!", "zip",
    "zipWith", "takeWhile", "dropWhile", "any", "all", "lookup", "chr", "ord", "isAlpha", "isDigit", "isAlphaNum",
    "isUpper", "isLower", "show", "enumFrom", "enumFromTo", "enumFromThen", "enumFromThenTo",
];

/// Type environment and definitions of the prelude.
#[derive(Debug, Clone)]
pub struct Prelude {
    pub env: TypeEnv,
    pub core: Rc<CoreProgram>,
}

/// Parses, checks and desugars the embedded prelude.
pub fn load_prelude() -> Prelude {
    let prog = syntax::parse_program(PRELUDE_SOURCE).expect("prelude parses");
    let env = typecheck::infer_program(&prog, &TypeEnv::builtin()).expect("prelude type checks");
    let mut core = CoreProgram::primitives();
    core.extend(&prog, &env);
    Prelude { env, core: Rc::new(core) }
}
