//! A lazy, tracing interpreter for a small Haskell subset.

pub mod desugar;
pub mod machine;
pub mod prelude;
pub mod syntax;
pub mod trace;
pub mod typecheck;

use std::rc::Rc;

use thiserror::Error;

use desugar::{CoreProgram, E};
use machine::Machine;
use syntax::SyntaxError;
use trace::Trace;
use typecheck::{Scheme, TypeEnv, TypeError};

#[derive(Debug, Clone, Error)]
pub enum LoadError {
    #[error("{0}")]
    Syntax(#[from] SyntaxError),
    #[error("{0}")]
    Type(#[from] TypeError),
}

/// A checked program on top of the prelude, ready to evaluate goals.
#[derive(Debug, Clone)]
pub struct Session {
    pub env: TypeEnv,
    pub core: Rc<CoreProgram>,
}

impl Session {
    /// Only the prelude.
    pub fn prelude() -> Session {
        let p = prelude::load_prelude();
        Session { env: p.env, core: p.core }
    }

    /// The prelude extended with a user program; user definitions shadow
    /// prelude ones.
    pub fn load(source: &str) -> Result<Session, LoadError> {
        let base = Session::prelude();
        base.extend(source)
    }

    pub fn extend(&self, source: &str) -> Result<Session, LoadError> {
        let prog = syntax::parse_program(source)?;
        let env = typecheck::infer_program(&prog, &self.env)?;
        let mut core = (*self.core).clone();
        core.extend(&prog, &env);
        Ok(Session { env, core: Rc::new(core) })
    }

    /// Parses, checks and desugars a goal expression.
    pub fn goal(&self, text: &str) -> Result<(Scheme, E), LoadError> {
        let e = syntax::parse_expr(text)?;
        let scheme = typecheck::infer_expr(&e, &self.env)?;
        Ok((scheme, self.core.desugar_expr(&e)))
    }

    pub fn type_of(&self, text: &str) -> Result<String, LoadError> {
        Ok(self.goal(text)?.0.to_string())
    }

    pub fn machine(&self, text: &str, budget: usize) -> Result<Machine, LoadError> {
        let (_, e) = self.goal(text)?;
        Ok(Machine::new(self.core.clone(), e, budget))
    }

    pub fn run(&self, text: &str, max_steps: usize, budget: usize) -> Result<Trace, LoadError> {
        let (_, e) = self.goal(text)?;
        Ok(machine::run(self.core.clone(), e, max_steps, budget))
    }
}
