//! Command-line front end for the stepwise interpreter.

mod repl;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use stepwise_core::machine::DEFAULT_BUDGET;
use stepwise_core::prelude::PRELUDE_SOURCE;
use stepwise_core::syntax::parse_program;
use stepwise_core::trace::{render_trace_lines, render_trace_plain, render_trace_structured, Status};
use stepwise_core::Session;

pub const EXIT_OK: u8 = 0;
pub const EXIT_STATIC: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

const SCHEMA: &str = include_str!("../schema/trace.schema.json");

#[derive(Parser)]
#[command(
    name = "stepwise",
    version,
    about = "Step-by-step lazy evaluator for a small Haskell subset",
    after_help = "Supported: equations with patterns and guards, where/let, lambdas, sections, if/case, \
                  data declarations and type synonyms, tuples of 2 to 4 components, bang patterns."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an expression, printing its trace or value.
    Eval(EvalArgs),
    /// Interactive session.
    Repl {
        /// Program to load at start.
        file: Option<PathBuf>,
    },
    /// Print the JSON schema of the structured trace format.
    Schema,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Plain,
    Json,
    #[value(alias = "json-lines")]
    Jsonl,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Trace,
    ValueOnly,
    TypecheckOnly,
    DumpPrelude,
}

#[derive(clap::Args)]
struct EvalArgs {
    /// Program file; only the prelude is loaded when absent.
    file: Option<PathBuf>,
    /// Goal expression.
    #[arg(short = 'e', long = "expr")]
    expr: Option<String>,
    /// Steps after the goal before the trace is truncated.
    #[arg(long, default_value_t = 1000)]
    max_steps: usize,
    #[arg(long, value_enum, default_value = "plain")]
    format: Format,
    /// Wrap column for displayed expressions in plain output.
    #[arg(long, default_value_t = 60, value_parser = clap::value_parser!(u16).range(20..))]
    wrap: u16,
    /// Do not wrap long lines.
    #[arg(long)]
    no_wrap: bool,
    /// Constructor cells forced between two `continue?` steps.
    #[arg(long, default_value_t = DEFAULT_BUDGET as u32, value_parser = clap::value_parser!(u32).range(1..))]
    continue_budget: u32,
    #[arg(long, value_enum, default_value = "trace")]
    mode: Mode,
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().write_all(text.as_bytes());
}

macro_rules! outln {
    ($($t:tt)*) => {
        emit(&format!("{}\n", format_args!($($t)*)))
    };
}

pub(crate) fn load_file(path: &Path) -> Result<(Session, String), String> {
    let source = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let session = Session::load(&source).map_err(|e| e.to_string())?;
    Ok((session, source))
}

fn eval(args: EvalArgs) -> u8 {
    if args.mode == Mode::DumpPrelude {
        emit(PRELUDE_SOURCE);
        return EXIT_OK;
    }
    let (session, source) = match &args.file {
        Some(path) => match load_file(path) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("{e}");
                return EXIT_STATIC;
            }
        },
        None => (Session::prelude(), String::new()),
    };
    if args.mode == Mode::TypecheckOnly {
        if let Ok(prog) = parse_program(&source) {
            for group in prog.functions() {
                if let Some(s) = session.env.values.get(&group.name) {
                    outln!("{} :: {s}", group.name);
                }
            }
        }
        if let Some(expr) = &args.expr {
            match session.type_of(expr) {
                Ok(t) => outln!("{expr} :: {t}"),
                Err(e) => {
                    eprintln!("{e}");
                    return EXIT_STATIC;
                }
            }
        }
        return EXIT_OK;
    }
    let Some(expr) = &args.expr else {
        eprintln!("error: an expression is required (-e EXPR)");
        return EXIT_USAGE;
    };
    let trace = match session.run(expr, args.max_steps, args.continue_budget as usize) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_STATIC;
        }
    };
    match args.mode {
        Mode::ValueOnly => match &trace.status {
            Status::Final => outln!("{}", trace.result()),
            Status::Suspended => {
                outln!("{}", trace.result());
                eprintln!("evaluation suspended after {} steps", trace.step_count());
            }
            Status::Truncated => eprintln!("evaluation truncated after {} steps", trace.step_count()),
            Status::Error(_) => {}
        },
        _ => match args.format {
            Format::Plain => {
                let width = if args.no_wrap { None } else { Some(args.wrap as usize) };
                emit(&render_trace_plain(&trace, width));
            }
            Format::Json => {
                outln!("{}", serde_json::to_string_pretty(&render_trace_structured(&trace)).expect("json"));
            }
            Format::Jsonl => emit(&render_trace_lines(&trace)),
        },
    }
    if let Status::Error(msg) = &trace.status {
        eprintln!("runtime error: {msg}");
        return EXIT_RUNTIME;
    }
    EXIT_OK
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.command {
        Command::Eval(args) => eval(args),
        Command::Repl { file } => repl::run(file),
        Command::Schema => {
            emit(SCHEMA);
            EXIT_OK
        }
    };
    ExitCode::from(code)
}
