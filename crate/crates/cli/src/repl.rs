//! Line-oriented interactive session.

use std::io::{BufRead, IsTerminal, Write};
use std::path::PathBuf;

use stepwise_core::machine::{Machine, DEFAULT_BUDGET};
use stepwise_core::trace::{Status, Step};
use stepwise_core::Session;

use crate::{load_file, EXIT_OK};

const HELP: &str = "\
:load FILE   load a program (replaces the previous one)
:type EXPR   show the type of an expression
:step EXPR   step through an evaluation; then n (next), p (previous), q (quit)
:quit        leave the session
EXPR         evaluate to a final value";

fn show_step(out: &mut impl Write, step: &Step) {
    if step.index == 0 {
        let _ = writeln!(out, "  {}", step.display);
        return;
    }
    let dots = "....".repeat(step.depth);
    let _ = writeln!(out, "  {{ {} }}", step.text);
    if dots.is_empty() {
        let _ = writeln!(out, "= {}", step.display);
    } else {
        let _ = writeln!(out, "= {dots} {}", step.display);
    }
}

fn show_end(out: &mut impl Write, status: Option<Status>) {
    let _ = match status {
        Some(Status::Error(m)) => writeln!(out, "runtime error: {m}"),
        Some(Status::Truncated) => writeln!(out, "(no further step)"),
        _ => writeln!(out, "(end of evaluation)"),
    };
}

struct Repl {
    session: Session,
    stepping: Option<Machine>,
}

impl Repl {
    /// Handles one stepping command; false if the word is not one.
    fn step_command(&mut self, word: &str, out: &mut impl Write) -> bool {
        let Some(m) = self.stepping.as_mut() else { return false };
        match word {
            "n" => {
                if m.forward() {
                    show_step(out, m.current());
                } else {
                    show_end(out, m.status());
                }
            }
            "p" => {
                m.back();
                show_step(out, m.current());
            }
            "q" => self.stepping = None,
            _ => return false,
        }
        true
    }

    fn command(&mut self, line: &str, out: &mut impl Write) -> bool {
        let line = line.trim();
        if line.is_empty() {
            return true;
        }
        if self.stepping.is_some() {
            let words: Vec<&str> = line.split_whitespace().collect();
            if words.iter().all(|w| matches!(*w, "n" | "p" | "q")) {
                for w in words {
                    self.step_command(w, out);
                }
                return true;
            }
            self.stepping = None;
        }
        let (cmd, rest) = match line.split_once(char::is_whitespace) {
            Some((c, r)) => (c, r.trim()),
            None => (line, ""),
        };
        match cmd {
            ":quit" | ":q" => return false,
            ":help" | ":h" => {
                let _ = writeln!(out, "{HELP}");
            }
            ":load" | ":l" => match load_file(&PathBuf::from(rest)) {
                Ok((s, _)) => {
                    self.session = s;
                    let _ = writeln!(out, "loaded {rest}");
                }
                Err(e) => {
                    let _ = writeln!(out, "{e}");
                }
            },
            ":type" | ":t" => {
                let _ = match self.session.type_of(rest) {
                    Ok(t) => writeln!(out, "{t}"),
                    Err(e) => writeln!(out, "{e}"),
                };
            }
            ":step" | ":s" => match self.session.machine(rest, DEFAULT_BUDGET) {
                Ok(m) => {
                    show_step(out, m.current());
                    self.stepping = Some(m);
                }
                Err(e) => {
                    let _ = writeln!(out, "{e}");
                }
            },
            c if c.starts_with(':') => {
                let _ = writeln!(out, "unknown command {c}; try :help");
            }
            _ => {
                let _ = match self.session.run(line, 1000, DEFAULT_BUDGET) {
                    Ok(t) => match &t.status {
                        Status::Final | Status::Suspended => writeln!(out, "{}", t.result()),
                        Status::Truncated => writeln!(out, "(no value after {} steps)", t.step_count()),
                        Status::Error(m) => writeln!(out, "runtime error: {m}"),
                    },
                    Err(e) => writeln!(out, "{e}"),
                };
            }
        }
        true
    }
}

pub fn run(file: Option<PathBuf>) -> u8 {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut repl = Repl { session: Session::prelude(), stepping: None };
    if let Some(path) = file {
        repl.command(&format!(":load {}", path.display()), &mut out);
    }
    let interactive = std::io::stdin().is_terminal();
    let stdin = std::io::stdin();
    let mut lines = stdin.lock().lines();
    loop {
        if interactive {
            let _ = write!(out, "{}", if repl.stepping.is_some() { "step> " } else { "> " });
            let _ = out.flush();
        }
        let Some(Ok(line)) = lines.next() else { break };
        if !repl.command(&line, &mut out) {
            break;
        }
    }
    EXIT_OK
}
