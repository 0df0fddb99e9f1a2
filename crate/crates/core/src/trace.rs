//! Steps, traces and their plain-text and structured renderings.

use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JustificationKind {
    Goal,
    Equation,
    Primitive,
    Binding,
    Continue,
    Final,
}

impl JustificationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            JustificationKind::Goal => "goal",
            JustificationKind::Equation => "equation",
            JustificationKind::Primitive => "primitive",
            JustificationKind::Binding => "binding",
            JustificationKind::Continue => "continue",
            JustificationKind::Final => "final",
        }
    }
}

/// One rendered reduction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub index: usize,
    pub display: String,
    pub kind: JustificationKind,
    /// Justification text; empty for the goal.
    pub text: String,
    /// Number of elided enclosing contexts.
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Final,
    Truncated,
    Suspended,
    Error(String),
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Final => "final",
            Status::Truncated => "truncated",
            Status::Suspended => "suspended",
            Status::Error(_) => "error",
        }
    }

    pub fn message(&self) -> Option<&str> {
        match self {
            Status::Error(m) => Some(m),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<Step>,
    pub status: Status,
}

impl Trace {
    /// Number of steps after the goal.
    pub fn step_count(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    /// Display of the last step.
    pub fn result(&self) -> &str {
        self.steps.last().map(|s| s.display.as_str()).unwrap_or("")
    }
}

/// Splits a display line at spaces so that lines stay within `width`
/// columns where possible; continuation lines get a hanging indent.
pub fn wrap(line: &str, width: usize, indent: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    for word in line.split(' ') {
        let fresh = current.trim().is_empty();
        if !fresh && current.len() + 1 + word.len() > width {
            out.push(std::mem::replace(&mut current, " ".repeat(indent)));
            current.push_str(word);
        } else {
            if !current.is_empty() {
                current.push(' ');
            }
            current.push_str(word);
        }
    }
    out.push(current);
    out
}

/// Plain rendering: the goal indented by two spaces, then for every step a
/// `  { justification }` line and a `= display` line.
pub fn render_trace_plain(trace: &Trace, width: Option<usize>) -> String {
    let mut out = String::new();
    for step in &trace.steps {
        if step.index == 0 {
            out.push_str("  ");
            out.push_str(&step.display);
            out.push('\n');
            continue;
        }
        out.push_str(&format!("  {{ {} }}\n", step.text));
        let dots = "....".repeat(step.depth);
        let line = if dots.is_empty() { format!("= {}", step.display) } else { format!("= {dots} {}", step.display) };
        match width {
            Some(w) => {
                for l in wrap(&line, w, 6) {
                    out.push_str(&l);
                    out.push('\n');
                }
            }
            None => {
                out.push_str(&line);
                out.push('\n');
            }
        }
    }
    match &trace.status {
        Status::Final => {}
        Status::Truncated => out.push_str(&format!("  [truncated after {} steps]\n", trace.step_count())),
        Status::Suspended => {}
        Status::Error(m) => out.push_str(&format!("  [runtime error: {m}]\n")),
    }
    out
}

pub fn step_json(step: &Step) -> Value {
    json!({
        "index": step.index,
        "display": step.display,
        "justification_kind": step.kind.as_str(),
        "justification_text": step.text,
        "depth": step.depth,
    })
}

/// Structured rendering with a versioned schema.
pub fn render_trace_structured(trace: &Trace) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "status": trace.status.name(),
        "message": trace.status.message(),
        "step_count": trace.step_count(),
        "steps": trace.steps.iter().map(step_json).collect::<Vec<_>>(),
    })
}

/// Line-delimited structured rendering: a header object, one object per
/// step, and a closing status object.
pub fn render_trace_lines(trace: &Trace) -> String {
    let mut out = String::new();
    out.push_str(&json!({ "schema_version": SCHEMA_VERSION, "type": "header" }).to_string());
    out.push('\n');
    for step in &trace.steps {
        let mut v = step_json(step);
        v["type"] = json!("step");
        out.push_str(&v.to_string());
        out.push('\n');
    }
    let end = json!({
        "type": "end",
        "status": trace.status.name(),
        "message": trace.status.message(),
        "step_count": trace.step_count(),
    });
    out.push_str(&end.to_string());
    out.push('\n');
    out
}
