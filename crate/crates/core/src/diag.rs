//! Structured diagnostics with stable codes.

use std::fmt;

use crate::frontend::Span;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Code {
    /// Some literals can never be scheduled.
    E001,
    /// Final instantiation of a head variable is weaker than declared.
    E002,
    /// Branches of a disjunction or if-then-else disagree on new-ness.
    E003,
    /// A declared instantiation does not describe the declared type.
    E004,
    /// Deconstruct on a possibly unbound solver term.
    W001,
    /// An instantiation names a constructor its type does not have.
    W002,
    /// Syntax, definition or type error from the frontend.
    P001,
    /// Internal invariant violation.
    I001,
}

impl Code {
    pub fn severity(self) -> Severity {
        match self {
            Code::W001 | Code::W002 => Severity::Warning,
            _ => Severity::Error,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Code::E001 => "E001",
            Code::E002 => "E002",
            Code::E003 => "E003",
            Code::E004 => "E004",
            Code::W001 => "W001",
            Code::W002 => "W002",
            Code::P001 => "P001",
            Code::I001 => "I001",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Diagnostic {
    pub span: Span,
    pub code: Code,
    /// `name/arity` and 1-based mode number, when the diagnostic belongs to a check.
    pub pred: Option<String>,
    pub mode: Option<usize>,
    pub message: String,
}

impl Diagnostic {
    pub fn new(code: Code, span: Span, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            span,
            code,
            pred: None,
            mode: None,
            message: message.into(),
        }
    }

    pub fn in_mode(mut self, pred: &str, mode: usize) -> Diagnostic {
        self.pred = Some(pred.to_string());
        self.mode = Some(mode);
        self
    }

    pub fn severity(&self) -> Severity {
        self.code.severity()
    }

    pub fn is_error(&self) -> bool {
        self.severity() == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity() {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {sev}[{}]", self.span, self.code.as_str())?;
        match (&self.pred, self.mode) {
            (Some(p), Some(m)) => write!(f, " in {p} mode {m}")?,
            (Some(p), None) => write!(f, " in {p}")?,
            _ => {}
        }
        write!(f, ": {}", self.message)
    }
}
