//! Source to typed, normalized program.

pub mod ast;
pub mod expand;
pub mod lexer;
pub mod normalize;
pub mod parser;
pub mod types;

use thiserror::Error;

pub use ast::*;
pub use expand::expand_equivalences;
pub use normalize::normalize;
pub use parser::parse_program;
pub use types::assign_types;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrontendError {
    #[error("{span}: syntax error: {msg}")]
    Syntax { span: Span, msg: String },
    #[error("{span}: duplicate definition of {what}")]
    Duplicate { span: Span, what: String },
    #[error("{span}: new nested in instantiation {name}")]
    NewNested { span: Span, name: String },
    #[error("{span}: circular type equivalences are not allowed ({name})")]
    Circular { span: Span, name: String },
    #[error("{span}: undefined {what}")]
    Undefined { span: Span, what: String },
    #[error("{span}: {msg}")]
    Definition { span: Span, msg: String },
    #[error("{span}: type error: {msg}")]
    Type { span: Span, msg: String },
}

impl FrontendError {
    pub fn span(&self) -> Span {
        match self {
            FrontendError::Syntax { span, .. }
            | FrontendError::Duplicate { span, .. }
            | FrontendError::NewNested { span, .. }
            | FrontendError::Circular { span, .. }
            | FrontendError::Undefined { span, .. }
            | FrontendError::Definition { span, .. }
            | FrontendError::Type { span, .. } => *span,
        }
    }
}

/// Parse, expand, normalize and type a source file.
pub fn load(src: &str) -> Result<Program, FrontendError> {
    let p = parse_program(src)?;
    let p = expand_equivalences(p)?;
    let p = normalize(p);
    assign_types(p)
}
