//! The property-script language: syntax tree, parser, printer and validator.

pub mod ast;
mod lexer;
mod parser;
mod printer;
pub mod typeck;
mod validate;

use thiserror::Error;

pub use ast::*;
pub use parser::parse_spec;
pub use printer::{expr as render_expr, pretty_print};
pub use validate::{anchored_components, validate_spec, ValidationReport, Violation, ViolationKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {line}:{col}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}
