//! Expression language for metrics and nonlinearities.

mod eval;
mod lexer;
mod parser;
mod spec;
mod tree;

pub use eval::{evaluate, EvalContext};
pub use lexer::{tokenize, Func, Spanned, Token};
pub use parser::{parse, parse_tokens};
pub use spec::{preset, Failure, MetricSpec, NonlinearitySpec, Preset, ValidationReport, PRESETS};
pub use tree::{BinaryOp, Expr, UnaryOp};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("unknown character {ch:?} at offset {offset}")]
    UnknownChar { offset: usize, ch: char },
    #[error("unknown identifier {name:?} at offset {offset}")]
    UnknownIdent { offset: usize, name: String },
    #[error("malformed number {text:?} at offset {offset}")]
    BadNumber { offset: usize, text: String },
    #[error("unbalanced parenthesis at offset {offset}")]
    Unbalanced { offset: usize },
    #[error("unexpected {found} at offset {offset}")]
    Unexpected { offset: usize, found: String },
    #[error("derivative applied to a non-variable at offset {offset}")]
    DerivativeOfExpression { offset: usize },
    #[error("division by near-zero value {value:e} at grid point {point}")]
    Singular { point: usize, value: f64 },
    #[error("component u{} referenced but the field has {available}", .comp + 1)]
    Component { comp: usize, available: usize },
    #[error("derivative dx{axis} in dimension {d}")]
    Axis { axis: usize, d: usize },
    #[error("expression uses a gradient but none was supplied")]
    MissingGradient,
    #[error("expression uses a direction w but none was supplied")]
    MissingDirection,
    #[error("{0}")]
    Invalid(String),
}
