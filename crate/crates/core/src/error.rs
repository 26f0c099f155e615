use thiserror::Error;

/// Errors raised by the numerical library.
///
/// The CLI maps each variant onto an exit code through [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("band {j} exceeds the largest admissible band {j_max}")]
    BandOverflow { j: usize, j_max: usize },

    #[error("cube scale {j} is larger than the box (side {side})")]
    Scale { j: usize, side: f64 },

    #[error("unsupported norm: {0}")]
    Tag(String),

    #[error("frequency envelope undefined for a zero field")]
    UndefinedEnvelope,

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error(transparent)]
    Io(#[from] IoError),

    #[error(transparent)]
    Expr(#[from] crate::expr::ExprError),

    #[error("inner solve did not converge at step {step} (residual {residual:e})")]
    InnerSolve { step: usize, residual: f64 },

    #[error("non-finite value encountered at step {step}")]
    NotFinite { step: usize },

    #[error("iteration diverged after {iters} steps (contraction ratio {ratio:.3})")]
    Divergence { iters: usize, ratio: f64, trace: Box<crate::quasi::IterationTrace> },

    #[error("data too large: l1H^s gauge {gauge:e} exceeds eps0 = {eps0:e}")]
    Smallness { gauge: f64, eps0: f64 },
}

impl Error {
    /// Exit code contract of the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InnerSolve { .. } | Error::NotFinite { .. } | Error::Divergence { .. } => 2,
            _ => 1,
        }
    }

    /// Library module the error originates from, used in `ERROR` records.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Config(_) | Error::Dimension(_) => "field_core",
            Error::Io(_) => "field_io",
            Error::BandOverflow { .. } => "lp_multipliers",
            Error::Scale { .. } | Error::Tag(_) | Error::UndefinedEnvelope => "dyadic_spaces",
            Error::Parameter(_) => "estimate_lab",
            Error::Expr(_) => "expr_dsl",
            Error::InnerSolve { .. } | Error::NotFinite { .. } => "linear_prop",
            Error::Divergence { .. } | Error::Smallness { .. } => "quasilinear",
        }
    }
}

/// Failures while reading or writing DFF1 field files.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("bad header: {0}")]
    Header(String),

    #[error("dimension overflow: {0}")]
    Overflow(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("i/o failure: {0}")]
    Os(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
