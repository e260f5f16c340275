use alloc::string::String;

use crate::expr::ParseError;

/// Errors raised by the jet kernel and everything built on it.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("jet shape mismatch: ({lhs_vars} vars, order {lhs_order}) vs ({rhs_vars} vars, order {rhs_order})")]
    ShapeMismatch {
        lhs_vars: usize,
        lhs_order: usize,
        rhs_vars: usize,
        rhs_order: usize,
    },
    #[error("derivative budget exhausted (jet order is 0)")]
    OrderExhausted,
    #[error("jet order {requested} exceeds the provisioned maximum {available}")]
    OrderUnavailable { requested: usize, available: usize },
    #[error("division by a jet whose constant term is zero")]
    ZeroConstantTerm,
    #[error("constant term {0} is not the square of a rational")]
    NotASquare(String),
    #[error("field layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("metric is degenerate at the sample point")]
    DegenerateMetric,
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("scale {0} vanishes at the sample point")]
    VanishingScale(String),
    #[error("scale {0} is not an Einstein scale at the sample point")]
    NotEinstein(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("unknown scene `{0}`")]
    UnknownScene(String),
    #[error("could not find {wanted} admissible sample points after {attempts} attempts")]
    SamplingExhausted { wanted: usize, attempts: usize },
    #[error(transparent)]
    Parse(#[from] ParseError),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
