use thiserror::Error;

use crate::symexpr::parse::ParseError;
use crate::symexpr::ExprError;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("forms or operators live on different coframes")]
    CoframeMismatch,
    #[error("metric is degenerate or not positive definite")]
    DegenerateMetric,
    #[error("operation needs a complex scenario")]
    NotComplexScenario,
    #[error("frame is not invertible: {0}")]
    FrameNotInvertible(String),
    #[error("rank of {what} drops at {point:?}")]
    RankDrop { what: String, point: Vec<f64> },
    #[error("bracket generation not reached by depth {depth}; ranks {ranks:?}")]
    MaxDepthExceeded { depth: usize, ranks: Vec<usize> },
    #[error("requested order {requested} exceeds operator order {order}")]
    OrderExceedsOperator { requested: usize, order: usize },
    #[error("wrong distribution: {0}")]
    WrongDistribution(String),
    #[error("frame metric is not diagonal; the operator layer needs an orthogonal frame")]
    NonDiagonalMetric,
    #[error("projector onto {0} is not constant in the frame basis")]
    NonConstantProjector(String),
    #[error("witness kind {0} does not fit this scenario")]
    KindMismatch(String),
    #[error("quadrature did not converge: {coarse:e} vs {fine:e}")]
    QuadratureUnstable { coarse: f64, fine: f64 },
    #[error("declared holomorphic frame has non-holomorphic coefficient: {0}")]
    NotHolomorphic(String),
    #[error("invalid scenario: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
