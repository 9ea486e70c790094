use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("bias p[{index}] = {value} is outside the open interval (0, 1)")]
    InvalidBias { index: usize, value: String },

    #[error("dimension mismatch: expected n = {expected}, found n = {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} = {value} is out of range ({constraint})")]
    OutOfRange {
        what: &'static str,
        value: String,
        constraint: String,
    },

    #[error("ground set size n = {n} exceeds the cap {cap} for {context}")]
    OverCap {
        n: usize,
        cap: usize,
        context: &'static str,
    },

    #[error("base tensors have mixed arities ({first} and {other})")]
    MixedArity { first: usize, other: usize },

    /// A construction is not a weighted hypergraph; `class` names the failing entry.
    #[error("validity failure at {class}: value {value}")]
    Validity { class: String, value: String },

    #[error("division by non-positive marginal {value} at {context}")]
    NonPositiveMarginal { context: String, value: String },

    #[error("parameter outside the regime: {0}")]
    Regime(String),

    #[error("operator is not self-adjoint with respect to the weighting (defect {defect:e})")]
    NotSelfAdjoint { defect: f64 },

    #[error("eigensolver did not converge within {max_iter} iterations")]
    NonConvergence { max_iter: usize },

    #[error("family is not {r}-wise intersecting")]
    NotIntersecting { r: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn out_of_range(
    what: &'static str,
    value: impl ToString,
    constraint: impl Into<String>,
) -> Error {
    Error::OutOfRange {
        what,
        value: value.to_string(),
        constraint: constraint.into(),
    }
}
