use thiserror::Error;

/// Errors raised by the library.
///
/// The CLI maps each variant onto an exit code through [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("loss is not differentiable at {at}: {reason}")]
    NonDifferentiable { at: f64, reason: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("degenerate loss: term {term} evaluates to zero at positive argument {arg}")]
    DegenerateLoss { term: usize, arg: f64 },
    #[error("iteration does not contract (factor {factor} >= 1)")]
    NoContraction { factor: f64 },
    #[error("term {term} never reaches level {level}: loss is bounded below it")]
    ThresholdNotAttained { term: usize, level: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("row {0} is identically zero")]
    ZeroRow(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("objective is unbounded below along the search direction")]
    Unbounded,
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("gave up after {attempts} attempts: {detail}")]
    GiveUp { attempts: usize, detail: String },
    #[error("weight scheme rejected: measured alpha {measured} exceeds bound {bound}")]
    AlphaTooLarge { measured: f64, bound: f64 },
    #[error("audit failure: {0}")]
    Audit(String),
    #[error("internal inconsistency: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 2 config, 3 numeric failure, 4 audit failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Dimension(_)
            | Error::ZeroRow(_)
            | Error::Parse(_)
            | Error::Unsupported(_)
            | Error::Io(_)
            | Error::Json(_) => 2,
            Error::Audit(_) => 4,
            _ => 3,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
