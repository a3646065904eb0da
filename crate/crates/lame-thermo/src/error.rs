use thiserror::Error;

/// Errors surfaced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("power iteration stalled: last two Rayleigh quotients {previous:.12e}, {current:.12e}")]
    PowerIterationStalled { previous: f64, current: f64 },

    #[error("non-finite value at {context}")]
    NonFinite { context: String },

    #[error("numerical blow-up at t = {t}; last good state at t = {last_good_t}")]
    Blowup { t: f64, last_good_t: f64 },

    #[error("constant {name} came out non-positive ({value}); constraint: {constraint}")]
    DegenerateConstant {
        name: String,
        value: f64,
        constraint: String,
    },

    #[error("scenario rejected:\n{}", .0.join("\n"))]
    ScenarioRejected(Vec<String>),

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error("config parse error: {0}")]
    ConfigParse(String),
}

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
