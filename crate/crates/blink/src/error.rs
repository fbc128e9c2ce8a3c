use thiserror::Error;

/// Error type shared across the crate. The CLI maps `Parse` to exit code 2
/// and the two budget variants to exit code 3.
#[derive(Debug, Error)]
pub enum BlinkError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{what} out of range (0, 1]: {value}")]
    InvalidWeight { what: String, value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown node: {0}")]
    UnknownNode(String),

    #[error("reduced graph too large for exact evaluation: {edges} edges over cap {cap}")]
    CapExceeded { edges: usize, cap: usize },

    #[error("path budget exhausted: more than {max} paths retained")]
    BudgetExceeded { max: usize },

    #[error("no path exists between the given nodes")]
    Unreachable,

    #[error("series diverges: decay {beta} is not below 1/{spectral_radius}")]
    Divergent { beta: f64, spectral_radius: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numeric inconsistency: {0}")]
    Numeric(String),

    #[error("linear weighting leaves (0, 1]: {value}")]
    Range { value: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
