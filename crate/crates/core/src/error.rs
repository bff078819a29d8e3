use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("size mismatch: {0}")]
    Size(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("numerical domain error: {0}")]
    Domain(String),

    #[error("non-finite objective {value} at theta = {theta:?}")]
    Optimization { value: f64, theta: Vec<f64> },

    #[error("pool construction failed: {0}")]
    Construction(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
