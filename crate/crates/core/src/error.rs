use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum HolabError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("join error: {0}")]
    Join(String),
    #[error("precondition error: {0}")]
    Precondition(String),
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("validation error at `{path}`: {message}")]
    Validation { path: String, message: String },
    #[error("expression error: {0}")]
    Expr(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<HolabError>,
    },
}

impl HolabError {
    pub fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        HolabError::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Wraps the error with a context string (scenario name, command, ...).
    pub fn context(self, context: impl Into<String>) -> Self {
        HolabError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, HolabError>;
