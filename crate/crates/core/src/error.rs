use thiserror::Error;

use crate::mask::MaskError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed document{}: {source}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Parse {
        line: Option<usize>,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("image {image:?}, mask {mask}: {source}")]
    Mask {
        image: String,
        mask: usize,
        #[source]
        source: MaskError,
    },

    #[error("image {image:?}: {message}")]
    Validation { image: String, message: String },

    #[error("dataset header: {0}")]
    Header(String),

    #[error("image ids do not line up: {0}")]
    Alignment(String),

    #[error("protocol violation in image {image:?}: {message}")]
    Protocol { image: String, message: String },

    #[error(transparent)]
    Kernel(#[from] crate::kernels::KernelError),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn validation(image: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            image: image.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn parse(line: Option<usize>, source: serde_json::Error) -> Self {
        Error::Parse { line, source }
    }

    /// True for errors caused by bad input data rather than the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Config(_))
    }
}
