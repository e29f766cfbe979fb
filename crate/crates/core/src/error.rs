use std::path::PathBuf;

/// Errors raised by dataset handling, ranking, classification and search.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path} at row {row}, column {column}: {message}")]
    Csv {
        path: PathBuf,
        /// 1-based data row (header excluded).
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// No feature cleared the information-gain threshold. Callers may fall
    /// back to a top-m ranking instead of aborting.
    #[error("no feature passed the information gain threshold")]
    EmptyFilterResult,

    #[error("invalid config: {0}")]
    Config(String),
}

impl Error {
    /// True for errors caused by the input data rather than the run setup.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. } | Error::Csv { .. } | Error::InvalidData(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
