use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("config: {field}: {message}")]
    Config { field: String, message: String },
    #[error("config parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unknown sweep parameter `{0}`")]
    UnknownParameter(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: malformed record on line {line}: {message}")]
    Record {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Model(#[from] fdhbf::Error),
}

pub type SimResult<T> = std::result::Result<T, SimError>;

pub(crate) fn config_err(field: impl Into<String>, message: impl Into<String>) -> SimError {
    SimError::Config {
        field: field.into(),
        message: message.into(),
    }
}
