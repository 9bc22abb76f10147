use std::path::PathBuf;

/// Errors from file formats, IO and the experiment runners.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] bundlescope_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("not a checkpoint: bad magic {found:?}")]
    BadMagic { found: Vec<u8> },

    #[error("unsupported checkpoint version {found:?}, expected {expected:?}")]
    UnsupportedVersion { found: String, expected: String },

    #[error("checkpoint length mismatch: manifest needs {expected} bytes, file has {actual}")]
    LengthMismatch { expected: u64, actual: u64 },

    #[error("malformed checkpoint header: {0}")]
    Header(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("config file {path}, line {line}: {message}")]
    ConfigFile {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Io {
            path: path.into(),
            source,
        })
    }
}
