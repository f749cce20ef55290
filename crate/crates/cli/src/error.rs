use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error("{0}")]
    Core(#[from] phopfield_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv error on {path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("json error on {path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

impl CliError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.as_ref().display().to_string();
        move |source| CliError::Io { path, source }
    }

    pub(crate) fn csv(path: impl AsRef<std::path::Path>) -> impl FnOnce(csv::Error) -> Self {
        let path = path.as_ref().display().to_string();
        move |source| CliError::Csv { path, source }
    }

    pub(crate) fn json(path: impl AsRef<std::path::Path>) -> impl FnOnce(serde_json::Error) -> Self {
        let path = path.as_ref().display().to_string();
        move |source| CliError::Json { path, source }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
