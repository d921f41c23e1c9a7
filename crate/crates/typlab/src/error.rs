use thiserror::Error;

pub type Result<T> = std::result::Result<T, TyplabError>;

#[derive(Debug, Error)]
pub enum TyplabError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] typlab_core::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("output: {0}")]
    Output(String),

    /// The run completed but at least one numerical check failed.
    #[error("{} numerical check(s) failed; first: {}", .0.len(), .0.first().map(String::as_str).unwrap_or(""))]
    Validation(Vec<String>),
}

impl TyplabError {
    /// 0 success, 1 usage or configuration, 2 numerical validation failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Validation(_) => 2,
            _ => 1,
        }
    }
}

impl From<toml::de::Error> for TyplabError {
    fn from(e: toml::de::Error) -> Self {
        Self::Config(e.to_string())
    }
}
