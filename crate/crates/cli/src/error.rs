use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("stage `{stage}` needs `{missing}`; run that stage first")]
    StageDependencyMissing { stage: &'static str, missing: String },
    #[error("stage `{stage}` failed: {message}")]
    Stage { stage: String, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn stage(stage: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Self::Stage {
            stage: stage.into(),
            message: err.to_string(),
        }
    }

    /// 2 for configuration problems, 3 for everything that failed at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::ConfigInvalid(_) => 2,
            _ => 3,
        }
    }
}
