use std::path::PathBuf;

use radiflow_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("schema error at line {line}, key `{key}`: {message}")]
    Schema { key: String, line: usize, message: String },
    #[error("invalid input: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("missing artifacts: {}", .0.join(", "))]
    MissingArtifacts(Vec<String>),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed artifact {path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub type AppResult<T> = Result<T, AppError>;

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl std::fmt::Display) -> Self {
        AppError::Format { path: path.into(), message: message.to_string() }
    }

    /// 1 for bad input, 2 for anything that failed while computing.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Schema { .. } | AppError::Validation(_) | AppError::MissingArtifacts(_) => 1,
            AppError::Io { .. } | AppError::Format { .. } => 1,
            AppError::Core(e) => match e {
                CoreError::InvalidParams(_)
                | CoreError::AmbiguousRegime(_)
                | CoreError::InvalidFamily(_)
                | CoreError::PreconditionViolated(_)
                | CoreError::UnknownRegime(_)
                | CoreError::InvalidGrid(_)
                | CoreError::SmallnessExceeded { .. }
                | CoreError::DegenerateSplit => 1,
                _ => 2,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AppError::Schema { .. } => "SchemaError",
            AppError::Validation(_) => "ValidationError",
            AppError::Core(_) => "NumericalError",
            AppError::MissingArtifacts(_) => "MissingArtifacts",
            AppError::Io { .. } => "IoError",
            AppError::Format { .. } => "FormatError",
        }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        let mut v = serde_json::json!({ "error": self.kind(), "message": self.to_string() });
        match self {
            AppError::Schema { key, line, .. } => {
                v["key"] = key.clone().into();
                v["line"] = (*line).into();
            }
            AppError::MissingArtifacts(files) => v["missing"] = files.clone().into(),
            _ => {}
        }
        v.to_string()
    }
}
