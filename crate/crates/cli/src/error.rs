use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error(transparent)]
    Data(#[from] badge_core::Error),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("dynamics did not converge: {0}")]
    NotConverged(String),
}

impl CliError {
    pub fn config(problems: Vec<String>) -> Self {
        CliError::Config(problems)
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(
                badge_core::Error::InvalidParameter { .. } | badge_core::Error::EmptyGrid,
            ) => 2,
            CliError::Data(_) | CliError::Io { .. } => 3,
            CliError::NotConverged(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            4 => "not_converged",
            _ => "data",
        }
    }

    /// One-line JSON error record.
    pub fn record(&self) -> String {
        let mut rec = serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let CliError::Config(problems) = self {
            rec["fields"] = serde_json::json!(problems);
        }
        rec.to_string()
    }
}
