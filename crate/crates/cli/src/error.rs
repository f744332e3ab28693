use std::path::PathBuf;

use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Core(#[from] wkb_core::Error),

    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },

    /// A property suite or certificate did not pass.
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(e) => e.kind(),
            CliError::Io { .. } => "io",
            CliError::Check(_) => "check",
        }
    }

    /// One-line JSON object for scripts.
    pub fn machine_line(&self) -> String {
        let mut obj = serde_json::json!({ "error": self.kind(), "message": self.to_string() });
        if let CliError::Config(c) = self {
            obj["issues"] = c
                .0
                .iter()
                .map(|i| serde_json::json!({ "line": i.line, "key": i.key, "message": i.message }))
                .collect();
        }
        obj.to_string()
    }
}
