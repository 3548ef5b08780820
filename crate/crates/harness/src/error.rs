use std::path::PathBuf;

use nhsht_core::AssumptionReportF64;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] nhsht_core::Error),

    #[error("instance violates the separation/validity assumptions ({} violations)", .0.violations.len())]
    Assumptions(Box<AssumptionReportF64>),

    #[error("accounting identity failed: {0}")]
    Accounting(String),

    #[error("serialization failed: {0}")]
    Serialization(String),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Config(_) => "config",
            HarnessError::Io { .. } => "io",
            HarnessError::Core(e) => e.kind(),
            HarnessError::Assumptions(_) => "assumptions",
            HarnessError::Accounting(_) => "accounting",
            HarnessError::Serialization(_) => "serialization",
        }
    }

    /// Machine-readable description written to stderr by the CLI.
    pub fn to_json(&self) -> serde_json::Value {
        let mut value = json!({ "error": self.kind(), "message": self.to_string() });
        if let HarnessError::Assumptions(report) = self {
            value["report"] = serde_json::to_value(report.as_ref()).unwrap_or_default();
        }
        value
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Serialization(e.to_string())
    }
}
