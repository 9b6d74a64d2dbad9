use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("line {line}: `{key}`: {message}")]
    Parse { key: String, line: usize, message: String },
    #[error("line {line}: `{key}`: {message}")]
    Validation { key: String, line: usize, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Run(String),
}

/// Machine-readable form written to stderr on failure.
#[derive(Debug, Serialize)]
pub struct ErrorRecord<'a> {
    pub kind: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    pub message: String,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } => 2,
            CliError::Io { .. } | CliError::Run(_) => 1,
        }
    }

    pub fn record(&self) -> ErrorRecord<'_> {
        match self {
            CliError::Parse { key, line, message } => ErrorRecord {
                kind: "parse",
                key: Some(key),
                line: Some(*line),
                message: message.clone(),
            },
            CliError::Validation { key, line, message } => ErrorRecord {
                kind: "validation",
                key: Some(key),
                line: Some(*line),
                message: message.clone(),
            },
            CliError::Io { .. } => ErrorRecord {
                kind: "io",
                key: None,
                line: None,
                message: self.to_string(),
            },
            CliError::Run(m) => ErrorRecord {
                kind: "run",
                key: None,
                line: None,
                message: m.clone(),
            },
        }
    }

    /// One-line JSON error record.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&serde_json::json!({ "error": self.record() })).expect("record serializes")
    }
}
