use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Info,
    Warning,
    Error,
}

/// Machine-readable note emitted alongside results, one JSON object per line on stderr.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub level: Level,
    pub code: String,
    pub message: String,
}

impl Diagnostic {
    pub fn warning(code: &str, message: impl Into<String>) -> Self {
        Diagnostic { level: Level::Warning, code: code.into(), message: message.into() }
    }

    pub fn info(code: &str, message: impl Into<String>) -> Self {
        Diagnostic { level: Level::Info, code: code.into(), message: message.into() }
    }

    pub fn error(code: &str, message: impl Into<String>) -> Self {
        Diagnostic { level: Level::Error, code: code.into(), message: message.into() }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("diagnostic serializes")
    }
}
