use std::fmt;

/// Process exit status of the command-line tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Validation = 1,
    Numeric = 2,
    Acceptance = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    /// Offending file or config field, if any.
    pub context: Option<String>,
    pub message: String,
}

impl CliError {
    pub fn validation(context: impl Into<String>, message: impl fmt::Display) -> Self {
        Self {
            kind: ExitKind::Validation,
            context: Some(context.into()),
            message: message.to_string(),
        }
    }

    pub fn acceptance(message: impl fmt::Display) -> Self {
        Self {
            kind: ExitKind::Acceptance,
            context: None,
            message: message.to_string(),
        }
    }

    /// Classifies a library error; `context` names what was being processed.
    pub fn core(context: impl Into<String>, err: spinbath_core::Error) -> Self {
        Self {
            kind: if err.is_numeric() { ExitKind::Numeric } else { ExitKind::Validation },
            context: Some(context.into()),
            message: err.to_string(),
        }
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Self::validation(path.display().to_string(), err)
    }

    pub fn exit_code(&self) -> i32 {
        self.kind as i32
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.context {
            Some(c) => write!(f, "{c}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;
