use std::fmt;

use tfdmagic_core::Error as CoreError;

/// Failure of a CLI run. `reason` is a stable machine-readable code.
#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub reason: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Validation,
    NonConvergence,
    Verification,
}

impl CliError {
    pub fn validation(reason: &str, message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Validation,
            reason: reason.into(),
            message: message.into(),
        }
    }

    pub fn verification(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Verification,
            reason: "verification_failed".into(),
            message: message.into(),
        }
    }

    pub fn io(what: &str, e: std::io::Error) -> Self {
        Self::validation("io", format!("{what}: {e}"))
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            Kind::Validation => 1,
            Kind::NonConvergence => 2,
            Kind::Verification => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let kind = if e.is_convergence_failure() || matches!(e, CoreError::IllConditioned(_) | CoreError::Eigen) {
            Kind::NonConvergence
        } else {
            Kind::Validation
        };
        Self {
            kind,
            reason: e.reason().into(),
            message: e.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.reason, self.message)
    }
}

impl std::error::Error for CliError {}
