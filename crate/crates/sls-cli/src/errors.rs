//! CLI error type: every refusal carries a machine-readable reason code
//! and an exit code, emitted as one JSON line on stderr.

use sls_core::CoreError;

#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            exit_code: 1,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: "usage",
            message: message.into(),
            exit_code: 2,
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new("config-error", message)
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.code, "message": self.message }).to_string()
    }
}

pub fn core_error_code(e: &CoreError) -> &'static str {
    match e {
        CoreError::DimensionMismatch { .. } => "dimension-mismatch",
        CoreError::InvalidParam(_) => "invalid-param",
        CoreError::UnknownScheme(_) => "unknown-scheme",
        CoreError::AssumptionViolated { .. } => "assumption-violated",
        CoreError::EtaZero { .. } => "eta-zero",
        CoreError::OutsideRange { .. } => "outside-range",
        CoreError::NonCoercive => "non-coercive",
        CoreError::NotPositiveSemidefinite { .. } => "not-psd",
        CoreError::EpsOutOfRange { .. } => "eps-out-of-range",
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let exit_code = if matches!(e, CoreError::UnknownScheme(_)) {
            2
        } else {
            1
        };
        Self {
            code: core_error_code(&e),
            message: e.to_string(),
            exit_code,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new("io-error", e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::new("io-error", e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
