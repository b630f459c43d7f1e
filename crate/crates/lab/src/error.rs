use std::fmt;

use perenv_core::Error as CoreError;

/// Failure of an experiment, mapped onto the process exit code.
#[derive(Debug)]
pub enum LabError {
    /// Invalid configuration or mismatched inputs (exit code 2).
    Config(String),
    /// A numerical solver failed (exit code 3).
    Solver(CoreError),
    /// Reading or writing artifacts failed (exit code 3).
    Io(std::io::Error),
}

impl LabError {
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Config(_) => 2,
            LabError::Solver(_) | LabError::Io(_) => 3,
        }
    }

    /// JSON form for the summary file.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            LabError::Config(msg) => serde_json::json!({"kind": "configuration", "message": msg}),
            LabError::Solver(e) => serde_json::json!({
                "kind": "solver",
                "variant": variant(e),
                "message": e.to_string(),
            }),
            LabError::Io(e) => serde_json::json!({"kind": "io", "message": e.to_string()}),
        }
    }
}

fn variant(e: &CoreError) -> &'static str {
    match e {
        CoreError::ModelDefinition { .. } => "model-definition",
        CoreError::Configuration(_) => "configuration",
        CoreError::Domain(_) => "domain",
        CoreError::NonConvergence { .. } => "non-convergence",
        CoreError::Cfl { .. } => "cfl",
        CoreError::BlowUp { .. } => "blow-up",
        CoreError::DomainTooSmall { .. } => "domain-too-small",
        CoreError::ConstraintDrift { .. } => "constraint-drift",
        CoreError::IndefiniteHessian { .. } => "indefinite-hessian",
        CoreError::Assumption(_) => "assumption",
    }
}

impl fmt::Display for LabError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabError::Config(msg) => write!(f, "invalid configuration: {msg}"),
            LabError::Solver(e) => write!(f, "solver failure: {e}"),
            LabError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for LabError {}

impl From<CoreError> for LabError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Configuration(msg) => LabError::Config(msg),
            other => LabError::Solver(other),
        }
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e)
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Config(e.to_string())
    }
}

pub type LabResult<T> = Result<T, LabError>;
