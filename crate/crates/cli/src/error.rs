use qpiston_core::Error as CoreError;

/// Failures surfaced to the command line, each with a stable code and exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{source}")]
    Core {
        #[from]
        source: CoreError,
    },
    /// Run finished but broke a physics check (e.g. the second law).
    #[error("{0}")]
    Audit(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0} acceptance criteria failed")]
    Acceptance(usize),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_AUDIT: i32 = 3;
pub const EXIT_ACCEPTANCE: i32 = 4;

/// Machine-readable code for a core error.
pub fn core_code(e: &CoreError) -> &'static str {
    match e {
        CoreError::TruncationAudit { .. } => "truncation_audit",
        CoreError::PositivityRepairs(_) => "positivity_repairs",
        CoreError::GridTooSmall { .. } => "grid_too_small",
        CoreError::EntropyTooLarge { .. } => "entropy_too_large",
        CoreError::Regime(_) => "regime",
        CoreError::Integrator(_) => "integrator",
        CoreError::NoThermalization => "no_thermalization",
        CoreError::NotHermitian(_) | CoreError::InvalidState(_) => "invalid_state",
        CoreError::Io(_) => "io",
        CoreError::Dims(_)
        | CoreError::DimMismatch { .. }
        | CoreError::Param(_)
        | CoreError::NonIntegrable(_)
        | CoreError::NoFilter
        | CoreError::Unsupported(_)
        | CoreError::Parse(_) => "config",
    }
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core { source } => core_code(source),
            CliError::Audit(_) => "physics_audit",
            CliError::Io(_) => "io",
            CliError::Acceptance(_) => "acceptance",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.code() {
            "config" | "io" => EXIT_CONFIG,
            "acceptance" => EXIT_ACCEPTANCE,
            _ => EXIT_AUDIT,
        }
    }
}
