use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dims(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("invalid density operator: {0}")]
    InvalidState(String),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("spectrum has a non-integrable tail: {0}")]
    NonIntegrable(String),
    #[error("operation requires a filtered bath")]
    NoFilter,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("truncation audit failed at t={t}: top Fock population {population:.3e} exceeds 1e-6")]
    TruncationAudit { t: f64, population: f64 },
    #[error("positivity repairs exceeded limit ({0})")]
    PositivityRepairs(usize),
    #[error("grid too small: {mass_outside:.3e} of the mass lies outside r_max; try r_max >= {suggested:.3}")]
    GridTooSmall { mass_outside: f64, suggested: f64 },
    #[error("entropy {entropy:.6} exceeds what N={cutoff} can represent; try N >= {suggested}")]
    EntropyTooLarge { entropy: f64, cutoff: usize, suggested: usize },
    #[error("regime violation: {0}")]
    Regime(String),
    #[error("no fast thermalization channel at omega0")]
    NoThermalization,
    #[error("integrator failure: {0}")]
    Integrator(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
