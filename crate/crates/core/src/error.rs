use thiserror::Error;

use crate::integrator::TrajectoryRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A statistical diagnostic could not be formed from its input.
    #[error("diagnostic failed: {0}")]
    Diagnostic(String),

    #[error("moment of order p={p} diverges for a {beta}-stable law (need p < beta)")]
    MomentDivergence { p: f64, beta: f64 },

    /// Non-finite coefficient produced by the integrator. The partial record
    /// holds everything recorded before the failing step.
    #[error("blow-up at t={t}")]
    BlowUp {
        t: f64,
        partial: Option<Box<TrajectoryRecord>>,
    },

    #[error("alpha calibration failed: {0}")]
    Calibration(String),

    #[error("insufficient coverage: {0}")]
    Coverage(String),

    #[error("observable schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("config: {0}")]
    ConfigKey(String),

    #[error("unknown check `{0}`")]
    UnknownCheck(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}

// Display text only; a blow-up would otherwise dump its whole partial record.
impl std::fmt::Debug for Error {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self}")
    }
}
