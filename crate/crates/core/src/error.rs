use thiserror::Error;

/// Errors produced anywhere in the simulation and analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("mode {0} is not part of the layout")]
    UnknownMode(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("operator is not Hermitian (max |H - H^dag| = {0:e})")]
    NotHermitian(f64),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("integrator step size underflow at t = {t} ns (h = {h:e}); try a smaller Hilbert space or a larger output spacing")]
    Stiffness { t: f64, h: f64 },

    #[error("degenerate Liouvillian: {0}")]
    DegenerateLiouvillian(String),

    #[error("g2 undefined: mean occupation {0:e} is below 1e-12")]
    UndefinedG2(f64),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("ill-posed fit: {0}")]
    IllPosed(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable tag, used in CLI error reports and poisoned sweep cells.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDimension(_) => "invalid-dimension",
            Error::LayoutMismatch(_) => "layout-mismatch",
            Error::UnknownMode(_) => "unknown-mode",
            Error::InvalidState(_) => "invalid-state",
            Error::NotHermitian(_) => "not-hermitian",
            Error::InvalidCircuit(_) => "invalid-circuit",
            Error::InvalidFrame(_) => "invalid-frame",
            Error::Stiffness { .. } => "stiffness",
            Error::DegenerateLiouvillian(_) => "degenerate-liouvillian",
            Error::UndefinedG2(_) => "undefined-g2",
            Error::NoConvergence(_) => "no-convergence",
            Error::FitFailed(_) => "fit-failed",
            Error::IllPosed(_) => "ill-posed",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    /// Process exit status: 2 for configuration problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_)
            | Error::InvalidCircuit(_)
            | Error::InvalidFrame(_)
            | Error::InvalidDimension(_)
            | Error::UnknownMode(_)
            | Error::LayoutMismatch(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
