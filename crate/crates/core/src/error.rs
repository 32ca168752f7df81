use thiserror::Error;

/// Errors raised by the simulator.
///
/// Variants map one-to-one onto the exit-code classes used by the `qbm`
/// binary (see [`Error::exit_code`]).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{what} did not converge (residual estimate {residual:.3e} at {at:.6})")]
    NumericalFailure {
        what: String,
        residual: f64,
        at: f64,
    },

    #[error("time {t} outside solved horizon [0, {horizon}]")]
    OutOfRange { t: f64, horizon: f64 },

    #[error("grid does not cover the state: mass deficit {deficit:.3e}")]
    Coverage { deficit: f64 },

    #[error("grid under-resolves the kernel: {0}")]
    Resolution(String),

    #[error("s-ordering can only be lowered (requested {from} -> {to})")]
    Direction { from: f64, to: f64 },

    #[error("pointer weight kernel is not positive definite yet (smallest eigenvalue {min_eig:.6e})")]
    NotYetDefined { min_eig: f64 },

    #[error("propagator matrix is singular (det V = {det:.3e})")]
    SingularPropagator { det: f64 },

    #[error("Husimi positivity violated: min {min:.3e} against max {max:.3e}")]
    ConventionViolation { min: f64, max: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code for this error class: 2 usage, 3 I/O, 4 domain or
    /// range, 5 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io(_) => 3,
            Error::Domain(_)
            | Error::Unsupported(_)
            | Error::OutOfRange { .. }
            | Error::Direction { .. }
            | Error::NotYetDefined { .. } => 4,
            Error::NumericalFailure { .. }
            | Error::Coverage { .. }
            | Error::Resolution(_)
            | Error::SingularPropagator { .. }
            | Error::ConventionViolation { .. } => 5,
        }
    }

    /// Short machine-readable tag for error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Unsupported(_) => "unsupported",
            Error::Config(_) => "config",
            Error::NumericalFailure { .. } => "numerical_failure",
            Error::OutOfRange { .. } => "out_of_range",
            Error::Coverage { .. } => "coverage",
            Error::Resolution(_) => "resolution",
            Error::Direction { .. } => "direction",
            Error::NotYetDefined { .. } => "not_yet_defined",
            Error::SingularPropagator { .. } => "singular_propagator",
            Error::ConventionViolation { .. } => "convention_violation",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
