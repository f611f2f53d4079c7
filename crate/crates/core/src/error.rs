use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// The effective-coupling formula diverges when the detuning sits on the
    /// motional sideband.
    #[error("singular parameters: {0}")]
    Singularity(String),

    #[error("phonon cutoff {cutoff} too small: population {leakage:.3e} reached the top Fock level")]
    CutoffTooSmall { cutoff: usize, leakage: f64 },

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("fidelity undefined: {0}")]
    UndefinedFidelity(String),

    #[error("regime violation: {0}")]
    RegimeViolation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
