use thiserror::Error;

use crate::cloud::CloudState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value for {what}: {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "time step {dt} h too large: stay probability of {state:?} would be {diagonal} (must be >= 0)"
    )]
    StepTooLarge {
        dt: f64,
        state: CloudState,
        diagonal: f64,
    },

    #[error("rate matrix has no unique equilibrium")]
    NoUniqueEquilibrium,

    #[error("matrix is not symmetric: max asymmetry {0:e}")]
    NotSymmetric(f64),

    #[error("matrix is not positive semidefinite: smallest eigenvalue {0:e}")]
    NotPsd(f64),

    #[error("matrix not sub-normalized: spectral norm {0} exceeds 1")]
    NotSubNormalized(f64),

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("vector is not unit length: norm {0}")]
    NotNormalized(f64),

    #[error("gate matrix is not unitary: residual {0:e}")]
    NonUnitary(f64),

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("no shot out of {n_shots} landed in the postselected ancilla-00 block")]
    InsufficientShots { n_shots: u64 },

    #[error("time series misaligned: {0}")]
    Misaligned(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFinite { .. }
            | Error::InvalidParameter(_)
            | Error::StepTooLarge { .. }
            | Error::Misaligned(_)
            | Error::Io(_)
            | Error::Csv(_) => 2,
            Error::InsufficientShots { .. } => 4,
            _ => 3,
        }
    }
}

pub(crate) fn ensure_finite(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { what, value })
    }
}
