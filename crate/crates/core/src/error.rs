use thiserror::Error;

/// Failures reported by the library.
///
/// [`Error::is_input_error`] separates problems with the supplied network
/// description from numerical breakdowns during a computation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("failed to parse network description: {0}")]
    Parse(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("{what} is not positive definite (smallest eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { what: &'static str, min_eig: f64 },

    #[error("controllability condition fails: Kalman matrix has rank {rank} < {dim}")]
    NotControllable { rank: usize, dim: usize },

    #[error("drift not stable; check controllability/damping")]
    DriftNotStable,

    #[error("eigenvalue computation did not converge for {0}")]
    EigenFailure(&'static str),

    #[error("singular linear system in {0}")]
    Singular(&'static str),

    #[error("adaptive quadrature did not reach tolerance: error estimate {estimate:.3e} > {target:.3e}")]
    Quadrature { estimate: f64, target: f64 },

    #[error("tilt parameter lies outside the admissible domain (margin {margin:.3e})")]
    OutsideDomain { margin: f64 },

    #[error("Hamiltonian has eigenvalues on the imaginary axis (separation {separation:.3e})")]
    ImaginaryAxisSpectrum { separation: f64 },

    #[error("Riccati refinement stalled: residual {residual:.3e}")]
    RiccatiResidual { residual: f64 },

    #[error("optimizer did not converge after {iterations} iterations (objective {best:.9e}, stationarity {kkt:.3e})")]
    NotConverged { iterations: usize, best: f64, kkt: f64 },

    #[error("no sign change found while bracketing {0}")]
    Bracket(&'static str),

    #[error("direction is not in the lineality space (residual {residual:.3e})")]
    NotInLineality { residual: f64 },

    #[error("g evaluation routes disagree: integral {integral:.12e}, spectral {spectral:.12e}, riccati {riccati:.12e}")]
    RouteDisagreement { integral: f64, spectral: f64, riccati: f64 },

    #[error("gap matrix Y is not positive definite (smallest eigenvalue {min_eig:.3e})")]
    GapNotPositive { min_eig: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True when the error stems from user input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse(_)
                | Error::InvalidNetwork(_)
                | Error::NotPositiveDefinite { .. }
                | Error::NotControllable { .. }
                | Error::InvalidArgument(_)
                | Error::NotInLineality { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
