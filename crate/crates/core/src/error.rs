use thiserror::Error;

use crate::local::LocalPoint;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is numerically singular (condition number {cond:.3e})")]
    NonInvertible { cond: f64 },

    #[error("determinant deviates from 1 by {deviation:.3e}")]
    NotUnimodular { deviation: f64 },

    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is singular (smallest singular value {sigma_min:.3e})")]
    Singular { sigma_min: f64 },

    #[error("degenerate Cartan position: smallest angle {q_min:.3e}")]
    DegeneratePosition { q_min: f64 },

    #[error("the deformation parameter x must be nonzero")]
    ZeroDeformation,

    #[error("outside the admissible domain: {0}")]
    DomainViolation(String),

    #[error("coupling condition violated: {0}")]
    CouplingViolation(String),

    #[error("component z[{index}] vanishes; the Darboux chart does not cover this point")]
    OffDenseLocus { index: usize },

    #[error("momentum constraint residual {residual:.3e} exceeds {tol:.1e}")]
    OffShell { residual: f64, tol: f64 },

    #[error("matrix is not in the section gauge (residual {residual:.3e})")]
    NotSectionGauge { residual: f64 },

    #[error("position components {j} and {k} coincide")]
    CoincidentComponents { j: usize, k: usize },

    #[error("too close to a pole (|denominator| = {value:.3e})")]
    PoleProximity { value: f64 },

    #[error("imaginary residue {imag:.3e} in a quantity that must be real")]
    NonReal { imag: f64 },

    #[error("chamber boundary reached at t = {t}")]
    BoundaryReached { t: f64, state: Box<LocalPoint> },

    #[error("integration failed at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("|z_n| reached the unit circle at t = {t}")]
    EscapeDisk { t: f64 },

    #[error("finite-difference breakdown: {0}")]
    FdBreakdown(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
