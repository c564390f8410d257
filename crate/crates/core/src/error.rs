use thiserror::Error;

/// Errors raised by the numerical kernels.
///
/// Blow-up of the nonlinear solution is not an error; it is reported through
/// [`crate::solver::BlowupReport`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("quadrature on [{lo}, {hi}] did not converge within depth {depth}")]
    Quadrature { lo: f64, hi: f64, depth: usize },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("direction is not a unit vector (|theta| = {norm})")]
    NonUnitDirection { norm: f64 },

    #[error("tau = {tau} is outside the profile domain [0, {tau_star})")]
    ProfileDomain { tau: f64, tau_star: f64 },

    #[error("finite-difference stencil at (t={t}, r={r}) leaves the domain")]
    Stencil { t: f64, r: f64 },

    #[error("finite-difference derivative at (t={t}, r={r}) did not converge under step halving")]
    FiniteDifference { t: f64, r: f64 },

    #[error("time t = {t} is outside the admissible range [0, {t_max}]")]
    TimeDomain { t: f64, t_max: f64 },

    #[error("characteristic s = {s} is not covered by the stored solution")]
    OutOfBand { s: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
