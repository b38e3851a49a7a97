use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension must be ≥ 5 (got {0})")]
    DimensionTooSmall(u32),

    #[error("negative solution value v = {0}: inadmissible excursion")]
    NegativeValue(f64),

    #[error("solution blew up at t = {t}")]
    BlowUp { t: f64 },

    #[error("solution crossed zero at t = {t}")]
    ZeroCrossing { t: f64 },

    #[error("integrator failure at t = {t}: {reason}")]
    Integrator { t: f64, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Fowler parameter a = {a} outside (0, a0 = {a0}]")]
    ParameterOutOfRange { a: f64, a0: f64 },

    #[error("shooting bracket not found for a = {a}")]
    BracketNotFound { a: f64 },

    #[error("tolerance not met: {what} residual {residual:e} > {tolerance:e}")]
    ToleranceNotMet {
        what: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("no return to the section within the integration span")]
    NoReturnFound,

    #[error("orbit is not periodic (residual {0:e})")]
    OrbitNotPeriodic(f64),

    #[error("evaluation at the singular point")]
    OriginEvaluation,

    #[error("profile needs an orbit for a = {0}")]
    OrbitMissing(f64),

    #[error("degenerate regression: {0}")]
    DegenerateRegression(String),

    #[error("energy {energy} outside the range of the invariant curve [{min}, {max}]")]
    EnergyOutOfRange { energy: f64, min: f64, max: f64 },

    #[error("insufficient sample span: {0}")]
    InsufficientSpan(String),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::BlowUp { .. }
                | Error::ZeroCrossing { .. }
                | Error::Integrator { .. }
                | Error::BracketNotFound { .. }
                | Error::ToleranceNotMet { .. }
                | Error::NoReturnFound
                | Error::OrbitNotPeriodic(_)
                | Error::DegenerateRegression(_)
                | Error::EnergyOutOfRange { .. }
                | Error::InsufficientSpan(_)
        )
    }
}
