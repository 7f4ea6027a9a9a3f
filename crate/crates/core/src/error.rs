use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the particle engine.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A model or initial-data parameter is out of range.
    InvalidParameter { name: &'static str, reason: String },
    /// A density or spacing argument was not strictly positive (or not finite).
    NonPositiveArgument { name: &'static str, value: f64 },
    /// Adaptive quadrature stopped before reaching its tolerance.
    QuadratureNotConverged { achieved_error: f64, requested: f64 },
    /// An integral diverged (overflowed) while evaluating a derived function.
    Divergent { what: &'static str, at: f64 },
    /// Particle ordering `0 < x_{n-1} < … < x_1 < L` is violated.
    OutsideDomain { index: usize, reason: &'static str },
    /// A state entry is NaN or infinite.
    NonFinite { what: &'static str, index: usize },
    /// Initial density does not integrate to the model mass.
    NotNormalized { expected: f64, actual: f64 },
    /// The energy budget exceeds what the `F` envelope can absorb.
    Inadmissible { side: Side, lhs: f64, limit: f64 },
    /// Time step fell below the underflow floor.
    StiffnessFailure { t: f64, dt: f64 },
    /// `max_steps` was exhausted before reaching the final time.
    StepBudgetExhausted { t: f64, steps: usize },
    /// Root bracketing failed during an inversion.
    NoBracket { what: &'static str, target: f64 },
}

/// Which end of the density range failed an admissibility check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `ρ → ∞`, i.e. particles pressed together.
    High,
    /// `ρ → 0⁺`, i.e. vacuum formation.
    Low,
}

impl Error {
    /// Short machine-readable tag for each variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::NonPositiveArgument { .. } => "non_positive_argument",
            Error::QuadratureNotConverged { .. } => "quadrature_not_converged",
            Error::Divergent { .. } => "divergent",
            Error::OutsideDomain { .. } => "outside_domain",
            Error::NonFinite { .. } => "non_finite",
            Error::NotNormalized { .. } => "not_normalized",
            Error::Inadmissible { .. } => "inadmissible",
            Error::StiffnessFailure { .. } => "stiffness_failure",
            Error::StepBudgetExhausted { .. } => "step_budget_exhausted",
            Error::NoBracket { .. } => "no_bracket",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::High => f.write_str("high-density"),
            Side::Low => f.write_str("low-density"),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, reason } => write!(f, "invalid parameter `{name}`: {reason}"),
            Error::NonPositiveArgument { name, value } => {
                write!(f, "`{name}` must be positive and finite, got {value}")
            }
            Error::QuadratureNotConverged { achieved_error, requested } => write!(
                f,
                "adaptive quadrature did not converge: achieved error {achieved_error:e}, requested {requested:e}"
            ),
            Error::Divergent { what, at } => write!(f, "{what} diverges at {at:e}"),
            Error::OutsideDomain { index, reason } => {
                write!(f, "state outside the particle domain at index {index}: {reason}")
            }
            Error::NonFinite { what, index } => write!(f, "non-finite {what} at index {index}"),
            Error::NotNormalized { expected, actual } => {
                write!(f, "initial density integrates to {actual}, expected mass {expected}")
            }
            Error::Inadmissible { side, lhs, limit } => write!(
                f,
                "energy budget {lhs} exceeds the {side} envelope limit {limit}"
            ),
            Error::StiffnessFailure { t, dt } => write!(
                f,
                "time step underflow (dt = {dt:e} at t = {t}); the viscous coupling is too stiff, \
                 reduce n or use an implicit integrator"
            ),
            Error::StepBudgetExhausted { t, steps } => {
                write!(f, "step budget of {steps} exhausted at t = {t}")
            }
            Error::NoBracket { what, target } => write!(f, "could not bracket {what} = {target}"),
        }
    }
}

impl core::error::Error for Error {}
