use alloc::string::String;
use core::fmt;

use crate::point::TraitPoint;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failure modes of the numerical pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A rate, uptake or derivative callable returned a non-finite value.
    ModelDefinition {
        x: TraitPoint,
        phase: f64,
        resource: f64,
        value: f64,
    },
    /// Invalid grid, time step, target mass, or other setup parameter.
    Configuration(String),
    /// An argument lies outside the set where the operation is defined.
    Domain(String),
    /// An iterative solver stopped without meeting its tolerance.
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    /// Explicit step larger than the stability limit.
    Cfl { dt: f64, limit: f64 },
    /// The field became non-finite.
    BlowUp { t: f64 },
    /// The population reached the edge of the computational box.
    DomainTooSmall { t: f64, margin: f64 },
    /// The constrained HJ solution drifted away from `max u = 0`.
    ConstraintDrift { t: f64, drift: f64 },
    /// A Hessian that has to be negative definite is not.
    IndefiniteHessian { entries: [f64; 4] },
    /// A structural hypothesis of the model family does not hold.
    Assumption(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ModelDefinition {
                x,
                phase,
                resource,
                value,
            } => write!(
                f,
                "model returned {value} at x={:?}, s={phase}, I={resource}",
                x.as_slice()
            ),
            Error::Configuration(msg) => write!(f, "configuration error: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::NonConvergence {
                what,
                iterations,
                residual,
            } => write!(
                f,
                "{what} did not converge after {iterations} iterations (residual {residual:e})"
            ),
            Error::Cfl { dt, limit } => {
                write!(f, "time step {dt:e} exceeds stability limit {limit:e}")
            }
            Error::BlowUp { t } => write!(f, "non-finite solution at t={t}"),
            Error::DomainTooSmall { t, margin } => write!(
                f,
                "domain too small: boundary value within {margin:e} of the maximum at t={t}"
            ),
            Error::ConstraintDrift { t, drift } => {
                write!(f, "constraint drift |max u| = {drift:e} at t={t}")
            }
            Error::IndefiniteHessian { entries } => {
                write!(f, "Hessian {entries:?} is not negative definite")
            }
            Error::Assumption(msg) => write!(f, "assumption violated: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Configuration(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
