use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failure modes of the numerical routines.
///
/// Validation problems that are *reported* rather than raised (kernel and
/// reaction hypotheses, certificate invariants) have their own violation
/// types; this enum is for operations that cannot produce a value.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} = {value} is outside the admissible domain ({lower}, {upper})")]
    Domain {
        what: &'static str,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("quadrature did not converge: estimate {estimate}, error {error} after {intervals} intervals")]
    QuadratureNonConvergence {
        estimate: f64,
        error: f64,
        intervals: usize,
    },

    #[error("no sign change found for {what} after {expansions} bracket expansions")]
    BracketNotFound { what: &'static str, expansions: usize },

    #[error("root finding for {what} did not converge in {iterations} iterations")]
    RootNonConvergence { what: &'static str, iterations: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("G_eta(c, .) has no positive part for c = {speed}")]
    NoRoot { speed: f64 },

    #[error("G_eta(c, .) is tangent to zero at c = {speed} (double root)")]
    DegenerateRoot { speed: f64 },

    #[error("height {height} is not reachable by H^max")]
    HeightUnreachable { height: f64 },

    #[error("no B in (0, A^2/(4D)) satisfies the height and width constraints")]
    InfeasibleWidth,

    #[error("kernel mass {mass:e} lies outside the representable offset range")]
    Truncation { mass: f64 },

    #[error("solution left [0, 1] at t = {time}: value {value}")]
    BlowUp { time: f64, value: f64 },

    #[error("overshoot {excess:e} beyond [0, 1] at t = {time} exceeds the clamp tolerance")]
    Overshoot { time: f64, excess: f64 },

    #[error("front at x = {position} came within {margin} of the domain boundary at t = {time}")]
    FrontNearBoundary {
        time: f64,
        position: f64,
        margin: f64,
    },

    #[error("need at least {needed} samples in the fit window, found {found}")]
    InsufficientData { needed: usize, found: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
