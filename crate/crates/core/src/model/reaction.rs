use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Default number of interior sample points used to check a reaction.
pub const DEFAULT_SAMPLES: usize = 10_000;

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A monostable reaction term `f` on `[0, 1]`.
#[derive(Clone)]
pub enum Reaction {
    /// `f(u) = rate·u·(1 - u)`.
    Logistic { rate: f64 },
    /// Arbitrary evaluator with a declared slope at zero.
    Custom { name: String, slope: f64, eval: Eval },
}

impl fmt::Debug for Reaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reaction::Logistic { rate } => f.debug_struct("Logistic").field("rate", rate).finish(),
            Reaction::Custom { name, slope, .. } => f
                .debug_struct("Custom")
                .field("name", name)
                .field("slope", slope)
                .finish_non_exhaustive(),
        }
    }
}

/// A sampled point where a reaction breaks one of its hypotheses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReactionViolation {
    /// `f(u)` at `u = 0` or `u = 1` is not zero.
    Endpoint { u: f64, value: f64 },
    /// `f(u) ≤ 0` somewhere in the interior.
    NotPositive { u: f64, value: f64 },
    /// `f(u)` exceeds its linearization at zero; the worst sample is kept.
    AboveLinearization { u: f64, value: f64, bound: f64 },
    /// Declared slope at zero is not positive.
    Slope { slope: f64 },
}

impl fmt::Display for ReactionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ReactionViolation::Endpoint { u, value } => write!(f, "f({u}) = {value}, expected 0"),
            ReactionViolation::NotPositive { u, value } => write!(f, "f({u}) = {value} is not positive"),
            ReactionViolation::AboveLinearization { u, value, bound } => {
                write!(f, "f({u}) = {value} exceeds f'(0)·u = {bound}")
            }
            ReactionViolation::Slope { slope } => write!(f, "f'(0) = {slope} must be positive"),
        }
    }
}

impl Reaction {
    pub fn logistic(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::invalid("rate", "must be positive and finite"));
        }
        Ok(Reaction::Logistic { rate })
    }

    pub fn custom<F>(name: impl Into<String>, slope: f64, eval: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Reaction::Custom {
            name: name.into(),
            slope,
            eval: Arc::new(eval),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Reaction::Logistic { .. } => "logistic",
            Reaction::Custom { name, .. } => name,
        }
    }

    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        match self {
            Reaction::Logistic { rate } => rate * u * (1.0 - u),
            Reaction::Custom { eval, .. } => eval(u),
        }
    }

    /// `f'(0)`.
    pub fn slope(&self) -> f64 {
        match self {
            Reaction::Logistic { rate } => *rate,
            Reaction::Custom { slope, .. } => *slope,
        }
    }

    /// Bound on `|f'|` over `[0, 1]`; exact for the logistic family,
    /// otherwise the largest difference quotient on `samples` cells.
    pub fn lipschitz_bound(&self, samples: usize) -> f64 {
        match self {
            Reaction::Logistic { rate } => *rate,
            Reaction::Custom { slope, .. } => {
                let n = samples.max(2);
                let h = 1.0 / n as f64;
                let mut prev = self.value(0.0);
                let mut best = slope.abs();
                for i in 1..=n {
                    let v = self.value(i as f64 * h);
                    best = best.max(((v - prev) / h).abs());
                    prev = v;
                }
                best
            }
        }
    }

    /// Checks the hypotheses on the grid `u_i = i/(samples+1)`; empty when
    /// all hold.
    pub fn validate(&self, samples: usize) -> Vec<ReactionViolation> {
        let mut out = Vec::new();
        let slope = self.slope();
        if !(slope > 0.0 && slope.is_finite()) {
            out.push(ReactionViolation::Slope { slope });
        }
        for u in [0.0, 1.0] {
            let value = self.value(u);
            if !(value.abs() <= 1e-12) {
                out.push(ReactionViolation::Endpoint { u, value });
            }
        }
        let n = samples.max(2);
        let mut not_positive: Option<ReactionViolation> = None;
        let mut worst: Option<(f64, ReactionViolation)> = None;
        for i in 1..=n {
            let u = i as f64 / (n + 1) as f64;
            let value = self.value(u);
            if !(value > 0.0) && not_positive.is_none() {
                not_positive = Some(ReactionViolation::NotPositive { u, value });
            }
            let bound = slope * u;
            let excess = value - bound;
            if excess > 1e-12 * bound.abs().max(1.0) && worst.is_none_or(|(e, _)| excess > e) {
                worst = Some((excess, ReactionViolation::AboveLinearization { u, value, bound }));
            }
        }
        out.extend(not_positive);
        out.extend(worst.map(|(_, v)| v));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn logistic_passes() {
        assert!(Reaction::logistic(1.0).unwrap().validate(DEFAULT_SAMPLES).is_empty());
        assert!(Reaction::logistic(0.0).is_err());
    }

    #[test]
    fn sine_passes() {
        let f = Reaction::custom("sine", PI, |u| libm::sin(PI * u));
        assert!(f.validate(DEFAULT_SAMPLES).is_empty());
    }

    #[test]
    fn exponential_boost_breaks_the_linear_bound_at_half() {
        let f = Reaction::custom("boosted", 1.0, |u| u * (1.0 - u) * libm::exp(2.0 * u));
        let v = f.validate(3);
        assert_eq!(v.len(), 1);
        match v[0] {
            ReactionViolation::AboveLinearization { u, value, bound } => {
                assert_eq!(u, 0.5);
                assert!((value - 0.25 * core::f64::consts::E).abs() < 1e-15);
                assert_eq!(bound, 0.5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn endpoint_and_sign_violations() {
        let f = Reaction::custom("shifted", 1.0, |u| u * (1.0 - u) - 0.01);
        let v = f.validate(100);
        assert!(v.iter().any(|x| matches!(x, ReactionViolation::Endpoint { u, .. } if *u == 0.0)));
        assert!(v.iter().any(|x| matches!(x, ReactionViolation::NotPositive { .. })));
    }

    #[test]
    fn lipschitz_bound_of_custom_reaction() {
        let f = Reaction::custom("logistic2", 2.0, |u| 2.0 * u * (1.0 - u));
        assert!((f.lipschitz_bound(10_000) - 2.0).abs() < 1e-3);
    }
}
