//! Spreading speeds, the asymmetry index and the sign classification.
//!
//! With `M(λ) = ∫k e^{λx}` and growth rate `g = f'(0)`, the speed function
//! is `c(λ) = (M(λ) - 1 + g)/λ`. Its critical points solve
//! `N(λ) = λM'(λ) - M(λ) + 1 - g = 0`; `N` is decreasing on the negative
//! half-axis, increasing on the positive one and equals `-g` at zero, so each
//! side has exactly one root.

use core::fmt;

use crate::error::{Error, Result};
use crate::model::{Kernel, Model};
use crate::roots::{self, Root};
use crate::Side;

/// Default half-width of the equality bands in [`classify`].
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-9;
/// Bracket expansions allowed before giving up.
pub const MAX_EXPANSIONS: usize = 1000;
/// First moments below this are treated as exactly zero.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Sample count for the monotone-on-the-positive-axis check.
pub const MONOTONE_SAMPLES: usize = 10_000;

const ROOT_XTOL: f64 = 1e-14;
const ROOT_MAX_ITER: usize = 500;

/// Sign pattern of `(c_l*, c_r*)`, ordered from fully right-moving to fully
/// left-moving.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SignCase {
    /// `0 < c_l* < c_r*`
    BothPositive,
    /// `c_l* = 0 < c_r*`
    LeftAtZero,
    /// `c_l* < 0 < c_r*`
    Straddling,
    /// `c_l* < c_r* = 0`
    RightAtZero,
    /// `c_l* < c_r* < 0`
    BothNegative,
}

impl SignCase {
    pub const ALL: [SignCase; 5] = [
        SignCase::BothPositive,
        SignCase::LeftAtZero,
        SignCase::Straddling,
        SignCase::RightAtZero,
        SignCase::BothNegative,
    ];

    /// Roman-numeral label `i` to `v`.
    pub fn label(self) -> &'static str {
        match self {
            SignCase::BothPositive => "i",
            SignCase::LeftAtZero => "ii",
            SignCase::Straddling => "iii",
            SignCase::RightAtZero => "iv",
            SignCase::BothNegative => "v",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        SignCase::ALL.into_iter().find(|c| c.label() == s)
    }

    /// Whether `(left, right)` has this sign pattern, treating values with
    /// magnitude at most `zero_tol` as zero.
    pub fn matches(self, left: f64, right: f64, zero_tol: f64) -> bool {
        let zero = |v: f64| v.abs() <= zero_tol;
        match self {
            SignCase::BothPositive => left > zero_tol && right > left,
            SignCase::LeftAtZero => zero(left) && right > zero_tol,
            SignCase::Straddling => left < -zero_tol && right > zero_tol,
            SignCase::RightAtZero => left < -zero_tol && zero(right),
            SignCase::BothNegative => right < -zero_tol && left < right,
        }
    }
}

impl fmt::Display for SignCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Everything [`spreading_speeds`] computes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedReport {
    pub growth: f64,
    pub c_left: f64,
    pub c_right: f64,
    pub lambda_left: f64,
    pub lambda_right: f64,
    /// Minimizer of `M`; `None` for kernels with mass on one side only.
    pub lambda_min: Option<f64>,
    pub first_moment: f64,
    pub asymmetry: f64,
    pub case: SignCase,
    pub iterations_left: usize,
    pub iterations_right: usize,
    pub width_left: f64,
    pub width_right: f64,
}

/// `c(λ) = (M(λ) - 1 + f'(0))/λ`.
pub fn c_of_lambda(model: &Model, lambda: f64) -> Result<f64> {
    c_with_growth(&model.kernel, model.growth(), lambda)
}

/// `c(λ)` with an arbitrary growth rate in place of `f'(0)`.
pub fn c_with_growth(kernel: &Kernel, growth: f64, lambda: f64) -> Result<f64> {
    if lambda == 0.0 {
        return Err(Error::Domain {
            what: "lambda",
            value: 0.0,
            lower: 0.0,
            upper: 0.0,
        });
    }
    Ok((kernel.mgf(lambda)? - 1.0 + growth) / lambda)
}

/// `c'(λ) = N(λ)/λ²`.
pub fn c_prime(model: &Model, lambda: f64) -> Result<f64> {
    if lambda == 0.0 {
        return Err(Error::Domain {
            what: "lambda",
            value: 0.0,
            lower: 0.0,
            upper: 0.0,
        });
    }
    let (m, mp) = model.kernel.moments(lambda)?;
    Ok((lambda * mp - m + 1.0 - model.growth()) / (lambda * lambda))
}

// N(λ); overflowing evaluations are reported as +∞, the sign N takes near
// both abscissas.
fn numerator(kernel: &Kernel, growth: f64, lambda: f64) -> f64 {
    match kernel.moments(lambda) {
        Ok((m, mp)) => {
            let n = lambda * mp - m + 1.0 - growth;
            if n.is_nan() {
                f64::INFINITY
            } else {
                n
            }
        }
        Err(_) => f64::INFINITY,
    }
}

/// The critical decay rate on one side for growth rate `growth > 0`.
pub fn lambda_star(kernel: &Kernel, growth: f64, side: Side) -> Result<Root> {
    if !(growth > 0.0) {
        return Err(Error::invalid("growth", "must be positive"));
    }
    let (lo, hi) = kernel.abscissas();
    let limit = match side {
        Side::Right => hi,
        Side::Left => lo,
    };
    let n = |l: f64| numerator(kernel, growth, l);
    let what = match side {
        Side::Right => "right decay rate",
        Side::Left => "left decay rate",
    };
    let br = roots::expand(n, 0.0, 1.0, side.sign(), limit, MAX_EXPANSIONS, what)?;
    let mut root = roots::brent(n, br.lo, br.hi, br.f_lo, br.f_hi, ROOT_XTOL, 0.0, ROOT_MAX_ITER, what)?;
    root.iterations += br.expansions;
    Ok(root)
}

/// `(λ_l*, λ_r*)` for the model's own growth rate.
pub fn lambda_stars(model: &Model) -> Result<(f64, f64)> {
    let g = model.growth();
    Ok((lambda_star(&model.kernel, g, Side::Left)?.x, lambda_star(&model.kernel, g, Side::Right)?.x))
}

/// Spreading speed on one side with `growth` in place of `f'(0)`.
pub fn speed_with_growth(kernel: &Kernel, growth: f64, side: Side) -> Result<f64> {
    let root = lambda_star(kernel, growth, side)?;
    kernel.mgf_prime(root.x)
}

/// Speeds, decay rates, asymmetry index and sign case.
pub fn spreading_speeds(model: &Model) -> Result<SpeedReport> {
    let kernel = &model.kernel;
    let growth = model.growth();
    let left = lambda_star(kernel, growth, Side::Left)?;
    let right = lambda_star(kernel, growth, Side::Right)?;
    let (lambda_min, asymmetry) = asymmetry_parts(kernel)?;
    Ok(SpeedReport {
        growth,
        c_left: kernel.mgf_prime(left.x)?,
        c_right: kernel.mgf_prime(right.x)?,
        lambda_left: left.x,
        lambda_right: right.x,
        lambda_min,
        first_moment: kernel.first_moment(),
        asymmetry,
        case: classify(asymmetry, growth, DEFAULT_CLASSIFY_TOL),
        iterations_left: left.iterations,
        iterations_right: right.iterations,
        width_left: left.width,
        width_right: right.width,
    })
}

/// Zero of `M'`, or `None` when `M` is monotone (mass on one side only).
pub fn lambda_min(kernel: &Kernel) -> Result<Option<f64>> {
    asymmetry_parts(kernel).map(|(l, _)| l)
}

/// Asymmetry index `E = sign(J)·(1 - min M)`, in `[-1, 1]`.
pub fn asymmetry_e(kernel: &Kernel) -> Result<f64> {
    asymmetry_parts(kernel).map(|(_, e)| e)
}

fn asymmetry_parts(kernel: &Kernel) -> Result<(Option<f64>, f64)> {
    let j = kernel.first_moment();
    if j.abs() <= SYMMETRY_TOL {
        return Ok((Some(0.0), 0.0));
    }
    let (lo, hi) = kernel.abscissas();
    // M' is increasing, so its zero sits on the side opposite to J.
    let (dir, limit) = if j > 0.0 { (-1.0, lo) } else { (1.0, hi) };
    let mp = |l: f64| {
        let v = kernel.mgf_prime(l).unwrap_or(dir * f64::INFINITY);
        if v.is_nan() {
            dir * f64::INFINITY
        } else {
            v
        }
    };
    let br = match roots::expand(mp, 0.0, 1.0, dir, limit, MAX_EXPANSIONS, "mgf minimizer") {
        Ok(b) => b,
        Err(e) => {
            let (s_lo, s_hi) = kernel.support();
            if s_hi <= 0.0 || s_lo >= 0.0 {
                return Ok((None, j.signum()));
            }
            return Err(e);
        }
    };
    let root = roots::brent(mp, br.lo, br.hi, br.f_lo, br.f_hi, ROOT_XTOL, 0.0, ROOT_MAX_ITER, "mgf minimizer")?;
    let m = kernel.mgf(root.x)?;
    let e = (j.signum() * (1.0 - m)).clamp(-1.0, 1.0);
    Ok((Some(root.x), e))
}

/// Five-way classification of `E` against `f'(0)`.
pub fn classify(e: f64, growth: f64, tol: f64) -> SignCase {
    if (e - growth).abs() <= tol {
        SignCase::LeftAtZero
    } else if (e + growth).abs() <= tol {
        SignCase::RightAtZero
    } else if e > growth {
        SignCase::BothPositive
    } else if e < -growth {
        SignCase::BothNegative
    } else {
        SignCase::Straddling
    }
}

/// Whether the density is nonincreasing on the positive half-axis, by
/// sampling.
pub fn is_nonincreasing_right(kernel: &Kernel, samples: usize) -> bool {
    let (_, hi) = kernel.effective_support(1e-13);
    let hi = if hi.is_finite() && hi > 0.0 { hi } else { return true };
    let n = samples.max(2);
    let mut prev = kernel.density(0.0);
    for i in 1..=n {
        let d = kernel.density(hi * i as f64 / n as f64);
        if d > prev * (1.0 + 1e-12) + 1e-300 {
            return false;
        }
        prev = d;
    }
    true
}

/// Speed of the right front started from data decaying like `e^{-λx}`:
/// `c(λ)` below the critical rate, the spreading speed above it.
pub fn exp_decay_speed(model: &Model, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Precondition(alloc::format!("decay rate {lambda} must be positive")));
    }
    let j = model.kernel.first_moment();
    if j.abs() > SYMMETRY_TOL {
        return Err(Error::Precondition(alloc::format!("kernel is not symmetric (first moment {j})")));
    }
    if !is_nonincreasing_right(&model.kernel, MONOTONE_SAMPLES) {
        return Err(Error::Precondition("kernel density increases somewhere on x > 0".into()));
    }
    let star = lambda_star(&model.kernel, model.growth(), Side::Right)?;
    if lambda >= star.x {
        model.kernel.mgf_prime(star.x)
    } else {
        c_of_lambda(model, lambda)
    }
}

/// Whether `k1 ≥ k2` on `x > 0` and `k1 ≤ k2` on `x < 0`, checked on a dense
/// grid plus every breakpoint of either kernel.
pub fn skewness_premise(k1: &Kernel, k2: &Kernel) -> bool {
    let (a_lo, a_hi) = k1.effective_support(1e-13);
    let (b_lo, b_hi) = k2.effective_support(1e-13);
    let (lo, hi) = (a_lo.min(b_lo), a_hi.max(b_hi));
    let ok = |x: f64| {
        if x == 0.0 || !x.is_finite() {
            return true;
        }
        let (d1, d2) = (k1.density(x), k2.density(x));
        let slack = 1e-12 * d1.max(d2);
        if x > 0.0 {
            d1 >= d2 - slack
        } else {
            d1 <= d2 + slack
        }
    };
    let n = 10_000;
    let grid = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64);
    let knots = k1.breakpoints().into_iter().chain(k2.breakpoints());
    grid.chain(knots).all(ok)
}
