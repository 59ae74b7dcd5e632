use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};
use core::fmt;

use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions};
use crate::roots;

/// Largest relative deviation from unit mass that a tabulated kernel may
/// have before it is rejected instead of renormalized.
pub const MAX_MASS_DEVIATION: f64 = 0.2;

/// Parametric description of a dispersal kernel.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelFamily {
    /// Gaussian with the given mean and variance.
    Normal { mean: f64, variance: f64 },
    /// Constant density on `[left, right]`.
    Uniform { left: f64, right: f64 },
    /// Density proportional to `e^{left_rate·x}` on `x < 0` and
    /// `e^{-right_rate·x}` on `x ≥ 0`.
    AsymmetricExponential { left_rate: f64, right_rate: f64 },
    /// Continuous piecewise-linear density through the knots, zero outside.
    Tabulated(Table),
}

/// Knots of a tabulated density.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    xs: Vec<f64>,
    ds: Vec<f64>,
}

impl Table {
    pub fn abscissas(&self) -> &[f64] {
        &self.xs
    }

    pub fn densities(&self) -> &[f64] {
        &self.ds
    }

    fn mass(&self) -> f64 {
        self.xs
            .windows(2)
            .zip(self.ds.windows(2))
            .map(|(x, d)| 0.5 * (x[1] - x[0]) * (d[0] + d[1]))
            .sum()
    }

    fn density(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if !(x >= self.xs[0] && x <= self.xs[n - 1]) {
            return 0.0;
        }
        let i = self.xs.partition_point(|&xi| xi <= x).clamp(1, n - 1) - 1;
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        self.ds[i] + t * (self.ds[i + 1] - self.ds[i])
    }

    /// Mass on `(-∞, x]`.
    fn mass_below(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.xs.len() - 1 {
            let (x0, x1) = (self.xs[i], self.xs[i + 1]);
            if x <= x0 {
                break;
            }
            let hi = x.min(x1);
            acc += 0.5 * (hi - x0) * (self.ds[i] + self.density(hi));
        }
        acc
    }

    /// Returns `(M(λ), M'(λ))` by exact integration of each linear piece.
    fn moments(&self, lambda: f64) -> (f64, f64) {
        let mut m = 0.0;
        let mut mp = 0.0;
        for i in 0..self.xs.len() - 1 {
            let (x0, h) = (self.xs[i], self.xs[i + 1] - self.xs[i]);
            let (d0, slope) = (self.ds[i], self.ds[i + 1] - self.ds[i]);
            if d0 == 0.0 && slope == 0.0 {
                continue;
            }
            let [p0, p1, p2] = exp_phi3(x0, lambda, h);
            m += h * (d0 * p0 + slope * p1);
            mp += h * (x0 * d0 * p0 + (x0 * slope + h * d0) * p1 + h * slope * p2);
        }
        (m, mp)
    }

    /// Hull of the region where the density is positive.
    fn support(&self) -> (f64, f64) {
        let n = self.xs.len();
        let live = |i: usize| self.ds[i] > 0.0 || self.ds[i + 1] > 0.0;
        let lo = (0..n - 1).find(|&i| live(i)).map_or(0.0, |i| self.xs[i]);
        let hi = (0..n - 1).rev().find(|&i| live(i)).map_or(0.0, |i| self.xs[i + 1]);
        (lo, hi)
    }
}

/// A validated-at-construction dispersal kernel.
///
/// Construction checks that parameters are finite and well-formed; the
/// structural hypotheses (mass on both sides of the origin, finite
/// exponential moments) are reported separately by [`Kernel::validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    family: KernelFamily,
    abscissas: (f64, f64),
    correction: Option<f64>,
}

/// A structural hypothesis a kernel fails.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelViolation {
    /// No positive density anywhere on `x > 0`.
    NoMassRight,
    /// No positive density anywhere on `x < 0`.
    NoMassLeft,
    /// The exponential moments are finite on one side of zero only.
    HeavyTail { lower: f64, upper: f64 },
    /// Total mass differs from one.
    Mass { mass: f64 },
}

impl fmt::Display for KernelViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelViolation::NoMassRight => f.write_str("density vanishes on the whole positive half-line"),
            KernelViolation::NoMassLeft => f.write_str("density vanishes on the whole negative half-line"),
            KernelViolation::HeavyTail { lower, upper } => write!(
                f,
                "exponential moments exist only for λ in ({lower}, {upper}), which must contain a neighborhood of 0"
            ),
            KernelViolation::Mass { mass } => write!(f, "total mass {mass} differs from 1"),
        }
    }
}

fn finite(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::invalid(name, "must be finite"))
    }
}

impl Kernel {
    /// Normal kernel; `variance` is the variance, not the standard deviation.
    pub fn normal(mean: f64, variance: f64) -> Result<Self> {
        finite("mean", mean)?;
        if !(finite("variance", variance)? > 0.0) {
            return Err(Error::invalid("variance", "must be positive"));
        }
        Ok(Kernel {
            family: KernelFamily::Normal { mean, variance },
            abscissas: (f64::NEG_INFINITY, f64::INFINITY),
            correction: None,
        })
    }

    /// Uniform density on `[left, right]`.
    pub fn uniform(left: f64, right: f64) -> Result<Self> {
        finite("left", left)?;
        finite("right", right)?;
        if !(left < right) {
            return Err(Error::invalid("right", "must exceed the left endpoint"));
        }
        Ok(Kernel {
            family: KernelFamily::Uniform { left, right },
            abscissas: (f64::NEG_INFINITY, f64::INFINITY),
            correction: None,
        })
    }

    pub fn asymmetric_exponential(left_rate: f64, right_rate: f64) -> Result<Self> {
        if !(finite("left_rate", left_rate)? > 0.0) {
            return Err(Error::invalid("left_rate", "must be positive"));
        }
        if !(finite("right_rate", right_rate)? > 0.0) {
            return Err(Error::invalid("right_rate", "must be positive"));
        }
        Ok(Kernel {
            family: KernelFamily::AsymmetricExponential { left_rate, right_rate },
            abscissas: (-left_rate, right_rate),
            correction: None,
        })
    }

    /// Piecewise-linear density through `(xs[i], ds[i])`.
    ///
    /// Densities are rescaled to unit mass when the raw mass is within
    /// [`MAX_MASS_DEVIATION`] of one; the factor is kept and reported by
    /// [`Kernel::normalization_correction`].
    pub fn tabulated(xs: Vec<f64>, mut ds: Vec<f64>) -> Result<Self> {
        if xs.len() != ds.len() {
            return Err(Error::invalid("table", "abscissa and density columns differ in length"));
        }
        if xs.len() < 2 {
            return Err(Error::invalid("table", "needs at least two rows"));
        }
        if xs.iter().chain(&ds).any(|v| !v.is_finite()) {
            return Err(Error::invalid("table", "entries must be finite"));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("table", "abscissas must be strictly increasing"));
        }
        if ds.iter().any(|&d| d < 0.0) {
            return Err(Error::invalid("table", "densities must be nonnegative"));
        }
        let mass = Table { xs: xs.clone(), ds: ds.clone() }.mass();
        if !((mass - 1.0).abs() <= MAX_MASS_DEVIATION) {
            return Err(Error::invalid(
                "table",
                alloc::format!("total mass {mass} is more than {MAX_MASS_DEVIATION} away from 1"),
            ));
        }
        let correction = if mass == 1.0 {
            None
        } else {
            let c = 1.0 / mass;
            ds.iter_mut().for_each(|d| *d *= c);
            Some(c)
        };
        Ok(Kernel {
            family: KernelFamily::Tabulated(Table { xs, ds }),
            abscissas: (f64::NEG_INFINITY, f64::INFINITY),
            correction,
        })
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            KernelFamily::Normal { .. } => "normal",
            KernelFamily::Uniform { .. } => "uniform",
            KernelFamily::AsymmetricExponential { .. } => "asymmetric-exponential",
            KernelFamily::Tabulated(_) => "tabulated",
        }
    }

    /// Factor `1/mass` applied to a tabulated kernel at construction.
    pub fn normalization_correction(&self) -> Option<f64> {
        self.correction
    }

    /// Open interval `(λ⁻, λ⁺)` on which the exponential moments are finite.
    pub fn abscissas(&self) -> (f64, f64) {
        self.abscissas
    }

    pub fn density(&self, x: f64) -> f64 {
        match &self.family {
            KernelFamily::Normal { mean, variance } => {
                let z = x - mean;
                libm::exp(-0.5 * z * z / variance) / libm::sqrt(2.0 * PI * variance)
            }
            KernelFamily::Uniform { left, right } => {
                if x >= *left && x <= *right {
                    1.0 / (right - left)
                } else {
                    0.0
                }
            }
            KernelFamily::AsymmetricExponential { left_rate, right_rate } => {
                let k0 = left_rate * right_rate / (left_rate + right_rate);
                if x >= 0.0 {
                    k0 * libm::exp(-right_rate * x)
                } else {
                    k0 * libm::exp(left_rate * x)
                }
            }
            KernelFamily::Tabulated(t) => t.density(x),
        }
    }

    fn check_domain(&self, lambda: f64) -> Result<()> {
        let (lo, hi) = self.abscissas;
        if lambda > lo && lambda < hi {
            Ok(())
        } else {
            Err(Error::Domain {
                what: "lambda",
                value: lambda,
                lower: lo,
                upper: hi,
            })
        }
    }

    /// `M(λ) = ∫ k(x) e^{λx} dx`.
    pub fn mgf(&self, lambda: f64) -> Result<f64> {
        self.moments(lambda).map(|(m, _)| m)
    }

    /// `M'(λ) = ∫ x k(x) e^{λx} dx`.
    pub fn mgf_prime(&self, lambda: f64) -> Result<f64> {
        self.moments(lambda).map(|(_, mp)| mp)
    }

    /// `(M(λ), M'(λ))` from the family's closed form.
    pub fn moments(&self, lambda: f64) -> Result<(f64, f64)> {
        self.check_domain(lambda)?;
        let (m, mp) = match &self.family {
            KernelFamily::Normal { mean, variance } => {
                let m = libm::exp(mean * lambda + 0.5 * variance * lambda * lambda);
                (m, (mean + variance * lambda) * m)
            }
            KernelFamily::Uniform { left, right } => {
                let w = right - left;
                let [p0, p1, _] = exp_phi3(*left, lambda, w);
                (p0, left * p0 + w * p1)
            }
            KernelFamily::AsymmetricExponential { left_rate, right_rate } => {
                let (a, b) = (right_rate - lambda, left_rate + lambda);
                let m = left_rate * right_rate / (a * b);
                (m, m * (1.0 / a - 1.0 / b))
            }
            KernelFamily::Tabulated(t) => t.moments(lambda),
        };
        Ok((if lambda == 0.0 { 1.0 } else { m }, mp))
    }

    /// `M(λ)` by adaptive quadrature of the density; independent of the
    /// closed forms.
    pub fn mgf_quadrature(&self, lambda: f64, opts: &QuadOptions) -> Result<f64> {
        self.check_domain(lambda)?;
        self.integrate(|x| self.density(x) * libm::exp(lambda * x), opts)
    }

    /// `M'(λ)` by adaptive quadrature.
    pub fn mgf_prime_quadrature(&self, lambda: f64, opts: &QuadOptions) -> Result<f64> {
        self.check_domain(lambda)?;
        self.integrate(|x| x * self.density(x) * libm::exp(lambda * x), opts)
    }

    /// Integrates `g` (assumed to vanish wherever the density does) over
    /// the kernel's support, split at its breakpoints.
    pub fn integrate<F: Fn(f64) -> f64>(&self, g: F, opts: &QuadOptions) -> Result<f64> {
        let (lo, hi) = self.support();
        quad::integrate_with_breaks(g, lo, hi, &self.breakpoints(), self.scale(), opts).map(|r| r.value)
    }

    /// First moment `J = ∫ x k(x) dx`.
    pub fn first_moment(&self) -> f64 {
        match self.moments(0.0) {
            Ok((_, j)) => j,
            Err(_) => f64::NAN,
        }
    }

    /// Closed hull of the set where the density is positive (possibly
    /// infinite).
    pub fn support(&self) -> (f64, f64) {
        match &self.family {
            KernelFamily::Normal { .. } | KernelFamily::AsymmetricExponential { .. } => {
                (f64::NEG_INFINITY, f64::INFINITY)
            }
            KernelFamily::Uniform { left, right } => (*left, *right),
            KernelFamily::Tabulated(t) => t.support(),
        }
    }

    /// Points where the density is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.family {
            KernelFamily::Normal { .. } => Vec::new(),
            KernelFamily::Uniform { left, right } => alloc::vec![*left, *right],
            KernelFamily::AsymmetricExponential { .. } => alloc::vec![0.0],
            KernelFamily::Tabulated(t) => t.xs.clone(),
        }
    }

    /// A characteristic length of the kernel.
    pub fn scale(&self) -> f64 {
        match &self.family {
            KernelFamily::Normal { variance, .. } => libm::sqrt(*variance),
            KernelFamily::Uniform { left, right } => right - left,
            KernelFamily::AsymmetricExponential { left_rate, right_rate } => 1.0 / left_rate.min(*right_rate),
            KernelFamily::Tabulated(t) => t.xs[t.xs.len() - 1] - t.xs[0],
        }
    }

    /// Mass on `(-∞, x]`.
    pub fn mass_below(&self, x: f64) -> f64 {
        match &self.family {
            KernelFamily::Normal { mean, variance } => 0.5 * libm::erfc((mean - x) / (SQRT_2 * libm::sqrt(*variance))),
            KernelFamily::Uniform { left, right } => ((x - left) / (right - left)).clamp(0.0, 1.0),
            KernelFamily::AsymmetricExponential { left_rate, right_rate } => {
                let s = left_rate + right_rate;
                if x < 0.0 {
                    right_rate / s * libm::exp(left_rate * x)
                } else {
                    1.0 - left_rate / s * libm::exp(-right_rate * x)
                }
            }
            KernelFamily::Tabulated(t) => t.mass_below(x),
        }
    }

    /// Mass on `[x, ∞)`, computed without cancellation.
    pub fn mass_above(&self, x: f64) -> f64 {
        match &self.family {
            KernelFamily::Normal { mean, variance } => 0.5 * libm::erfc((x - mean) / (SQRT_2 * libm::sqrt(*variance))),
            KernelFamily::Uniform { left, right } => ((right - x) / (right - left)).clamp(0.0, 1.0),
            KernelFamily::AsymmetricExponential { left_rate, right_rate } => {
                let s = left_rate + right_rate;
                if x >= 0.0 {
                    left_rate / s * libm::exp(-right_rate * x)
                } else {
                    1.0 - right_rate / s * libm::exp(left_rate * x)
                }
            }
            KernelFamily::Tabulated(t) => 1.0 - t.mass_below(x),
        }
    }

    /// Smallest interval `[lo, hi]` whose complement carries at most `tail`
    /// mass on each side.
    pub fn effective_support(&self, tail: f64) -> (f64, f64) {
        let tail = tail.max(0.0);
        match &self.family {
            KernelFamily::Uniform { .. } | KernelFamily::Tabulated(_) => self.support(),
            KernelFamily::AsymmetricExponential { left_rate, right_rate } => {
                let s = left_rate + right_rate;
                let lo = if tail > 0.0 {
                    (libm::log(tail * s / right_rate) / left_rate).min(0.0)
                } else {
                    f64::NEG_INFINITY
                };
                let hi = if tail > 0.0 {
                    (-libm::log(tail * s / left_rate) / right_rate).max(0.0)
                } else {
                    f64::INFINITY
                };
                (lo, hi)
            }
            KernelFamily::Normal { mean, variance } => {
                if tail <= 0.0 {
                    return (f64::NEG_INFINITY, f64::INFINITY);
                }
                if tail >= 0.5 {
                    return (*mean, *mean);
                }
                let sd = libm::sqrt(*variance);
                let q = |z: f64| 0.5 * libm::erfc(z / SQRT_2) - tail;
                let z = roots::bisect(q, 0.0, 40.0, 1e-12, 200, "normal quantile").map_or(40.0, |r| r.x);
                (mean - z * sd, mean + z * sd)
            }
        }
    }

    /// Structural hypotheses this kernel fails; empty when it is admissible.
    pub fn validate(&self) -> Vec<KernelViolation> {
        let mut out = Vec::new();
        let (lo, hi) = self.abscissas;
        if !(lo < 0.0 && hi > 0.0) {
            out.push(KernelViolation::HeavyTail { lower: lo, upper: hi });
        }
        let (s_lo, s_hi) = self.support();
        let right = match &self.family {
            KernelFamily::Tabulated(t) => (0..t.xs.len() - 1).any(|i| t.xs[i + 1] > 0.0 && (t.ds[i] > 0.0 || t.ds[i + 1] > 0.0)),
            _ => s_hi > 0.0,
        };
        let left = match &self.family {
            KernelFamily::Tabulated(t) => (0..t.xs.len() - 1).any(|i| t.xs[i] < 0.0 && (t.ds[i] > 0.0 || t.ds[i + 1] > 0.0)),
            _ => s_lo < 0.0,
        };
        if !right {
            out.push(KernelViolation::NoMassRight);
        }
        if !left {
            out.push(KernelViolation::NoMassLeft);
        }
        if let KernelFamily::Tabulated(t) = &self.family {
            let mass = t.mass();
            if (mass - 1.0).abs() > 1e-10 {
                out.push(KernelViolation::Mass { mass });
            }
        }
        out
    }

    /// The mirrored kernel `x ↦ k(-x)`.
    pub fn reflect(&self) -> Kernel {
        let family = match &self.family {
            KernelFamily::Normal { mean, variance } => KernelFamily::Normal {
                mean: -mean,
                variance: *variance,
            },
            KernelFamily::Uniform { left, right } => KernelFamily::Uniform {
                left: -right,
                right: -left,
            },
            KernelFamily::AsymmetricExponential { left_rate, right_rate } => KernelFamily::AsymmetricExponential {
                left_rate: *right_rate,
                right_rate: *left_rate,
            },
            KernelFamily::Tabulated(t) => KernelFamily::Tabulated(Table {
                xs: t.xs.iter().rev().map(|x| -x).collect(),
                ds: t.ds.iter().rev().copied().collect(),
            }),
        };
        Kernel {
            family,
            abscissas: (-self.abscissas.1, -self.abscissas.0),
            correction: self.correction,
        }
    }
}

/// `e^{λ·x0}·φ_n(λh)` for `n = 0, 1, 2`, arranged so that the result
/// underflows or overflows only when the true value does.
fn exp_phi3(x0: f64, lambda: f64, h: f64) -> [f64; 3] {
    let y = lambda * h;
    if y <= 0.0 {
        let e = libm::exp(lambda * x0);
        return phi3(y).map(|p| e * p);
    }
    // φ_n(y) = e^y ψ_n(y) with ψ_n(y) = ∫_0^1 τ^n e^{-y(1-τ)} dτ ≤ 1.
    let psi = if y < 2.0 {
        let d = libm::exp(-y);
        phi3(y).map(|p| p * d)
    } else {
        let p0 = -libm::expm1(-y) / y;
        let p1 = (1.0 - p0) / y;
        let p2 = (1.0 - 2.0 * p1) / y;
        [p0, p1, p2]
    };
    let e = libm::exp(lambda * (x0 + h));
    psi.map(|p| e * p)
}

/// `φ_n(y) = ∫_0^1 τ^n e^{yτ} dτ` for `n = 0, 1, 2`.
fn phi3(y: f64) -> [f64; 3] {
    if y.abs() < 2.0 {
        // Σ_m y^m / (m! (n + m + 1)); 30 terms reach full precision for |y| < 2.
        let mut out = [0.0; 3];
        let mut term = 1.0;
        for m in 0..30 {
            let mf = m as f64;
            out[0] += term / (mf + 1.0);
            out[1] += term / (mf + 2.0);
            out[2] += term / (mf + 3.0);
            term *= y / (mf + 1.0);
        }
        out
    } else {
        let e = libm::exp(y);
        let p0 = libm::expm1(y) / y;
        let p1 = (e - p0) / y;
        let p2 = (e - 2.0 * p1) / y;
        [p0, p1, p2]
    }
}
