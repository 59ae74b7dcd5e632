//! Explicit lower and upper solutions and their residual checks.
//!
//! The lower solution travels at a speed `c` slightly inside the spreading
//! speed and has compact support:
//!
//! ```text
//! u(t, x) = max{0, H(e^{ρ(-x + ct + ξ)})},   H(z) = Az - Bz^{1+δ} - Dz^{1-δ}
//! ```
//!
//! with every constant derived from the reduced-growth function
//! `G_η(c, λ) = cλ - M(λ) + 1 - f'(0) + η`. The upper solution is the
//! minimum of `1` and the two critical exponentials.
//!
//! A profile is checked by evaluating the evolution residual
//! `u_t - k*u + u - f(u)` on a grid: lower solutions need it `≤ 0`, upper
//! solutions `≥ 0`.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::model::{Kernel, Model};
use crate::quad::{self, QuadOptions};
use crate::roots;
use crate::speed::{self, MAX_EXPANSIONS};
use crate::Side;

/// Sign tolerance for residual checks.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Step of the central time difference in residuals.
pub const TIME_STEP: f64 = 1e-6;
/// `|G(γ)|` at or below this counts as a double root.
pub const DEGENERACY_TOL: f64 = 1e-12;
/// Relative tolerance when re-deriving stored certificate quantities.
pub const CONSISTENCY_TOL: f64 = 1e-9;
/// Sample count of the reaction scan that fixes the height threshold.
pub const HEIGHT_SCAN_SAMPLES: usize = 10_000;

const ROOT_XTOL: f64 = 1e-14;
const ROOT_MAX_ITER: usize = 500;

/// `G_η(c, λ) = cλ - M(λ) + 1 - f'(0) + η`.
pub fn g_eta(model: &Model, eta: f64, c: f64, lambda: f64) -> Result<f64> {
    Ok(c * lambda - model.kernel.mgf(lambda)? + 1.0 - model.growth() + eta)
}

/// Reduction `η` of the growth rate at which the spreading speed on `side`
/// moves inward by exactly `epsilon`.
pub fn eta_for_epsilon(model: &Model, epsilon: f64, side: Side) -> Result<f64> {
    let report = speed::spreading_speeds(model)?;
    let gap = report.c_right - report.c_left;
    if !(epsilon > 0.0 && epsilon < 0.5 * gap) {
        return Err(Error::Range(alloc::format!(
            "epsilon {epsilon} must lie in (0, {}), half the speed gap",
            0.5 * gap
        )));
    }
    let f0 = model.growth();
    let j = model.kernel.first_moment();
    // As η → f'(0) the one-sided speed tends to the first moment.
    let (target, limit_ok) = match side {
        Side::Right => (report.c_right - epsilon, report.c_right - epsilon > j),
        Side::Left => (report.c_left + epsilon, report.c_left + epsilon < j),
    };
    if !limit_ok {
        return Err(Error::Range(alloc::format!(
            "epsilon {epsilon} would need the growth reduction to reach f'(0) = {f0}"
        )));
    }
    let kernel = &model.kernel;
    let miss = |eta: f64| match speed::speed_with_growth(kernel, f0 - eta, side) {
        // Right speeds decrease in η, left speeds increase; orient so the
        // function increases.
        Ok(c) => side.sign() * (target - c),
        Err(_) => f64::NAN,
    };
    let root = roots::bisect(miss, 0.0, f0 * (1.0 - 1e-12), 0.0, 4000, "growth reduction")?;
    Ok(root.x)
}

/// The two zeros of `G_η(c, ·)` on one half-axis and its maximizer.
///
/// `alpha` is the zero nearer the origin, `beta` the farther one, so that
/// `0 < α < γ < β` on the right and `β < γ < α < 0` on the left.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GRoots {
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
    /// `G_η(c, γ) > 0`.
    pub peak: f64,
}

pub fn g_roots(model: &Model, eta: f64, c: f64, side: Side) -> Result<GRoots> {
    let kernel = &model.kernel;
    let dir = side.sign();
    let (lo, hi) = kernel.abscissas();
    let limit = if dir > 0.0 { hi } else { lo };
    let g = |l: f64| g_eta(model, eta, c, l).unwrap_or(f64::NEG_INFINITY);

    // γ solves M'(γ) = c; M' is increasing so the side is set by M'(0) = J.
    let slope = |l: f64| match kernel.mgf_prime(l) {
        Ok(v) if !v.is_nan() => dir * (v - c),
        _ => f64::INFINITY,
    };
    if slope(0.0) >= 0.0 {
        return Err(Error::NoRoot { speed: c });
    }
    let br = roots::expand(slope, 0.0, 1.0, dir, limit, MAX_EXPANSIONS, "maximizer of G")
        .map_err(|_| Error::NoRoot { speed: c })?;
    let gamma = roots::brent(slope, br.lo, br.hi, br.f_lo, br.f_hi, ROOT_XTOL, 0.0, ROOT_MAX_ITER, "maximizer of G")?.x;
    let peak = g(gamma);
    if peak.abs() <= DEGENERACY_TOL {
        return Err(Error::DegenerateRoot { speed: c });
    }
    if peak < 0.0 {
        return Err(Error::NoRoot { speed: c });
    }
    let inner = roots::brent(g, 0.0, gamma, g(0.0), peak, ROOT_XTOL, 0.0, ROOT_MAX_ITER, "inner zero of G")?.x;
    let outer_limit = if dir > 0.0 { hi } else { lo };
    let gap = (outer_limit - gamma).abs();
    let step = if gap.is_finite() { 0.5 * gap } else { gamma.abs().max(1.0) };
    let br = roots::expand(g, gamma, step, dir, outer_limit, MAX_EXPANSIONS, "outer zero of G")?;
    let outer = roots::brent(g, br.lo, br.hi, br.f_lo, br.f_hi, ROOT_XTOL, 0.0, ROOT_MAX_ITER, "outer zero of G")?.x;
    Ok(GRoots {
        alpha: inner,
        gamma,
        beta: outer,
        peak,
    })
}

/// Roots and peak of `H(z) = Az - Bz^{1+δ} - Dz^{1-δ}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HShape {
    pub b: f64,
    pub mu: f64,
    pub nu: f64,
    pub z0: f64,
    pub hmax: f64,
}

/// `H(z)`; zero for `z ≤ 0` and `-∞` where `z^δ` leaves the float range.
pub fn h_value(a: f64, b: f64, d: f64, delta: f64, z: f64) -> f64 {
    if !(z > 0.0) {
        return 0.0;
    }
    let w = libm::pow(z, delta);
    if !w.is_finite() || w == 0.0 {
        return f64::NEG_INFINITY;
    }
    z * (a - b * w - d / w)
}

/// Support roots and peak of `H` for the given coefficients.
pub fn h_shape(a: f64, b: f64, d: f64, delta: f64) -> Result<HShape> {
    let disc = a * a - 4.0 * b * d;
    if !(a > 0.0 && b > 0.0 && d > 0.0 && delta > 0.0 && delta < 1.0) || disc < 0.0 {
        return Err(Error::Precondition(alloc::format!(
            "H needs A, B, D > 0, δ in (0, 1) and B ≤ A²/(4D); got A={a}, B={b}, D={d}, δ={delta}"
        )));
    }
    let s = libm::sqrt(disc);
    let inv = 1.0 / delta;
    let mu = libm::pow(2.0 * d / (a + s), inv);
    let nu = libm::pow((a + s) / (2.0 * b), inv);
    let s_peak = libm::sqrt(a * a - 4.0 * b * d * (1.0 - delta * delta));
    let w0 = (a + s_peak) / (2.0 * b * (1.0 + delta));
    let z0 = libm::pow(w0, inv);
    // H(z0) = B z0 (w0 - w1)(w2 - w0)/w0 with w1, w2 the roots in w = z^δ;
    // both gaps are written without cancellation near the double root.
    let r = s * (1.0 - delta) / (delta * a + s_peak);
    let hmax = (z0 * disc * (1.0 - r * r) / (4.0 * b * w0)).max(0.0);
    Ok(HShape { b, mu, nu, z0, hmax })
}

/// `B` at which the peak of `H` equals `p`; the peak decreases in `B`,
/// from `+∞` at `B → 0` to `0` at `B = A²/(4D)`.
///
/// The peak moves by about `z₀^{1+δ}` per unit of `B`, so for very small
/// `δ` adjacent floats of `B` can straddle `p` by more than `1e-12`; the
/// result is then the float whose peak does not exceed `p`.
pub fn solve_b_for_height(a: f64, d: f64, delta: f64, p: f64) -> Result<HShape> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::HeightUnreachable { height: p });
    }
    let b_max = a * a / (4.0 * d);
    let peak = |b: f64| h_shape(a, b, d, delta).map_or(f64::NAN, |h| h.hmax);
    let mut lo = 0.5 * b_max;
    let mut k = 0;
    while !(peak(lo) > p) {
        lo *= 0.5;
        k += 1;
        if k > MAX_EXPANSIONS || lo == 0.0 {
            return Err(Error::HeightUnreachable { height: p });
        }
    }
    let mut hi = b_max;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = peak(mid);
        if (v - p).abs() <= 1e-12 * p.max(1.0) {
            lo = mid;
            hi = mid;
            break;
        }
        if v > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Prefer the side whose peak does not exceed `p`.
    let b = if peak(lo) <= p { lo } else { hi };
    h_shape(a, b, d, delta)
}

/// Largest `u ≤ 1` with `f(v) ≥ (f'(0) - η/2)v` on `[0, u]`.
pub fn height_threshold(model: &Model, eta: f64) -> f64 {
    let slope = model.growth() - 0.5 * eta;
    let ok = |u: f64| model.reaction.value(u) >= slope * u;
    let n = HEIGHT_SCAN_SAMPLES;
    let mut prev = 0.0;
    for i in 1..=n {
        let u = i as f64 / n as f64;
        if !ok(u) {
            let (mut lo, mut hi) = (prev, u);
            while hi - lo > 1e-15 * hi.max(1e-300) {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if ok(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return lo;
        }
        prev = u;
    }
    1.0
}

/// A compactly supported traveling lower solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LowerSolution {
    pub side: Side,
    pub speed: f64,
    pub epsilon: f64,
    pub eta: f64,
    /// The support diameter is at most `half_width / 2`.
    pub half_width: f64,
    pub rho: f64,
    pub delta: f64,
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub mu: f64,
    pub nu: f64,
    pub z0: f64,
    pub hmax: f64,
    pub xi: f64,
    pub p1: f64,
    pub p2: f64,
}

/// Speed in the middle of the admissible band `(c* - ε, c*)` on `side`.
pub fn default_speed(model: &Model, side: Side, epsilon: f64) -> Result<f64> {
    let r = speed::spreading_speeds(model)?;
    Ok(match side {
        Side::Right => r.c_right - 0.5 * epsilon,
        Side::Left => r.c_left + 0.5 * epsilon,
    })
}

/// Builds the lower solution moving at speed `c` on `side`.
///
/// `η` comes from [`eta_for_epsilon`]; `B` is the smaller of the values
/// meeting the height bound `H^max ≤ p₂` and the support bound
/// `|ρ|⁻¹ ln(ν/μ) ≤ r/2`. `p1` caps `p₂` (defaults to `p₂`).
pub fn build_lower_solution(
    model: &Model,
    c: f64,
    side: Side,
    epsilon: f64,
    r: f64,
    p1: Option<f64>,
) -> Result<LowerSolution> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid("r", "must be positive"));
    }
    let eta = eta_for_epsilon(model, epsilon, side)?;
    build_with_eta(model, c, side, epsilon, eta, r, p1)
}

/// As [`build_lower_solution`] with a caller-chosen `η`.
pub fn build_with_eta(
    model: &Model,
    c: f64,
    side: Side,
    epsilon: f64,
    eta: f64,
    r: f64,
    p1: Option<f64>,
) -> Result<LowerSolution> {
    let roots = g_roots(model, eta, c, side)?;
    let rho = 0.5 * (roots.beta + roots.gamma);
    let delta = (roots.beta - roots.gamma) / (roots.beta + roots.gamma);
    let mut p2 = height_threshold(model, eta);
    if let Some(p1) = p1 {
        p2 = p2.min(p1);
    }
    let p1 = p1.unwrap_or(p2);
    let m_delta = 0.5 * eta * libm::pow(p2, -delta);
    let g_rho = g_eta(model, eta, c, rho)?;
    let a = libm::pow(g_rho / m_delta, 1.0 / delta);
    let d = a * g_rho / roots.peak;
    let b_max = a * a / (4.0 * d);

    let by_height = solve_b_for_height(a, d, delta, p2)?;
    let ratio = libm::exp(delta * rho.abs() * r / 2.0);
    let s = a * (ratio - 1.0) / (ratio + 1.0);
    let by_width = (a * a - s * s) / (4.0 * d);
    let b = by_height.b.max(by_width);
    if !(b < b_max) {
        return Err(Error::InfeasibleWidth);
    }
    let shape = h_shape(a, b, d, delta)?;
    let xi = (libm::log(shape.mu) + libm::log(shape.nu)) / (2.0 * rho);
    Ok(LowerSolution {
        side,
        speed: c,
        epsilon,
        eta,
        half_width: r,
        rho,
        delta,
        a,
        b,
        d,
        mu: shape.mu,
        nu: shape.nu,
        z0: shape.z0,
        hmax: shape.hmax,
        xi,
        p1,
        p2,
    })
}

impl LowerSolution {
    /// `H` with this certificate's coefficients.
    pub fn h(&self, z: f64) -> f64 {
        h_value(self.a, self.b, self.d, self.delta, z)
    }

    fn z_at(&self, t: f64, x: f64) -> f64 {
        libm::exp(self.rho * (-x + self.speed * t + self.xi))
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        let v = self.h(self.z_at(t, x));
        if v > 0.0 {
            v
        } else {
            0.0
        }
    }

    /// Interval where the profile is positive at time `t`, from the
    /// coefficients (not the stored roots).
    pub fn support(&self, t: f64) -> (f64, f64) {
        let (mu, nu) = match h_shape(self.a, self.b, self.d, self.delta) {
            Ok(s) => (s.mu, s.nu),
            Err(_) => (self.mu, self.nu),
        };
        let base = self.speed * t + self.xi;
        let e1 = base - libm::log(mu) / self.rho;
        let e2 = base - libm::log(nu) / self.rho;
        (e1.min(e2), e1.max(e2))
    }

    /// Position of the peak at time `t`.
    pub fn peak_position(&self, t: f64) -> f64 {
        self.speed * t + self.xi - libm::log(self.z0) / self.rho
    }

    /// Internal consistency of the stored fields.
    pub fn check(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let b_max = self.a * self.a / (4.0 * self.d);
        if !(self.b > 0.0 && self.b < b_max) {
            out.push(Violation::CoefficientRange { b: self.b, b_max });
            return out;
        }
        let shape = match h_shape(self.a, self.b, self.d, self.delta) {
            Ok(s) => s,
            Err(_) => {
                out.push(Violation::CoefficientRange { b: self.b, b_max });
                return out;
            }
        };
        for (field, stored, fresh) in [
            ("mu", self.mu, shape.mu),
            ("nu", self.nu, shape.nu),
            ("z0", self.z0, shape.z0),
            ("hmax", self.hmax, shape.hmax),
        ] {
            if !((stored - fresh).abs() <= CONSISTENCY_TOL * fresh.abs()) {
                out.push(Violation::Mismatch { field, stored, recomputed: fresh });
            }
        }
        let (h_mu, h_nu) = (self.h(self.mu), self.h(self.nu));
        if h_mu.abs() > 1e-10 || h_nu.abs() > 1e-10 {
            out.push(Violation::SupportRoots { h_mu, h_nu });
        }
        if !(self.hmax <= self.p2 * (1.0 + CONSISTENCY_TOL) && self.p2 <= self.p1) {
            out.push(Violation::HeightOrder {
                hmax: self.hmax,
                p2: self.p2,
                p1: self.p1,
            });
        }
        let mid = (libm::log(self.mu) + libm::log(self.nu)) / (2.0 * self.rho);
        if !((self.xi - mid).abs() <= CONSISTENCY_TOL * mid.abs().max(1.0)) {
            out.push(Violation::Mismatch {
                field: "xi",
                stored: self.xi,
                recomputed: mid,
            });
        }
        out
    }
}

/// Upper solution `min{1, Γ₀e^{λ_r*(-x+c_r*t)}, Γ₀e^{λ_l*(-x+c_l*t)}}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpperSolution {
    pub gamma0: f64,
    pub lambda_left: f64,
    pub lambda_right: f64,
    pub c_left: f64,
    pub c_right: f64,
}

pub fn build_upper_solution(model: &Model, gamma: f64) -> Result<UpperSolution> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid("gamma", "must be positive"));
    }
    let r = speed::spreading_speeds(model)?;
    Ok(UpperSolution {
        gamma0: gamma.max(1.0),
        lambda_left: r.lambda_left,
        lambda_right: r.lambda_right,
        c_left: r.c_left,
        c_right: r.c_right,
    })
}

impl UpperSolution {
    pub fn value(&self, t: f64, x: f64) -> f64 {
        let right = self.gamma0 * libm::exp(self.lambda_right * (-x + self.c_right * t));
        let left = self.gamma0 * libm::exp(self.lambda_left * (-x + self.c_left * t));
        right.min(left).min(1.0)
    }

    /// Where the profile leaves the value one on each side.
    pub fn switch_points(&self, t: f64) -> (f64, f64) {
        let lg = libm::log(self.gamma0);
        (self.c_left * t + lg / self.lambda_left, self.c_right * t + lg / self.lambda_right)
    }

    /// Internal consistency against the model's speeds.
    pub fn check(&self, model: &Model) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.gamma0 >= 1.0) {
            out.push(Violation::Mismatch {
                field: "gamma0",
                stored: self.gamma0,
                recomputed: 1.0,
            });
        }
        if let Ok(r) = speed::spreading_speeds(model) {
            for (field, stored, fresh) in [
                ("lambda_left", self.lambda_left, r.lambda_left),
                ("lambda_right", self.lambda_right, r.lambda_right),
                ("c_left", self.c_left, r.c_left),
                ("c_right", self.c_right, r.c_right),
            ] {
                if !((stored - fresh).abs() <= 1e-8 * fresh.abs().max(1.0)) {
                    out.push(Violation::Mismatch { field, stored, recomputed: fresh });
                }
            }
        }
        out
    }
}

/// A failed certificate check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Violation {
    CoefficientRange { b: f64, b_max: f64 },
    Mismatch { field: &'static str, stored: f64, recomputed: f64 },
    SupportRoots { h_mu: f64, h_nu: f64 },
    HeightOrder { hmax: f64, p2: f64, p1: f64 },
    /// Residual of the wrong sign beyond [`RESIDUAL_TOL`].
    Residual { value: f64, t: f64, x: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::CoefficientRange { b, b_max } => write!(f, "B = {b} is outside (0, A²/(4D) = {b_max})"),
            Violation::Mismatch { field, stored, recomputed } => {
                write!(f, "{field} = {stored} but the coefficients give {recomputed}")
            }
            Violation::SupportRoots { h_mu, h_nu } => write!(f, "H(mu) = {h_mu}, H(nu) = {h_nu}; expected 0"),
            Violation::HeightOrder { hmax, p2, p1 } => write!(f, "need hmax ≤ p2 ≤ p1, got {hmax}, {p2}, {p1}"),
            Violation::Residual { value, t, x } => write!(f, "residual {value:e} of the wrong sign at t = {t}, x = {x}"),
        }
    }
}

/// A space-time profile whose residual can be evaluated.
pub trait Profile {
    fn value(&self, t: f64, x: f64) -> f64;

    /// Points in `x` where the profile is not differentiable at time `t`.
    fn kinks(&self, _t: f64) -> Vec<f64> {
        Vec::new()
    }

    /// Interval outside which the profile is flat, for default grids.
    fn window(&self, t: f64) -> (f64, f64);
}

impl Profile for LowerSolution {
    fn value(&self, t: f64, x: f64) -> f64 {
        LowerSolution::value(self, t, x)
    }

    fn kinks(&self, t: f64) -> Vec<f64> {
        let (lo, hi) = self.support(t);
        alloc::vec![lo, hi]
    }

    fn window(&self, t: f64) -> (f64, f64) {
        let (lo, hi) = self.support(t);
        let w = hi - lo;
        (lo - w, hi + w)
    }
}

impl Profile for UpperSolution {
    fn value(&self, t: f64, x: f64) -> f64 {
        UpperSolution::value(self, t, x)
    }

    fn kinks(&self, t: f64) -> Vec<f64> {
        let (l, r) = self.switch_points(t);
        alloc::vec![l, r]
    }

    fn window(&self, t: f64) -> (f64, f64) {
        let (l, r) = self.switch_points(t);
        (l - 5.0 / self.lambda_left.abs(), r + 5.0 / self.lambda_right)
    }
}

/// A profile constant in space and time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constant(pub f64);

impl Profile for Constant {
    fn value(&self, _t: f64, _x: f64) -> f64 {
        self.0
    }

    fn window(&self, _t: f64) -> (f64, f64) {
        (-1.0, 1.0)
    }
}

/// Extremes of the residual over a grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualReport {
    pub max: f64,
    pub argmax: (f64, f64),
    pub min: f64,
    pub argmin: (f64, f64),
    pub points: usize,
    /// Grid points skipped for lying within one cell of a kink.
    pub excluded: usize,
}

/// Residual `u_t - k*u + u - f(u)` at one point.
pub fn residual_at<P: Profile + ?Sized>(model: &Model, profile: &P, t: f64, x: f64, opts: &QuadOptions) -> Result<f64> {
    let u = profile.value(t, x);
    let ut = (profile.value(t + TIME_STEP, x) - profile.value(t - TIME_STEP, x)) / (2.0 * TIME_STEP);
    let conv = convolve(&model.kernel, profile, t, x, opts)?;
    Ok(ut - conv + u - model.reaction.value(u))
}

/// `(k*u)(t, x) = ∫ k(y) u(t, x - y) dy`.
pub fn convolve<P: Profile + ?Sized>(kernel: &Kernel, profile: &P, t: f64, x: f64, opts: &QuadOptions) -> Result<f64> {
    let (lo, hi) = kernel.support();
    let mut breaks = kernel.breakpoints();
    breaks.extend(profile.kinks(t).into_iter().map(|k| x - k));
    let r = quad::integrate_with_breaks(
        |y| kernel.density(y) * profile.value(t, x - y),
        lo,
        hi,
        &breaks,
        kernel.scale(),
        opts,
    )?;
    Ok(r.value)
}

/// Residual extremes over `t_grid × x_grid`, skipping points within one
/// grid cell of a kink.
pub fn residual<P: Profile + ?Sized>(model: &Model, profile: &P, t_grid: &[f64], x_grid: &[f64]) -> Result<ResidualReport> {
    let opts = QuadOptions::default();
    let cell = x_grid
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(f64::INFINITY, f64::min);
    let mut rep = ResidualReport {
        max: f64::NEG_INFINITY,
        argmax: (f64::NAN, f64::NAN),
        min: f64::INFINITY,
        argmin: (f64::NAN, f64::NAN),
        points: 0,
        excluded: 0,
    };
    for &t in t_grid {
        let kinks = profile.kinks(t);
        for &x in x_grid {
            if kinks.iter().any(|k| (x - k).abs() < cell) {
                rep.excluded += 1;
                continue;
            }
            let r = residual_at(model, profile, t, x, &opts)?;
            rep.points += 1;
            if r > rep.max {
                rep.max = r;
                rep.argmax = (t, x);
            }
            if r < rep.min {
                rep.min = r;
                rep.argmin = (t, x);
            }
        }
    }
    Ok(rep)
}

/// Times of the standard verification grid.
pub const STANDARD_TIMES: [f64; 3] = [0.0, 0.5, 1.0];

/// Residual over the standard grid: the three [`STANDARD_TIMES`], and at
/// each time the profile's window sampled at a step of `10⁻³` of its
/// width.
pub fn standard_residual<P: Profile + ?Sized>(model: &Model, profile: &P) -> Result<ResidualReport> {
    let mut total: Option<ResidualReport> = None;
    for &t in &STANDARD_TIMES {
        let (lo, hi) = profile.window(t);
        let n = 1000 * 3;
        let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        let r = residual(model, profile, &[t], &xs)?;
        total = Some(match total {
            None => r,
            Some(acc) => ResidualReport {
                max: if r.max > acc.max { r.max } else { acc.max },
                argmax: if r.max > acc.max { r.argmax } else { acc.argmax },
                min: if r.min < acc.min { r.min } else { acc.min },
                argmin: if r.min < acc.min { r.argmin } else { acc.argmin },
                points: acc.points + r.points,
                excluded: acc.excluded + r.excluded,
            },
        });
    }
    Ok(total.expect("non-empty time grid"))
}

/// Switch time, terminal position and phase-two shift of a two-phase
/// schedule running at `c1` on `[0, κτ]` and at `c2` on `[κτ, τ]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule {
    pub switch_time: f64,
    pub terminal_position: f64,
}

pub fn forward_backward_schedule(c1: f64, c2: f64, kappa: f64, tau: f64) -> Result<Schedule> {
    if !(c2 <= c1) {
        return Err(Error::Precondition(alloc::format!("need c2 ≤ c1, got c1 = {c1}, c2 = {c2}")));
    }
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::invalid("kappa", "must lie in [0, 1]"));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::invalid("tau", "must be positive"));
    }
    Ok(Schedule {
        switch_time: kappa * tau,
        terminal_position: kappa * c1 * tau + (1.0 - kappa) * c2 * tau,
    })
}

/// Shift that puts the peak of the phase-two solution at the phase-one
/// center when the phases switch.
pub fn phase_two_shift(c1: f64, c2: f64, kappa: f64, tau: f64, second: &LowerSolution) -> f64 {
    (c1 - c2) * kappa * tau + libm::log(second.z0) / second.rho
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Reaction;

    fn uniform_model() -> Model {
        Model::new(Kernel::uniform(-1.0, 1.0).unwrap(), Reaction::logistic(1.0).unwrap()).unwrap()
    }

    #[test]
    fn g_eta_examples() {
        let m = uniform_model();
        assert_eq!(g_eta(&m, 0.5, 0.3, 0.0).unwrap(), -0.5);
        let v = g_eta(&m, 0.1, 0.8, 1.0).unwrap();
        assert!((v - (0.8 - libm::sinh(1.0) + 0.1)).abs() < 1e-15);
        let r = speed::spreading_speeds(&m).unwrap();
        assert!(g_eta(&m, 0.0, r.c_right, r.lambda_right).unwrap().abs() < 1e-10);
    }

    #[test]
    fn eta_round_trip() {
        let m = uniform_model();
        let r = speed::spreading_speeds(&m).unwrap();
        let eta = eta_for_epsilon(&m, 0.05, Side::Right).unwrap();
        let c = speed::speed_with_growth(&m.kernel, 1.0 - eta, Side::Right).unwrap();
        assert!((c - (r.c_right - 0.05)).abs() <= 1e-10);
        let eta_l = eta_for_epsilon(&m, 0.05, Side::Left).unwrap();
        assert!((eta - eta_l).abs() < 1e-10);
        assert!(eta_for_epsilon(&m, 1e-6, Side::Right).unwrap() < 1e-4);
        assert!(matches!(
            eta_for_epsilon(&m, r.c_right - r.c_left, Side::Right),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn roots_are_ordered() {
        let m = uniform_model();
        let r = speed::spreading_speeds(&m).unwrap();
        let eta = eta_for_epsilon(&m, 0.05, Side::Right).unwrap();
        let c = r.c_right - 0.025;
        let g = g_roots(&m, eta, c, Side::Right).unwrap();
        assert!(0.0 < g.alpha && g.alpha < g.gamma && g.gamma < g.beta);
        assert!(g_eta(&m, eta, c, g.alpha).unwrap().abs() < 1e-10);
        assert!(g_eta(&m, eta, c, g.beta).unwrap().abs() < 1e-10);
        assert!(g.peak > 0.0);
        let gl = g_roots(&m, eta, -c, Side::Left).unwrap();
        assert!(gl.beta < gl.gamma && gl.gamma < gl.alpha && gl.alpha < 0.0);
        assert!((gl.beta + g.beta).abs() < 1e-10);
    }

    #[test]
    fn tangent_and_inadmissible_speeds() {
        let m = uniform_model();
        let r = speed::spreading_speeds(&m).unwrap();
        let eta = eta_for_epsilon(&m, 0.05, Side::Right).unwrap();
        let c_eta = speed::speed_with_growth(&m.kernel, 1.0 - eta, Side::Right).unwrap();
        assert!(matches!(g_roots(&m, eta, c_eta, Side::Right), Err(Error::DegenerateRoot { .. })));
        assert!(matches!(g_roots(&m, eta, r.c_left, Side::Right), Err(Error::NoRoot { .. })));
        assert!(matches!(g_roots(&m, eta, c_eta - 0.01, Side::Right), Err(Error::NoRoot { .. })));
    }

    #[test]
    fn h_at_the_double_root() {
        let s = h_shape(2.0, 1.0, 1.0, 0.5).unwrap();
        assert!(s.hmax.abs() < 1e-15);
        assert!((s.mu - 1.0).abs() < 1e-15 && (s.nu - 1.0).abs() < 1e-15 && (s.z0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn height_solve_hits_target() {
        let s = solve_b_for_height(2.0, 1.0, 0.5, 0.1).unwrap();
        assert!(s.b > 0.0 && s.b < 1.0);
        assert!((s.hmax - 0.1).abs() <= 1e-12);
        // sweep oracle: the peak over a fine z grid
        let peak = (1..200_000)
            .map(|i| h_value(2.0, s.b, 1.0, 0.5, i as f64 * 1e-4))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((peak - 0.1).abs() < 1e-7);
        assert!(h_value(2.0, s.b, 1.0, 0.5, s.mu).abs() < 1e-12);
        assert!(h_value(2.0, s.b, 1.0, 0.5, s.nu).abs() < 1e-12);
    }

    #[test]
    fn support_shrinks_with_height() {
        let widths: Vec<f64> = [0.1, 0.01, 0.001]
            .iter()
            .map(|&p| {
                let s = solve_b_for_height(2.0, 1.0, 0.5, p).unwrap();
                s.nu - s.mu
            })
            .collect();
        assert!(widths[0] > widths[1] && widths[1] > widths[2]);
        assert!(widths[2] < 0.2);
    }

    #[test]
    fn logistic_height_threshold_is_half_eta() {
        let m = uniform_model();
        assert!((height_threshold(&m, 0.2) - 0.1).abs() < 1e-14);
    }

    #[test]
    fn lower_solution_structure() {
        let m = uniform_model();
        let c = default_speed(&m, Side::Right, 0.05).unwrap();
        let l = build_lower_solution(&m, c, Side::Right, 0.05, 1.0, None).unwrap();
        assert!(l.check().is_empty(), "{:?}", l.check());
        assert!(l.hmax <= l.p2);
        let (lo, hi) = l.support(0.0);
        assert!(hi - lo <= 0.5 + 1e-12);
        assert_eq!(l.value(0.0, lo - 1e-3), 0.0);
        assert_eq!(l.value(0.0, hi + 1e-3), 0.0);
        assert!((l.value(0.0, l.peak_position(0.0)) - l.hmax).abs() < 1e-15);
        let mut tampered = l;
        tampered.b *= 1.1;
        assert!(!tampered.check().is_empty());
    }

    #[test]
    fn left_solution_mirrors_right_on_reflected_kernel() {
        let m = Model::new(Kernel::uniform(-1.0, 2.0).unwrap(), Reaction::logistic(1.0).unwrap()).unwrap();
        let mr = Model::new(m.kernel.reflect(), Reaction::logistic(1.0).unwrap()).unwrap();
        let c = default_speed(&m, Side::Left, 0.05).unwrap();
        let l = build_lower_solution(&m, c, Side::Left, 0.05, 1.0, None).unwrap();
        let r = build_lower_solution(&mr, -c, Side::Right, 0.05, 1.0, None).unwrap();
        for x in [-0.2, -0.05, 0.0, 0.1] {
            let (a, b) = (l.value(0.3, x), r.value(0.3, -x));
            assert!((a - b).abs() <= 1e-9 * a.max(b).max(1e-300), "{a} vs {b}");
        }
    }

    #[test]
    fn constant_profiles_have_zero_residual() {
        let m = uniform_model();
        let xs = [-1.0, 0.0, 0.5];
        for v in [0.0, 1.0] {
            let r = residual(&m, &Constant(v), &[0.0, 1.0], &xs).unwrap();
            assert!(r.max.abs() <= 1e-12 && r.min.abs() <= 1e-12);
        }
    }

    #[test]
    fn upper_solution_residual_is_nonnegative() {
        let m = uniform_model();
        let u = build_upper_solution(&m, 0.5).unwrap();
        assert_eq!(u.gamma0, 1.0);
        assert!(u.check(&m).is_empty());
        let rep = standard_residual(&m, &u).unwrap();
        assert!(rep.min >= -RESIDUAL_TOL, "{rep:?}");
    }

    #[test]
    fn concavity_of_g() {
        let m = uniform_model();
        for lambda in [-3.0, -0.5, 0.2, 1.0, 4.0] {
            let h = 0.05;
            let s = g_eta(&m, 0.1, 0.7, lambda - h).unwrap() - 2.0 * g_eta(&m, 0.1, 0.7, lambda).unwrap()
                + g_eta(&m, 0.1, 0.7, lambda + h).unwrap();
            assert!(s < 0.0);
        }
    }

    #[test]
    fn schedule_examples() {
        assert_eq!(forward_backward_schedule(1.0, -1.0, 0.5, 10.0).unwrap().terminal_position, 0.0);
        assert_eq!(forward_backward_schedule(1.0, -1.0, 1.0, 10.0).unwrap().terminal_position, 10.0);
        assert_eq!(forward_backward_schedule(1.0, -1.0, 0.0, 10.0).unwrap().terminal_position, -10.0);
        assert_eq!(forward_backward_schedule(1.0, -1.0, 0.25, 8.0).unwrap().switch_time, 2.0);
        assert!(forward_backward_schedule(-1.0, 1.0, 0.5, 1.0).is_err());
    }
}
