//! Closed and semi-closed forms for the normal and uniform kernel families.
//!
//! Normal kernels are parametrized by the skewness ratio `r = α/√(2σ)`;
//! uniform kernels on `[b, a]` by `θ = -a/b`, with `r = (a+b)/(a-b)`.
//! For the uniform family the minimizer of the moment generating function
//! is expressed through `z(θ)`, the nonzero solution of `ω(z) = ω(-θz)`
//! with `ω(x) = (x-1)e^x`.

use crate::error::{Error, Result};
use crate::roots;

/// Bisection width for `θ*`; `z(θ)` is bisected to adjacent floats.
pub const ROOT_WIDTH: f64 = 1e-13;
/// Below this distance from one, `θ` is treated as exactly one.
pub const THETA_ONE_TOL: f64 = 1e-8;

const MAX_ITER: usize = 2000;

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Asymmetry index of a normal kernel with skewness ratio `r`.
pub fn normal_e(r: f64) -> f64 {
    -sign(r) * libm::expm1(-r * r)
}

/// Mean giving skewness ratio `r` at the given variance.
pub fn normal_mean(r: f64, variance: f64) -> f64 {
    r * libm::sqrt(2.0 * variance)
}

/// Skewness ratio at which the normal asymmetry index equals `growth`;
/// `None` when `growth ≥ 1`, where every normal kernel straddles.
pub fn normal_r_star(growth: f64) -> Option<f64> {
    if growth >= 1.0 || !(growth > 0.0) {
        return None;
    }
    Some(libm::sqrt(-libm::log1p(-growth)))
}

/// `ω(x) = (x - 1)e^x`.
#[inline]
pub fn omega(x: f64) -> f64 {
    (x - 1.0) * libm::exp(x)
}

/// Bracket known to contain `z(θ)`.
pub fn z_bracket(theta: f64) -> (f64, f64) {
    if theta > 1.0 {
        (1.0 - 1.0 / theta, 1.0)
    } else {
        (-1.0 / theta, 1.0 - 1.0 / theta)
    }
}

/// `z(θ)`: zero of `ω(z) - ω(-θz)` inside [`z_bracket`], or zero at
/// `θ = 1`.
///
/// For `θ > 1` this is `1 - w` with `w` from [`uniform_z_complement`], so
/// above roughly `θ = 37` the result is exactly `1.0`.
pub fn uniform_z(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    if (theta - 1.0).abs() < THETA_ONE_TOL {
        return Ok(0.0);
    }
    if theta > 1.0 {
        return Ok(1.0 - uniform_z_complement(theta)?);
    }
    let (lo, hi) = z_bracket(theta);
    Ok(bisect_increasing(|z| omega(z) - omega(-theta * z), lo, hi, 0.0))
}

/// `1 - z(θ)` for `θ > 1`, accurate to full relative precision even where
/// `z(θ)` itself rounds to one.
pub fn uniform_z_complement(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    if theta - 1.0 < THETA_ONE_TOL {
        return Ok(1.0 - uniform_z(theta)?);
    }
    // ω(1 - w) = -w e^{1-w}; the residual decreases in w on (0, 1/θ).
    let f = |w: f64| omega(-theta * (1.0 - w)) + w * libm::exp(1.0 - w);
    Ok(bisect_increasing(f, 0.0, 1.0 / theta, 0.0))
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "theta",
            value: theta,
            lower: 0.0,
            upper: f64::INFINITY,
        })
    }
}

// Bisection for an `f` known to be negative at `lo` and positive at `hi`;
// the endpoints are never evaluated, which matters where rounding blurs
// their signs. `width = 0` runs to adjacent floats.
fn bisect_increasing<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= width || mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Derivative of `z(θ)` from its implicit equation.
pub fn uniform_z_prime(theta: f64) -> Result<f64> {
    if (theta - 1.0).abs() < THETA_ONE_TOL {
        return Err(Error::Domain {
            what: "theta",
            value: theta,
            lower: 1.0,
            upper: 1.0,
        });
    }
    if theta > 1.0 {
        // written through w = 1 - z, which keeps its relative precision
        let w = uniform_z_complement(theta)?;
        let z = 1.0 - w;
        return Ok(-z * w / ((theta + 1.0) * (w - 1.0 / theta)));
    }
    let z = uniform_z(theta)?;
    Ok(z * (z - 1.0) / ((theta + 1.0) * (1.0 - 1.0 / theta - z)))
}

/// `q(θ) = 1 - e^{z(θ)}/(1 + θz(θ))`, the magnitude of the asymmetry index.
pub fn uniform_q(theta: f64) -> Result<f64> {
    let z = uniform_z(theta)?;
    Ok(1.0 - libm::exp(z) / (1.0 + theta * z))
}

/// Asymmetry index of the uniform kernel on `[b, a]`, `b < 0 < a`.
pub fn uniform_e(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b < 0.0) {
        return Err(Error::Precondition(alloc::format!(
            "uniform support [{b}, {a}] must contain 0 in its interior"
        )));
    }
    let theta = -a / b;
    if (theta - 1.0).abs() < THETA_ONE_TOL {
        return Ok(0.0);
    }
    Ok(sign(theta - 1.0) * uniform_q(theta)?)
}

/// Skewness ratio of the uniform kernel on `[b, a]`.
pub fn uniform_r(a: f64, b: f64) -> f64 {
    (a + b) / (a - b)
}

/// `θ` from the skewness ratio `r ∈ (-1, 1)`.
pub fn theta_from_r(r: f64) -> f64 {
    (1.0 + r) / (1.0 - r)
}

/// `(θ*, r*)` with `q(θ*) = growth`; `None` when `growth ≥ 1`.
pub fn uniform_theta_star(growth: f64) -> Result<Option<(f64, f64)>> {
    if growth >= 1.0 {
        return Ok(None);
    }
    if !(growth > 0.0) {
        return Err(Error::invalid("growth", "must be positive"));
    }
    let lo = 1.0 + 1e-9;
    let mut hi = 2.0;
    let mut expansions = 0;
    while uniform_q(hi)? <= growth {
        hi *= 2.0;
        expansions += 1;
        if expansions > crate::speed::MAX_EXPANSIONS {
            return Err(Error::BracketNotFound {
                what: "theta*",
                expansions,
            });
        }
    }
    let f = |t: f64| uniform_q(t).map_or(f64::NAN, |q| q - growth);
    let theta = roots::bisect(f, lo, hi, ROOT_WIDTH, MAX_ITER, "theta*")?.x;
    Ok(Some((theta, (theta - 1.0) / (theta + 1.0))))
}

/// Summary of one uniform kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformCase {
    pub theta: f64,
    pub z: f64,
    pub asymmetry: f64,
    pub r: f64,
    /// `(θ*, r*)` for the requested growth rate, if any.
    pub threshold: Option<(f64, f64)>,
}

pub fn uniform_case(a: f64, b: f64, growth: Option<f64>) -> Result<UniformCase> {
    let asymmetry = uniform_e(a, b)?;
    let theta = -a / b;
    let threshold = match growth {
        Some(g) => uniform_theta_star(g)?,
        None => None,
    };
    Ok(UniformCase {
        theta,
        z: uniform_z(theta)?,
        asymmetry,
        r: uniform_r(a, b),
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Kernel;
    use crate::speed::asymmetry_e;
    use proptest::prelude::*;

    // Independent oracle: the defining equation multiplied out,
    // (z-1)e^z + (θz+1)e^{-θz}, bisected with plain halving.
    fn z_oracle(theta: f64) -> f64 {
        let g = |z: f64| (z - 1.0) * libm::exp(z) + (theta * z + 1.0) * libm::exp(-theta * z);
        let (mut lo, mut hi) = z_bracket(theta);
        let s = g(lo).signum();
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if g(m).signum() == s {
                lo = m;
            } else {
                hi = m;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn normal_formula_values() {
        assert_eq!(normal_e(0.0), 0.0);
        assert!((normal_e(1.0) - 0.632_120_558_828_557_7).abs() < 1e-15);
        assert_eq!(normal_e(-1.0), -normal_e(1.0));
        let e = asymmetry_e(&Kernel::normal(normal_mean(1.0, 1.0), 1.0).unwrap()).unwrap();
        assert!((e - normal_e(1.0)).abs() < 1e-12);
    }

    #[test]
    fn normal_threshold() {
        let r = normal_r_star(1.0 - libm::exp(-1.0)).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
        let r = normal_r_star(0.999_999).unwrap();
        assert!((r - 3.7169).abs() < 1e-4);
        assert!((normal_e(r) - 0.999_999).abs() < 1e-10);
        assert_eq!(normal_r_star(1.5), None);
        assert!((normal_r_star(0.5).unwrap() - libm::sqrt(core::f64::consts::LN_2)).abs() < 1e-15);
    }

    #[test]
    fn omega_values() {
        assert_eq!(omega(1.0), 0.0);
        assert_eq!(omega(0.0), -1.0);
        assert!((omega(2.0) - libm::exp(2.0)).abs() < 1e-15);
    }

    #[test]
    fn z_values() {
        assert_eq!(uniform_z(1.0).unwrap(), 0.0);
        let z2 = uniform_z(2.0).unwrap();
        assert!((z2 - z_oracle(2.0)).abs() < 1e-12);
        assert!(z2 > 0.5 && z2 < 1.0);
        assert!((z2 - 0.7165).abs() < 2e-3);
        assert!(uniform_z(1e3).unwrap() > 0.99);
        // 1 - z ≈ (θ+1)e^{-θ-1} once z is saturated
        let w = uniform_z_complement(60.0).unwrap();
        let approx = 61.0 * libm::exp(-61.0);
        assert!((w / approx - 1.0).abs() < 1e-3, "{w} vs {approx}");
        assert!(uniform_z(0.0).is_err());
    }

    #[test]
    fn z_prime_values() {
        let d = uniform_z_prime(2.0).unwrap();
        let h = 1e-6;
        let fd = (uniform_z(2.0 + h).unwrap() - uniform_z(2.0 - h).unwrap()) / (2.0 * h);
        assert!((d - fd).abs() < 1e-6 * d.abs());
        assert!((d - 0.314).abs() < 5e-3);
        assert!(uniform_z_prime(0.5).unwrap() > 0.0);
        assert!(matches!(uniform_z_prime(1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn uniform_asymmetry_values() {
        assert_eq!(uniform_e(1.0, -1.0).unwrap(), 0.0);
        let e = uniform_e(2.0, -1.0).unwrap();
        assert!((e - 0.158).abs() < 1e-3);
        let direct = asymmetry_e(&Kernel::uniform(-1.0, 2.0).unwrap()).unwrap();
        assert!((e - direct).abs() < 1e-10);
        assert!((uniform_e(1.0, -2.0).unwrap() + e).abs() < 1e-12);
    }

    #[test]
    fn theta_star_round_trip() {
        let q2 = uniform_q(2.0).unwrap();
        let (theta, r) = uniform_theta_star(q2).unwrap().unwrap();
        assert!((theta - 2.0).abs() < 1e-8);
        assert!((r - 1.0 / 3.0).abs() < 1e-8);
        assert_eq!(uniform_theta_star(1.0).unwrap(), None);
        let (theta, r) = uniform_theta_star(1e-6).unwrap().unwrap();
        assert!(theta > 1.0 && theta < 1.1);
        assert!(r > 0.0 && r < 0.05);
        assert_eq!(uniform_q(1.0).unwrap(), 0.0);
    }

    #[test]
    fn reciprocal_theta_relation() {
        for theta in [0.1, 0.4, 3.0, 20.0] {
            let z = uniform_z(theta).unwrap();
            let zr = uniform_z(1.0 / theta).unwrap();
            assert!((zr + theta * z).abs() < 1e-11, "θ={theta}");
        }
    }

    proptest! {
        #[test]
        fn z_solves_its_equation(log_theta in -2.0..2.0f64) {
            let theta = libm::pow(10.0, log_theta);
            let z = uniform_z(theta).unwrap();
            prop_assert!((omega(z) - omega(-theta * z)).abs() <= 1e-12);
            if (theta - 1.0).abs() >= THETA_ONE_TOL {
                let (lo, hi) = z_bracket(theta);
                // for extreme θ the root rounds to an end of the bracket
                prop_assert!(z >= lo && z <= hi);
            }
        }

        #[test]
        fn z_is_increasing(log_theta in -2.0..2.0f64, step in 0.001..0.5f64) {
            let t1 = libm::pow(10.0, log_theta);
            let t2 = libm::pow(10.0, log_theta + step);
            if t1 > 1.0 {
                prop_assert!(uniform_z_complement(t2).unwrap() < uniform_z_complement(t1).unwrap());
            } else {
                prop_assert!(uniform_z(t2).unwrap() > uniform_z(t1).unwrap());
            }
        }

        #[test]
        fn complement_agrees_with_oracle(log_theta in 0.01..1.4f64) {
            let t = libm::pow(10.0, log_theta);
            let w = uniform_z_complement(t).unwrap();
            prop_assert!((1.0 - w - z_oracle(t)).abs() <= 2e-13);
        }

        #[test]
        fn q_is_increasing(t in 1.0..50.0f64, step in 0.01..5.0f64) {
            prop_assert!(uniform_q(t + step).unwrap() > uniform_q(t).unwrap());
        }

        #[test]
        fn closed_forms_agree_with_direct_minimization(b in -3.0..-0.2f64, a in 0.2..3.0f64, r in -2.0..2.0f64) {
            let direct = asymmetry_e(&Kernel::uniform(b, a).unwrap()).unwrap();
            prop_assert!((uniform_e(a, b).unwrap() - direct).abs() <= 1e-8);
            let direct = asymmetry_e(&Kernel::normal(normal_mean(r, 0.7), 0.7).unwrap()).unwrap();
            prop_assert!((normal_e(r) - direct).abs() <= 1e-8);
        }
    }
}
