//! Bracketed scalar root finding.
//!
//! Everything here works on a sign change: [`expand`] grows a bracket until
//! one appears, [`bisect`] and [`brent`] shrink it.

use crate::error::{Error, Result};

/// A located root with its convergence record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
    /// Width of the final bracket.
    pub width: f64,
}

/// An interval `[lo, hi]` (in either order) over which `f` changes sign.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
    pub expansions: usize,
}

#[inline]
fn opposite(a: f64, b: f64) -> bool {
    (a <= 0.0 && b >= 0.0) || (a >= 0.0 && b <= 0.0)
}

/// Moves away from `origin` in direction `dir` (±1) until `f` differs in
/// sign from `f(origin)`.
///
/// Trial points are `origin + dir·2^k·start` when the limit is infinite, and
/// halve the remaining gap to `limit` otherwise, so `limit` itself is never
/// evaluated. At most `max_expansions` trial points are tried.
pub fn expand<F: FnMut(f64) -> f64>(
    mut f: F,
    origin: f64,
    start: f64,
    dir: f64,
    limit: f64,
    max_expansions: usize,
    what: &'static str,
) -> Result<Bracket> {
    let f0 = f(origin);
    let mut lo = origin;
    let mut f_lo = f0;
    let gap = (limit - origin).abs();
    let mut step = if gap.is_finite() { start.min(0.5 * gap) } else { start };
    for k in 0..max_expansions {
        let hi = origin + dir * step;
        if gap.is_finite() && (hi - limit) * dir >= 0.0 {
            break;
        }
        let f_hi = f(hi);
        if f_hi.is_nan() {
            break;
        }
        if opposite(f0, f_hi) && f_hi != 0.0 || f_hi == 0.0 {
            return Ok(Bracket {
                lo,
                hi,
                f_lo,
                f_hi,
                expansions: k + 1,
            });
        }
        lo = hi;
        f_lo = f_hi;
        step = if gap.is_finite() { gap - 0.5 * (gap - step) } else { 2.0 * step };
    }
    Err(Error::BracketNotFound {
        what,
        expansions: max_expansions,
    })
}

/// Plain bisection on `[lo, hi]`; stops when the bracket is narrower than
/// `xtol`.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
    max_iter: usize,
    what: &'static str,
) -> Result<Root> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(Root { x: lo, fx: 0.0, iterations: 0, width: 0.0 });
    }
    if f_hi == 0.0 {
        return Ok(Root { x: hi, fx: 0.0, iterations: 0, width: 0.0 });
    }
    if !opposite(f_lo, f_hi) {
        return Err(Error::BracketNotFound { what, expansions: 0 });
    }
    for it in 1..=max_iter {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= xtol || mid == lo || mid == hi {
            let fx = f(mid);
            return Ok(Root { x: mid, fx, iterations: it, width: (hi - lo).abs() });
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(Root { x: mid, fx: 0.0, iterations: it, width: (hi - lo).abs() });
        }
        if opposite(f_lo, f_mid) {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    Err(Error::RootNonConvergence { what, iterations: max_iter })
}

/// Brent's method (inverse quadratic interpolation / secant with bisection
/// safeguard). Stops when the bracket is narrower than `xtol` or
/// `|f| <= ftol`.
#[allow(clippy::too_many_arguments)]
pub fn brent<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    xtol: f64,
    ftol: f64,
    max_iter: usize,
    what: &'static str,
) -> Result<Root> {
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    if fa == 0.0 {
        return Ok(Root { x: a, fx: 0.0, iterations: 0, width: 0.0 });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, fx: 0.0, iterations: 0, width: 0.0 });
    }
    if !opposite(fa, fb) {
        return Err(Error::BracketNotFound { what, expansions: 0 });
    }
    // Infinite function values break interpolation; bisect them away first.
    let mut it = 0;
    while (!fa.is_finite() || !fb.is_finite()) && it < max_iter {
        it += 1;
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return Ok(Root { x: m, fx: 0.0, iterations: it, width: (b - a).abs() });
        }
        if opposite(fa, fm) {
            b = m;
            fb = fm;
        } else {
            a = m;
            fa = fm;
        }
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    while it < max_iter {
        it += 1;
        if opposite(fb, fc) && fb != 0.0 && fc != 0.0 {
            // keep c on the opposite side of b
        } else {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb.abs() <= ftol || fb == 0.0 {
            return Ok(Root { x: b, fx: fb, iterations: it, width: (c - b).abs() });
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if fb.is_nan() {
            return Err(Error::RootNonConvergence { what, iterations: it });
        }
    }
    Err(Error::RootNonConvergence { what, iterations: max_iter })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_sqrt_two() {
        let f = |x: f64| x * x - 2.0;
        let r = brent(f, 0.0, 2.0, f(0.0), f(2.0), 1e-14, 0.0, 100, "sqrt2").unwrap();
        assert!((r.x - core::f64::consts::SQRT_2).abs() < 1e-14);
        assert!(r.iterations < 20);
    }

    #[test]
    fn brent_survives_infinite_endpoint() {
        let f = |x: f64| if x >= 10.0 { f64::INFINITY } else { x - 3.0 };
        let r = brent(f, 0.0, 10.0, f(0.0), f(10.0), 1e-13, 0.0, 200, "inf").unwrap();
        assert!((r.x - 3.0).abs() < 1e-12);
    }

    #[test]
    fn bisect_respects_tolerance() {
        let r = bisect(|x: f64| libm::cos(x), 1.0, 2.0, 1e-13, 200, "cos").unwrap();
        assert!((r.x - core::f64::consts::FRAC_PI_2).abs() < 1e-13);
        assert!(r.width <= 1e-13);
    }

    #[test]
    fn bisect_rejects_same_sign() {
        let err = bisect(|x: f64| x * x + 1.0, -1.0, 1.0, 1e-12, 100, "none").unwrap_err();
        assert!(matches!(err, Error::BracketNotFound { .. }));
    }

    #[test]
    fn expand_doubles_toward_infinity() {
        let b = expand(|x: f64| x - 100.0, 0.0, 1.0, 1.0, f64::INFINITY, 1000, "x").unwrap();
        assert_eq!(b.hi, 128.0);
        assert_eq!(b.lo, 64.0);
    }

    #[test]
    fn expand_approaches_finite_limit_without_touching_it() {
        // sign change only very close to the limit 2
        let b = expand(|x: f64| x - 1.999, 0.0, 1.0, 1.0, 2.0, 1000, "x").unwrap();
        assert!(b.hi < 2.0 && b.hi > 1.999);
        let b = expand(|x: f64| -x - 1.6, 0.0, 1.0, -1.0, -2.0, 1000, "x").unwrap();
        assert!(b.hi > -2.0 && b.hi < -1.6);
    }

    #[test]
    fn expand_gives_up() {
        let err = expand(|_| -1.0, 0.0, 1.0, 1.0, f64::INFINITY, 50, "never").unwrap_err();
        assert_eq!(err, Error::BracketNotFound { what: "never", expansions: 50 });
    }
}
