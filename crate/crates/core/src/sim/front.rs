//! Level-set fronts, speed fits and shape diagnostics.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Minimum number of samples a speed fit accepts.
pub const MIN_FIT_SAMPLES: usize = 10;

/// Outermost crossings of level `omega` on the grid `x_min + iΔx`,
/// located by linear interpolation.
///
/// A side is `None` when no cell reaches `omega`, or when the super-level
/// set extends to the last cell on that side (there is no front inside
/// the domain).
pub fn front_positions(values: &[f64], x_min: f64, dx: f64, omega: f64) -> (Option<f64>, Option<f64>) {
    let Some(first) = values.iter().position(|&v| v >= omega) else {
        return (None, None);
    };
    let last = values.iter().rposition(|&v| v >= omega).unwrap_or(first);
    let x = |i: usize| x_min + i as f64 * dx;
    let left = (first > 0).then(|| {
        let (a, b) = (values[first - 1], values[first]);
        x(first - 1) + (omega - a) / (b - a) * dx
    });
    let right = (last + 1 < values.len()).then(|| {
        let (a, b) = (values[last], values[last + 1]);
        x(last) + (a - omega) / (a - b) * dx
    });
    (left, right)
}

/// Least-squares line through `(t, x)` samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    /// Root-mean-square residual.
    pub rms: f64,
    pub samples: usize,
    pub t_start: f64,
    pub t_end: f64,
}

pub fn fit_line(points: &[(f64, f64)]) -> Result<LineFit> {
    let n = points.len();
    if n < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_SAMPLES,
            found: n,
        });
    }
    let nf = n as f64;
    let tm = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let xm = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(t, x) in points {
        sxx += (t - tm) * (t - tm);
        sxy += (t - tm) * (x - xm);
    }
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_SAMPLES,
            found: 1,
        });
    }
    let slope = sxy / sxx;
    let intercept = xm - slope * tm;
    let ssr: f64 = points
        .iter()
        .map(|&(t, x)| {
            let r = x - (intercept + slope * t);
            r * r
        })
        .sum();
    Ok(LineFit {
        slope,
        intercept,
        stderr: libm::sqrt(ssr / (nf - 2.0) / sxx),
        rms: libm::sqrt(ssr / nf),
        samples: n,
        t_start: points[0].0,
        t_end: points[n - 1].0,
    })
}

/// Fits a line to the samples whose time lies in the last `fraction` of
/// the sampled time range.
pub fn fit_tail(points: &[(f64, f64)], fraction: f64) -> Result<LineFit> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid("fit_fraction", "must lie in (0, 1]"));
    }
    let (Some(first), Some(last)) = (points.first(), points.last()) else {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_SAMPLES,
            found: 0,
        });
    };
    let cut = last.0 - fraction * (last.0 - first.0);
    let tail: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.0 >= cut).collect();
    fit_line(&tail)
}

/// `max_i |u(x_i) - u(2c - x_i)|` and the largest increase of `u` along
/// increasing `x ≥ c`, for a grid symmetric about the cell `center`.
pub fn symmetry_monotone(values: &[f64], center: usize) -> Result<(f64, f64)> {
    let n = values.len();
    if center >= n || center != n - 1 - center {
        return Err(Error::Precondition(alloc::format!(
            "grid of {n} cells is not symmetric about cell {center}"
        )));
    }
    let mut asym = 0.0f64;
    for k in 1..=center {
        asym = asym.max((values[center - k] - values[center + k]).abs());
    }
    let mut rise = 0.0f64;
    for w in values[center..].windows(2) {
        rise = rise.max(w[1] - w[0]);
    }
    Ok((asym, rise))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ramp_crossing_at_midpoint() {
        let u = [1.0, 1.0, 0.0, 0.0];
        let (l, r) = front_positions(&u, 0.0, 1.0, 0.5);
        assert_eq!(l, None);
        assert_eq!(r, Some(1.5));
    }

    #[test]
    fn below_level_everywhere() {
        assert_eq!(front_positions(&[0.1, 0.2, 0.1], 0.0, 1.0, 0.5), (None, None));
    }

    #[test]
    fn symmetric_profile_gives_opposite_fronts() {
        let n = 201;
        let dx = 0.1;
        let u: Vec<f64> = (0..n)
            .map(|i| {
                let x = -10.0 + i as f64 * dx;
                libm::exp(-x * x / 4.0)
            })
            .collect();
        let (l, r) = front_positions(&u, -10.0, dx, 0.3);
        let (l, r) = (l.unwrap(), r.unwrap());
        assert!((l + r).abs() <= dx * 1e-10);
        assert!(l < r);
    }

    #[test]
    fn exact_line_fit() {
        let pts: Vec<(f64, f64)> = (0..40).map(|i| (i as f64 * 0.5, i as f64)).collect();
        let f = fit_tail(&pts, 0.5).unwrap();
        assert_eq!(f.slope, 2.0);
        let flat: Vec<(f64, f64)> = (0..40).map(|i| (i as f64, 3.25)).collect();
        assert_eq!(fit_tail(&flat, 0.5).unwrap().slope, 0.0);
        assert!(matches!(fit_tail(&pts[..12], 0.5), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn noisy_line_within_three_errors() {
        let dx = 0.1;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<(f64, f64)> = (0..200)
            .map(|i| {
                let noise = rng.gen_range(-dx..dx);
                let t = i as f64 * 0.5;
                (t, 0.9 * t + noise)
            })
            .collect();
        let f = fit_tail(&pts, 0.5).unwrap();
        assert!((f.slope - 0.9).abs() <= 3.0 * f.stderr, "{f:?}");
    }

    #[test]
    fn detects_asymmetry_and_rise() {
        let u = vec![0.1, 0.5, 1.0, 0.4, 0.45];
        let (a, r) = symmetry_monotone(&u, 2).unwrap();
        assert!((a - 0.35).abs() < 1e-15);
        assert!((r - 0.05).abs() < 1e-15);
        assert!(symmetry_monotone(&u, 1).is_err());
    }
}
