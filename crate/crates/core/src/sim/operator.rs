//! Discrete convolution operator on a uniform grid.
//!
//! The kernel is projected onto piecewise-linear hat functions,
//! `w_j = ∫ k(y) φ(y/Δx - j) dy`, and the weights are rescaled to sum to
//! one. Values beyond the grid are taken equal to the nearest boundary
//! value.

use alloc::vec;
use alloc::vec::Vec;

use super::fft::Convolver;
use crate::error::{Error, Result};
use crate::model::Kernel;
use crate::quad::{self, QuadOptions};

/// Stencils wider than this many cells use the FFT.
pub const DIRECT_MAX_WIDTH: usize = 512;
/// Per-side tail mass dropped from the stencil.
pub const STENCIL_TAIL: f64 = 1e-16;
/// Largest tolerated kernel mass outside the representable offsets.
pub const TRUNCATION_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ConvolutionMethod {
    /// Direct sum for narrow stencils, FFT otherwise.
    #[default]
    Auto,
    Direct,
    Fft,
}

/// Renormalized hat-projection weights for offsets `first..first+len`.
#[derive(Clone, Debug, PartialEq)]
pub struct Stencil {
    /// Offset (in cells) of `weights[0]`.
    pub first: i64,
    pub weights: Vec<f64>,
}

impl Stencil {
    pub fn last(&self) -> i64 {
        self.first + self.weights.len() as i64 - 1
    }

    pub fn width(&self) -> usize {
        self.weights.len()
    }

    /// Farthest offset from the origin, in cells.
    pub fn reach(&self) -> usize {
        self.first.unsigned_abs().max(self.last().unsigned_abs()) as usize
    }

    /// Weight at offset `j`, zero outside the stencil.
    pub fn weight(&self, j: i64) -> f64 {
        let k = j - self.first;
        if k < 0 || k as usize >= self.weights.len() {
            0.0
        } else {
            self.weights[k as usize]
        }
    }
}

/// Hat-projection weights of `kernel` at spacing `dx`; offsets are limited
/// to `|j·dx| ≤ max_offset`.
pub fn stencil(kernel: &Kernel, dx: f64, max_offset: f64) -> Result<Stencil> {
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(Error::invalid("dx", "must be positive"));
    }
    let (mut lo, mut hi) = kernel.effective_support(STENCIL_TAIL);
    let mut lost = 0.0;
    if lo < -max_offset {
        lost += kernel.mass_below(-max_offset);
        lo = -max_offset;
    }
    if hi > max_offset {
        lost += kernel.mass_above(max_offset);
        hi = max_offset;
    }
    if lost > TRUNCATION_TOL {
        return Err(Error::Truncation { mass: lost });
    }
    let first = libm::ceil(lo / dx) as i64 - 1;
    let last = libm::floor(hi / dx) as i64 + 1;
    let opts = QuadOptions {
        abs_tol: 1e-17,
        rel_tol: 1e-13,
        ..QuadOptions::default()
    };
    let breaks = kernel.breakpoints();
    let mut weights = Vec::with_capacity((last - first + 1) as usize);
    for j in first..=last {
        weights.push(hat_weight(kernel, &breaks, j, dx, lo, hi, &opts)?);
    }
    // trim exact zeros at both ends
    let start = weights.iter().position(|&w| w != 0.0).unwrap_or(0);
    let end = weights.iter().rposition(|&w| w != 0.0).map_or(0, |e| e + 1);
    let mut weights = weights[start..end].to_vec();
    if weights.is_empty() {
        return Err(Error::Precondition("kernel has no mass on the grid".into()));
    }
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok(Stencil {
        first: first + start as i64,
        weights,
    })
}

/// `∫ k(y) φ(y/dx - j) dy` restricted to `[lo, hi]`. Negative offsets are
/// integrated over the mirrored interval so that even kernels give exactly
/// even weights.
fn hat_weight(kernel: &Kernel, breaks: &[f64], j: i64, dx: f64, lo: f64, hi: f64, opts: &QuadOptions) -> Result<f64> {
    let s = if j < 0 { -1.0 } else { 1.0 };
    let m = j.unsigned_abs() as f64;
    let (slo, shi) = if s > 0.0 { (lo, hi) } else { (-hi, -lo) };
    let a = ((m - 1.0) * dx).max(slo);
    let b = ((m + 1.0) * dx).min(shi);
    if !(a < b) {
        return Ok(0.0);
    }
    let mut cuts: Vec<f64> = breaks.iter().map(|&x| s * x).collect();
    cuts.push(m * dx);
    let f = |y: f64| kernel.density(s * y) * (1.0 - (y / dx - m).abs()).max(0.0);
    Ok(quad::integrate_with_breaks(f, a, b, &cuts, dx, opts)?.value)
}

/// `u ↦ K*u` on a fixed grid size.
#[derive(Clone, Debug)]
pub struct Operator {
    stencil: Stencil,
    n: usize,
    ext: Vec<f64>,
    fft: Option<(Convolver, Vec<f64>)>,
}

impl Operator {
    pub fn new(stencil: Stencil, n: usize, method: ConvolutionMethod) -> Self {
        let s = stencil.width();
        let ext_len = n + s - 1;
        let use_fft = match method {
            ConvolutionMethod::Auto => s > DIRECT_MAX_WIDTH,
            ConvolutionMethod::Direct => false,
            ConvolutionMethod::Fft => true,
        };
        let fft = use_fft.then(|| (Convolver::new(&stencil.weights, ext_len), vec![0.0; ext_len + s - 1]));
        Operator {
            stencil,
            n,
            ext: vec![0.0; ext_len],
            fft,
        }
    }

    pub fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn uses_fft(&self) -> bool {
        self.fft.is_some()
    }

    /// `out_i = Σ_j w_j u_{i-j}` with nearest-value extension of `u`.
    pub fn apply(&mut self, u: &[f64], out: &mut [f64]) {
        assert_eq!(u.len(), self.n);
        assert_eq!(out.len(), self.n);
        let last = self.stencil.last();
        let top = self.n as i64 - 1;
        // ext[m] = u[clamp(m - last)]
        for (m, e) in self.ext.iter_mut().enumerate() {
            *e = u[(m as i64 - last).clamp(0, top) as usize];
        }
        let s = self.stencil.width();
        match &mut self.fft {
            Some((conv, full)) => {
                conv.convolve(&self.ext, full);
                out.copy_from_slice(&full[s - 1..s - 1 + self.n]);
            }
            None => {
                let w = &self.stencil.weights;
                for (i, o) in out.iter_mut().enumerate() {
                    // out_i = Σ_k w[k]·ext[i + s - 1 - k]
                    let window = &self.ext[i..i + s];
                    let mut acc = 0.0;
                    for (wk, e) in w.iter().zip(window.iter().rev()) {
                        acc += wk * e;
                    }
                    *o = acc;
                }
            }
        }
    }
}
