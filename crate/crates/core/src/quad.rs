//! Globally adaptive 10/21-point Gauss-Kronrod quadrature.
//!
//! Infinite endpoints are handled by the map `x = x0 ± s·t/(1-t)` on
//! `t ∈ [0, 1)`, where `s` is a caller-supplied length scale. Breakpoints
//! (discontinuities or kinks of the integrand) split the range before
//! adaptation starts so that no rule straddles them.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Tolerances and limits for [`integrate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
    /// Number of equal pieces each semi-infinite piece starts with.
    pub tail_pieces: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_intervals: 4000,
            tail_pieces: 16,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

// Kronrod abscissae (positive half) and weights, 21-point rule; the odd
// indices are the 10-point Gauss nodes.
// published 30-digit values, kept verbatim
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_146,
];

/// Variable change applied to a piece before the rule sees it.
#[derive(Clone, Copy, Debug)]
enum Map {
    Identity,
    /// `x = origin + scale·t/(1-t)`
    Up { origin: f64, scale: f64 },
    /// `x = origin - scale·t/(1-t)`
    Down { origin: f64, scale: f64 },
}

impl Map {
    #[inline]
    fn eval<F: Fn(f64) -> f64>(&self, f: &F, t: f64) -> f64 {
        match *self {
            Map::Identity => f(t),
            Map::Up { origin, scale } => {
                let s = 1.0 - t;
                let x = origin + scale * t / s;
                guard(f(x)) * scale / (s * s)
            }
            Map::Down { origin, scale } => {
                let s = 1.0 - t;
                let x = origin - scale * t / s;
                guard(f(x)) * scale / (s * s)
            }
        }
    }
}

// Far tails can produce 0·inf; those contribute nothing.
#[inline]
fn guard(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v
    }
}

#[derive(Clone, Copy, Debug)]
struct Piece {
    lo: f64,
    hi: f64,
    map: Map,
    value: f64,
    error: f64,
}

fn gk21<F: Fn(f64) -> f64>(f: &F, map: Map, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = map.eval(f, center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let pair = map.eval(f, center - dx) + map.eval(f, center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

/// Integrates `f` over `[a, b]`, either endpoint possibly infinite.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult> {
    integrate_with_breaks(f, a, b, &[], 1.0, opts)
}

/// Integrates `f` over `[a, b]` after splitting at `breaks` (points outside
/// the range are ignored). `scale` sets the length scale used to map
/// semi-infinite pieces onto `[0, 1)`.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    scale: f64,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    if a > b {
        let r = integrate_with_breaks(f, b, a, breaks, scale, opts)?;
        return Ok(QuadResult {
            value: -r.value,
            ..r
        });
    }
    let scale = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };

    let mut cuts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&x| x.is_finite() && x > a && x < b)
        .collect();
    cuts.sort_by(|p, q| p.total_cmp(q));
    cuts.dedup();
    if !a.is_finite() && !b.is_finite() && cuts.is_empty() {
        cuts.push(0.0);
    }

    let mut pieces: Vec<Piece> = Vec::new();
    let push = |lo: f64, hi: f64, map: Map, pieces: &mut Vec<Piece>| {
        let (value, error) = gk21(&f, map, lo, hi);
        pieces.push(Piece {
            lo,
            hi,
            map,
            value,
            error,
        });
    };

    let mut nodes: Vec<f64> = Vec::with_capacity(cuts.len() + 2);
    nodes.push(a);
    nodes.extend_from_slice(&cuts);
    nodes.push(b);
    let tails = opts.tail_pieces.max(1);
    for w in nodes.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if lo.is_finite() && hi.is_finite() {
            push(lo, hi, Map::Identity, &mut pieces);
        } else {
            let map = if hi.is_finite() {
                Map::Down { origin: hi, scale }
            } else {
                Map::Up { origin: lo, scale }
            };
            for k in 0..tails {
                let t0 = k as f64 / tails as f64;
                let t1 = (k + 1) as f64 / tails as f64;
                push(t0, t1, map, &mut pieces);
            }
        }
    }

    loop {
        let (value, error) = pieces
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::QuadratureNonConvergence {
                estimate: value,
                error,
                intervals: pieces.len(),
            });
        }
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= target {
            return Ok(QuadResult {
                value,
                error,
                intervals: pieces.len(),
            });
        }
        if pieces.len() >= opts.max_intervals {
            return Err(Error::QuadratureNonConvergence {
                estimate: value,
                error,
                intervals: pieces.len(),
            });
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|(_, p), (_, q)| p.error.total_cmp(&q.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let p = pieces.swap_remove(worst);
        let mid = 0.5 * (p.lo + p.hi);
        if !(mid > p.lo && mid < p.hi) {
            // Cannot split further; what is left is roundoff.
            if error - p.error <= target {
                pieces.push(Piece { error: 0.0, ..p });
                continue;
            }
            return Err(Error::QuadratureNonConvergence {
                estimate: value,
                error,
                intervals: pieces.len() + 1,
            });
        }
        push(p.lo, mid, p.map, &mut pieces);
        push(mid, p.hi, p.map, &mut pieces);
    }
}
