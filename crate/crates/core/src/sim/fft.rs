//! Radix-2 FFT for zero-padded linear convolution of real sequences.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct C64 {
    re: f64,
    im: f64,
}

impl C64 {
    fn mul(self, o: C64) -> C64 {
        C64 {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
}

/// Precomputed twiddles and bit reversal for one power-of-two size.
#[derive(Clone, Debug)]
pub struct Fft {
    n: usize,
    twiddles: Vec<C64>,
    rev: Vec<usize>,
}

impl Fft {
    /// Plan for a transform of at least `min_len` points.
    pub fn new(min_len: usize) -> Self {
        let n = min_len.max(2).next_power_of_two();
        let bits = n.trailing_zeros();
        let rev = (0..n).map(|i| i.reverse_bits() >> (usize::BITS - bits)).collect();
        let twiddles = (0..n / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                C64 {
                    re: libm::cos(a),
                    im: libm::sin(a),
                }
            })
            .collect();
        Fft { n, twiddles, rev }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    fn transform(&self, data: &mut [C64], inverse: bool) {
        let n = self.n;
        for i in 0..n {
            let j = self.rev[i];
            if i < j {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..len / 2 {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w.im = -w.im;
                    }
                    let a = data[start + k];
                    let b = data[start + k + len / 2].mul(w);
                    data[start + k] = C64 {
                        re: a.re + b.re,
                        im: a.im + b.im,
                    };
                    data[start + k + len / 2] = C64 {
                        re: a.re - b.re,
                        im: a.im - b.im,
                    };
                }
            }
            len <<= 1;
        }
        if inverse {
            let s = 1.0 / n as f64;
            for z in data.iter_mut() {
                z.re *= s;
                z.im *= s;
            }
        }
    }
}

/// Spectrum of a real filter, reusable across many convolutions.
#[derive(Clone, Debug)]
pub struct Convolver {
    plan: Fft,
    filter: Vec<C64>,
    filter_len: usize,
    buf: Vec<C64>,
}

impl Convolver {
    /// Prepares linear convolution of `filter` with signals of length up to
    /// `signal_len`.
    pub fn new(filter: &[f64], signal_len: usize) -> Self {
        let plan = Fft::new(filter.len() + signal_len - 1);
        let mut spec = vec![C64::default(); plan.len()];
        for (z, &w) in spec.iter_mut().zip(filter) {
            z.re = w;
        }
        plan.transform(&mut spec, false);
        let buf = vec![C64::default(); plan.len()];
        Convolver {
            plan,
            filter: spec,
            filter_len: filter.len(),
            buf,
        }
    }

    /// Full linear convolution `out[n] = Σ_s filter[s]·signal[n-s]` for
    /// `n < signal.len() + filter.len() - 1`, written into `out`.
    pub fn convolve(&mut self, signal: &[f64], out: &mut [f64]) {
        let total = signal.len() + self.filter_len - 1;
        debug_assert!(total <= self.plan.len());
        for z in self.buf.iter_mut() {
            *z = C64::default();
        }
        for (z, &s) in self.buf.iter_mut().zip(signal) {
            z.re = s;
        }
        self.plan.transform(&mut self.buf, false);
        for (z, f) in self.buf.iter_mut().zip(&self.filter) {
            *z = z.mul(*f);
        }
        self.plan.transform(&mut self.buf, true);
        for (o, z) in out.iter_mut().zip(&self.buf[..total]) {
            *o = z.re;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(f: &[f64], s: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len() + s.len() - 1];
        for (i, &a) in f.iter().enumerate() {
            for (j, &b) in s.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        out
    }

    #[test]
    fn matches_direct_convolution() {
        let f = [0.25, 0.5, 0.25, -0.125];
        let s: Vec<f64> = (0..37).map(|i| libm::sin(i as f64 * 0.7) + 0.1 * i as f64).collect();
        let mut c = Convolver::new(&f, s.len());
        let mut out = vec![0.0; f.len() + s.len() - 1];
        c.convolve(&s, &mut out);
        for (a, b) in out.iter().zip(direct(&f, &s)) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn round_trip() {
        let plan = Fft::new(16);
        let orig: Vec<C64> = (0..16)
            .map(|i| C64 {
                re: i as f64,
                im: -(i as f64) * 0.5,
            })
            .collect();
        let mut data = orig.clone();
        plan.transform(&mut data, false);
        plan.transform(&mut data, true);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a.re - b.re).abs() < 1e-13 && (a.im - b.im).abs() < 1e-13);
        }
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let plan = Fft::new(8);
        let mut d = vec![C64::default(); 8];
        d[0].re = 1.0;
        plan.transform(&mut d, false);
        assert!(d.iter().all(|z| (z.re - 1.0).abs() < 1e-15 && z.im.abs() < 1e-15));
    }
}
