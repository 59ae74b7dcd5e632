//! Spreading speeds and front dynamics for nonlocal-dispersal Fisher-KPP
//! equations
//!
//! ```text
//! u_t = k * u - u + f(u)
//! ```
//!
//! on the real line, where `k` is a dispersal kernel (possibly asymmetric)
//! and `f` is a monostable KPP nonlinearity.
//!
//! The crate is `no_std` (it needs `alloc`) and covers:
//!
//! * [`model`]: kernels with exact exponential moments, KPP reactions and
//!   their hypothesis checks;
//! * [`speed`]: left/right spreading speeds, the asymmetry index `E(k)` and
//!   the five-way sign classification;
//! * [`case_study`]: closed forms for the normal and uniform kernel families;
//! * [`certificate`]: the compactly supported lower solutions, the
//!   exponential upper solution and their residual checks;
//! * [`sim`]: a method-of-lines simulator with level-set front tracking.
//!
//! File formats and the command-line runner live in the companion
//! `kppspread` crate.

#![no_std]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod case_study;
pub mod certificate;
pub mod error;
pub mod model;
pub mod quad;
pub mod roots;
pub mod sim;
pub mod speed;

pub use error::{Error, Result};
pub use model::{Kernel, KernelFamily, Model, Reaction};
pub use speed::{SignCase, SpeedReport};

/// Direction of propagation along the line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    /// `+1` for [`Side::Right`], `-1` for [`Side::Left`].
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

impl core::fmt::Display for Side {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}
