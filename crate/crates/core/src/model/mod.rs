//! Dispersal kernels, reaction terms and the validated pair of the two.

mod kernel;
mod reaction;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

pub use kernel::{Kernel, KernelFamily, KernelViolation, Table, MAX_MASS_DEVIATION};
pub use reaction::{Reaction, ReactionViolation, DEFAULT_SAMPLES};

use crate::error::{Error, Result};

/// A kernel and a reaction that both passed validation.
#[derive(Clone, Debug)]
pub struct Model {
    pub kernel: Kernel,
    pub reaction: Reaction,
}

impl Model {
    /// Validates both parts, listing every violation in the error message.
    pub fn new(kernel: Kernel, reaction: Reaction) -> Result<Self> {
        let kv = kernel.validate();
        let rv = reaction.validate(DEFAULT_SAMPLES);
        if kv.is_empty() && rv.is_empty() {
            return Ok(Model { kernel, reaction });
        }
        let mut msg = String::new();
        let parts: Vec<String> = kv
            .iter()
            .map(|v| alloc::format!("kernel: {v}"))
            .chain(rv.iter().map(|v| alloc::format!("reaction: {v}")))
            .collect();
        for (i, p) in parts.iter().enumerate() {
            if i > 0 {
                msg.push_str("; ");
            }
            let _ = write!(msg, "{p}");
        }
        Err(Error::Precondition(msg))
    }

    /// Builds without validation; for callers that already checked.
    pub fn new_unchecked(kernel: Kernel, reaction: Reaction) -> Self {
        Model { kernel, reaction }
    }

    /// `f'(0)`.
    pub fn growth(&self) -> f64 {
        self.reaction.slope()
    }
}
