//! Certificate records: a TOML document holding every field of the lower
//! and upper solutions together with the model they were built for.
//!
//! ```toml
//! format = "kppspread-certificate"
//! version = 1
//!
//! [model.kernel]
//! family = "uniform"
//! a = 1.0
//! b = -1.0
//!
//! [model.reaction]
//! family = "logistic"
//! rate = 1.0
//!
//! [[lower]]
//! side = "right"
//! speed = 0.87862...
//! # epsilon, eta, half_width, rho, delta, a, b, d, mu, nu, z0, hmax, xi, p1, p2
//!
//! [[upper]]
//! gamma0 = 1.0
//! # lambda_left, lambda_right, c_left, c_right
//! ```
//!
//! Floats are written in shortest round-trip form, so reading a record
//! back gives bit-identical values.

use std::fs;
use std::path::Path;

use kppspread_core::certificate::{LowerSolution, UpperSolution};
use kppspread_core::Side;
use serde::{Deserialize, Serialize};

use crate::config::{KernelSection, ReactionSection};
use crate::error::{CliError, Result};

pub const FORMAT: &str = "kppspread-certificate";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub format: String,
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lower: Vec<LowerRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub upper: Vec<UpperRecord>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelRecord {
    pub kernel: KernelSection,
    pub reaction: ReactionSection,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SideRecord {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LowerRecord {
    pub side: SideRecord,
    pub speed: f64,
    pub epsilon: f64,
    pub eta: f64,
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

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct UpperRecord {
    pub gamma0: f64,
    pub lambda_left: f64,
    pub lambda_right: f64,
    pub c_left: f64,
    pub c_right: f64,
}

impl From<&LowerSolution> for LowerRecord {
    fn from(l: &LowerSolution) -> Self {
        LowerRecord {
            side: match l.side {
                Side::Left => SideRecord::Left,
                Side::Right => SideRecord::Right,
            },
            speed: l.speed,
            epsilon: l.epsilon,
            eta: l.eta,
            half_width: l.half_width,
            rho: l.rho,
            delta: l.delta,
            a: l.a,
            b: l.b,
            d: l.d,
            mu: l.mu,
            nu: l.nu,
            z0: l.z0,
            hmax: l.hmax,
            xi: l.xi,
            p1: l.p1,
            p2: l.p2,
        }
    }
}

impl From<&LowerRecord> for LowerSolution {
    fn from(r: &LowerRecord) -> Self {
        LowerSolution {
            side: match r.side {
                SideRecord::Left => Side::Left,
                SideRecord::Right => Side::Right,
            },
            speed: r.speed,
            epsilon: r.epsilon,
            eta: r.eta,
            half_width: r.half_width,
            rho: r.rho,
            delta: r.delta,
            a: r.a,
            b: r.b,
            d: r.d,
            mu: r.mu,
            nu: r.nu,
            z0: r.z0,
            hmax: r.hmax,
            xi: r.xi,
            p1: r.p1,
            p2: r.p2,
        }
    }
}

impl From<&UpperSolution> for UpperRecord {
    fn from(u: &UpperSolution) -> Self {
        UpperRecord {
            gamma0: u.gamma0,
            lambda_left: u.lambda_left,
            lambda_right: u.lambda_right,
            c_left: u.c_left,
            c_right: u.c_right,
        }
    }
}

impl From<&UpperRecord> for UpperSolution {
    fn from(r: &UpperRecord) -> Self {
        UpperSolution {
            gamma0: r.gamma0,
            lambda_left: r.lambda_left,
            lambda_right: r.lambda_right,
            c_left: r.c_left,
            c_right: r.c_right,
        }
    }
}

impl CertificateFile {
    pub fn new(model: Option<ModelRecord>) -> Self {
        CertificateFile {
            format: FORMAT.into(),
            version: VERSION,
            model,
            lower: Vec::new(),
            upper: Vec::new(),
        }
    }

    pub fn lower_solutions(&self) -> Vec<LowerSolution> {
        self.lower.iter().map(LowerSolution::from).collect()
    }

    pub fn upper_solutions(&self) -> Vec<UpperSolution> {
        self.upper.iter().map(UpperSolution::from).collect()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::config(format!("cannot serialize certificate: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: CertificateFile = toml::from_str(text).map_err(|e| CliError::config(format!("certificate: {e}")))?;
        if c.format != FORMAT {
            return Err(CliError::config(format!("certificate.format: expected \"{FORMAT}\", found \"{}\"", c.format)));
        }
        if c.version != VERSION {
            return Err(CliError::config(format!("certificate.version: unsupported version {}", c.version)));
        }
        if c.lower.is_empty() && c.upper.is_empty() {
            return Err(CliError::config("certificate: contains no lower or upper solution"));
        }
        Ok(c)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}
