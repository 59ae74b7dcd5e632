//! Run configuration: a TOML file plus `--set key=value` overrides.
//!
//! Input files (kernel and initial-datum tables, certificate records) are
//! resolved relative to the directory of the config file; the output
//! directory is resolved relative to the working directory.

use std::fs;
use std::path::{Path, PathBuf};

use kppspread_core::sim::{ConvolutionMethod, InitialDatum, SimConfig};
use kppspread_core::{speed, Kernel, Model, Reaction, Side};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::table;

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Speeds,
    Casestudy,
    Simulate,
    Certify,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Speeds => "speeds",
            Command::Casestudy => "casestudy",
            Command::Simulate => "simulate",
            Command::Certify => "certify",
            Command::Verify => "verify",
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub kernel: Option<KernelSection>,
    pub reaction: Option<ReactionSection>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub casestudy: CaseStudySection,
    pub simulate: Option<SimulateSection>,
    #[serde(default)]
    pub certify: CertifySection,
    pub verify: Option<VerifySection>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSection {
    /// Give exactly one of `mean` and the skewness ratio `r`.
    Normal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r: Option<f64>,
        variance: f64,
    },
    /// Uniform density on `[b, a]` with `b < 0 < a`.
    Uniform { a: f64, b: f64 },
    AsymmetricExponential { left_rate: f64, right_rate: f64 },
    /// Two-column text file of `(x, density)` rows.
    Tabulated { table: PathBuf },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReactionSection {
    /// `rate·u·(1 - u)`.
    Logistic { rate: f64 },
    /// `rate·u·(1 - u^exponent)`.
    GeneralizedLogistic { rate: f64, exponent: f64 },
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Largest admissible residual of the wrong sign.
    #[serde(default = "default_residual_tol")]
    pub residual: f64,
    /// `|E - f'(0)|` below which the two are treated as equal.
    #[serde(default = "default_classify_tol")]
    pub classify: f64,
}

fn default_residual_tol() -> f64 {
    kppspread_core::certificate::RESIDUAL_TOL
}

fn default_classify_tol() -> f64 {
    speed::DEFAULT_CLASSIFY_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            residual: default_residual_tol(),
            classify: default_classify_tol(),
        }
    }
}

/// `start, start + step, …, stop`; the step must divide the range.
#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LinearGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl LinearGrid {
    /// Points as `(start·(n-1-i) + stop·i)/(n-1)`, so a range symmetric
    /// about zero gives exactly symmetric points.
    pub fn values(&self, field: &str) -> Result<Vec<f64>> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return Err(CliError::config(format!("{field}: bounds and step must be finite")));
        }
        if !(self.step > 0.0 && self.stop >= self.start) {
            return Err(CliError::config(format!("{field}.step: must be positive with start ≤ stop")));
        }
        let intervals = (self.stop - self.start) / self.step;
        let n = intervals.round();
        if (intervals - n).abs() > 1e-9 * n.max(1.0) {
            return Err(CliError::config(format!(
                "{field}.step: {} does not divide [{}, {}]",
                self.step, self.start, self.stop
            )));
        }
        let n = n as usize;
        if n == 0 {
            return Ok(vec![self.start]);
        }
        Ok((0..=n)
            .map(|i| (self.start * (n - i) as f64 + self.stop * i as f64) / n as f64)
            .collect())
    }
}

/// `count` log-spaced points from `min` to `max` inclusive.
#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LogGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl LogGrid {
    pub fn values(&self, field: &str) -> Result<Vec<f64>> {
        if !(self.min > 0.0 && self.max > self.min && self.max.is_finite()) {
            return Err(CliError::config(format!("{field}: need 0 < min < max")));
        }
        if self.count < 2 {
            return Err(CliError::config(format!("{field}.count: need at least 2 points")));
        }
        let (lo, hi) = (self.min.ln(), self.max.ln());
        let last = self.count - 1;
        Ok((0..self.count)
            .map(|i| match i {
                0 => self.min,
                i if i == last => self.max,
                i => (lo + (hi - lo) * i as f64 / last as f64).exp(),
            })
            .collect())
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CaseStudySection {
    /// Skewness ratios of the normal sweep.
    #[serde(default = "default_normal_r")]
    pub normal_r: LinearGrid,
    /// `θ = -a/b` values of the uniform sweep.
    #[serde(default = "default_uniform_theta")]
    pub uniform_theta: LogGrid,
    /// Growth rates `f'(0)` of the threshold sweep.
    #[serde(default = "default_growth")]
    pub growth: LinearGrid,
}

fn default_normal_r() -> LinearGrid {
    LinearGrid {
        start: -2.0,
        stop: 2.0,
        step: 0.1,
    }
}

fn default_uniform_theta() -> LogGrid {
    LogGrid {
        min: 0.01,
        max: 100.0,
        count: 50,
    }
}

fn default_growth() -> LinearGrid {
    LinearGrid {
        start: 0.05,
        stop: 0.95,
        step: 0.05,
    }
}

impl Default for CaseStudySection {
    fn default() -> Self {
        CaseStudySection {
            normal_r: default_normal_r(),
            uniform_theta: default_uniform_theta(),
            growth: default_growth(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    #[default]
    Auto,
    Direct,
    Fft,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub x_min: f64,
    pub x_max: f64,
    #[serde(default = "default_dx")]
    pub dx: f64,
    /// Defaults to `0.1·min(1, 1/L)` with `L` the reaction's Lipschitz bound.
    pub dt: Option<f64>,
    pub t_final: f64,
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default = "default_half")]
    pub output_interval: f64,
    #[serde(default)]
    pub probes: Vec<f64>,
    #[serde(default)]
    pub method: MethodName,
    /// Trailing fraction of the trace used in speed fits.
    #[serde(default = "default_half")]
    pub fit_fraction: f64,
    #[serde(default = "default_true")]
    pub check_boundary: bool,
    /// Write the final state as `snapshot.csv`.
    #[serde(default = "default_true")]
    pub snapshot: bool,
    pub initial: InitialSection,
}

fn default_dx() -> f64 {
    0.1
}

fn default_levels() -> Vec<f64> {
    vec![0.5]
}

fn default_half() -> f64 {
    0.5
}

fn default_true() -> bool {
    true
}

fn default_one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSection {
    Bump {
        #[serde(default)]
        center: f64,
        half_width: f64,
        #[serde(default = "default_one")]
        height: f64,
    },
    Exponential {
        rate: f64,
        #[serde(default)]
        center: f64,
        #[serde(default = "default_one")]
        height: f64,
    },
    Plateau {
        height: f64,
    },
    /// Two-column text file of `(x, u)` rows.
    Table {
        path: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SideName {
    Left,
    Right,
}

impl From<SideName> for Side {
    fn from(s: SideName) -> Side {
        match s {
            SideName::Left => Side::Left,
            SideName::Right => Side::Right,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CertifySection {
    /// Distance below the spreading speed that the lower solutions give up.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Support-diameter budget of the lower solutions.
    #[serde(default = "default_one")]
    pub r: f64,
    /// Height cap `p₁` for the lower solutions.
    pub p1: Option<f64>,
    #[serde(default = "default_sides")]
    pub sides: Vec<SideName>,
    /// Speeds of the lower solutions; default to the middle of the band.
    pub speed_right: Option<f64>,
    pub speed_left: Option<f64>,
    #[serde(default = "default_true")]
    pub upper: bool,
    /// Height the upper solution must dominate.
    #[serde(default = "default_one")]
    pub gamma: f64,
}

fn default_epsilon() -> f64 {
    0.05
}

fn default_sides() -> Vec<SideName> {
    vec![SideName::Right, SideName::Left]
}

impl Default for CertifySection {
    fn default() -> Self {
        CertifySection {
            epsilon: default_epsilon(),
            r: 1.0,
            p1: None,
            sides: default_sides(),
            speed_right: None,
            speed_left: None,
            upper: true,
            gamma: 1.0,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub certificate: PathBuf,
}

/// Parses `text` with `overrides` applied; relative input paths are
/// resolved against `base`.
pub fn parse(text: &str, overrides: &[String], base: &Path) -> Result<RunConfig> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::config(e.to_string()))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    from_table(table, base)
}

pub fn load(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse(&text, overrides, base).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn from_table(table: toml::Table, base: &Path) -> Result<RunConfig> {
    let mut cfg: RunConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
        let path = e.path().to_string();
        // the value deserializer appends its own "in `table`" trailer
        let msg = e.into_inner().to_string();
        let msg = msg.lines().next().unwrap_or_default().to_string();
        if path == "." {
            CliError::config(msg)
        } else {
            CliError::config(format!("{path}: {msg}"))
        }
    })?;
    cfg.resolve(base);
    cfg.validate()?;
    Ok(cfg)
}

/// Sets the dotted `key` to `value`, read as a TOML value when possible
/// and as a bare string otherwise.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("--set {assignment}: expected key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::config(format!("--set {assignment}: malformed key")));
    }
    let (last, parents) = parts.split_last().expect("split yields one part");
    let mut node = table;
    for (i, p) in parents.iter().enumerate() {
        let entry = node
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry.as_table_mut().ok_or_else(|| {
            CliError::config(format!("--set {assignment}: `{}` is not a table", parts[..=i].join(".")))
        })?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

impl RunConfig {
    /// A bare config for re-checking `certificate` with its embedded model.
    pub fn for_verify(certificate: PathBuf, output_dir: PathBuf) -> Self {
        RunConfig {
            command: Command::Verify,
            output_dir,
            kernel: None,
            reaction: None,
            tolerances: Tolerances::default(),
            casestudy: CaseStudySection::default(),
            simulate: None,
            certify: CertifySection::default(),
            verify: Some(VerifySection { certificate }),
        }
    }

    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(KernelSection::Tabulated { table }) = &mut self.kernel {
            join(table);
        }
        if let Some(SimulateSection {
            initial: InitialSection::Table { path },
            ..
        }) = &mut self.simulate
        {
            join(path);
        }
        if let Some(v) = &mut self.verify {
            join(&mut v.certificate);
        }
    }

    /// Range checks that do not need the model.
    pub fn validate(&self) -> Result<()> {
        if let Some(k) = &self.kernel {
            k.validate()?;
        }
        if let Some(r) = &self.reaction {
            r.validate()?;
        }
        let t = &self.tolerances;
        if !(t.residual > 0.0 && t.residual.is_finite()) {
            return Err(CliError::config("tolerances.residual: must be positive"));
        }
        if !(t.classify >= 0.0 && t.classify.is_finite()) {
            return Err(CliError::config("tolerances.classify: must be nonnegative"));
        }
        match self.command {
            Command::Speeds => {}
            Command::Casestudy => {
                let c = &self.casestudy;
                c.normal_r.values("casestudy.normal_r")?;
                c.uniform_theta.values("casestudy.uniform_theta")?;
                let g = c.growth.values("casestudy.growth")?;
                if g.iter().any(|&v| !(v > 0.0)) {
                    return Err(CliError::config("casestudy.growth: growth rates must be positive"));
                }
            }
            Command::Simulate => {
                let s = self.simulate.as_ref().ok_or_else(|| CliError::config("simulate: missing section"))?;
                if !(s.fit_fraction > 0.0 && s.fit_fraction <= 1.0) {
                    return Err(CliError::config("simulate.fit_fraction: must lie in (0, 1]"));
                }
            }
            Command::Certify => {
                let c = &self.certify;
                if !(c.epsilon > 0.0 && c.epsilon.is_finite()) {
                    return Err(CliError::config("certify.epsilon: must be positive"));
                }
                if !(c.r > 0.0 && c.r.is_finite()) {
                    return Err(CliError::config("certify.r: must be positive"));
                }
                if !(c.gamma > 0.0 && c.gamma.is_finite()) {
                    return Err(CliError::config("certify.gamma: must be positive"));
                }
                if let Some(p) = c.p1 {
                    if !(p > 0.0 && p <= 1.0) {
                        return Err(CliError::config("certify.p1: must lie in (0, 1]"));
                    }
                }
                if c.sides.is_empty() && !c.upper {
                    return Err(CliError::config("certify.sides: nothing to certify"));
                }
            }
            Command::Verify => {
                let v = self.verify.as_ref().ok_or_else(|| CliError::config("verify.certificate: missing"))?;
                if !v.certificate.is_file() {
                    return Err(CliError::config(format!(
                        "verify.certificate: {} does not exist",
                        v.certificate.display()
                    )));
                }
            }
        }
        if self.command != Command::Verify && (self.kernel.is_none() || self.reaction.is_none()) {
            let missing = if self.kernel.is_none() { "kernel" } else { "reaction" };
            return Err(CliError::config(format!("{missing}: missing section")));
        }
        Ok(())
    }

    /// The validated model from the `kernel` and `reaction` sections.
    pub fn model(&self) -> Result<Model> {
        match (&self.kernel, &self.reaction) {
            (Some(k), Some(r)) => build_model(k, r),
            (None, _) => Err(CliError::config("kernel: missing section")),
            (_, None) => Err(CliError::config("reaction: missing section")),
        }
    }

    /// The simulator settings for `model`.
    pub fn sim_config(&self, model: &Model) -> Result<(SimConfig, f64)> {
        let s = self.simulate.as_ref().ok_or_else(|| CliError::config("simulate: missing section"))?;
        let initial = match &s.initial {
            InitialSection::Bump {
                center,
                half_width,
                height,
            } => InitialDatum::Bump {
                center: *center,
                half_width: *half_width,
                height: *height,
            },
            InitialSection::Exponential { rate, center, height } => InitialDatum::Exponential {
                rate: *rate,
                center: *center,
                height: *height,
            },
            InitialSection::Plateau { height } => InitialDatum::Plateau { height: *height },
            InitialSection::Table { path } => {
                let (xs, values) = table::read_columns(path, "simulate.initial.path")?;
                InitialDatum::Table { xs, values }
            }
        };
        let mut c = SimConfig::new(model, s.x_min, s.x_max, s.dx, s.t_final, initial);
        if let Some(dt) = s.dt {
            c.dt = dt;
        }
        c.levels = s.levels.clone();
        c.output_interval = s.output_interval;
        c.probes = s.probes.clone();
        c.method = match s.method {
            MethodName::Auto => ConvolutionMethod::Auto,
            MethodName::Direct => ConvolutionMethod::Direct,
            MethodName::Fft => ConvolutionMethod::Fft,
        };
        c.check_boundary = s.check_boundary;
        Ok((c, s.fit_fraction))
    }
}

fn positive(field: &str, v: f64, why: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(format!("{field}: must be positive{why}, got {v}")))
    }
}

impl KernelSection {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSection::Normal { mean, r, variance } => {
                positive("kernel.variance", variance, "")?;
                match (mean, r) {
                    (Some(_), Some(_)) => Err(CliError::config("kernel.r: give either `mean` or `r`, not both")),
                    (None, None) => Err(CliError::config("kernel.mean: give either `mean` or `r`")),
                    (Some(m), None) if !m.is_finite() => Err(CliError::config("kernel.mean: must be finite")),
                    (None, Some(r)) if !r.is_finite() => Err(CliError::config("kernel.r: must be finite")),
                    _ => Ok(()),
                }
            }
            KernelSection::Uniform { a, b } => {
                positive("kernel.a", a, " (the right end of the support)")?;
                if !(b < 0.0 && b.is_finite()) {
                    return Err(CliError::config(format!(
                        "kernel.b: must be negative (the left end of the support), got {b}"
                    )));
                }
                Ok(())
            }
            KernelSection::AsymmetricExponential { left_rate, right_rate } => {
                positive("kernel.left_rate", left_rate, "")?;
                positive("kernel.right_rate", right_rate, "")
            }
            KernelSection::Tabulated { ref table } => {
                if table.is_file() {
                    Ok(())
                } else {
                    Err(CliError::config(format!("kernel.table: {} does not exist", table.display())))
                }
            }
        }
    }

    pub fn build(&self) -> Result<Kernel> {
        self.validate()?;
        let named = |e: kppspread_core::Error| match e {
            kppspread_core::Error::InvalidParameter { name, reason } => CliError::config(format!("kernel.{name}: {reason}")),
            other => CliError::config(format!("kernel: {other}")),
        };
        match *self {
            KernelSection::Normal { mean, r, variance } => {
                let mean = mean.unwrap_or_else(|| kppspread_core::case_study::normal_mean(r.unwrap_or(0.0), variance));
                Kernel::normal(mean, variance).map_err(named)
            }
            KernelSection::Uniform { a, b } => Kernel::uniform(b, a).map_err(named),
            KernelSection::AsymmetricExponential { left_rate, right_rate } => {
                Kernel::asymmetric_exponential(left_rate, right_rate).map_err(named)
            }
            KernelSection::Tabulated { ref table } => {
                let (xs, ds) = table::read_columns(table, "kernel.table")?;
                Kernel::tabulated(xs, ds).map_err(named)
            }
        }
    }
}

impl ReactionSection {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ReactionSection::Logistic { rate } => positive("reaction.rate", rate, ""),
            ReactionSection::GeneralizedLogistic { rate, exponent } => {
                positive("reaction.rate", rate, "")?;
                positive("reaction.exponent", exponent, "")
            }
        }
    }

    pub fn build(&self) -> Result<Reaction> {
        self.validate()?;
        Ok(match *self {
            ReactionSection::Logistic { rate } => {
                Reaction::logistic(rate).map_err(|e| CliError::config(format!("reaction.rate: {e}")))?
            }
            ReactionSection::GeneralizedLogistic { rate, exponent } => Reaction::custom(
                format!("generalized-logistic(exponent = {exponent})"),
                rate,
                move |u| rate * u * (1.0 - u.powf(exponent)),
            ),
        })
    }
}

pub fn build_model(kernel: &KernelSection, reaction: &ReactionSection) -> Result<Model> {
    Model::new(kernel.build()?, reaction.build()?).map_err(|e| match e {
        kppspread_core::Error::Precondition(msg) => CliError::config(msg),
        other => CliError::config(other.to_string()),
    })
}
