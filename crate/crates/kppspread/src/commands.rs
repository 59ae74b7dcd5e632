//! The five commands. Each writes its files into the output directory and
//! returns a human-readable report.

use std::fmt::Write as _;
use std::path::PathBuf;

use kppspread_core::certificate::{self as cert, LowerSolution, ResidualReport, UpperSolution};
use kppspread_core::sim::{self, fit_tail, LineFit};
use kppspread_core::{case_study, speed, Error as CoreError, Model, Side};

use crate::config::{build_model, Command, RunConfig};
use crate::error::{CliError, Context, Result};
use crate::output::{ensure_dir, float, opt_float, write_csv, write_text};
use crate::record::{CertificateFile, ModelRecord};

/// What a command produced.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub report: String,
    pub files: Vec<PathBuf>,
    /// Failed checks; any entry turns the exit code into a verification failure.
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.failures.is_empty() {
            0
        } else {
            CliError::Verification(String::new()).exit_code()
        }
    }
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.command {
        Command::Speeds => speeds(cfg),
        Command::Casestudy => casestudy(cfg),
        Command::Simulate => simulate(cfg),
        Command::Certify => certify(cfg),
        Command::Verify => verify(cfg),
    }
}

fn kv(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key} = {value}");
}

pub fn speeds(cfg: &RunConfig) -> Result<Outcome> {
    let model = cfg.model()?;
    let mut rep = speed::spreading_speeds(&model).context(|| "computing the spreading speeds".into())?;
    rep.case = speed::classify(rep.asymmetry, rep.growth, cfg.tolerances.classify);
    ensure_dir(&cfg.output_dir)?;

    let mut text = String::new();
    kv(&mut text, "kernel", model.kernel.family_name());
    if let Some(c) = model.kernel.normalization_correction() {
        kv(&mut text, "normalization_correction", float(c));
    }
    kv(&mut text, "reaction", model.reaction.name());
    kv(&mut text, "growth", float(rep.growth));
    kv(&mut text, "first_moment", float(rep.first_moment));
    kv(&mut text, "asymmetry", float(rep.asymmetry));
    kv(&mut text, "case", rep.case.label());
    kv(&mut text, "lambda_min", opt_float(rep.lambda_min));
    kv(&mut text, "lambda_left", float(rep.lambda_left));
    kv(&mut text, "lambda_right", float(rep.lambda_right));
    kv(&mut text, "c_left", float(rep.c_left));
    kv(&mut text, "c_right", float(rep.c_right));

    let mut files = vec![write_text(&cfg.output_dir, "speeds.txt", &text)?];
    files.push(write_csv(
        &cfg.output_dir,
        "speeds.csv",
        &[
            "growth",
            "first_moment",
            "asymmetry",
            "case",
            "lambda_min",
            "lambda_left",
            "lambda_right",
            "c_left",
            "c_right",
        ],
        [vec![
            float(rep.growth),
            float(rep.first_moment),
            float(rep.asymmetry),
            rep.case.label().to_string(),
            opt_float(rep.lambda_min),
            float(rep.lambda_left),
            float(rep.lambda_right),
            float(rep.c_left),
            float(rep.c_right),
        ]],
    )?);
    Ok(Outcome {
        report: text,
        files,
        failures: Vec::new(),
    })
}

pub fn casestudy(cfg: &RunConfig) -> Result<Outcome> {
    let c = &cfg.casestudy;
    let rs = c.normal_r.values("casestudy.normal_r")?;
    let thetas = c.uniform_theta.values("casestudy.uniform_theta")?;
    let growths = c.growth.values("casestudy.growth")?;
    ensure_dir(&cfg.output_dir)?;
    let dir = &cfg.output_dir;

    let normal_rows = rs.iter().map(|&r| vec![float(r), float(case_study::normal_e(r))]);
    let mut files = vec![write_csv(dir, "normal_e.csv", &["r", "asymmetry"], normal_rows)?];

    let mut uniform_rows = Vec::with_capacity(thetas.len());
    for &theta in &thetas {
        let ctx = || format!("solving the uniform case at theta = {theta}");
        let z = case_study::uniform_z(theta).context(ctx)?;
        let one_minus_z = if theta > 1.0 {
            case_study::uniform_z_complement(theta).context(ctx)?
        } else {
            1.0 - z
        };
        uniform_rows.push(vec![
            float(theta),
            float((theta - 1.0) / (theta + 1.0)),
            float(z),
            float(one_minus_z),
            float(case_study::uniform_z_prime(theta).context(ctx)?),
            float(case_study::uniform_q(theta).context(ctx)?),
            float(case_study::uniform_e(theta, -1.0).context(ctx)?),
        ]);
    }
    files.push(write_csv(
        dir,
        "uniform_z.csv",
        &["theta", "r", "z", "one_minus_z", "z_prime", "q", "asymmetry"],
        uniform_rows,
    )?);

    let mut threshold_rows = Vec::with_capacity(growths.len());
    let mut text = String::new();
    for &g in &growths {
        let normal = case_study::normal_r_star(g);
        let uniform = case_study::uniform_theta_star(g).context(|| format!("inverting q at growth {g}"))?;
        threshold_rows.push(vec![
            float(g),
            opt_float(normal),
            opt_float(uniform.map(|u| u.0)),
            opt_float(uniform.map(|u| u.1)),
        ]);
        let _ = writeln!(
            text,
            "growth {g:.6}: r*_normal = {}, r*_uniform = {}",
            normal.map_or("none".into(), |v| format!("{v:.6}")),
            uniform.map_or("none".into(), |v| format!("{:.6} (theta* = {:.6})", v.1, v.0)),
        );
    }
    files.push(write_csv(
        dir,
        "thresholds.csv",
        &["growth", "r_star_normal", "theta_star_uniform", "r_star_uniform"],
        threshold_rows,
    )?);
    let header = format!(
        "normal sweep: {} rows; uniform sweep: {} rows; threshold sweep: {} rows\n",
        rs.len(),
        thetas.len(),
        growths.len()
    );
    Ok(Outcome {
        report: header + &text,
        files,
        failures: Vec::new(),
    })
}

fn sim_error(e: CoreError) -> CliError {
    match e {
        CoreError::InvalidParameter { name, reason } => CliError::config(format!("simulate.{name}: {reason}")),
        CoreError::Truncation { mass } => CliError::config(format!(
            "simulate.x_max: the domain is too narrow for the kernel ({mass:e} of its mass falls outside)"
        )),
        source => CliError::Numerical {
            context: "running the simulation".into(),
            source,
        },
    }
}

pub fn simulate(cfg: &RunConfig) -> Result<Outcome> {
    let model = cfg.model()?;
    let (sc, fraction) = cfg.sim_config(&model)?;
    sc.validate(&model).map_err(sim_error)?;
    let analytic = speed::spreading_speeds(&model).context(|| "computing the spreading speeds".into())?;
    let run = sim::run(&model, &sc).map_err(sim_error)?;
    ensure_dir(&cfg.output_dir)?;
    let dir = &cfg.output_dir;

    let trace_rows = run.trace.rows.iter().map(|r| {
        vec![float(r.t), float(r.omega), opt_float(r.x_left), opt_float(r.x_right)]
    });
    let mut files = vec![write_csv(dir, "trace.csv", &["t", "omega", "x_left", "x_right"], trace_rows)?];
    if cfg.simulate.as_ref().is_some_and(|s| s.snapshot) {
        let st = &run.final_state;
        let rows = st.values.iter().enumerate().map(|(i, &u)| vec![float(st.x(i)), float(u)]);
        files.push(write_csv(dir, "snapshot.csv", &["x", "u"], rows)?);
    }
    if !sc.probes.is_empty() {
        let names: Vec<String> = sc.probes.iter().map(|p| format!("u_at_{p}")).collect();
        let mut header = vec!["t"];
        header.extend(names.iter().map(String::as_str));
        let rows = run.probes.iter().map(|p| {
            let mut row = vec![float(p.t)];
            row.extend(p.values.iter().map(|&v| float(v)));
            row
        });
        files.push(write_csv(dir, "probes.csv", &header, rows)?);
    }

    let mut text = String::new();
    let _ = writeln!(
        text,
        "grid: {} cells on [{}, {}], dx = {}, dt = {}, t_final = {}",
        sc.cells(),
        sc.x_min,
        sc.x_max,
        sc.dx,
        sc.dt,
        sc.t_final
    );
    let _ = writeln!(
        text,
        "convolution: {} ({} weights), clamped values: {}",
        run.method, run.stencil_width, run.clamps
    );
    let _ = writeln!(
        text,
        "analytic speeds: c_left = {:.9}, c_right = {:.9} (case {})",
        analytic.c_left,
        analytic.c_right,
        analytic.case.label()
    );
    let mut fit_rows = Vec::new();
    for &omega in &sc.levels {
        for side in [Side::Left, Side::Right] {
            let exact = match side {
                Side::Left => analytic.c_left,
                Side::Right => analytic.c_right,
            };
            let series = run.trace.series(omega, side);
            match fit_tail(&series, fraction) {
                Ok(fit) => {
                    let rel = (fit.slope - exact).abs() / exact.abs();
                    let _ = writeln!(
                        text,
                        "level {omega} {:>5}: fitted {:+.6} ± {:.1e}, analytic {:+.6}, relative error {:.2e}",
                        side.as_str(),
                        fit.slope, fit.stderr, exact, rel
                    );
                    fit_rows.push(fit_row(omega, side, Some(&fit), exact));
                }
                Err(e) => {
                    let _ = writeln!(text, "level {omega} {:>5}: no fit ({e})", side.as_str());
                    fit_rows.push(fit_row(omega, side, None, exact));
                }
            }
        }
    }
    files.push(write_csv(
        dir,
        "fits.csv",
        &[
            "omega",
            "side",
            "fitted_speed",
            "stderr",
            "rms",
            "samples",
            "t_start",
            "t_end",
            "analytic_speed",
            "relative_error",
        ],
        fit_rows,
    )?);
    files.push(write_text(dir, "summary.txt", &text)?);
    Ok(Outcome {
        report: text,
        files,
        failures: Vec::new(),
    })
}

fn fit_row(omega: f64, side: Side, fit: Option<&LineFit>, exact: f64) -> Vec<String> {
    let rel = fit.map(|f| (f.slope - exact).abs() / exact.abs());
    vec![
        float(omega),
        side.to_string(),
        opt_float(fit.map(|f| f.slope)),
        opt_float(fit.map(|f| f.stderr)),
        opt_float(fit.map(|f| f.rms)),
        fit.map(|f| f.samples.to_string()).unwrap_or_default(),
        opt_float(fit.map(|f| f.t_start)),
        opt_float(fit.map(|f| f.t_end)),
        float(exact),
        opt_float(rel),
    ]
}

const RESIDUAL_HEADER: [&str; 12] = [
    "kind",
    "side",
    "max",
    "argmax_t",
    "argmax_x",
    "min",
    "argmin_t",
    "argmin_x",
    "points",
    "excluded",
    "tolerance",
    "passed",
];

fn residual_row(kind: &str, side: &str, r: &ResidualReport, tol: f64, passed: bool) -> Vec<String> {
    vec![
        kind.into(),
        side.into(),
        float(r.max),
        float(r.argmax.0),
        float(r.argmax.1),
        float(r.min),
        float(r.argmin.0),
        float(r.argmin.1),
        r.points.to_string(),
        r.excluded.to_string(),
        float(tol),
        passed.to_string(),
    ]
}

/// Structural checks and residual bounds for every certificate; returns
/// the residual CSV rows.
fn check_all(
    model: &Model,
    lower: &[LowerSolution],
    upper: &[UpperSolution],
    tol: f64,
    text: &mut String,
    failures: &mut Vec<String>,
) -> Result<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    for l in lower {
        let name = format!("lower ({})", l.side);
        let (lo, hi) = l.support(0.0);
        let _ = writeln!(
            text,
            "{name}: speed {:.9}, B = {:.6e}, peak height {:.6e}, support at t = 0 [{:.6}, {:.6}]",
            l.speed, l.b, l.hmax, lo, hi
        );
        let violations = l.check();
        for v in &violations {
            let _ = writeln!(text, "  check failed: {v}");
            failures.push(format!("{name}: {v}"));
        }
        if violations.iter().any(|v| matches!(v, cert::Violation::CoefficientRange { .. })) {
            continue;
        }
        let r = cert::standard_residual(model, l).context(|| format!("evaluating the {name} residual"))?;
        let passed = r.max <= tol;
        let _ = writeln!(
            text,
            "  residual max {:.3e} at (t, x) = ({}, {:.6}) over {} points ({} near kinks skipped): {}",
            r.max,
            r.argmax.0,
            r.argmax.1,
            r.points,
            r.excluded,
            if passed { "ok" } else { "FAIL" }
        );
        if !passed {
            failures.push(format!("{name}: residual {:.3e} exceeds {tol:e}", r.max));
        }
        rows.push(residual_row("lower", l.side.as_str(), &r, tol, passed));
    }
    for u in upper {
        let _ = writeln!(
            text,
            "upper: gamma0 = {}, decay rates ({:.9}, {:.9}), speeds ({:.9}, {:.9})",
            u.gamma0, u.lambda_left, u.lambda_right, u.c_left, u.c_right
        );
        for v in u.check(model) {
            let _ = writeln!(text, "  check failed: {v}");
            failures.push(format!("upper: {v}"));
        }
        let r = cert::standard_residual(model, u).context(|| "evaluating the upper residual".into())?;
        let passed = r.min >= -tol;
        let _ = writeln!(
            text,
            "  residual min {:.3e} at (t, x) = ({}, {:.6}) over {} points ({} near kinks skipped): {}",
            r.min,
            r.argmin.0,
            r.argmin.1,
            r.points,
            r.excluded,
            if passed { "ok" } else { "FAIL" }
        );
        if !passed {
            failures.push(format!("upper: residual {:.3e} below -{tol:e}", r.min));
        }
        rows.push(residual_row("upper", "both", &r, tol, passed));
    }
    Ok(rows)
}

fn certify_error(side: Side, c: &crate::config::CertifySection, e: CoreError) -> CliError {
    match e {
        CoreError::InvalidParameter { name, reason } => CliError::config(format!("certify.{name}: {reason}")),
        CoreError::Range(m) => CliError::config(format!("certify.epsilon: {m}")),
        source => CliError::Numerical {
            context: format!(
                "building the {side} lower solution (epsilon = {}, r = {})",
                c.epsilon, c.r
            ),
            source,
        },
    }
}

pub fn certify(cfg: &RunConfig) -> Result<Outcome> {
    let model = cfg.model()?;
    let c = &cfg.certify;
    let mut lower = Vec::new();
    for &s in &c.sides {
        let side: Side = s.into();
        let requested = match side {
            Side::Right => c.speed_right,
            Side::Left => c.speed_left,
        };
        let speed = match requested {
            Some(v) => v,
            None => cert::default_speed(&model, side, c.epsilon).context(|| "computing the spreading speeds".into())?,
        };
        lower.push(
            cert::build_lower_solution(&model, speed, side, c.epsilon, c.r, c.p1)
                .map_err(|e| certify_error(side, c, e))?,
        );
    }
    let mut upper = Vec::new();
    if c.upper {
        upper.push(cert::build_upper_solution(&model, c.gamma).map_err(|e| match e {
            CoreError::InvalidParameter { name, reason } => CliError::config(format!("certify.{name}: {reason}")),
            source => CliError::Numerical {
                context: "building the upper solution".into(),
                source,
            },
        })?);
    }
    ensure_dir(&cfg.output_dir)?;

    let mut record = CertificateFile::new(match (&cfg.kernel, &cfg.reaction) {
        (Some(k), Some(r)) => Some(ModelRecord {
            kernel: k.clone(),
            reaction: r.clone(),
        }),
        _ => None,
    });
    record.lower = lower.iter().map(Into::into).collect();
    record.upper = upper.iter().map(Into::into).collect();
    let mut files = vec![write_text(&cfg.output_dir, "certificate.toml", &record.to_toml()?)?];

    let mut text = String::new();
    let mut failures = Vec::new();
    let rows = check_all(&model, &lower, &upper, cfg.tolerances.residual, &mut text, &mut failures)?;
    files.push(write_csv(&cfg.output_dir, "residuals.csv", &RESIDUAL_HEADER, rows)?);
    Ok(Outcome {
        report: text,
        files,
        failures,
    })
}

pub fn verify(cfg: &RunConfig) -> Result<Outcome> {
    let path = &cfg
        .verify
        .as_ref()
        .ok_or_else(|| CliError::config("verify.certificate: missing"))?
        .certificate;
    let record = CertificateFile::read(path)?;
    let mut text = String::new();
    let model = match (&cfg.kernel, &cfg.reaction, &record.model) {
        (Some(k), Some(r), stored) => {
            if stored.as_ref().is_some_and(|m| (&m.kernel, &m.reaction) != (k, r)) {
                let _ = writeln!(text, "note: the certificate was built for a different model than the config gives");
            }
            build_model(k, r)?
        }
        (None, None, Some(m)) => build_model(&m.kernel, &m.reaction)?,
        _ => {
            return Err(CliError::config(
                "kernel: the certificate records no model; give both [kernel] and [reaction]",
            ))
        }
    };
    let mut failures = Vec::new();
    let rows = check_all(
        &model,
        &record.lower_solutions(),
        &record.upper_solutions(),
        cfg.tolerances.residual,
        &mut text,
        &mut failures,
    )?;
    ensure_dir(&cfg.output_dir)?;
    let files = vec![write_csv(&cfg.output_dir, "residuals.csv", &RESIDUAL_HEADER, rows)?];
    Ok(Outcome {
        report: text,
        files,
        failures,
    })
}
