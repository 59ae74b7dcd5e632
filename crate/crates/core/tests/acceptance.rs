//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p kppspread-core --test acceptance`. The process
//! exits non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use kppspread_core::case_study as cs;
use kppspread_core::certificate::{self as cert, RESIDUAL_TOL};
use kppspread_core::sim::{self, InitialDatum, SimConfig, Simulation};
use kppspread_core::speed;
use kppspread_core::{Kernel, Model, Reaction, SignCase, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

struct Criterion {
    id: u8,
    name: &'static str,
    budget: Duration,
    run: fn() -> Check,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "analytic speeds vs grid-scan oracle", budget: secs(1), run: analytic_speeds },
        Criterion { id: 2, name: "closed-form speed, symmetric exponential kernel", budget: secs(1), run: closed_form_speed },
        Criterion { id: 3, name: "asymmetry index cross-validation", budget: secs(5), run: asymmetry_cross_check },
        Criterion { id: 4, name: "sign-classification suite", budget: secs(5), run: sign_classification },
        Criterion { id: 5, name: "simulated fronts vs analytic speeds", budget: secs(600), run: simulation_speeds },
        Criterion { id: 6, name: "exponential-data speed law", budget: secs(600), run: exponential_data },
        Criterion { id: 7, name: "asymmetric extinction and persistence", budget: secs(600), run: extinction_persistence },
        Criterion { id: 8, name: "certificate residuals and tamper detection", budget: secs(30), run: certificates },
        Criterion { id: 9, name: "z(theta) suite", budget: secs(5), run: z_suite },
        Criterion { id: 10, name: "symmetry and monotonicity preservation", budget: secs(60), run: symmetry_monotonicity },
        Criterion { id: 11, name: "discrete comparison principle", budget: secs(60), run: comparison_principle },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let mut outcome = (c.run)();
        let elapsed = start.elapsed();
        if outcome.is_ok() && elapsed > c.budget {
            outcome = Err(format!("took {:.1} s, budget {:.0} s", elapsed.as_secs_f64(), c.budget.as_secs_f64()));
        }
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} C{:<2} {} [{:.2} s]: {detail}", c.id, c.name, elapsed.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn model(kernel: Kernel, growth: f64) -> Result<Model, String> {
    Model::new(kernel, Reaction::logistic(growth).map_err(err)?).map_err(err)
}

fn uniform_model() -> Result<Model, String> {
    model(Kernel::uniform(-1.0, 1.0).map_err(err)?, 1.0)
}

/// Minimizer of `f` on `[lo, hi]`: scan at `step`, then bisect the sign of
/// the derivative `df` in the neighbouring cells.
fn scan_minimize(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> (f64, f64) {
    let n = ((hi - lo) / step) as usize;
    let best = (0..=n)
        .map(|i| lo + i as f64 * step)
        .min_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap();
    let (mut a, mut b) = ((best - step).max(lo), (best + step).min(hi));
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if df(m) > 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

fn analytic_speeds() -> Check {
    let m = uniform_model()?;
    let r = speed::spreading_speeds(&m).map_err(err)?;
    // c(λ) = sinh λ / λ², stationary where tanh λ = λ/2
    let c = |l: f64| l.sinh() / (l * l);
    let dc = |l: f64| (l * l.cosh() - 2.0 * l.sinh()) / (l * l * l);
    let (lo, co) = scan_minimize(c, dc, 1e-4, 6.0, 1e-4);
    ensure((lo.tanh() - lo / 2.0).abs() < 1e-12, || format!("oracle λ = {lo} does not solve tanh λ = λ/2"))?;
    ensure((lo - 1.91501).abs() < 1e-5 && (co - 0.90526).abs() < 1e-5, || {
        format!("oracle ({lo}, {co}) disagrees with the reference (1.91501, 0.90526)")
    })?;
    ensure((r.lambda_right - lo).abs() <= 1e-6, || format!("λ_r* = {} vs oracle {lo}", r.lambda_right))?;
    ensure((r.c_right - co).abs() <= 1e-5, || format!("c_r* = {} vs oracle {co}", r.c_right))?;
    Ok(format!(
        "λ_r* = {:.9} (oracle {lo:.9}), c_r* = {:.9} (oracle {co:.9})",
        r.lambda_right, r.c_right
    ))
}

fn closed_form_speed() -> Check {
    let m = model(Kernel::asymmetric_exponential(2.0, 2.0).map_err(err)?, 1.0)?;
    let r = speed::spreading_speeds(&m).map_err(err)?;
    let c = |l: f64| 4.0 / (l * (4.0 - l * l));
    let dc = |l: f64| -4.0 * (4.0 - 3.0 * l * l) / (l * (4.0 - l * l)).powi(2);
    let (_, co) = scan_minimize(c, dc, 1e-3, 2.0 - 1e-3, 1e-4);
    let exact = 3.0 * 3f64.sqrt() / 4.0;
    ensure((co - exact).abs() < 1e-12, || format!("oracle minimum {co} vs 3√3/4 = {exact}"))?;
    ensure((r.c_right - co).abs() <= 1e-8, || format!("c_r* = {} vs {co}", r.c_right))?;
    ensure((r.c_left + co).abs() <= 1e-8, || format!("c_l* = {} vs {}", r.c_left, -co))?;
    Ok(format!("c_r* = {:.15}, 3√3/4 = {exact:.15}", r.c_right))
}

fn asymmetry_cross_check() -> Check {
    let mut worst: f64 = 0.0;
    for i in 0..=8 {
        let r = -2.0 + 0.5 * i as f64;
        let k = Kernel::normal(cs::normal_mean(r, 1.0), 1.0).map_err(err)?;
        let d = (cs::normal_e(r) - speed::asymmetry_e(&k).map_err(err)?).abs();
        ensure(d <= 1e-8, || format!("normal r = {r}: difference {d:e}"))?;
        worst = worst.max(d);
    }
    for theta in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let (a, b) = (theta, -1.0);
        let k = Kernel::uniform(b, a).map_err(err)?;
        let d = (cs::uniform_e(a, b).map_err(err)? - speed::asymmetry_e(&k).map_err(err)?).abs();
        ensure(d <= 1e-8, || format!("uniform θ = {theta}: difference {d:e}"))?;
        worst = worst.max(d);
    }
    Ok(format!("largest difference {worst:.2e} over 14 kernels"))
}

fn sign_classification() -> Check {
    let growth = 0.25;
    let rs = cs::normal_r_star(growth).ok_or("no threshold for f'(0) = 0.25")?;
    let cases = [
        (2.0 * rs, SignCase::BothPositive),
        (rs, SignCase::LeftAtZero),
        (0.5 * rs, SignCase::Straddling),
        (-rs, SignCase::RightAtZero),
        (-2.0 * rs, SignCase::BothNegative),
    ];
    let mut summary = Vec::new();
    for (r, expect) in cases {
        let e = cs::normal_e(r);
        if matches!(expect, SignCase::LeftAtZero | SignCase::RightAtZero) {
            ensure((e.abs() - growth).abs() <= 1e-12, || format!("|E| = {e} is not f'(0) at r = {r}"))?;
        }
        let m = model(Kernel::normal(cs::normal_mean(r, 1.0), 1.0).map_err(err)?, growth)?;
        let rep = speed::spreading_speeds(&m).map_err(err)?;
        ensure(rep.case == expect && expect.matches(rep.c_left, rep.c_right, 1e-6), || {
            format!(
                "r = {r}: expected case {expect}, got {} with (c_l*, c_r*) = ({}, {})",
                rep.case, rep.c_left, rep.c_right
            )
        })?;
        summary.push(format!("{}:({:+.4},{:+.4})", expect, rep.c_left, rep.c_right));
    }
    Ok(summary.join(" "))
}

fn desk_config(m: &Model, t_final: f64, initial: InitialDatum) -> SimConfig {
    let mut c = SimConfig::new(m, -300.0, 300.0, 0.1, t_final, initial);
    c.dt = 0.05;
    c.output_interval = 0.5;
    c
}

fn simulation_speeds() -> Check {
    let m = uniform_model()?;
    let bump = InitialDatum::Bump { center: 0.0, half_width: 2.0, height: 1.0 };
    let out = sim::run(&m, &desk_config(&m, 120.0, bump)).map_err(err)?;
    let fit = out.trace.estimate_speeds(0.5, sim::DEFAULT_FIT_FRACTION).map_err(err)?;
    let target = 0.90526;
    let (er, el) = ((fit.right.slope - target).abs() / target, (fit.left.slope + target).abs() / target);
    ensure(er <= 0.05 && el <= 0.05, || {
        format!("fitted (left, right) = ({}, {}), relative errors {el:.3}, {er:.3}", fit.left.slope, fit.right.slope)
    })?;
    Ok(format!(
        "fitted right {:.5} (err {:.2}%), left {:.5} (err {:.2}%)",
        fit.right.slope,
        100.0 * er,
        fit.left.slope,
        100.0 * el
    ))
}

fn exponential_data() -> Check {
    let m = uniform_model()?;
    let report = speed::spreading_speeds(&m).map_err(err)?;
    let mut prev = f64::INFINITY;
    let mut summary = Vec::new();
    for rate in [0.5, 1.0, 1.5, 1.91501] {
        let datum = InitialDatum::Exponential { rate, center: 0.0, height: 1.0 };
        let out = sim::run(&m, &desk_config(&m, 100.0, datum)).map_err(err)?;
        let fit = out.trace.estimate_speeds(0.5, sim::DEFAULT_FIT_FRACTION).map_err(err)?;
        let law = speed::c_of_lambda(&m, rate).map_err(err)?;
        let target = if rate >= report.lambda_right { report.c_right } else { law };
        let e = (fit.right.slope - target).abs() / target;
        let el = (fit.left.slope + target).abs() / target;
        ensure(e <= 0.05 && el <= 0.05, || {
            format!(
                "λ = {rate}: fitted (left, right) = ({}, {}) vs ±{target}",
                fit.left.slope, fit.right.slope
            )
        })?;
        ensure(fit.right.slope < prev, || format!("speed at λ = {rate} not below the previous {prev}"))?;
        if rate == 1.91501 {
            let ec = (fit.right.slope - report.c_right).abs() / report.c_right;
            ensure(ec <= 0.05, || format!("at λ ≈ λ* fitted {} vs c* = {}", fit.right.slope, report.c_right))?;
        }
        prev = fit.right.slope;
        summary.push(format!("λ={rate}: {:.4} vs {:.4}", fit.right.slope, law));
    }
    Ok(summary.join(", "))
}

fn extinction_persistence() -> Check {
    let growth = 0.25;
    let r = 2.0 * cs::normal_r_star(growth).ok_or("no threshold")?;
    let m = model(Kernel::normal(cs::normal_mean(r, 1.0), 1.0).map_err(err)?, growth)?;
    let rep = speed::spreading_speeds(&m).map_err(err)?;
    ensure(rep.case == SignCase::BothPositive, || format!("model is case {}, not i", rep.case))?;
    let setup = |initial| {
        let mut c = SimConfig::new(&m, -100.0, 300.0, 0.1, 60.0, initial);
        c.output_interval = 0.5;
        c.probes = vec![0.0];
        c
    };
    let bump = sim::run(&m, &setup(InitialDatum::Bump { center: 0.0, half_width: 3.0, height: 1.0 })).map_err(err)?;
    let fit = bump.trace.estimate_speeds(0.5, sim::DEFAULT_FIT_FRACTION).map_err(err)?;
    let u_end = bump.probes.last().map(|p| p.values[0]).ok_or("no probe samples")?;
    ensure(u_end < 0.01, || format!("u(T, 0) = {u_end} after the bump run"))?;
    ensure(fit.left.slope > 0.0 && fit.right.slope > 0.0, || {
        format!("fitted speeds ({}, {}) are not both positive", fit.left.slope, fit.right.slope)
    })?;
    let plateau = sim::run(&m, &setup(InitialDatum::Plateau { height: 0.1 })).map_err(err)?;
    let low = plateau.probes.iter().map(|p| p.values[0]).fold(f64::INFINITY, f64::min);
    ensure(low >= 0.05, || format!("plateau run dips to u(t, 0) = {low}"))?;
    Ok(format!(
        "bump: u(T,0) = {u_end:.2e}, speeds ({:.3}, {:.3}) vs analytic ({:.3}, {:.3}); plateau: min u(t,0) = {low:.3}",
        fit.left.slope, fit.right.slope, rep.c_left, rep.c_right
    ))
}

fn certificates() -> Check {
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    let uniform = uniform_model()?;
    let normal = model(Kernel::normal(0.5, 1.0).map_err(err)?, 1.0)?;
    let epsilon = 0.05;
    for (label, m, side) in [
        ("uniform/right", &uniform, Side::Right),
        ("uniform/left", &uniform, Side::Left),
        ("normal/right", &normal, Side::Right),
    ] {
        let c = cert::default_speed(m, side, epsilon).map_err(err)?;
        let lower = cert::build_lower_solution(m, c, side, epsilon, 1.0, None).map_err(err)?;
        let rep = cert::standard_residual(m, &lower).map_err(err)?;
        if rep.max > RESIDUAL_TOL {
            failures.push(format!(
                "lower {label}: max residual {:.3e} at (t, x) = ({}, {:.4}), height {:.3e}",
                rep.max, rep.argmax.0, rep.argmax.1, lower.hmax
            ));
        } else {
            notes.push(format!("lower {label} max {:.1e}", rep.max));
        }
        let mut tampered = lower;
        tampered.b *= 1.1;
        let detected = !tampered.check().is_empty()
            || cert::standard_residual(m, &tampered).map_or(true, |r| r.max > RESIDUAL_TOL);
        if !detected {
            failures.push(format!("tampered B on {label} not detected"));
        }
    }
    for (label, m) in [("uniform", &uniform), ("normal", &normal)] {
        for gamma in [0.5, 3.0] {
            let upper = cert::build_upper_solution(m, gamma).map_err(err)?;
            let rep = cert::standard_residual(m, &upper).map_err(err)?;
            if rep.min < -RESIDUAL_TOL {
                failures.push(format!("upper {label} Γ={gamma}: min residual {:.3e}", rep.min));
            } else {
                notes.push(format!("upper {label} Γ={gamma} min {:.1e}", rep.min));
            }
        }
    }
    if failures.is_empty() {
        Ok(notes.join("; "))
    } else {
        Err(format!("{} | passing: {}", failures.join("; "), notes.join("; ")))
    }
}

fn z_suite() -> Check {
    let thetas: Vec<f64> = (0..50).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 49.0)).collect();
    let mut prev_z = f64::NEG_INFINITY;
    let mut prev_comp = f64::INFINITY;
    let mut worst_eq: f64 = 0.0;
    let mut worst_dz: f64 = 0.0;
    for &t in &thetas {
        let z = cs::uniform_z(t).map_err(err)?;
        let resid = (cs::omega(z) - cs::omega(-t * z)).abs();
        worst_eq = worst_eq.max(resid);
        ensure(resid <= 1e-12, || format!("ω(z) - ω(-θz) = {resid:e} at θ = {t}"))?;
        if t > 1.0 {
            // z rounds to one for large θ; its complement keeps full precision
            let comp = cs::uniform_z_complement(t).map_err(err)?;
            ensure(comp < prev_comp, || format!("1 - z not decreasing at θ = {t}"))?;
            prev_comp = comp;
        } else {
            ensure(z > prev_z, || format!("z not increasing at θ = {t}"))?;
            prev_z = z;
        }
        let h = 1e-5 * t;
        let fd = if t > 1.0 {
            -(cs::uniform_z_complement(t + h).map_err(err)? - cs::uniform_z_complement(t - h).map_err(err)?) / (2.0 * h)
        } else {
            (cs::uniform_z(t + h).map_err(err)? - cs::uniform_z(t - h).map_err(err)?) / (2.0 * h)
        };
        let dz = cs::uniform_z_prime(t).map_err(err)?;
        let rel = (dz - fd).abs() / dz.abs();
        worst_dz = worst_dz.max(rel);
        ensure(rel <= 1e-6, || format!("z'({t}) = {dz} vs central difference {fd}"))?;
    }
    let q1 = cs::uniform_q(1.0).map_err(err)?;
    ensure(q1.abs() <= 1e-12, || format!("q(1) = {q1}"))?;
    let q2 = cs::uniform_q(2.0).map_err(err)?;
    let (ts, _) = cs::uniform_theta_star(q2).map_err(err)?.ok_or("no θ* for q(2)")?;
    ensure((ts - 2.0).abs() <= 1e-8, || format!("θ*(q(2)) = {ts}"))?;
    Ok(format!(
        "max |ω(z) - ω(-θz)| = {worst_eq:.1e}, max z' rel. error {worst_dz:.1e}, θ*(q(2)) = {ts:.12}"
    ))
}

fn symmetry_monotonicity() -> Check {
    let mut worst = (0.0f64, 0.0f64);
    for (kernel, half) in [(Kernel::uniform(-1.0, 1.0), 60.0), (Kernel::normal(0.0, 1.0), 120.0)] {
        let m = model(kernel.map_err(err)?, 1.0)?;
        let mut c = SimConfig::new(&m, -half, half, 0.1, 20.0, InitialDatum::Bump {
            center: 0.0,
            half_width: 3.0,
            height: 0.8,
        });
        c.dt = 0.05;
        let mut s = Simulation::new(&m, &c).map_err(err)?;
        let per_output = 20;
        for k in 0..=400 {
            if k > 0 {
                s.step().map_err(err)?;
            }
            if k % per_output == 0 {
                let (a, r) = s.state().symmetry_monotone(0.0).map_err(err)?;
                ensure(a <= 1e-10 && r <= 1e-10, || {
                    format!("t = {}: asymmetry {a:e}, monotonicity violation {r:e}", s.state().time)
                })?;
                worst = (worst.0.max(a), worst.1.max(r));
            }
        }
    }
    Ok(format!("max asymmetry {:.1e}, max monotonicity violation {:.1e}", worst.0, worst.1))
}

fn comparison_principle() -> Check {
    let m = uniform_model()?;
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let mut worst = f64::NEG_INFINITY;
    for pair in 0..20 {
        let mut c = SimConfig::new(&m, -20.0, 20.0, 0.1, 10.0, InitialDatum::Plateau { height: 1.0 });
        c.dt = 0.05;
        c.check_boundary = false;
        let mut lo = Simulation::new(&m, &c).map_err(err)?;
        let mut hi = lo.clone();
        let n = c.cells();
        let base: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let lift: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 0.3).collect();
        let u: Vec<f64> = base.iter().map(|v| v * 0.9).collect();
        let v: Vec<f64> = u.iter().zip(&lift).map(|(a, b)| (a + b).min(1.0)).collect();
        lo.set_values(&u).map_err(err)?;
        hi.set_values(&v).map_err(err)?;
        for _ in 0..200 {
            lo.step().map_err(err)?;
            hi.step().map_err(err)?;
            let gap = lo
                .state()
                .values
                .iter()
                .zip(&hi.state().values)
                .map(|(a, b)| a - b)
                .fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max(gap);
            ensure(gap <= 1e-10, || format!("pair {pair}: order violated by {gap:e} at t = {}", lo.state().time))?;
        }
    }
    Ok(format!("20 pairs over t ∈ [0, 10], max (u - v) = {worst:.1e}"))
}
