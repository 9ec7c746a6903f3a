//! The studies behind each subcommand.

use std::time::Instant;

use rayon::prelude::*;
use rok_core::conditions::{
    condition_f_variants, linear_order, order_condition_residuals, sample_stability_boundary, stability_at_infinity,
    stability_function,
};
use rok_core::control::{integrate_adaptive, ControllerConfig};
use rok_core::krylov::arnoldi;
use rok_core::ode::jvp;
use rok_core::problems::problem_by_name;
use rok_core::stepper::integrate_fixed;
use rok_core::tableau::{by_name, METHOD_NAMES};
use rok_core::{ArnoldiOptions, ConditionFamily, JvpMode, OdeSystem, ProblemSpec64, Tableau64, Vector64, Weights};

use crate::config::{RunConfig, DEFAULT_TOLS};
use crate::csv::{Cell, Table};
use crate::error::{BenchError, BenchResult};
use crate::fit::{order_fit, usable_rows, OrderFit};
use crate::reference::{reference_solution, relative_gap};
use crate::solver::Solver;

pub fn problem(name: &str) -> BenchResult<ProblemSpec64> {
    problem_by_name(name).ok_or_else(|| BenchError::UnknownProblem(name.to_string()))
}

pub fn tableau(name: &str) -> BenchResult<Tableau64> {
    by_name(name).ok_or_else(|| BenchError::UnknownMethod(name.to_string()))
}

/// Maps in parallel on a pool of `threads` workers, keeping input order.
fn ordered_map<I, O, F>(threads: usize, items: &[I], f: F) -> BenchResult<Vec<O>>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> O + Sync + Send,
{
    if threads <= 1 {
        return Ok(items.iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| BenchError::Usage(format!("cannot start {threads} threads: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(f).collect()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub n_steps: usize,
    pub h: f64,
    pub error: f64,
    pub f_evals: u64,
    pub jvp_evals: u64,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    /// Sorted by decreasing `h`.
    pub rows: Vec<ConvergenceRow>,
    pub fit: Option<OrderFit>,
    pub reference_gap: f64,
    pub reference_tolerance: f64,
}

impl ConvergenceReport {
    pub fn fitted_order(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }
}

/// Fixed-step runs over the step-count ladder against the problem reference.
pub fn run_convergence(cfg: &RunConfig) -> BenchResult<ConvergenceReport> {
    cfg.validate()?;
    let spec = problem(&cfg.problem)?;
    let solver = Solver::new(&cfg.method, cfg.krylov_dim, cfg.jvp, cfg.basis)?;
    convergence_with(&spec, &solver, &cfg.steps, cfg.threads)
}

pub fn convergence_with(
    spec: &ProblemSpec64,
    solver: &Solver,
    steps: &[usize],
    threads: usize,
) -> BenchResult<ConvergenceReport> {
    let reference = reference_solution(spec)?;
    let (t0, tf) = spec.t_span;
    let sys = spec.system.as_ref();
    let mut ladder = steps.to_vec();
    ladder.sort_unstable();
    ladder.dedup();
    let results = ordered_map(threads, &ladder, |&n| -> BenchResult<ConvergenceRow> {
        let start = Instant::now();
        let run = integrate_fixed(t0, tf, &spec.y0, n, |t, y, h| solver.step(sys, t, y, h))?;
        Ok(ConvergenceRow {
            n_steps: n,
            h: (tf - t0) / n as f64,
            error: relative_gap(&reference.y, &run.y),
            f_evals: run.work.f_evals,
            jvp_evals: run.work.jvp_evals,
            wall_seconds: start.elapsed().as_secs_f64(),
        })
    })?;
    let rows = results.into_iter().collect::<BenchResult<Vec<_>>>()?;
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.h, r.error)).collect();
    let fit = order_fit(&usable_rows(&pairs, spec.reference_tolerance)).ok();
    Ok(ConvergenceReport {
        rows,
        fit,
        reference_gap: reference.gap,
        reference_tolerance: spec.reference_tolerance,
    })
}

pub fn convergence_table(cfg: &RunConfig, report: &ConvergenceReport) -> Table {
    let mut t = Table::new(
        cfg.canonical(),
        vec!["n_steps", "h", "error", "f_evals", "jvp_evals", "wall_seconds"],
    );
    for r in &report.rows {
        t.push(vec![
            Cell::Int(r.n_steps as u64),
            Cell::Num(r.h),
            Cell::Num(r.error),
            Cell::Int(r.f_evals),
            Cell::Int(r.jvp_evals),
            Cell::Num(r.wall_seconds),
        ]);
    }
    match report.fit {
        Some(f) => t.trailer.push(format!(
            "fitted_order={} fit_r2={} rows_used={}",
            crate::csv::num(f.slope),
            crate::csv::num(f.r2),
            f.rows_used
        )),
        None => t.trailer.push("fitted_order=none".into()),
    }
    t
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrecisionRow {
    pub solver: String,
    pub tol: f64,
    pub error: f64,
    pub steps: usize,
    pub rejected: usize,
    pub f_evals: u64,
    pub jvp_evals: u64,
    pub wall_seconds: f64,
    /// `ok` or a short failure description.
    pub status: String,
}

/// Largest `|lambda|` of `J(t0, y0)` from 20 power iterations.
pub fn spectral_radius_estimate(sys: &dyn OdeSystem<f64>, t: f64, y: &[f64]) -> BenchResult<f64> {
    let n = sys.dim();
    let f = sys.rhs(t, y);
    let mode = if sys.jvp(t, y, &f).is_some() { JvpMode::Exact } else { JvpMode::fd() };
    let mut v = Vector64::from_fn(n, |i| 1.0 + ((i * 7919) % 13) as f64 / 13.0);
    let nv = v.norm2();
    v.scale(1.0 / nv);
    let mut rho = 0.0;
    for _ in 0..20 {
        let w = jvp(sys, mode, t, y, &v, &f)?;
        rho = w.norm2();
        if rho == 0.0 {
            break;
        }
        v = w.scaled(1.0 / rho);
    }
    Ok(rho)
}

/// Step count at the explicit RK4 stability limit `2.8 / rho`.
pub fn rk4_cfl_steps(spec: &ProblemSpec64) -> BenchResult<usize> {
    let rho = spectral_radius_estimate(spec.system.as_ref(), spec.t_span.0, &spec.y0)?;
    let span = spec.t_span.1 - spec.t_span.0;
    Ok(((span * rho / 2.8).ceil() as usize).max(1))
}

fn sweep_tols(cfg: &RunConfig) -> Vec<f64> {
    if cfg.tols.is_empty() {
        DEFAULT_TOLS.to_vec()
    } else {
        cfg.tols.clone()
    }
}

/// Adaptive runs over the tolerance sweep plus an explicit RK4 baseline
/// that doubles its step count from the CFL estimate until the error
/// meets the tolerance.
pub fn run_work_precision(cfg: &RunConfig) -> BenchResult<Vec<PrecisionRow>> {
    cfg.validate()?;
    let spec = problem(&cfg.problem)?;
    let solver = Solver::new(&cfg.method, cfg.krylov_dim, cfg.jvp, cfg.basis)?;
    let reference = reference_solution(&spec)?;
    let tols = sweep_tols(cfg);
    let (t0, tf) = spec.t_span;
    let sys = spec.system.as_ref();
    let order = solver
        .embedded_order()
        .ok_or_else(|| BenchError::Usage(format!("{} has no error estimate for adaptive runs", solver.name())))?;
    let adaptive = ordered_map(cfg.threads, &tols, |&tol| {
        let ctrl = ControllerConfig::new(cfg.atol.unwrap_or(tol), cfg.rtol.unwrap_or(tol));
        let start = Instant::now();
        let h0 = 1e-2 * (tf - t0);
        let out = integrate_adaptive(t0, tf, &spec.y0, h0, order, &ctrl, |t, y, h| solver.step(sys, t, y, h));
        let wall = start.elapsed().as_secs_f64();
        match out {
            Ok(run) => PrecisionRow {
                solver: solver.name().to_string(),
                tol,
                error: relative_gap(&reference.y, &run.y),
                steps: run.stats.accepted,
                rejected: run.stats.rejected,
                f_evals: run.stats.f_evals,
                jvp_evals: run.stats.jvp_evals,
                wall_seconds: wall,
                status: "ok".into(),
            },
            Err(e) => failed_row(solver.name(), tol, wall, &e),
        }
    })?;
    let n_cfl = rk4_cfl_steps(&spec)?;
    let rk4 = Solver::rk4();
    let baseline = ordered_map(cfg.threads, &tols, |&tol| {
        let start = Instant::now();
        let mut n = n_cfl;
        loop {
            let out = integrate_fixed(t0, tf, &spec.y0, n, |t, y, h| rk4.step(sys, t, y, h));
            let err = out.as_ref().map(|r| relative_gap(&reference.y, &r.y)).unwrap_or(f64::INFINITY);
            if err <= tol || n >= n_cfl << 14 {
                let wall = start.elapsed().as_secs_f64();
                return match out {
                    Ok(run) => PrecisionRow {
                        solver: "rk4".into(),
                        tol,
                        error: err,
                        steps: n,
                        rejected: 0,
                        f_evals: run.work.f_evals,
                        jvp_evals: 0,
                        wall_seconds: wall,
                        status: if err <= tol { "ok".into() } else { "tolerance-not-reached".into() },
                    },
                    Err(e) => failed_row("rk4", tol, wall, &e),
                };
            }
            n *= 2;
        }
    })?;
    Ok(adaptive.into_iter().chain(baseline).collect())
}

fn failed_row(solver: &str, tol: f64, wall: f64, e: &rok_core::Error) -> PrecisionRow {
    let status = match e {
        rok_core::Error::StepSizeUnderflow { .. } => "step-size-underflow",
        rok_core::Error::NonFiniteOutput(_) => "non-finite",
        _ => "failed",
    };
    PrecisionRow {
        solver: solver.to_string(),
        tol,
        error: f64::NAN,
        steps: 0,
        rejected: 0,
        f_evals: 0,
        jvp_evals: 0,
        wall_seconds: wall,
        status: status.into(),
    }
}

pub fn precision_table(cfg: &RunConfig, rows: &[PrecisionRow]) -> Table {
    let mut t = Table::new(
        cfg.canonical(),
        vec!["solver", "tol", "error", "steps", "rejected", "f_evals", "jvp_evals", "wall_seconds", "status"],
    );
    for r in rows {
        t.push(vec![
            Cell::Text(r.solver.clone()),
            Cell::Num(r.tol),
            Cell::Num(r.error),
            Cell::Int(r.steps as u64),
            Cell::Int(r.rejected as u64),
            Cell::Int(r.f_evals),
            Cell::Int(r.jvp_evals),
            Cell::Num(r.wall_seconds),
            Cell::Text(r.status.clone()),
        ]);
    }
    t
}

/// `(k, ||A^k f - J^k f|| / ||J^k f||)` for `k = 0..=m` at the initial state.
pub fn run_lemma1(spec: &ProblemSpec64, m: usize, mode: JvpMode<f64>) -> BenchResult<Vec<(usize, f64)>> {
    let sys = spec.system.as_ref();
    let t = spec.t_span.0;
    let y = &spec.y0;
    let jac = sys
        .jacobian(t, y)
        .ok_or(BenchError::Numerical(rok_core::Error::MissingCapability("dense Jacobian")))?;
    let f = sys.rhs(t, y);
    let basis = arnoldi(sys, t, y, &f, &ArnoldiOptions::new(m).with_jvp_mode(mode))?;
    let mut exact = f.clone();
    let mut approx = f;
    let mut rows = Vec::with_capacity(m + 1);
    for k in 0..=m {
        if k > 0 {
            exact = jac.mul_vec(&exact)?;
            approx = basis.apply_approx_jacobian(&approx);
        }
        let denom = exact.norm2();
        let gap = approx.sub(&exact).norm2() / if denom > 0.0 { denom } else { 1.0 };
        rows.push((k, gap));
    }
    Ok(rows)
}

pub fn lemma1_table(cfg: &RunConfig, rows: &[(usize, f64)]) -> Table {
    let mut t = Table::new(cfg.canonical(), vec!["k", "relative_gap"]);
    for &(k, g) in rows {
        t.push(vec![Cell::Int(k as u64), Cell::Num(g)]);
    }
    t
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub method: String,
    pub r_zero: f64,
    pub r_inf: f64,
    pub r_hat_inf: f64,
    pub linear_order: u32,
    pub max_abs_r: f64,
    pub max_abs_r_hat: f64,
    /// `(y, |R(iy)|, |R_hat(iy)|)`
    pub samples: Vec<(f64, f64, f64)>,
}

/// Stability function summary and `|R(iy)|` on `samples` equispaced points of `[-y_max, y_max]`.
pub fn run_stability(method: &str, samples: usize, y_max: f64) -> BenchResult<StabilityReport> {
    if samples < 2 || !(y_max > 0.0) {
        return Err(BenchError::Usage("stability sampling needs at least 2 points and y_max > 0".into()));
    }
    let tab = tableau(method)?;
    let ys: Vec<f64> = (0..samples)
        .map(|k| -y_max + 2.0 * y_max * k as f64 / (samples - 1) as f64)
        .collect();
    let pts = sample_stability_boundary(&tab, &ys)?;
    let r0 = stability_function(&tab, num_complex::Complex::new(0.0, 0.0), Weights::Main)?;
    Ok(StabilityReport {
        method: tab.name.clone(),
        r_zero: r0.re,
        r_inf: stability_at_infinity(&tab, Weights::Main)?,
        r_hat_inf: stability_at_infinity(&tab, Weights::Embedded)?,
        linear_order: linear_order(&tab),
        max_abs_r: pts.iter().fold(0.0f64, |m, p| m.max(p.1)),
        max_abs_r_hat: pts.iter().fold(0.0f64, |m, p| m.max(p.2)),
        samples: pts,
    })
}

pub fn stability_table(cfg: &RunConfig, r: &StabilityReport) -> Table {
    let mut t = Table::new(cfg.canonical(), vec!["y", "abs_r", "abs_r_hat"]);
    for &(y, a, b) in &r.samples {
        t.push(vec![Cell::Num(y), Cell::Num(a), Cell::Num(b)]);
    }
    t.trailer.push(format!(
        "r_zero={} r_inf={} r_hat_inf={} linear_order={}",
        crate::csv::num(r.r_zero),
        crate::csv::num(r.r_inf),
        crate::csv::num(r.r_hat_inf),
        r.linear_order
    ));
    t
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionRow {
    pub method: String,
    pub family: String,
    pub label: String,
    pub lhs: f64,
    pub target: f64,
    pub residual: f64,
    pub pass: bool,
}

/// Residual tolerance per method: coefficients of size several hundred in
/// rok4b amplify roundoff, so it gets `1e-8`; everything else `1e-10`.
pub fn condition_tolerance(method: &str) -> f64 {
    if method.eq_ignore_ascii_case("rok4b") {
        1e-8
    } else {
        1e-10
    }
}

/// Residuals of one family, or of every family when `family` is `None`, for
/// one method or for all methods when `method` is `all`. The two variants
/// of the bushy fourth-order condition are reported with `k4`.
pub fn run_check_conditions(method: &str, family: Option<ConditionFamily>) -> BenchResult<Vec<ConditionRow>> {
    let names: Vec<&str> = if method.eq_ignore_ascii_case("all") {
        METHOD_NAMES.to_vec()
    } else {
        vec![method]
    };
    let families: Vec<ConditionFamily> = match family {
        Some(f) => vec![f],
        None => ConditionFamily::ALL.to_vec(),
    };
    let mut out = Vec::new();
    for name in names {
        let tab = tableau(name)?;
        let tol = condition_tolerance(name);
        let mut residuals = Vec::new();
        for &fam in &families {
            residuals.extend(order_condition_residuals(&tab, fam));
            if fam == ConditionFamily::K4 {
                residuals.extend(condition_f_variants(&tab));
            }
        }
        out.extend(residuals.into_iter().map(|r| ConditionRow {
            method: name.to_ascii_lowercase(),
            family: r.family.as_str().to_string(),
            label: r.label,
            lhs: r.lhs,
            target: r.target,
            residual: r.residual,
            pass: r.residual <= tol,
        }));
    }
    Ok(out)
}

pub fn conditions_table(cfg: &RunConfig, rows: &[ConditionRow]) -> Table {
    let mut t = Table::new(
        cfg.canonical(),
        vec!["method", "label", "family", "lhs", "target", "residual", "pass"],
    );
    for r in rows {
        t.push(vec![
            Cell::Text(r.method.clone()),
            Cell::Text(r.label.clone()),
            Cell::Text(r.family.clone()),
            Cell::Num(r.lhs),
            Cell::Num(r.target),
            Cell::Num(r.residual),
            Cell::Text(r.pass.to_string()),
        ]);
    }
    t
}
