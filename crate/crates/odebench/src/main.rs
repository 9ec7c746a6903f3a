use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use odebench::config::{parse_basis, parse_list, JvpSpec, KrylovDim, RunConfig, DEFAULT_STEPS, DEFAULT_TOLS};
use odebench::csv::Table;
use odebench::runs;
use odebench::{BenchError, BenchResult};
use rok_core::ConditionFamily;

#[derive(Parser, Debug)]
#[command(name = "odebench", version, about = "Rosenbrock-Krylov integrator studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fixed-step convergence ladder and fitted order.
    Converge(Common),
    /// Adaptive tolerance sweep with an explicit RK4 baseline.
    Precision(Common),
    /// Stability function on the imaginary axis.
    Stability {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 1e3)]
        y_max: f64,
    },
    /// Order-condition residuals (`--method all` for every tableau).
    CheckConditions {
        #[command(flatten)]
        common: Common,
        /// classical, w, k4, k5 or parabolic; every family when absent
        #[arg(long)]
        family: Option<String>,
    },
    /// Krylov approximation gaps `||A^k f - J^k f|| / ||J^k f||`.
    Lemma1(Common),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, default_value = "lorenz96")]
    problem: String,
    #[arg(long, default_value = "rok4a")]
    method: String,
    /// Krylov dimension or `full` for the exact dense Jacobian.
    #[arg(long)]
    krylov_dim: Option<String>,
    /// exact, fd or fd-fixed:DELTA
    #[arg(long, default_value = "exact")]
    jvp: String,
    /// type1 or type2
    #[arg(long, default_value = "type1")]
    basis: String,
    /// Step counts, e.g. 20,40,80
    #[arg(long)]
    steps: Option<String>,
    /// Tolerances, e.g. 1e-2,1e-4
    #[arg(long)]
    tols: Option<String>,
    #[arg(long)]
    atol: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl Common {
    fn config(&self, command: &str, default_m: usize) -> BenchResult<RunConfig> {
        let cfg = RunConfig {
            command: command.into(),
            problem: self.problem.clone(),
            method: self.method.clone(),
            krylov_dim: match &self.krylov_dim {
                Some(s) => s.parse()?,
                None => KrylovDim::Dim(default_m),
            },
            jvp: self.jvp.parse::<JvpSpec>()?,
            basis: parse_basis(&self.basis)?,
            steps: match &self.steps {
                Some(s) => parse_list("--steps", s)?,
                None => DEFAULT_STEPS.to_vec(),
            },
            tols: match &self.tols {
                Some(s) => parse_list("--tols", s)?,
                None => DEFAULT_TOLS.to_vec(),
            },
            atol: self.atol,
            rtol: self.rtol,
            threads: self.threads,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(table: &Table, out: &Option<PathBuf>) -> BenchResult<()> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            table.write_to(&mut w)?;
            w.flush()?;
        }
        None => table.write_to(io::stdout().lock())?,
    }
    Ok(())
}

fn run(cli: Cli) -> BenchResult<()> {
    match cli.command {
        Command::Converge(c) => {
            let cfg = c.config("converge", 4)?;
            let report = runs::run_convergence(&cfg)?;
            emit(&runs::convergence_table(&cfg, &report), &c.out)?;
            match report.fit {
                Some(f) => {
                    eprintln!("fitted order {:.3} (r2 {:.5}, {} rows)", f.slope, f.r2, f.rows_used);
                    Ok(())
                }
                None => {
                    let usable = report
                        .rows
                        .iter()
                        .filter(|r| r.error > 1e2 * report.reference_tolerance && r.error < 1e-1)
                        .count();
                    Err(BenchError::InsufficientRows { usable })
                }
            }
        }
        Command::Precision(c) => {
            let cfg = c.config("precision", 4)?;
            let rows = runs::run_work_precision(&cfg)?;
            emit(&runs::precision_table(&cfg, &rows), &c.out)?;
            if rows.iter().any(|r| r.status != "ok" && r.error.is_nan()) {
                eprintln!("some rows failed; see the status column");
            }
            Ok(())
        }
        Command::Stability { common, samples, y_max } => {
            let cfg = common.config("stability", 4)?;
            let r = runs::run_stability(&cfg.method, samples, y_max)?;
            emit(&runs::stability_table(&cfg, &r), &common.out)?;
            eprintln!(
                "{}: R(0) = {}, R(inf) = {:e}, Rhat(inf) = {:e}, linear order {}, max |R(iy)| = {}",
                r.method, r.r_zero, r.r_inf, r.r_hat_inf, r.linear_order, r.max_abs_r
            );
            Ok(())
        }
        Command::CheckConditions { common, family } => {
            let cfg = common.config("check-conditions", 4)?;
            let family = family.as_deref().map(str::parse::<ConditionFamily>).transpose()?;
            let rows = runs::run_check_conditions(&cfg.method, family)?;
            emit(&runs::conditions_table(&cfg, &rows), &common.out)?;
            let failed = rows.iter().filter(|r| !r.pass).count();
            eprintln!("{} residuals, {failed} above tolerance", rows.len());
            Ok(())
        }
        Command::Lemma1(c) => {
            let cfg = c.config("lemma1", 6)?;
            let m = match cfg.krylov_dim {
                KrylovDim::Dim(m) => m,
                KrylovDim::Full => return Err(BenchError::Usage("lemma1 needs an integer --krylov-dim".into())),
            };
            let spec = runs::problem(&cfg.problem)?;
            let rows = runs::run_lemma1(&spec, m, cfg.jvp.mode())?;
            emit(&runs::lemma1_table(&cfg, &rows), &c.out)?;
            let worst = rows.iter().filter(|r| r.0 < m).fold(0.0f64, |a, r| a.max(r.1));
            eprintln!("max gap below k = {m}: {worst:e}; gap at k = {m}: {:e}", rows[m].1);
            if worst > 1e-9 {
                return Err(BenchError::OracleMismatch(format!("gap {worst:e} exceeds 1e-9 below k = {m}")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("odebench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
