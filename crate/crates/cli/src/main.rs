//! `matsimplex`: run solvers and numerical self-checks on the matrix simplex.

mod config;
mod encoding;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use matsimplex::bench::{bench_grid, BenchOptions};
use matsimplex::checks::{
    gradcheck, invariant_suite, Fault, ScaledGradient, SuiteOptions, FIRST_ORDER_SLOPE,
    HESSIAN_SYMMETRY_TOL, SECOND_ORDER_SLOPE,
};
use matsimplex::problems::{analytic_optimum_logdet, nearest_point_diagonal_oracle};
use matsimplex::{solve, Complex64, MatrixSimplex, ProblemSpec, Scalar, SimplexPoint, Status};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use config::{Field, RunConfig};
use encoding::{write_trace, PointFile};
use error::{exit, CliError};

#[derive(Debug, Parser)]
#[command(name = "matsimplex", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured solver and write the trace and final point.
    Solve {
        config: PathBuf,
        /// Replaces the seed of the configuration.
        #[arg(long, env = "MATSIMPLEX_SEED")]
        seed: Option<u64>,
    },
    /// Run the manifold invariant suite on random instances.
    Check {
        #[arg(long)]
        n: usize,
        #[arg(long = "K")]
        k: usize,
        #[arg(long, value_enum, default_value_t = Field::Real)]
        field: Field,
        #[arg(long, env = "MATSIMPLEX_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        /// Inject a defect to confirm the suite catches it.
        #[arg(long, value_enum)]
        fault: Option<CheckFault>,
    },
    /// Taylor-slope checks of a configured problem's derivatives.
    Gradcheck {
        config: PathBuf,
        #[arg(long, env = "MATSIMPLEX_SEED")]
        seed: Option<u64>,
        /// Inject a defect to confirm the check catches it.
        #[arg(long, value_enum)]
        fault: Option<GradFault>,
    },
    /// Time project, retract and ehess_to_rhess over a size grid; CSV on stdout.
    Bench {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long = "K", value_delimiter = ',', required = true)]
        k: Vec<usize>,
        #[arg(long, env = "MATSIMPLEX_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Field::Real)]
        field: Field,
        /// Time budget per grid cell and operation.
        #[arg(long, default_value_t = 200)]
        budget_ms: u64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CheckFault {
    /// Projection without the multiplier correction.
    SkipMultiplier,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GradFault {
    /// Gradient and Hessian scaled by 1.1.
    ScaleGrad,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::CONFIG } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Solve { config, seed } => cmd_solve(&config, seed),
        Command::Check {
            n,
            k,
            field,
            seed,
            trials,
            fault,
        } => {
            let fault = match fault {
                Some(CheckFault::SkipMultiplier) => Fault::SkipMultiplier,
                None => Fault::None,
            };
            match field {
                Field::Real => cmd_check::<f64>(n, k, seed, trials as usize, fault),
                Field::Complex => cmd_check::<Complex64>(n, k, seed, trials as usize, fault),
            }
        }
        Command::Gradcheck { config, seed, fault } => cmd_gradcheck(&config, seed, fault),
        Command::Bench {
            n,
            k,
            seed,
            field,
            budget_ms,
        } => cmd_bench(&n, &k, seed, field, Duration::from_millis(budget_ms)),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let mut cfg = config::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn cmd_solve(path: &Path, seed: Option<u64>) -> Result<u8, CliError> {
    let cfg = load(path, seed)?;
    match cfg.problem.field {
        Field::Real => run_solve::<f64>(&cfg),
        Field::Complex => run_solve::<Complex64>(&cfg),
    }
}

fn run_solve<T: Scalar>(cfg: &RunConfig) -> Result<u8, CliError> {
    let section = cfg
        .solver
        .as_ref()
        .ok_or_else(|| CliError::config("solver", "required by solve"))?;
    let solver = section.to_solver_config()?;
    let inst = cfg.problem.instance::<T>(cfg.seed)?;
    let x0 = match &section.start_path {
        Some(p) => PointFile::read(p)?
            .to_point(&inst.manifold)
            .map_err(|m| CliError::config("solver.start_path", m))?,
        None => inst.manifold.random_point_seeded(),
    };
    let out = solve(&inst.manifold, &inst.problem, x0, &solver)?;

    if let Some(p) = &cfg.output.trace_path {
        let file = std::fs::File::create(p).map_err(|e| CliError::io(p, e))?;
        write_trace(std::io::BufWriter::new(file), &out.trace).map_err(|e| CliError::io(p, e))?;
    }
    if let Some(p) = &cfg.output.point_path {
        PointFile::from_point(&out.point).write(p)?;
    }

    let last = out.trace.last();
    println!(
        "method={} status={} iterations={} cost={:.12e} gradnorm={:.3e}",
        solver.method.name(),
        out.trace.status,
        out.trace.iterations(),
        last.cost,
        last.gradnorm
    );
    Ok(match out.trace.status {
        Status::Converged => exit::OK,
        Status::MaxIter => exit::MAX_ITER,
        _ => exit::SOLVER_FAILURE,
    })
}

fn cmd_check<T: Scalar>(
    n: usize,
    k: usize,
    seed: u64,
    trials: usize,
    fault: Fault,
) -> Result<u8, CliError> {
    let m = MatrixSimplex::<T>::with_sizes(n, k)
        .map_err(|e| CliError::config("--n/--K", e.to_string()))?;
    let opts = SuiteOptions {
        fault,
        ..Default::default()
    };
    let report = invariant_suite(&m, trials, &mut ChaCha8Rng::seed_from_u64(seed), opts)?;
    for c in &report.checks {
        let verdict = if c.passed { "ok" } else { "FAIL" };
        match c.name {
            "dimension" => println!("{:<24} {:>12}  (expected {})  {verdict}", c.name, c.value, c.limit),
            "metric_positivity" => println!("{:<24} {:>12.3e}  (must be > 0)  {verdict}", c.name, c.value),
            _ => println!("{c}"),
        }
    }
    match report.first_failure() {
        None => Ok(exit::OK),
        Some(c) => {
            eprintln!("check failed: {}", c.name);
            Ok(exit::CHECK_FAILED)
        }
    }
}

fn cmd_gradcheck(path: &Path, seed: Option<u64>, fault: Option<GradFault>) -> Result<u8, CliError> {
    let cfg = load(path, seed)?;
    match cfg.problem.field {
        Field::Real => run_gradcheck::<f64>(&cfg, fault),
        Field::Complex => run_gradcheck::<Complex64>(&cfg, fault),
    }
}

/// Known minimizer, when the problem has one in closed form.
fn known_optimum<T: Scalar>(m: &MatrixSimplex<T>, p: &ProblemSpec<T>) -> Option<SimplexPoint<T>> {
    match p {
        ProblemSpec::WeightedLogDet { weights } => analytic_optimum_logdet(weights, m).ok(),
        ProblemSpec::NearestPoint { targets } => nearest_point_diagonal_oracle(targets, m).ok(),
        ProblemSpec::PovmMle { .. } => None,
    }
}

fn run_gradcheck<T: Scalar>(cfg: &RunConfig, fault: Option<GradFault>) -> Result<u8, CliError> {
    let inst = cfg.problem.instance::<T>(cfg.seed)?;
    let optimum = known_optimum(&inst.manifold, &inst.problem);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let report = match fault {
        None => gradcheck(&inst.manifold, &inst.problem, optimum.as_ref(), &mut rng)?,
        Some(GradFault::ScaleGrad) => {
            let wrong = ScaledGradient {
                inner: inst.problem.clone(),
                factor: 1.1,
            };
            gradcheck(&inst.manifold, &wrong, optimum.as_ref(), &mut rng)?
        }
    };
    let verdict = |ok: bool| if ok { "ok" } else { "FAIL" };
    println!(
        "first_order_slope  {:>10.4}  (band [{}, {}])  {}",
        report.first_order_slope,
        FIRST_ORDER_SLOPE.0,
        FIRST_ORDER_SLOPE.1,
        verdict(report.first_order_ok())
    );
    match report.second_order_slope {
        Some(s) => println!(
            "second_order_slope {s:>10.4}  (band [{}, {}])  {}",
            SECOND_ORDER_SLOPE.0,
            SECOND_ORDER_SLOPE.1,
            verdict(report.second_order_ok())
        ),
        None => println!("second_order_slope    skipped  (no known optimum)"),
    }
    println!(
        "hessian_symmetry   {:>10.3e}  (limit {HESSIAN_SYMMETRY_TOL:e})  {}",
        report.hessian_symmetry,
        verdict(report.symmetry_ok())
    );
    match report.first_failure() {
        None => Ok(exit::OK),
        Some(name) => {
            eprintln!("gradcheck failed: {name}");
            Ok(exit::CHECK_FAILED)
        }
    }
}

fn cmd_bench(
    ns: &[usize],
    ks: &[usize],
    seed: u64,
    field: Field,
    budget: Duration,
) -> Result<u8, CliError> {
    if let Some(n) = ns.iter().find(|&&n| n == 0) {
        return Err(CliError::config("--n", format!("sizes must be at least 1, got {n}")));
    }
    if let Some(k) = ks.iter().find(|&&k| k < 2) {
        return Err(CliError::config("--K", format!("K must be at least 2, got {k}")));
    }
    let opts = BenchOptions {
        budget,
        ..Default::default()
    };
    let rows = match field {
        Field::Real => bench_grid::<f64>(ns, ks, seed, &opts)?,
        Field::Complex => bench_grid::<Complex64>(ns, ks, seed, &opts)?,
    };
    let stdout = std::io::stdout();
    let mut w = csv::Writer::from_writer(stdout.lock());
    let csv_err = |e: csv::Error| CliError::io(Path::new("<stdout>"), e);
    w.write_record(["op", "n", "K", "mean_ms"]).map_err(csv_err)?;
    for r in &rows {
        w.write_record([r.op.to_string(), r.n.to_string(), r.k.to_string(), format!("{:.6}", r.mean_ms)])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    Ok(exit::OK)
}
