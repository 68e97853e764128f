//! Command-line front end: `fit`, `diagnose`, `sweep` and `check-lemmas`.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical error,
//! 3 property violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use powerpost::asymptotics::{estimate_curvature, fit_mle};
use powerpost::harness::{check_lemmas, resolve_theta_star, run_cell, run_sweep, ExperimentConfig};
use powerpost::model::sample_data;
use powerpost::posterior::normalize_on_grid;
use powerpost::Error;

#[derive(Parser)]
#[command(
    name = "powerpost",
    version,
    about = "Power-posterior inference and asymptotic diagnostics"
)]
struct Cli {
    /// Worker threads for parallel work (default: all cores).
    #[arg(long, global = true, env = "POWERPOST_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CellArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sample size; defaults to the first entry of `n_sequence`.
    #[arg(long)]
    n: Option<usize>,
    /// Posterior power; defaults to the first entry of `alpha_set`.
    #[arg(long)]
    alpha: Option<f64>,
    /// Data seed; defaults to the first seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Optional directory for a JSON copy of the output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one dataset: MLE, curvature and grid posterior summary.
    Fit(CellArgs),
    /// Diagnostics of one cell. Without `--config` runs the conjugate
    /// Gaussian cell at n = 10000, alpha = 1, seed 1.
    Diagnose(CellArgs),
    /// Full sweep over `n_sequence x alpha_set x seeds`.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_path` of the configuration.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random-instance checks of the tail and moment inequalities.
    CheckLemmas {
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Optional directory for `lemmas.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const DEFAULT_CELL: &str = r#"
n_sequence = [10000]
alpha_set = [1.0]
seeds = { start = 1, count = 1 }

[model]
kind = "gaussian_location"

[process]
kind = "gaussian"

[prior]
kind = "normal"
sd = 10.0
"#;

enum Failure {
    Error(Error),
    Violation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Error(e.into())
    }
}

fn load(config: &Option<PathBuf>) -> Result<ExperimentConfig, Error> {
    match config {
        Some(p) => ExperimentConfig::from_path(p),
        None => ExperimentConfig::from_toml_str(DEFAULT_CELL),
    }
}

fn cell_key(cfg: &ExperimentConfig, a: &CellArgs) -> (usize, f64, u64) {
    (
        a.n.unwrap_or(cfg.n_sequence[0]),
        a.alpha.unwrap_or(cfg.alpha_set[0]),
        a.seed.unwrap_or(cfg.seeds.start),
    )
}

fn emit(value: &serde_json::Value, out: &Option<PathBuf>, file: &str) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value)?;
    println!("{text}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(file), text + "\n")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Fit(a) => {
            let cfg = load(&a.config)?;
            cfg.validate()?;
            let exp = cfg.build()?;
            let (n, alpha, seed) = cell_key(&cfg, &a);
            let data = sample_data(exp.process.as_ref(), n, seed)?;
            let bx = exp.model.theta_box();
            let start: Vec<f64> = bx
                .lower
                .iter()
                .zip(&bx.upper)
                .map(|(l, u)| 0.5 * (l + u))
                .collect();
            let fit = fit_mle(exp.model.as_ref(), &data, &start)?;
            let curv = estimate_curvature(exp.model.as_ref(), &data, &fit.theta_hat)?;
            let post = normalize_on_grid(
                exp.model.as_ref(),
                exp.prior.as_ref(),
                &data,
                &cfg.alpha_config(alpha)?,
                &fit,
                &curv,
            )?;
            let cov = post.covariance();
            let p = post.dim();
            let value = json!({
                "model": exp.model.name(),
                "process": exp.process.name(),
                "prior": exp.prior.name(),
                "n": n,
                "alpha": alpha,
                "seed": seed,
                "theta_mle": fit.theta_hat,
                "mle_iterations": fit.iterations,
                "log_lik_at_max": fit.log_lik_at_max,
                "curvature": serde_json::from_str::<serde_json::Value>(&curv.to_json()?)?,
                "posterior_mean": post.mean(),
                "posterior_covariance": (0..p).map(|i| (0..p).map(|j| cov[(i, j)]).collect::<Vec<_>>()).collect::<Vec<_>>(),
            });
            emit(&value, &a.out, "fit.json")?;
        }
        Command::Diagnose(a) => {
            let cfg = load(&a.config)?;
            cfg.validate()?;
            let exp = cfg.build()?;
            let (n, alpha, seed) = cell_key(&cfg, &a);
            let theta_star = resolve_theta_star(&exp)?;
            let cell = run_cell(&cfg, &exp, &theta_star, n, alpha, seed)?;
            let value = json!({
                "reports": cell.reports,
                "theorem2": cell.theorem2,
            });
            emit(&value, &a.out, "diagnose.json")?;
            eprintln!("tv = {:.6e}", cell.reports[0].tv);
        }
        Command::Sweep { config, out } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            if let Some(dir) = out {
                cfg.output_path = dir;
            }
            let outcome = run_sweep(&cfg)?;
            outcome.write(&cfg.output_path)?;
            let s = &outcome.summary;
            println!(
                "{} cells, {} failed; outputs in {}",
                s.total_cells,
                s.failed_cells,
                cfg.output_path.display()
            );
            if outcome.too_many_failures() {
                return Err(Failure::Error(Error::Consistency(format!(
                    "{} of {} cells failed",
                    s.failed_cells, s.total_cells
                ))));
            }
        }
        Command::CheckLemmas {
            instances,
            seed,
            out,
        } => {
            let sweep = check_lemmas(instances, seed)?;
            emit(&serde_json::to_value(&sweep)?, &out, "lemmas.json")?;
            eprintln!(
                "{} instances, {} checks, {} violations",
                sweep.instances,
                sweep.checks,
                sweep.violations.len()
            );
            if !sweep.passed() {
                return Err(Failure::Violation(format!(
                    "{} violations",
                    sweep.violations.len()
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: cannot configure {t} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_configuration() { 1 } else { 2 })
        }
        Err(Failure::Violation(m)) => {
            eprintln!("property violation: {m}");
            ExitCode::from(3)
        }
    }
}
