use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

mod commands;
mod config;

use config::Overrides;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError { code: 2, message: msg.into() }
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        CliError { code: 1, message: msg.into() }
    }

    fn kind(&self) -> &'static str {
        if self.code == 2 {
            "usage"
        } else {
            "numerical"
        }
    }
}

impl From<meshlessbif::Error> for CliError {
    fn from(e: meshlessbif::Error) -> Self {
        CliError { code: if e.is_usage() { 2 } else { 1 }, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::numeric(format!("i/o error: {e}"))
    }
}

#[derive(Parser)]
#[command(name = "meshlessbif", version, about = "Steady states, branches and spectra with random-feature collocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Run configuration (JSON, or TOML with a .toml extension).
    #[arg(long)]
    config: Option<PathBuf>,
    /// bratu1d, bratu2d, fhn or allen_cahn.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_neurons: Option<usize>,
    /// Collocation points per axis, comma separated.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    /// Relative truncation of the least-squares SVD.
    #[arg(long)]
    tau: Option<f64>,
    /// Continuation step length.
    #[arg(long)]
    ds: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// lower or upper.
    #[arg(long)]
    branch: Option<String>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    /// shift_invert, naive or fd.
    #[arg(long)]
    method: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        let mut o: Overrides = Vec::new();
        let mut put = |path: &'static [&'static str], v: Option<Value>| {
            if let Some(v) = v {
                o.push((path, v));
            }
        };
        put(&["seed"], self.seed.map(|v| json!(v)));
        put(&["n_neurons"], self.n_neurons.map(|v| json!(v)));
        put(&["grid"], self.grid.as_ref().map(|v| json!(v)));
        put(&["solver", "svd_tol"], self.tau.map(|v| json!(v)));
        put(&["continuation", "svd_tol"], self.tau.map(|v| json!(v)));
        put(&["continuation", "ds"], self.ds.map(|v| json!(v)));
        put(&["mu"], self.mu.map(|v| json!(v)));
        put(&["branch"], self.branch.as_ref().map(|v| json!(v)));
        put(&["eigs", "sigma"], self.sigma.map(|v| json!(v)));
        put(&["eigs", "k"], self.k.map(|v| json!(v)));
        put(&["eigs", "method"], self.method.as_ref().map(|v| json!(v)));
        put(&["output_dir"], self.out.as_ref().map(|v| json!(v)));
        o
    }

    fn resolve(&self) -> Result<config::RunConfig, CliError> {
        config::resolve(self.config.as_deref(), self.problem.as_deref(), self.overrides())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Steady state at one parameter value.
    Solve(Common),
    /// Pseudo-arclength continuation with stability and events.
    Continue(Common),
    /// Leading eigenpairs of a steady state.
    Eigs(Common),
    /// Singular-value decay and boundary-row rank of the collocation matrix.
    SvdReport {
        #[command(flatten)]
        common: Common,
        /// 1-based inclusive index range for the decay fit.
        #[arg(long, num_args = 2, value_names = ["FIRST", "LAST"])]
        fit_range: Option<Vec<usize>>,
    },
    /// Runs the acceptance suite: bratu1d, bratu2d, fhn, allen_cahn, properties or all.
    Reproduce {
        #[arg(default_value = "all")]
        suite: String,
        /// Criteria run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn set_threads() -> Result<(), CliError> {
    let par = match std::env::var("MESHLESSBIF_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(0 | 1) => faer::Par::Seq,
            Ok(n) => faer::Par::rayon(n),
            Err(_) => return Err(CliError::usage(format!("MESHLESSBIF_THREADS must be a thread count, got {s:?}"))),
        },
        Err(_) => faer::Par::Seq,
    };
    faer::set_global_parallelism(par);
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    set_threads()?;
    match cli.command {
        Command::Solve(c) => commands::solve(&c.resolve()?),
        Command::Continue(c) => commands::continue_branch(&c.resolve()?),
        Command::Eigs(c) => commands::eigs(&c.resolve()?),
        Command::SvdReport { common, fit_range } => {
            let range = fit_range.map(|r| [r[0], r[1]]);
            commands::svd_report(&common.resolve()?, range)
        }
        Command::Reproduce { suite, jobs, out } => {
            if commands::reproduce(&suite, jobs, out.as_deref())? {
                Ok(())
            } else {
                Err(CliError::numeric("some acceptance criteria failed"))
            }
        }
    }
}

fn fail(e: CliError) -> ExitCode {
    let body = json!({"error": {"kind": e.kind(), "message": e.message, "exit_code": e.code}});
    eprintln!("{body}");
    ExitCode::from(e.code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(CliError::usage(e.to_string().trim().to_string())),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
