use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use csframes::cli::{self, RunError, RunOptions, Task};

/// Construct and verify generalized coherent states in truncated Fock space.
///
/// Configuration defaults: n_max = 64, tail_tol = 1e-10, edge_margin = 2,
/// epsilon = 1e-3. Reports are written as CSV into the output directory
/// (the CSFRAMES_OUT environment variable takes precedence over --out).
#[derive(Debug, Parser)]
#[command(name = "csframes", version)]
struct Args {
    /// Task to run: eval, verify, moments, scan or dual-compare. Must match
    /// the `name` in the [task] section of the configuration.
    task: Task,
    /// Path of the experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for the CSV reports (default: current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the truncation dimension of the configuration.
    #[arg(long)]
    nmax: Option<usize>,
    /// Seed of the random-vector property checks.
    #[arg(long, default_value_t = cli::run::DEFAULT_SEED)]
    seed: u64,
}

fn execute(args: &Args) -> Result<cli::RunOutcome, RunError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        RunError::Config(cli::ConfigError {
            line: None,
            field: None,
            message: format!("cannot read {}: {e}", args.config.display()),
        })
    })?;
    let mut cfg = cli::parse_config(&text)?;
    if cfg.task() != args.task {
        return Err(RunError::Config(cli::ConfigError {
            line: None,
            field: Some("name".into()),
            message: format!(
                "the command line asks for `{}` but the configuration describes `{}`",
                args.task,
                cfg.task()
            ),
        }));
    }
    if let Some(n) = args.nmax {
        cfg = cfg.with_n_max(n)?;
    }
    let out_dir = std::env::var_os("CSFRAMES_OUT")
        .map(PathBuf::from)
        .or_else(|| args.out.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    cli::run(&cfg, &RunOptions { out_dir, seed: args.seed })
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("csframes: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
