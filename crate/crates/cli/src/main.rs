use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, ValueEnum};
use warpflow_cli::{exit, CliError, Mode, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Curvature,
    Flow,
    Verify,
    Sweep,
}

impl From<Command> for Mode {
    fn from(c: Command) -> Self {
        match c {
            Command::Curvature => Mode::Curvature,
            Command::Flow => Mode::Flow,
            Command::Verify => Mode::Verify,
            Command::Sweep => Mode::Sweep,
        }
    }
}

/// Curvature checks and geometric flows on warped products.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Mode to run; must match the `mode` key of the config.
    #[arg(value_enum)]
    command: Command,
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output.dir`, then `warpflow-out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress the status line.
    #[arg(long)]
    quiet: bool,
}

fn execute(args: &Args) -> anyhow::Result<i32> {
    if let Ok(threads) = std::env::var("WARPFLOW_THREADS") {
        let n: usize = threads
            .parse()
            .with_context(|| format!("WARPFLOW_THREADS = {threads:?} is not a count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("setting up the thread pool")?;
    }
    let cfg = ScenarioConfig::load(&args.config)?;
    let mode = Mode::from(args.command);
    if cfg.mode != mode {
        return Err(CliError::Config(format!(
            "command {mode:?} does not match mode {:?} in {}",
            cfg.mode,
            args.config.display()
        ))
        .into());
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("warpflow-out"));
    let outcome = warpflow_cli::run(&cfg, &out)?;
    if !args.quiet {
        let failed: Vec<String> = outcome
            .checks()
            .into_iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{} ({:e} > {:e})", c.name, c.linf, c.tolerance))
            .collect();
        let status = serde_json::to_value(outcome.status)?;
        let status = status.as_str().unwrap_or_default();
        if failed.is_empty() {
            println!("{status}: {}", out.display());
        } else {
            println!("{status}: {} [{}]", out.display(), failed.join(", "));
        }
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .downcast_ref::<CliError>()
                .map(CliError::exit_code)
                .unwrap_or(exit::NUMERICAL);
            ExitCode::from(code as u8)
        }
    }
}
