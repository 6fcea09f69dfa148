use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use stripweave_cli::{pipeline, CliError, JobConfig};

/// Strip embedding pipeline: plan, solve, export, validate.
#[derive(Parser)]
#[command(name = "stripweave", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Predict per-strip peak strain and print the partition table.
    Plan(CommonArgs),
    /// Solve every strip and write checkpoints + diagnostics.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Seed from existing checkpoints and polish instead of resolving.
        #[arg(long)]
        resume: bool,
    },
    /// Write kit pages, per-strip patterns, strain heatmaps and CSVs.
    Export(CommonArgs),
    /// Solve the configured breadth series and check the scaling laws.
    Validate(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Job configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for strip-level parallelism; 1 guarantees
    /// bit-reproducible runs.
    #[arg(long)]
    threads: Option<usize>,
}

fn run() -> Result<u8, CliError> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Plan(args) => {
            let cfg = JobConfig::load(&args.config)?;
            let outcome = pipeline::run_plan(&cfg, args.out.as_deref())?;
            Ok(if outcome.exceeded { 2 } else { 0 })
        }
        Command::Solve { common, resume } => {
            let cfg = JobConfig::load(&common.config)?;
            let outcome =
                pipeline::run_solve(&cfg, common.out.as_deref(), common.threads, *resume)?;
            Ok(if outcome.failures.is_empty() { 0 } else { 70 })
        }
        Command::Export(args) => {
            let cfg = JobConfig::load(&args.config)?;
            pipeline::run_export(&cfg, args.out.as_deref())?;
            Ok(0)
        }
        Command::Validate(args) => {
            let cfg = JobConfig::load(&args.config)?;
            let outcome = pipeline::run_validate(&cfg, args.out.as_deref(), args.threads)?;
            Ok(if outcome.bands_met { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("STRIPWEAVE_LOG", "warn"))
        .init();
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
