use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cycletrail::pipeline::{cmd_derive, cmd_enrich, cmd_evaluate, cmd_match, cmd_pipeline, cmd_preprocess, RunConfig};

#[derive(Parser)]
#[command(version, about = "Clean, map-match and enrich cyclist GPS traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; overrides the config file.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Skip GPX files smaller than this many bytes; overrides the config file.
    #[arg(long, global = true)]
    min_file_bytes: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    Preprocess,
    Match,
    Enrich,
    Derive,
    Evaluate {
        /// Ground-truth routes; defaults to `truth_path` from the config.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    Pipeline,
}

fn run(cli: &Cli) -> cycletrail::Result<()> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| cycletrail::Error::InvalidConfig("--config is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(n) = cli.workers {
        cfg.workers = n;
        cfg.validate()?;
    }
    if let Some(n) = cli.min_file_bytes {
        cfg.preprocess.min_file_bytes = Some(n);
    }
    std::fs::create_dir_all(&cfg.output_dir)?;
    match &cli.command {
        Command::Preprocess => cmd_preprocess(&cfg).map(drop),
        Command::Match => cmd_match(&cfg).map(drop),
        Command::Enrich => cmd_enrich(&cfg).map(drop),
        Command::Derive => cmd_derive(&cfg).map(drop),
        Command::Evaluate { truth } => cmd_evaluate(&cfg, truth.as_deref()).map(drop),
        Command::Pipeline => cmd_pipeline(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
