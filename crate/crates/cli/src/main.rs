// SPDX-License-Identifier: MIT OR Apache-2.0

//! Command-line driver for the knowledge-circuit pipeline.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kcircuits::experiment::{run_all, run_stage, ExperimentConfig, RunDir};
use kcircuits::Error;

/// Environment variable naming the default root for run directories.
const OUT_ROOT_ENV: &str = "KCIRCUITS_OUT_ROOT";

#[derive(Parser)]
#[command(name = "kcircuits", version, about = "Track knowledge circuits through continual pre-training")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (TOML). Defaults to the selected preset.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Preset used when no config file is given.
    #[arg(long, global = true, default_value = "desk", value_parser = ["desk", "paper-shape"])]
    preset: String,

    /// Run directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Root for run directories when --out is not given.
    #[arg(long, global = true, env = OUT_ROOT_ENV, default_value = "runs", value_name = "DIR")]
    out_root: PathBuf,

    /// Override every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Accept artifacts written under a different config hash.
    #[arg(long, global = true)]
    stage_override: bool,

    /// Worker threads for per-example work (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Generate corpora, vocabulary and task examples.
    Synth,
    /// Train the base and continual stages, checkpointing every epoch.
    Train,
    /// Score edges and extract circuits for every checkpoint and filter.
    Discover,
    /// Write the per-epoch metrics table, phase shifts and aligned evaluation.
    Analyze,
    /// Logit-lens traces.
    Lens,
    /// Attention-head taxonomy.
    Heads,
    /// Cross-band circuit transfer.
    Transfer,
    /// Continue training on fresh entities and follow the circuit.
    Forget,
    /// Render SVG charts.
    Report,
    /// Every stage in order.
    RunAll,
    /// Print the effective config.
    Config,
}

impl Command {
    fn stage(&self) -> Option<&'static str> {
        Some(match self {
            Command::Synth => "synth",
            Command::Train => "train",
            Command::Discover => "discover",
            Command::Analyze => "analyze",
            Command::Lens => "lens",
            Command::Heads => "heads",
            Command::Transfer => "transfer",
            Command::Forget => "forget",
            Command::Report => "report",
            Command::RunAll | Command::Config => return None,
        })
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::ConfigMismatch { .. } | Error::Format { .. } | Error::Corpus(_) => 2,
        Error::MissingPrerequisite { .. } => 3,
        Error::Numerical(_) => 4,
        _ => 1,
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_toml(
            &std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
        )?,
        None => ExperimentConfig::preset(&cli.preset)?,
    };
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_dir_path(cli: &Cli, cfg: &ExperimentConfig) -> PathBuf {
    if let Some(out) = &cli.out {
        return out.clone();
    }
    if let Some(out) = &cfg.out_dir {
        return out.clone();
    }
    let scale = match cfg.scale {
        kcircuits::experiment::Scale::Desk => "desk",
        kcircuits::experiment::Scale::PaperShape => "paper-shape",
    };
    Path::new(&cli.out_root).join(format!("{scale}-{}", cfg.hash()))
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = load_config(cli)?;
    if let Command::Config = cli.command {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let dir = run_dir_path(cli, &cfg);
    let run = RunDir::open(&dir, cfg, cli.stage_override)?;
    log::info!("run directory {} (config {})", dir.display(), run.hash());
    match cli.command.stage() {
        Some(stage) => run_stage(&run, stage, cli.jobs),
        None => run_all(&run, cli.jobs),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
