use std::path::PathBuf;
use std::process::ExitCode;

use annoprio::Strategy;
use annoprio_cli::{
    cmd_fit, cmd_rank, cmd_report, cmd_scatter, cmd_simulate, dump_config, fit_summary, CliError,
    Config,
};
use clap::{Parser, Subcommand};

/// Rank unlabeled fine-tuning samples for annotation.
#[derive(Debug, Parser)]
#[command(name = "annoprio", version)]
struct Args {
    /// `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Write the effective config here (after flags are applied).
    #[arg(long, global = true)]
    dump_config: Option<PathBuf>,
    /// Core-training embeddings (.csv or binary).
    #[arg(long, global = true)]
    core: Option<PathBuf>,
    /// Fine-tuning embeddings (.csv or binary).
    #[arg(long, global = true)]
    finetune: Option<PathBuf>,
    /// bps or mps.
    #[arg(long, global = true)]
    strategy: Option<String>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit PCA, IoU predictor and clusters; write the model files.
    Fit,
    /// Score the fine-tuning pool and write the ranked queue.
    Rank,
    /// Run the synthetic budget sweep.
    Simulate,
    /// Write a 2-D projection with IoU per sample.
    Scatter,
    /// Rebuild the report from an existing sweep.csv.
    Report,
}

fn effective_config(args: &Args) -> Result<Config, CliError> {
    let mut cfg = match &args.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = args.seed {
        cfg.pipeline.seed = seed;
    }
    if let Some(dir) = &args.out_dir {
        cfg.out_dir = dir.clone();
    }
    if let Some(p) = &args.core {
        cfg.core = Some(p.clone());
    }
    if let Some(p) = &args.finetune {
        cfg.finetune = Some(p.clone());
    }
    if let Some(s) = &args.strategy {
        cfg.strategy = s
            .parse::<Strategy>()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(cfg)
}

fn run(args: Args) -> Result<(), CliError> {
    let cfg = effective_config(&args)?;
    if let Some(path) = &args.dump_config {
        dump_config(&cfg, path)?;
    }
    match args.command {
        None if args.dump_config.is_some() => {}
        None => return Err(CliError::Usage("no subcommand given (see --help)".into())),
        Some(Command::Fit) => print!("{}", fit_summary(&cmd_fit(&cfg)?)),
        Some(Command::Rank) => println!("wrote {}", cmd_rank(&cfg)?.display()),
        Some(Command::Simulate) => print!("{}", cmd_simulate(&cfg)?),
        Some(Command::Report) => print!("{}", cmd_report(&cfg)?),
        Some(Command::Scatter) => println!("wrote {}", cmd_scatter(&cfg)?.display()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("annoprio: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
