use std::path::{Path, PathBuf};
use std::process::ExitCode;

use channel_charting_cli::commands::{cmd_chart, cmd_compare, cmd_eval, cmd_generate, cmd_init, cmd_train, Arm};
use channel_charting_cli::config::PRESETS;
use channel_charting_cli::formats::write_text;
use channel_charting_cli::{CliError, ExperimentConfig, Result};
use clap::{Parser, Subcommand};

/// Channel charting pipeline: synthesize channels, initialize and train
/// encoders, score and plot charts.
#[derive(Parser, Debug)]
#[command(name = "cchart", version)]
struct Cli {
    /// Replace every stage seed with s, s+1, ..., s+4.
    #[arg(long, global = true)]
    seed_override: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a named configuration preset as JSON.
    Preset {
        #[arg(value_parser = PRESETS)]
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthesize the scenario's channels into a dataset file.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Initialize a model; the arm defaults to the config's `encoder.init`.
    Init {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum)]
        arm: Option<Arm>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model with triplets mined from the training split.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch loss CSV.
        #[arg(long)]
        report: PathBuf,
    },
    /// Score a model on the held-out split.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Chart every sample to CSV and SVG.
    Chart {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// CSV path; the SVG defaults to the same path with `.svg`.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run the smart, random and MLP arms end to end into a directory.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig::load(path)?.with_seed_override(seed))
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed_override;
    match cli.command {
        Command::Preset { name, out } => {
            let cfg = ExperimentConfig::preset(&name)
                .ok_or_else(|| CliError::Config(format!("unknown preset {name}")))?
                .with_seed_override(seed);
            write_text(&out, &cfg.to_json())?;
        }
        Command::Generate { config, out } => {
            let cs = cmd_generate(&load(&config, seed)?, &out)?;
            println!("{} samples, {} entries each -> {}", cs.len(), cs.dim(), out.display());
        }
        Command::Init { config, dataset, arm, out } => {
            let model = cmd_init(&load(&config, seed)?, &dataset, &out, arm)?;
            println!("{} parameters -> {}", model.param_count(), out.display());
        }
        Command::Train { config, dataset, model, out, report } => {
            let s = cmd_train(&load(&config, seed)?, &dataset, &model, &out, &report)?;
            println!(
                "{} triplets, {} steps, loss {:?} -> {:?} -> {}",
                s.triplet_count,
                s.steps,
                s.epoch_losses.first(),
                s.epoch_losses.last(),
                out.display()
            );
        }
        Command::Eval { config, dataset, model, out } => {
            let report = cmd_eval(&load(&config, seed)?, &dataset, &model, &out)?;
            for r in &report.rows {
                println!("K={:<4} TW={:.4} CT={:.4}", r.k, r.trustworthiness, r.continuity);
            }
        }
        Command::Chart { config, dataset, model, out, svg } => {
            let svg = svg.unwrap_or_else(|| out.with_extension("svg"));
            let points = cmd_chart(&load(&config, seed)?, &dataset, &model, &out, &svg)?;
            println!("{} points -> {}, {}", points.len(), out.display(), svg.display());
        }
        Command::Compare { config, out } => {
            let report = cmd_compare(&load(&config, seed)?, &out)?;
            for a in &report.arms {
                let (u, t) = (&a.untrained.rows[0], &a.trained.rows[0]);
                println!(
                    "{:<6} K={} untrained TW={:.4} CT={:.4} | trained TW={:.4} CT={:.4}",
                    a.arm.name(),
                    u.k,
                    u.trustworthiness,
                    u.continuity,
                    t.trustworthiness,
                    t.continuity
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.json_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
