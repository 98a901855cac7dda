use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use log::info;
use lvse::cells::CellFilter;
use lvse::config::ExperimentConfig;
use lvse::pipeline::{self, Workspace};
use lvse::Error;

#[derive(Parser)]
#[command(name = "lvse", version, about = "Probabilistic LV state estimation experiments")]
struct Cli {
    /// JSON experiment config; defaults apply to omitted fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the data and model seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cell selection for run-matrix, e.g. `S3:*:BNN,S1:FS2`.
    #[arg(long, global = true)]
    cells: Option<CellFilter>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate scenarios, solve power flows and build feature matrices.
    Generate,
    /// Train and score the scenario x feature-set x model matrix.
    RunMatrix,
    /// Winter-trained BNN and its uncertainty over the rest of the year.
    UncertaintyStudy,
    /// Plot-data tables from the matrix and study outputs.
    Report,
    /// Print the effective config as JSON.
    Config,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    let ws = Workspace::new(&cli.out);
    info!("config {}", cfg.hash());
    match cli.command {
        Command::Generate => {
            let s = pipeline::generate(&cfg, &ws).context("generate failed")?;
            println!(
                "generated {} scenarios x {} steps in {} (|V| {:.4}..{:.4} pu)",
                s.scenarios.len(),
                s.steps,
                ws.root().display(),
                s.v_min,
                s.v_max
            );
        }
        Command::RunMatrix => {
            let filter = cli.cells.unwrap_or_default();
            let ledger = pipeline::run_matrix(&cfg, &ws, &filter).context("run-matrix failed")?;
            let done = ledger.completed().count();
            println!("{done} cells completed, {} failed ({:.0} s)", ledger.failed(), ledger.wall_time_s());
            if ledger.failed() > 0 {
                bail!(Error::CellsFailed { failed: ledger.failed(), total: ledger.entries.len() });
            }
        }
        Command::UncertaintyStudy => {
            let s = pipeline::uncertainty_study(&cfg, &ws).context("uncertainty study failed")?;
            println!(
                "bus {}: final training week epistemic {:.3e} / aleatoric {:.3e}; summer / validation epistemic {}",
                s.bus,
                s.final_train_week_epistemic,
                s.final_train_week_aleatoric,
                s.summer_ratio.map_or("n/a".into(), |r| format!("{r:.2}"))
            );
        }
        Command::Report => {
            let s = pipeline::report(&cfg, &ws).context("report failed")?;
            for f in &s.files {
                println!("{}", f.display());
            }
        }
        Command::Config => println!("{}", serde_json::to_string_pretty(&cfg)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
