use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use adl_core::harness::{self, HarnessConfig, RawConfig};
use adl_core::Result;

/// Active deep learning experiments on spatio-temporal load data.
#[derive(Parser)]
#[command(name = "adl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// key = value configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output file (generate) or directory (run, grid, replay)
    #[arg(long)]
    out: PathBuf,
    /// Overrides the configured seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a dataset file
    Generate(Common),
    /// Run one experiment cell
    Run(Common),
    /// Run the full experiment grid
    Grid(Common),
    /// Retrain a finished run in original and shuffled query order
    Replay {
        #[command(flatten)]
        common: Common,
        /// Directory written by `run`; defaults to the `artifacts` key
        #[arg(long)]
        artifacts: Option<PathBuf>,
    },
}

fn load(common: &Common) -> Result<HarnessConfig> {
    let mut raw = RawConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        raw.set("seed", seed.to_string());
    }
    HarnessConfig::from_raw(raw)
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Generate(c) => {
            let s = harness::cmd_generate(&load(&c)?, &c.out)?;
            println!(
                "generated {} points ({} buildings x {} timestamps), d_x={} d_y={} -> {}",
                s.points,
                s.buildings,
                s.timestamps,
                s.d_x,
                s.d_y,
                c.out.display()
            );
        }
        Command::Run(c) => {
            let r = harness::cmd_run(&load(&c)?, &c.out)?;
            let rep = &r.report;
            println!(
                "{} delta={} data={:.1}% sensors={:.1}% test_loss={:.6} rf_loss={:.6} iterations={}",
                rep.prediction_type.name(),
                rep.delta,
                rep.data_pct,
                rep.sensors_pct,
                rep.test_loss,
                r.rf_loss.unwrap_or(f64::NAN),
                rep.iterations.len()
            );
        }
        Command::Grid(c) => {
            let rows = harness::cmd_grid(&load(&c)?, &c.out)?;
            let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
            println!("{} rows ({failed} failed) -> {}", rows.len(), c.out.join(harness::GRID_FILE).display());
        }
        Command::Replay { common, artifacts } => {
            let cfg = load(&common)?;
            let dir = artifacts
                .or_else(|| cfg.artifacts_path())
                .ok_or_else(|| adl_core::Error::Config {
                    key: "artifacts".into(),
                    reason: "missing required key".into(),
                })?;
            let cmp = harness::cmd_replay(&cfg, Path::new(&dir), &common.out)?;
            println!(
                "original area={:.6} final={:.6}; shuffled area={:.6} final={:.6}",
                cmp.original.area(),
                cmp.original.final_loss().unwrap_or(f64::NAN),
                cmp.shuffled.area(),
                cmp.shuffled.final_loss().unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace(['\n', '\r'], " ");
            eprintln!("error kind={} message={:?}", e.kind(), message);
            ExitCode::FAILURE
        }
    }
}
