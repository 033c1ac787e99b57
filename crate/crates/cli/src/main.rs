use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use plumecast::config::RunConfig;
use plumecast::data::{Scenario, Target};
use plumecast::pipeline::{self, Layout};
use plumecast::Error;

#[derive(Parser)]
#[command(name = "plumecast", version, about = "CO2 plume simulator and neural-operator surrogate workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (key=value text).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides paths.out.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the training initialization and shuffle seeds.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate every configured case and write snapshot archives.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Number of cases simulated concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Build the scenario dataset if needed and train one surrogate.
    Train {
        #[command(flatten)]
        common: Common,
        /// Scenario id, 1 to 5.
        #[arg(long)]
        scenario: u32,
        /// Predicted field.
        #[arg(long)]
        target: String,
    },
    /// Score the trained surrogates and write the report set.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Restrict evaluation to one scenario.
        #[arg(long)]
        scenario: Option<u32>,
        /// Restrict evaluation to one target.
        #[arg(long)]
        target: Option<String>,
    },
}

fn load(common: &Common) -> Result<(RunConfig, Layout), Error> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.train.init_seed = seed;
        cfg.train.shuffle_seed = seed.wrapping_add(1);
    }
    let layout = Layout::new(cfg.out_dir.clone());
    Ok((cfg, layout))
}

fn log(line: &str) {
    eprintln!("{line}");
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Generate { common, jobs } => {
            let (cfg, layout) = load(&common)?;
            let r = pipeline::generate(&cfg, &layout, jobs, &log)?;
            println!(
                "generated {} cases, skipped {} up-to-date, max mass-balance error {:.2e}",
                r.simulated.len(),
                r.skipped.len(),
                r.max_mass_balance_error
            );
        }
        Command::Train {
            common,
            scenario,
            target,
        } => {
            let scenario = Scenario::from_id(scenario)?;
            let target: Target = target.parse()?;
            let (cfg, layout) = load(&common)?;
            let r = pipeline::train(&cfg, &layout, scenario, target, &log)?;
            println!(
                "{scenario} {target}: best epoch {}, validation RMSE {:.6} ({}), checkpoint {}",
                r.best_epoch,
                r.best_val_phys,
                r.units,
                r.checkpoint.display()
            );
        }
        Command::Evaluate {
            common,
            scenario,
            target,
        } => {
            let scenario = scenario.map(Scenario::from_id).transpose()?;
            let target = target.map(|t| t.parse::<Target>()).transpose()?;
            let (cfg, layout) = load(&common)?;
            let r = pipeline::evaluate(&cfg, &layout, scenario, target, &log)?;
            for line in r.summary_lines() {
                println!("{line}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
