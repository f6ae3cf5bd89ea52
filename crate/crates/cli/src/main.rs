use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pradp_cli::commands;
use pradp_cli::config::ExperimentConfig;
use pradp_cli::csvio::fmt_f64;
use pradp_cli::CliResult;

/// Model-free LQ tracking of parametrized reference trajectories:
/// learn the controller from excitation data, compute the model-based
/// ground truth, and reproduce the tracking experiment.
#[derive(Parser)]
#[command(name = "pradp", version, about)]
struct Cli {
    /// Experiment configuration (key = value); defaults to the built-in
    /// mass-spring-damper experiment.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the excitation seed from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the extended-system Riccati equation and write the optimal
    /// tracking gain.
    Oracle,
    /// Collect excitation data, learn the tracking controller and report
    /// the gap to the oracle gain.
    Train,
    /// Evaluate the learned controller against the exo-system baseline
    /// on the deviation reference.
    Compare,
    /// Roll a gain over the evaluation reference.
    Rollout {
        /// Gain CSV (as written by `train` or `oracle`); the oracle gain
        /// is computed when omitted.
        #[arg(long)]
        gain: Option<PathBuf>,
    },
    /// Discretize the configured plant and write its matrices.
    Discretize,
}

fn load_config(cli: &Cli) -> CliResult<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> CliResult<()> {
    let cfg = load_config(cli)?;
    let out = &cli.out;
    match &cli.command {
        Command::Oracle => {
            let result = commands::cmd_oracle(&cfg, out)?;
            println!("gain:");
            for i in 0..result.gain.ncols() {
                print!("{}{}", if i == 0 { "  " } else { " " }, fmt_f64(result.gain[(0, i)]));
            }
            println!();
            println!("dare residual: {}", fmt_f64(result.solution.residual));
            println!(
                "closed-loop spectral radius: {}",
                fmt_f64(result.closed_loop_moduli.iter().copied().fold(0.0, f64::max))
            );
            println!("wrote {}", out.join("oracle.csv").display());
        }
        Command::Train => {
            let result = commands::cmd_train(&cfg, out)?;
            println!("samples: {}", result.dataset_len);
            println!("iterations: {}", result.result.iterations);
            println!("gain gap to oracle: {}", fmt_f64(result.gain_gap));
            println!("wrote {}", out.join("gain.csv").display());
        }
        Command::Compare => {
            let result = commands::cmd_compare(&cfg, out)?;
            println!("gain gap to oracle: {}", fmt_f64(result.pradp_gain_gap));
            println!(
                "off-model max cost: learned {} vs baseline {} (ratio {})",
                fmt_f64(result.max_cost_pradp_offmodel),
                fmt_f64(result.max_cost_baseline_offmodel),
                fmt_f64(result.cost_ratio_offmodel)
            );
            println!(
                "on-model discounted cost: learned {} vs baseline {} (gap {})",
                fmt_f64(result.onmodel_discounted_pradp),
                fmt_f64(result.onmodel_discounted_baseline),
                fmt_f64(result.onmodel_relative_gap)
            );
            println!("wrote {}", out.join("compare_summary.txt").display());
        }
        Command::Rollout { gain } => {
            let result = commands::cmd_rollout(&cfg, out, gain.as_ref())?;
            println!("steps: {}", result.trajectory.len());
            println!("max cost: {}", fmt_f64(result.max_cost));
            println!("discounted cost: {}", fmt_f64(result.discounted_cost));
            println!("rms tracking error: {}", fmt_f64(result.rms_tracking_error));
            println!("wrote {}", out.join("rollout.csv").display());
        }
        Command::Discretize => {
            let result = commands::cmd_discretize(&cfg, out)?;
            println!("A = {}", result.plant.a);
            println!("B = {}", result.plant.b);
            println!("wrote {}", out.join("plant.csv").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
