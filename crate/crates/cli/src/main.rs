//! cdlab: configuration-driven experiments on quasi-homogeneous operator
//! models.  Every command reads a TOML config, writes CSV artifacts plus a
//! run manifest into the output directory, and exits with a documented code
//! (0 ok, 2 bad config, 3 structured model error, 4 failed suite checks).

mod commands;
mod config;
mod csvout;

use clap::{Parser, Subcommand};
use commands::{CommandContext, EXIT_CONFIG};
use config::ExperimentConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cdlab",
    about = "numerical laboratory for quasi-homogeneous weighted-shift models",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Path to the TOML experiment configuration.
    #[arg(long, global = true, default_value = "configs/default.toml")]
    config: PathBuf,

    /// Output directory for CSV artifacts and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override the per-atom truncation dimension.
    #[arg(long, global = true)]
    trunc: Option<usize>,

    /// Override the seed used by randomized sweeps.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the residual tolerance recorded in the manifest.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the configuration and model for validity, writing nothing.
    Validate,
    /// Tag every coefficient position with its boundedness verdict.
    Classify,
    /// Build the block operator and report block norms and the intertwining
    /// residual.
    Assemble,
    /// Evaluate Grammian, curvature and second fundamental forms on the grid.
    Geometry,
    /// Closed-form Sylvester solutions over the parameter box.
    Sylvester,
    /// Eliminate the off-diagonal blocks (valency >= 2).
    Reduce,
    /// Commutant elements for polynomial symbols of the configured degrees.
    Commutant,
    /// Norms of powers and the divergence classification.
    Powerbound,
    /// Run the full acceptance battery and write the pass/fail summary.
    Suite,
}

fn init_threads() {
    #[cfg(feature = "parallel")]
    if let Ok(v) = std::env::var("CDLAB_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        } else {
            eprintln!("warning: ignoring unparsable CDLAB_THREADS={v}");
        }
    }
}

fn run() -> anyhow::Result<i32> {
    let cli = Cli::parse();
    init_threads();

    let config = match ExperimentConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return Ok(EXIT_CONFIG);
        }
    };
    if matches!(cli.command, Command::Validate) {
        // model construction exercises the remaining invariants
        if let Err(e) = config.model_spec(cli.trunc) {
            eprintln!("config error: {e:#}");
            return Ok(EXIT_CONFIG);
        }
        println!("config valid: {}", cli.config.display());
        return Ok(0);
    }

    std::fs::create_dir_all(&cli.out)?;
    let ctx = CommandContext {
        seed: cli.seed.unwrap_or(config.seed),
        tol: cli.tol.or(config.tol),
        config,
        config_path: cli.config.clone(),
        out_dir: cli.out.clone(),
        trunc: cli.trunc,
    };
    match cli.command {
        Command::Validate => unreachable!(),
        Command::Classify => commands::cmd_classify(&ctx),
        Command::Assemble => commands::cmd_assemble(&ctx),
        Command::Geometry => commands::cmd_geometry(&ctx),
        Command::Sylvester => commands::cmd_sylvester(&ctx),
        Command::Reduce => commands::cmd_reduce(&ctx),
        Command::Commutant => commands::cmd_commutant(&ctx),
        Command::Powerbound => commands::cmd_powerbound(&ctx),
        Command::Suite => commands::cmd_suite(&ctx),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
