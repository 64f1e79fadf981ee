use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hom_metrology::commands;
use hom_metrology::config::{OutputFormat, RunConfig};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Hong-Ou-Mandel delay metrology: spectral states, Fisher information scans,
/// visibility scaling and Monte Carlo estimation studies.
#[derive(Parser)]
#[command(name = "hom", version)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed; overrides `simulation.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Table format; overrides `output.format`.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Tabulate amplitudes and spectral moments.
    State,
    /// Coincidence probability and Fisher information against delay.
    Scan,
    /// Maximal Fisher information over its quantum bound against visibility.
    Ratio,
    /// Simulate a coincidence-count record.
    Simulate,
    /// Fit a HOM dip to simulated or recorded counts.
    Fit,
    /// Monte Carlo study of the delay estimator against the Cramér-Rao bound.
    Estimate,
}

fn load(cli: &Cli) -> hom_metrology::Result<RunConfig> {
    let path = cli.config.as_ref().ok_or_else(|| {
        hom_metrology::Error::InvalidParameter("--config <path> is required".into())
    })?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.simulation.seed = seed;
    }
    if let Some(f) = cli.format {
        cfg.output.format = f;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("hom: configuration error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let run = match cli.command {
        Command::State => commands::cmd_state,
        Command::Scan => commands::cmd_scan,
        Command::Ratio => commands::cmd_ratio,
        Command::Simulate => commands::cmd_simulate,
        Command::Fit => commands::cmd_fit,
        Command::Estimate => commands::cmd_estimate,
    };
    match run(&cfg) {
        Ok(files) => {
            for f in files {
                log::info!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e @ hom_metrology::Error::InvalidParameter(_))
        | Err(e @ hom_metrology::Error::Parse(_)) => {
            eprintln!("hom: configuration error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("hom: {e}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
