use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pisco_cli::commands::{self, TrainOptions};
use pisco_cli::{CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "pisco", version, about = "Neural implicit k-space reconstruction for dynamic MRI")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a radial acquisition of the dynamic phantom.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a network to simulated or converted k-space.
    Train {
        /// Directory written by `simulate`.
        #[arg(long)]
        data: PathBuf,
        /// Defaults to the configuration stored with the data.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "on")]
        pisco: Switch,
        #[arg(long)]
        out: PathBuf,
        /// Add per-step wall time to the training log.
        #[arg(long)]
        log_time: bool,
        #[arg(long, short)]
        quiet: bool,
    },
    /// Render coil-combined frames from a trained network.
    Reconstruct {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        frames: usize,
        /// Also write one PGM per frame into this directory.
        #[arg(long)]
        pgm: Option<PathBuf>,
    },
    /// Density-compensated gridding baseline, binned by navigator value.
    Inufft {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of motion states.
        #[arg(long, default_value_t = 4)]
        ms: usize,
        #[arg(long, default_value_t = 50)]
        frames: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// PSNR, SSIM and NRMSE of a frame stack against a reference.
    Evaluate {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cartesian GRAPPA on a multi-coil k-space array.
    Grappa {
        #[arg(long)]
        kspace: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        acs_rows: usize,
        /// Acceleration; inferred from the mask when omitted.
        #[arg(long)]
        r: Option<usize>,
        #[arg(long, default_value_t = 1e-4)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(explicit: Option<PathBuf>, data: Option<&PathBuf>) -> Result<ExperimentConfig, CliError> {
    match (explicit, data) {
        (Some(p), _) => ExperimentConfig::load(&p),
        (None, Some(d)) => ExperimentConfig::load(&commands::default_config_path(d)),
        (None, None) => Ok(ExperimentConfig::default()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, out } => commands::simulate(&load_config(config, None)?, &out),
        Command::Train {
            data,
            config,
            pisco,
            out,
            log_time,
            quiet,
        } => {
            let cfg = load_config(config, Some(&data))?;
            let opts = TrainOptions {
                pisco: matches!(pisco, Switch::On),
                log_time,
                quiet,
            };
            commands::train(&data, &cfg, &out, &opts)
        }
        Command::Reconstruct { model, out, frames, pgm } => commands::reconstruct(&model, frames, &out, pgm.as_deref()),
        Command::Inufft {
            data,
            config,
            ms,
            frames,
            out,
        } => {
            let cfg = load_config(config, Some(&data))?;
            let empty = commands::inufft(&data, &cfg, ms, frames, &out)?;
            if !empty.is_empty() {
                eprintln!("warning: empty motion-state bins {empty:?}");
            }
            Ok(())
        }
        Command::Evaluate { reference, test, out } => {
            let report = commands::evaluate(&reference, &test, &out)?;
            println!("psnr {:.3} dB, ssim {:.4}", report.mean_psnr(), report.mean_ssim());
            Ok(())
        }
        Command::Grappa {
            kspace,
            mask,
            acs_rows,
            r,
            alpha,
            out,
        } => {
            let n = commands::grappa(&kspace, &mask, acs_rows, r, alpha, &out)?;
            println!("filled {n} locations");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
