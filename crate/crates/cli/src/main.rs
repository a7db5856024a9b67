use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use macov_cli::commands::{self, SweepAxis, DEFAULT_UAV_POSITION};
use macov_cli::config::{load_config, ScenarioConfig};
use macov_core::{Scheme, Vec3};

#[derive(Parser)]
#[command(
    name = "macov",
    version,
    about = "Movable-antenna upward coverage simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario config (TOML); `-` reads stdin. Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(
        long,
        global = true,
        env = "MACOV_OUT_DIR",
        default_value = "macov-out"
    )]
    out: PathBuf,
    /// Scheme(s) to run; repeatable. Overrides the config's list.
    #[arg(long, global = true, value_parser = parse_scheme)]
    scheme: Vec<Scheme>,
}

#[derive(Subcommand)]
enum Command {
    /// SNR and optimizer trace for one UAV position.
    Snr {
        /// UAV position x,y,z in meters.
        #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = DEFAULT_UAV_POSITION)]
        position: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Coverage map of the configured region.
    Coverage {
        #[command(flatten)]
        common: Common,
    },
    /// Coverage of several schemes on shared seeds, with deltas.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Coverage over a list of values of one parameter.
    Sweep {
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated values; d_mov in wavelengths, tilt in degrees.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Prints the calibrated noise power for the config.
    CalibrateNoise {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    #[value(name = "M", alias = "m")]
    M,
    #[value(name = "d_mov", alias = "d-mov")]
    DMov,
    #[value(name = "L_NLoS", alias = "l-nlos", alias = "l_nlos")]
    LNlos,
    #[value(name = "tilt")]
    Tilt,
}

impl From<Axis> for SweepAxis {
    fn from(a: Axis) -> Self {
        match a {
            Axis::M => SweepAxis::Elements,
            Axis::DMov => SweepAxis::MovementRange,
            Axis::LNlos => SweepAxis::NlosPaths,
            Axis::Tilt => SweepAxis::Tilt,
        }
    }
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: macov_core::Error| e.to_string())
}

impl Common {
    fn config(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => ScenarioConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if !self.scheme.is_empty() {
            cfg.schemes = self.scheme.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.threads {
            b = b.num_threads(n);
        }
        b.build().context("starting worker threads")
    }
}

fn print_written(out: &Path) {
    println!("results written to {}", out.display());
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Snr { position, common } => {
            let cfg = common.config()?;
            let pos = Vec3::new(position[0], position[1], position[2]);
            let schemes = cfg.schemes.clone();
            common.pool()?.install(|| -> Result<()> {
                for scheme in schemes {
                    println!("{}", commands::cmd_snr(&cfg, pos, scheme, &common.out)?);
                }
                Ok(())
            })?;
            print_written(&common.out);
        }
        Command::Coverage { common } => {
            let cfg = common.config()?;
            let (_, summary) = common
                .pool()?
                .install(|| commands::cmd_coverage(&cfg, &common.out))?;
            for s in &summary.schemes {
                println!(
                    "{:<9} Pro_vol {:.4} ({}/{})",
                    s.scheme.name(),
                    s.pro_vol,
                    s.covered,
                    summary.voxels
                );
            }
            print_written(&common.out);
        }
        Command::Compare { common } => {
            let cfg = common.config()?;
            let (_, report) = common
                .pool()?
                .install(|| commands::cmd_compare(&cfg, &common.out))?;
            print!("{report}");
            print_written(&common.out);
        }
        Command::Sweep {
            axis,
            values,
            common,
        } => {
            let cfg = common.config()?;
            let axis = SweepAxis::from(axis);
            let rows = common
                .pool()?
                .install(|| commands::cmd_sweep(&cfg, axis, &values, &common.out))?;
            for r in &rows {
                println!(
                    "{} = {:<6} {:<9} Pro_vol {:.4}",
                    r.axis,
                    r.value,
                    r.scheme.name(),
                    r.pro_vol
                );
            }
            print_written(&common.out);
        }
        Command::CalibrateNoise { common } => {
            let cfg = common.config()?;
            let w = commands::cmd_calibrate_noise(&cfg)?;
            println!("{w:e}");
            log::info!("noise power {:.4} dBm", 10.0 * w.log10() + 30.0);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
