//! `fris` — experiment runner for beamforming / radiation-pattern co-design
//! on a pattern-reconfigurable reflecting surface.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fris_core::config::ScenarioConfig;
use fris_core::experiments::{
    cmd_export_pattern, cmd_fit_pattern, cmd_power_analysis, cmd_solve, cmd_sweep, SweepAxis,
};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "fris",
    about = "Beamforming and per-element radiation-pattern co-design experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (.toml or .json); omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for CSV files and the run manifest.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Replace the configured seed list with 0..n.
    #[arg(long)]
    seeds: Option<usize>,
    /// Worker threads for Monte-Carlo batches (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    M,
    Nt,
    I,
}

impl From<AxisArg> for SweepAxis {
    fn from(axis: AxisArg) -> Self {
        match axis {
            AxisArg::M => SweepAxis::Elements,
            AxisArg::Nt => SweepAxis::Antennas,
            AxisArg::I => SweepAxis::TruncLen,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit the 38.901 element pattern at each configured truncation length.
    FitPattern {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Compare passive beamforming, position search and the pattern bound on
    /// random point-to-point links.
    PowerAnalysis {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run all four schemes over a parameter grid.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Swept parameter: element count, antenna count or truncation length.
        #[arg(long, value_enum)]
        axis: AxisArg,
    },
    /// Solve the configured scenario for every seed and scheme.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Solve one seed and export the optimized pattern of one element.
    ExportPattern {
        #[command(flatten)]
        common: CommonArgs,
        /// Surface element to export (0-based, z-fastest ordering).
        #[arg(long, default_value_t = 0)]
        element: usize,
        /// Seed of the scenario draw.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Export grid resolution.
        #[arg(long, default_value_t = 64)]
        grid_theta: usize,
        #[arg(long, default_value_t = 128)]
        grid_phi: usize,
    },
}

fn load_config(common: &CommonArgs) -> Result<ScenarioConfig> {
    let mut config = match &common.config {
        Some(path) => ScenarioConfig::load(path)
            .with_context(|| format!("loading scenario from {}", path.display()))?,
        None => ScenarioConfig::default(),
    };
    if let Some(n) = common.seeds {
        if n == 0 {
            bail!("--seeds must be at least 1");
        }
        config.seeds = (0..n as u64).collect();
    }
    Ok(config)
}

#[cfg(feature = "parallel")]
fn init_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        // Ignore the error if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn init_threads(threads: Option<usize>) {
    if threads.is_some_and(|n| n > 1) {
        eprintln!("note: built without the parallel feature; --threads is ignored");
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let outputs = match cli.command {
        Command::FitPattern { common } => {
            init_threads(common.threads);
            let config = load_config(&common)?;
            cmd_fit_pattern(&config, &common.out)?
        }
        Command::PowerAnalysis { common } => {
            init_threads(common.threads);
            let config = load_config(&common)?;
            cmd_power_analysis(&config, &common.out)?
        }
        Command::Sweep { common, axis } => {
            init_threads(common.threads);
            let config = load_config(&common)?;
            cmd_sweep(&config, axis.into(), &common.out)?
        }
        Command::Solve { common } => {
            init_threads(common.threads);
            let config = load_config(&common)?;
            cmd_solve(&config, &common.out)?
        }
        Command::ExportPattern {
            common,
            element,
            seed,
            grid_theta,
            grid_phi,
        } => {
            init_threads(common.threads);
            let config = load_config(&common)?;
            cmd_export_pattern(&config, seed, element, grid_theta, grid_phi, &common.out)?
        }
    };
    for path in outputs {
        println!("wrote {}", path.display());
    }
    Ok(())
}
