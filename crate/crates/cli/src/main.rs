//! `qlab`: command-line driver for the conformal-metric laboratory.
//!
//! Exit codes: 0 success (warnings allowed), 2 usage or configuration error, 3 I/O error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{Format, Overrides, RunConfig};

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Config file (`key = value` lines with `[section]` headers).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Zoo entry name or path to an `r,u` profile CSV.
    #[arg(long, global = true)]
    metric: Option<String>,
    /// Dimension (even).
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Outer node radius
    #[arg(long, global = true)]
    rmax: Option<f64>,
    /// Monte Carlo seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Cone parameter for `cone` and `nonnormal`.
    #[arg(long, global = true)]
    alpha: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Catalog of reference metrics.
    Zoo {
        #[command(subcommand)]
        action: ZooAction,
    },
    /// Curvature table and identity residuals.
    Curvature,
    /// Normality residual and verdict.
    Normality,
    /// Deficit identity report and geometry series.
    Deficit,
    /// Areas, volumes and isoperimetric ratios.
    Isoperimetric,
    /// Boundary flux of the Laplacian of scalar curvature (n = 4).
    Flux,
    /// Exact spherical-mean coefficients.
    Pizzetti {
        #[arg(long)]
        k: usize,
    },
}

#[derive(Subcommand, Debug)]
enum ZooAction {
    List,
    Show { name: String },
}

#[derive(Parser, Debug)]
#[command(
    name = "qlab",
    version,
    about = "Curvature, normality and isoperimetric deficit of radial conformal metrics"
)]
struct Full {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Failure class, mapped to the exit code.
enum Failure {
    Usage(anyhow::Error),
    Io(anyhow::Error),
}

fn classify(e: anyhow::Error) -> Failure {
    let io = e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>().is_some()
            || matches!(c.downcast_ref::<qlab_core::Error>(), Some(qlab_core::Error::Io(_)))
    });
    if io {
        Failure::Io(e)
    } else {
        Failure::Usage(e)
    }
}

fn overrides(c: &Common) -> Overrides {
    Overrides {
        metric: c.metric.clone(),
        n: c.n,
        r_max: c.rmax,
        seed: c.seed,
        out: c.out.clone(),
        format: c.format,
        alpha: c.alpha,
    }
}

fn run(cli: Full) -> Result<(), Failure> {
    let cfg = || RunConfig::load(cli.common.config.as_deref(), &overrides(&cli.common));
    // configuration problems (including unreadable config files) are usage errors
    let cfg = || cfg().map_err(Failure::Usage);
    let written = match &cli.command {
        Command::Zoo { action } => {
            let text = match action {
                ZooAction::List => commands::zoo_list(),
                ZooAction::Show { name } => commands::zoo_show(name, &cfg()?),
            };
            print!("{}", text.map_err(Failure::Usage)?);
            return Ok(());
        }
        Command::Pizzetti { k } => {
            print!("{}", commands::pizzetti(*k).map_err(Failure::Usage)?);
            return Ok(());
        }
        Command::Curvature => commands::curvature(&cfg()?),
        Command::Normality => commands::normality(&cfg()?),
        Command::Deficit => commands::deficit(&cfg()?),
        Command::Isoperimetric => commands::isoperimetric(&cfg()?),
        Command::Flux => commands::flux(&cfg()?),
    }
    .map_err(classify)?;
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Full::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
