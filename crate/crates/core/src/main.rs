use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use atom_screen::experiments::{run_deconv, run_doa, write_deconv_outputs, write_doa_output, DeconvConfig, DoaConfig};
use atom_screen::{Exec, Geometry};

#[derive(Parser)]
#[command(name = "atom-screen", version, about = "Screened atom selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inner-product counts of exhaustive vs screened OMP on a DOA dictionary.
    Doa(DoaArgs),
    /// Intervals removed by tuned regions on a Gaussian deconvolution problem.
    Deconv(DeconvArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum RegionArg {
    Sphere,
    Dome,
}

impl From<RegionArg> for Geometry {
    fn from(r: RegionArg) -> Self {
        match r {
            RegionArg::Sphere => Geometry::Sphere,
            RegionArg::Dome => Geometry::Dome,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct Common {
    /// Signal dimension.
    #[arg(long)]
    m: Option<usize>,
    /// Number of regions.
    #[arg(long = "L")]
    regions: Option<usize>,
    /// Number of planted atoms (and OMP iterations).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Region geometry.
    #[arg(long = "regions", value_enum)]
    geometry: Option<RegionArg>,
    #[arg(long, default_value = "out.csv")]
    out: PathBuf,
    /// Reuse probe correlations for region centers.
    #[arg(long, value_enum, default_value = "on")]
    share_probe: Switch,
    /// Std of additive white Gaussian noise on the observation.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Run every loop on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct DoaArgs {
    /// Number of atoms.
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct DeconvArgs {
    /// Gaussian atom variance.
    #[arg(long)]
    sigma2: Option<f64>,
    #[command(flatten)]
    common: Common,
}

fn exec(c: &Common) -> Exec {
    if c.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

fn run(cli: Cli) -> atom_screen::Result<()> {
    match cli.command {
        Command::Doa(args) => {
            let c = &args.common;
            let d = DoaConfig::default();
            let cfg = DoaConfig {
                n: args.n.unwrap_or(d.n),
                m: c.m.unwrap_or(d.m),
                regions: c.regions.unwrap_or(d.regions),
                k: c.k.unwrap_or(d.k),
                geometry: c.geometry.map(Geometry::from).unwrap_or(d.geometry),
                seed: c.seed,
                share_probe: matches!(c.share_probe, Switch::On),
                noise: c.noise,
                exec: exec(c),
                ..d
            };
            let outcome = run_doa(&cfg)?;
            write_doa_output(&outcome, &c.out)?;
            let last = outcome.rows.last().expect("k >= 1");
            eprintln!(
                "doa: exhaustive {} vs screened {} inner products ({:.1}x), written to {}",
                last.exhaustive_cum,
                last.screened_cum,
                1.0 / outcome.cost_ratio(),
                c.out.display()
            );
        }
        Command::Deconv(args) => {
            let c = &args.common;
            let d = DeconvConfig::default();
            let cfg = DeconvConfig {
                m: c.m.unwrap_or(d.m),
                regions: c.regions.unwrap_or(d.regions),
                k: c.k.unwrap_or(d.k),
                sigma2: args.sigma2.unwrap_or(d.sigma2),
                geometry: c.geometry.map(Geometry::from).unwrap_or(d.geometry),
                seed: c.seed,
                share_probe: matches!(c.share_probe, Switch::On),
                noise: c.noise,
                exec: exec(c),
                ..d
            };
            let outcome = run_deconv(&cfg)?;
            let paths = write_deconv_outputs(&outcome, &c.out)?;
            eprintln!(
                "deconv: mu* = {:.4}, surviving measure {:.2}, written to {}",
                outcome.mu_exhaustive,
                outcome.survivor_measure(),
                paths
                    .iter()
                    .map(|p| p.display().to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
