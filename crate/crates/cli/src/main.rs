use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use ehrelay::sim::{classify_stats, empirical_rates, run, run_with_trace};
use ehrelay_cli::acceptance::run_acceptance;
use ehrelay_cli::config::{parse_config, ExperimentConfig};
use ehrelay_cli::svg::{emit_region_svg, write_boundary_csv, DEFAULT_RESOLUTION};
use ehrelay_cli::sweep::{run_sweep, write_sweep_csv};

#[derive(Parser)]
#[command(
    name = "ehrelay",
    version,
    about = "Energy-harvesting relay network simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace the analytic region boundaries to CSV and SVG.
    Region {
        #[arg(long)]
        config: PathBuf,
        /// Boundary CSV; the plot goes next to it with an .svg extension
        /// unless the config sets svg_out.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: usize,
    },
    /// Simulate the single rate point from the config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Per-slot trace CSV, sampled every `stride` slots.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify every point of the configured grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    Accept {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut config = parse_config(&text).with_context(|| format!("in {}", path.display()))?;
    if let Some(seed) = seed {
        config.base_seed = seed;
    }
    Ok(config)
}

fn main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Region {
            config,
            out,
            resolution,
        } => {
            let cfg = load(&config, None)?;
            match &out {
                Some(path) => write_boundary_csv(
                    &cfg.params,
                    resolution,
                    BufWriter::new(File::create(path)?),
                )?,
                None => write_boundary_csv(&cfg.params, resolution, io::stdout().lock())?,
            }
            let svg = cfg
                .svg_out
                .clone()
                .or_else(|| out.as_ref().map(|p| p.with_extension("svg")));
            if let Some(svg) = svg {
                emit_region_svg(&cfg.params, resolution, None, &svg)?;
                eprintln!("wrote {}", svg.display());
            }
        }
        Command::Simulate { config, seed, out } => {
            let cfg = load(&config, seed)?;
            let (n, stride) = (cfg.sim.n_slots, cfg.sim.stride);
            let stats = match &out {
                Some(path) => run_with_trace(
                    &cfg.params,
                    cfg.mode,
                    cfg.base_seed,
                    n,
                    stride,
                    BufWriter::new(File::create(path)?),
                )?,
                None => run(&cfg.params, cfg.mode, cfg.base_seed, n, stride),
            };
            cfg.sim.validate()?;
            let v = classify_stats(&stats, &cfg.sim);
            let r = empirical_rates(&stats);
            let p = cfg.point();
            println!(
                "point ({}, {}) mode {} seed {}",
                p.lambda_s, p.lambda_r, cfg.mode, cfg.base_seed
            );
            println!(
                "verdict {} drift_slope {:.6} mean_q_s {:.3} mean_q_r {:.3}",
                v.verdict.name(),
                v.drift_slope,
                v.mean_q_s,
                v.mean_q_r
            );
            println!(
                "mu_s {:.6} mu_r {:.6} battery_s {:.6} battery_r {:.6}",
                r.mu_s, r.mu_r, r.s_battery_fraction, r.r_battery_fraction
            );
            match stats.conservation() {
                Ok(()) if stats.conservation_holds() => println!("conservation ok"),
                Ok(()) => println!("conservation violated at a checkpoint"),
                Err(e) => println!("conservation violated: {e}"),
            }
        }
        Command::Sweep {
            config,
            seed,
            jobs,
            out,
        } => {
            let mut cfg = load(&config, seed)?;
            if out.is_some() {
                cfg.csv_out = out;
            }
            let to_stdout = cfg.csv_out.is_none();
            let rows = run_sweep(&cfg, jobs)?;
            if to_stdout {
                write_sweep_csv(&rows, io::stdout().lock())?;
            }
        }
        Command::Accept {
            config,
            seed,
            jobs,
            out,
        } => {
            let cfg = load(&config, seed)?;
            let mut buf = Vec::new();
            let report = run_acceptance(&cfg, jobs, &mut buf)?;
            io::stdout().write_all(&buf)?;
            if let Some(path) = out {
                fs::write(path, &buf)?;
            }
            if !report.all_passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
