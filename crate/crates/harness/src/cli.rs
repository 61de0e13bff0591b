use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::StudyConfig;
use crate::error::{HarnessError, Result};
use crate::output::OutputDir;
use crate::presets::preset;
use crate::study::{run_bounds, BoundsStudy, run_field_check, run_gauge_check, run_sweep, Study};

#[derive(Debug, Parser)]
#[command(name = "dipole", version, about = "Dipole-approximation convergence studies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Study configuration (TOML, or a manifest.json from an earlier run)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output root
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Overrides the configured seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (defaults to all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full-coupling vs dipole error and certificate for every wavelength
    Sweep,
    /// Velocity/length gauge equivalence along the dipole trajectory
    GaugeCheck,
    /// Certificate vs measured error table
    Cook,
    /// Operator-bound diagnostics for the dipole generator
    Bounds,
    /// Envelope transversality, divergence and pulse-table diagnostics
    FieldCheck,
    /// Runs every study of a built-in preset
    Preset {
        /// cw-1d, pulse-1d or two-body-1d
        name: String,
        /// Print the preset as TOML instead of running it
        #[arg(long)]
        dump_config: bool,
    },
}

/// What a command did, for the summary line.
#[derive(Debug)]
pub struct Outcome {
    pub dir: Option<PathBuf>,
    pub partial: bool,
}

fn load(cli: &Cli) -> Result<StudyConfig> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| HarnessError::Config("this command needs --config <path>".into()))?;
    StudyConfig::load(path)
}

fn with_seed(mut cfg: StudyConfig, seed: Option<u64>) -> StudyConfig {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg
}

fn sweep_into(study: &Study, dir: &OutputDir) -> Result<bool> {
    let sweep = run_sweep(study)?;
    dir.write_sweep(&sweep, study)?;
    if let Some(p) = sweep.decay_exponent {
        eprintln!("decay exponent {p:.3}");
    }
    Ok(sweep.partial)
}

fn everything(study: &Study, dir: &OutputDir) -> Result<bool> {
    let partial = sweep_into(study, dir)?;
    dir.write_gauge(&run_gauge_check(study)?)?;
    dir.write_bounds(&run_bounds(study)?)?;
    dir.write_field_check(&run_field_check(study)?)?;
    Ok(partial)
}

fn run_study(cfg: StudyConfig, out: &Path, f: impl FnOnce(&Study, &OutputDir) -> Result<bool>) -> Result<Outcome> {
    let study = Study::prepare(cfg)?;
    let dir = OutputDir::create(out, &study)?;
    let partial = f(&study, &dir)?;
    dir.write_manifest(&study, partial)?;
    Ok(Outcome { dir: Some(dir.path().to_path_buf()), partial })
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    let body = || -> Result<Outcome> {
        match &cli.command {
            Command::Preset { name, dump_config: true } => {
                print!("{}", with_seed(preset(name)?, cli.seed).to_toml_string()?);
                Ok(Outcome { dir: None, partial: false })
            }
            Command::Preset { name, .. } => run_study(with_seed(preset(name)?, cli.seed), &cli.out, everything),
            Command::Sweep => run_study(with_seed(load(cli)?, cli.seed), &cli.out, sweep_into),
            Command::Cook => run_study(with_seed(load(cli)?, cli.seed), &cli.out, sweep_into),
            Command::GaugeCheck => run_study(with_seed(load(cli)?, cli.seed), &cli.out, |s, d| {
                let g = run_gauge_check(s)?;
                eprintln!("min fidelity {:.15}", g.min_fidelity);
                d.write_gauge(&g)?;
                Ok(false)
            }),
            Command::Bounds => run_study(with_seed(load(cli)?, cli.seed), &cli.out, |s, d| {
                let bounds = run_bounds(s)?;
                print_bounds_table(&bounds);
                d.write_bounds(&bounds)?;
                Ok(false)
            }),
            Command::FieldCheck => run_study(with_seed(load(cli)?, cli.seed), &cli.out, |s, d| {
                d.write_field_check(&run_field_check(s)?)?;
                Ok(false)
            }),
        }
    };
    match cli.threads {
        Some(0) => Err(HarnessError::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?
            .install(body),
        None => body(),
    }
}

fn print_bounds_table(bounds: &BoundsStudy) {
    for r in &bounds.reports {
        println!("s = {}", r.time);
        println!("  {:>12}  {:>14}  {:>6}", "alpha", "q(alpha)", "iters");
        for e in &r.contraction.estimates {
            println!("  {:>12.4e}  {:>14.6e}  {:>6}", e.alpha, e.q, e.iterations);
        }
        match r.contraction.alpha_star {
            Some(a) => println!("  smallest sampled alpha with q < 1: {a}"),
            None => println!("  no sampled alpha gives q < 1"),
        }
        println!("  {:>12}  {:>14}", "epsilon", "C_eps");
        for b in &r.infinitesimal {
            println!("  {:>12.4e}  {:>14.6e}", b.epsilon, b.c_eps);
        }
        println!("  {:>12}  {:>14}  {:>14}", "alpha", "c_min", "c_max");
        for g in &r.graph_norm {
            println!("  {:>12.4e}  {:>14.6e}  {:>14.6e}", g.alpha, g.c_min, g.c_max);
        }
    }
}

/// Runs the command and maps the result to a process exit code.
pub fn main_with(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(outcome) => {
            if let Some(dir) = &outcome.dir {
                println!("{}", dir.display());
            }
            if outcome.partial {
                eprintln!("error: some sweep points failed; see the diagnostics in sweep.csv");
                2
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
