//! Command-line front end. Exit codes: 0 success, 1 usage or configuration
//! error, 2 I/O error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use super::config::{EstimatorChoice, McConfig};
use super::iq::read_iq;
use super::mc::{run_sweep_with, write_csv, Execution};
use crate::error::{Error, Result};
use crate::estimator::{estimate_frame, EstimationMode, FrameOptions, PilotEstimator};
use crate::impairments::{spectrum_grid, spectrum_moment4};
use crate::model::{OfdmParams, PatternKind, PilotGeometry};
use crate::pilots::gen_pattern;

#[derive(Debug, Parser)]
#[command(
    name = "pilot-cfo",
    version,
    about = "Pilot-phase CFO/PHN estimation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte Carlo SNR × n_p sweep and write the MSE table as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0 = all cores, 1 = serial).
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Estimate offset and phase noise per symbol of a recorded cf32 frame.
    Estimate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        iq: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit a pilot lattice as `l,k` CSV rows.
    Patterns {
        #[arg(long, value_parser = parse_kind)]
        kind: PatternKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        l_symbols: usize,
        #[arg(long, default_value_t = 1)]
        x1: usize,
        #[arg(long, default_value_t = 1)]
        y2: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fourth moment of a sampled density given as `w,density` CSV.
    Moments {
        #[arg(long)]
        spectrum: PathBuf,
        /// Also write the value to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_kind(s: &str) -> std::result::Result<PatternKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn cli_main<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                2
            } else {
                1
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate {
            config,
            out,
            workers,
        } => {
            let cfg = McConfig::from_file(&config)?;
            let exec = if workers == 1 {
                Execution::Serial
            } else {
                Execution::Parallel(workers)
            };
            let result = run_sweep_with(&cfg, exec)?;
            write_csv(&result, &out)
        }
        Command::Estimate { config, iq, out } => estimate(&config, &iq, &out),
        Command::Patterns {
            kind,
            n,
            l_symbols,
            x1,
            y2,
            out,
        } => {
            let params = OfdmParams {
                n,
                cp_len: 0,
                l_symbols,
            };
            let geometry = PilotGeometry {
                delta_t: 1,
                n_p: 1,
                pattern: kind,
                x1,
                y2,
            };
            let csv = gen_pattern(kind, &params, &geometry)?.to_csv();
            match out {
                Some(path) => fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::Moments { spectrum, out } => {
            let value = moments(&spectrum)?;
            println!("{value}");
            if let Some(path) = out {
                fs::write(path, format!("{value}\n"))?;
            }
            Ok(())
        }
    }
}

pub const ESTIMATE_HEADER: &str = "symbol_index,epsilon_hat,c_hat,phn_hat,interpolated";

fn estimate(config: &Path, iq: &Path, out: &Path) -> Result<()> {
    let cfg = McConfig::from_file(config)?;
    if cfg.mode != EstimationMode::PilotOnly {
        return Err(Error::Config(
            "offline estimation has no transmitted grid; set mode = pilot_only".into(),
        ));
    }
    let estimator = match cfg.estimator {
        EstimatorChoice::Sum => PilotEstimator::Sum,
        EstimatorChoice::Regression => PilotEstimator::Regression,
        EstimatorChoice::Moose => {
            return Err(Error::Config("estimate supports sum or regression".into()))
        }
    };
    let params = cfg.params();
    let geometry = cfg.geometry(cfg.n_p_list[0]);
    let lattice = gen_pattern(cfg.pattern, &params, &geometry)?;
    let frame = read_iq::<f64>(iq, &params)?;
    let opts = FrameOptions {
        mode: EstimationMode::PilotOnly,
        estimator,
        gamma: cfg.gamma,
    };
    let records = estimate_frame(&frame, &lattice, &geometry, &params, &opts, None)?;
    let mut csv = String::from(ESTIMATE_HEADER);
    csv.push('\n');
    for r in records {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.symbol_index, r.epsilon_hat, r.c_hat, r.phn_hat, r.interpolated
        ));
    }
    fs::write(out, csv)?;
    Ok(())
}

/// Reads a `w,density` CSV (optional header) whose `w` column must be the
/// uniform grid over [-π, π].
fn moments(path: &Path) -> Result<f64> {
    let text = fs::read_to_string(path)?;
    let mut w = Vec::new();
    let mut s = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed = line.split_once(',').and_then(|(a, b)| {
            Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?))
        });
        match parsed {
            Some((wi, si)) => {
                w.push(wi);
                s.push(si);
            }
            None if i == 0 => continue,
            None => {
                return Err(Error::Config(format!(
                    "spectrum line {}: expected w,density",
                    i + 1
                )))
            }
        }
    }
    if w.len() < 2 {
        return Err(Error::Config("spectrum needs at least two samples".into()));
    }
    let grid = spectrum_grid::<f64>(w.len());
    if w.iter().zip(&grid).any(|(a, b)| (a - b).abs() > 1e-6) {
        return Err(Error::Config(
            "spectrum w column must be a uniform grid over [-pi, pi]".into(),
        ));
    }
    spectrum_moment4(&s).map_err(|e| Error::Config(e.to_string()))
}
