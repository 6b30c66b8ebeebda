//! Monte Carlo sweeps over SNR and pilot count.
//!
//! Every trial derives its own seed from `(master seed, snr index, n_p index,
//! trial index)`, and per-point statistics are reduced in trial order, so a
//! sweep produces the same bytes no matter how many workers run it.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::config::{EstimatorChoice, McConfig};
use crate::error::{Error, Result};
use crate::estimator::{
    estimate_cfo_moose, estimate_frame, EstimationMode, FrameOptions, KnownSignal, PilotEstimator,
};
use crate::impairments::{apply_awgn, apply_cfo, apply_channel, apply_phn, ImpairmentState};
use crate::pilots::gen_pattern;
use crate::scalar::wrap_angle;
use crate::txrx::{modulate_frame, random_grid, ConstellationKind, ConstellationSpec};

/// SplitMix64 finalizer.
fn avalanche(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Seed of one trial; independent of execution order.
pub fn trial_seed(master: u64, snr_index: usize, np_index: usize, trial: u64) -> u64 {
    [snr_index as u64, np_index as u64, trial]
        .iter()
        .fold(avalanche(master ^ GOLDEN), |h, &x| {
            avalanche(h ^ x.wrapping_add(GOLDEN).wrapping_mul(GOLDEN))
        })
}

fn stream(seed: u64, id: u64) -> u64 {
    avalanche(seed ^ id.wrapping_mul(GOLDEN))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub snr_index: usize,
    pub snr_db: f64,
    pub np_index: usize,
    pub n_p: usize,
}

impl SweepPoint {
    pub fn all(config: &McConfig) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for (snr_index, &snr_db) in config.snr_db_list.iter().enumerate() {
            for (np_index, &n_p) in config.n_p_list.iter().enumerate() {
                out.push(SweepPoint {
                    snr_index,
                    snr_db,
                    np_index,
                    n_p,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    /// Frame-average offset estimate.
    pub epsilon_hat: f64,
    /// Mean absolute wrapped phase-noise error over the frame's symbols;
    /// NaN for the Moose estimator, which does not estimate phase noise.
    pub phn_error: f64,
}

/// One simulated frame: grid, channel, modulation, CFO, phase noise, AWGN,
/// then estimation.
pub fn run_trial(config: &McConfig, point: &SweepPoint, trial: u64) -> Result<TrialOutcome> {
    let seed = trial_seed(config.seed, point.snr_index, point.np_index, trial);
    let params = config.params();
    let geometry = config.geometry(point.n_p);
    let lattice = gen_pattern(config.pattern, &params, &geometry)?;

    let spec = ConstellationSpec {
        kind: ConstellationKind::Qpsk,
        pilot_cells: lattice.points.clone(),
        pilot_fill: config.pilot_fill,
    };
    let mut grid = random_grid::<f64>(&params, &spec, stream(seed, 1));
    if config.estimator == EstimatorChoice::Moose {
        grid.symbols[1] = grid.symbols[0].clone();
    }
    let channel = config.channel_model();
    let (faded, response) = apply_channel(&grid, &channel, &params, stream(seed, 2))?;
    let tx = modulate_frame(&faded, &params)?;
    let rx = apply_cfo(&tx, config.epsilon, &params);
    let mut state = ImpairmentState::new(config.epsilon, config.phn_sigma2, point.snr_db, channel)?;
    let rx = apply_phn(&rx, &mut state, stream(seed, 3))?;
    let rx = apply_awgn(&rx, point.snr_db, stream(seed, 4))?;

    if config.estimator == EstimatorChoice::Moose {
        return Ok(TrialOutcome {
            epsilon_hat: estimate_cfo_moose(rx.body(0), rx.body(1))?,
            phn_error: f64::NAN,
        });
    }

    let known = KnownSignal {
        grid: &grid,
        channel: Some(&response),
    };
    let opts = FrameOptions {
        mode: config.mode,
        estimator: match config.estimator {
            EstimatorChoice::Sum => PilotEstimator::Sum,
            _ => PilotEstimator::Regression,
        },
        gamma: config.gamma,
    };
    let known = (config.mode == EstimationMode::KnownSignal).then_some(&known);
    let records = estimate_frame(&rx, &lattice, &geometry, &params, &opts, known)?;
    let trajectory = state.phn_trajectory.unwrap_or_default();
    let count = records.len() as f64;
    let epsilon_hat = records.iter().map(|r| r.epsilon_hat).sum::<f64>() / count;
    let phn_error = records
        .iter()
        .map(|r| wrap_angle(r.phn_hat - trajectory[r.symbol_index]).abs())
        .sum::<f64>()
        / count;
    Ok(TrialOutcome {
        epsilon_hat,
        phn_error,
    })
}

/// How trials are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Serial,
    /// Worker threads; 0 picks the machine's core count.
    Parallel(usize),
}

/// Runs every trial of one sweep point, in trial order.
pub fn run_point(
    config: &McConfig,
    point: &SweepPoint,
    exec: Execution,
) -> Result<Vec<TrialOutcome>> {
    let wrap = |trial: u64, r: Result<TrialOutcome>| {
        r.map_err(|e| Error::Trial {
            snr_db: point.snr_db,
            n_p: point.n_p,
            trial,
            source: Box::new(e),
        })
    };
    let results: Vec<Result<TrialOutcome>> = match exec {
        Execution::Serial | Execution::Parallel(1) => (0..config.trials)
            .map(|t| wrap(t, run_trial(config, point, t)))
            .collect(),
        Execution::Parallel(workers) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
            pool.install(|| {
                (0..config.trials)
                    .into_par_iter()
                    .map(|t| wrap(t, run_trial(config, point, t)))
                    .collect()
            })
        }
    };
    results.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McRow {
    pub snr_db: f64,
    pub n_p: usize,
    pub trials: u64,
    pub mse: f64,
    pub mean_error: f64,
    /// Population variance of the error, so `mse = var_error + mean_error²`.
    pub var_error: f64,
    pub mean_phn_error: f64,
}

impl McRow {
    pub fn summarize(snr_db: f64, n_p: usize, epsilon: f64, outcomes: &[TrialOutcome]) -> Self {
        let count = outcomes.len() as f64;
        let errors: Vec<f64> = outcomes.iter().map(|o| o.epsilon_hat - epsilon).collect();
        let mean_error = errors.iter().sum::<f64>() / count;
        let mse = errors.iter().map(|e| e * e).sum::<f64>() / count;
        let var_error = errors.iter().map(|e| (e - mean_error).powi(2)).sum::<f64>() / count;
        let mean_phn_error = outcomes.iter().map(|o| o.phn_error).sum::<f64>() / count;
        Self {
            snr_db,
            n_p,
            trials: outcomes.len() as u64,
            mse,
            mean_error,
            var_error,
            mean_phn_error,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct McResult {
    pub rows: Vec<McRow>,
}

pub const CSV_HEADER: &str = "snr_db,n_p,trials,mse,mean_error,var_error,mean_phn_error";

impl McResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.snr_db, r.n_p, r.trials, r.mse, r.mean_error, r.var_error, r.mean_phn_error
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(CSV_HEADER) {
            return Err(Error::invalid("result CSV header mismatch"));
        }
        fn field(f: Option<&str>, line: usize) -> Result<&str> {
            f.ok_or_else(|| Error::invalid(format!("result CSV line {line}: too few fields")))
        }
        let num = |s: &str, line: usize| {
            s.parse::<f64>()
                .map_err(|_| Error::invalid(format!("result CSV line {line}: bad number '{s}'")))
        };
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let mut it = line.split(',');
            let snr_db = num(field(it.next(), lineno)?, lineno)?;
            let n_p = field(it.next(), lineno)?
                .parse()
                .map_err(|_| Error::invalid(format!("result CSV line {lineno}: bad n_p")))?;
            let trials = field(it.next(), lineno)?
                .parse()
                .map_err(|_| Error::invalid(format!("result CSV line {lineno}: bad trials")))?;
            rows.push(McRow {
                snr_db,
                n_p,
                trials,
                mse: num(field(it.next(), lineno)?, lineno)?,
                mean_error: num(field(it.next(), lineno)?, lineno)?,
                var_error: num(field(it.next(), lineno)?, lineno)?,
                mean_phn_error: num(field(it.next(), lineno)?, lineno)?,
            });
            if it.next().is_some() {
                return Err(Error::invalid(format!(
                    "result CSV line {lineno}: too many fields"
                )));
            }
        }
        Ok(Self { rows })
    }
}

/// Full SNR × n_p cross product, default parallel execution.
pub fn run_sweep(config: &McConfig) -> Result<McResult> {
    run_sweep_with(config, Execution::Parallel(0))
}

pub fn run_sweep_with(config: &McConfig, exec: Execution) -> Result<McResult> {
    config.validate()?;
    let params = config.params();
    for &n_p in &config.n_p_list {
        let geometry = config.geometry(n_p);
        if config.epsilon.abs() >= geometry.unambiguous_range(&params) {
            log::warn!(
                "epsilon {} outside the unambiguous range ±{} for delta_t {}",
                config.epsilon,
                geometry.unambiguous_range(&params),
                config.delta_t
            );
        }
    }
    let rows = SweepPoint::all(config)
        .iter()
        .map(|p| {
            let outcomes = run_point(config, p, exec)?;
            Ok(McRow::summarize(p.snr_db, p.n_p, config.epsilon, &outcomes))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(McResult { rows })
}

pub fn write_csv(result: &McResult, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, result.to_csv())?;
    Ok(())
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<McResult> {
    McResult::from_csv(&fs::read_to_string(path)?)
}
