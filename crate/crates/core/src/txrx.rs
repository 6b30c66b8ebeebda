//! OFDM modulator and receiver front-end.
//!
//! Both transforms use symmetric `1/√N` scaling, so the modulator is unitary:
//! body energy equals grid-row energy and SNR bookkeeping does not depend on
//! which domain it is done in.

use std::collections::BTreeSet;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::model::{FreqGrid, OfdmParams, TimeFrame};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstellationKind {
    Qpsk,
    Bpsk,
    /// Every cell carries `1 + 0j`.
    KnownUnit,
}

/// What occupies the non-pilot cells of a pilot-bearing symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PilotFill {
    /// Dedicated pilot symbols: non-pilot cells are empty.
    #[default]
    Null,
    /// Data shares the symbol with the pilots.
    Data,
}

/// Describes how [`random_grid`] fills a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationSpec {
    pub kind: ConstellationKind,
    /// Cells `(l, k)` carrying the known pilot value `1 + 0j`.
    pub pilot_cells: BTreeSet<(usize, usize)>,
    pub pilot_fill: PilotFill,
}

impl ConstellationSpec {
    /// Data everywhere, no pilots.
    pub fn data(kind: ConstellationKind) -> Self {
        Self {
            kind,
            pilot_cells: BTreeSet::new(),
            pilot_fill: PilotFill::Data,
        }
    }

    pub fn with_pilots(
        kind: ConstellationKind,
        pilot_cells: impl IntoIterator<Item = (usize, usize)>,
        pilot_fill: PilotFill,
    ) -> Self {
        Self {
            kind,
            pilot_cells: pilot_cells.into_iter().collect(),
            pilot_fill,
        }
    }
}

fn draw_point<T: Real, R: Rng>(kind: ConstellationKind, rng: &mut R) -> Complex<T> {
    match kind {
        ConstellationKind::Qpsk => {
            let h = T::FRAC_1_SQRT_2();
            match rng.random_range(0..4u8) {
                0 => Complex::new(h, h),
                1 => Complex::new(-h, h),
                2 => Complex::new(-h, -h),
                _ => Complex::new(h, -h),
            }
        }
        ConstellationKind::Bpsk => {
            if rng.random::<bool>() {
                Complex::new(T::one(), T::zero())
            } else {
                Complex::new(-T::one(), T::zero())
            }
        }
        ConstellationKind::KnownUnit => Complex::new(T::one(), T::zero()),
    }
}

/// Draws a frame of constellation points, deterministic in `seed`.
///
/// Pilot cells get `1 + 0j`. In [`PilotFill::Null`] mode the remaining cells
/// of every pilot-bearing symbol are zero. All pilot and null cells are
/// recorded in [`FreqGrid::known`], as is every cell when the constellation is
/// [`ConstellationKind::KnownUnit`].
pub fn random_grid<T: Real>(
    params: &OfdmParams,
    spec: &ConstellationSpec,
    seed: u64,
) -> FreqGrid<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid = FreqGrid::zeros(params);
    let pilot_rows: BTreeSet<usize> = spec.pilot_cells.iter().map(|&(l, _)| l).collect();
    let pilot = Complex::new(T::one(), T::zero());
    for (l, row) in grid.symbols.iter_mut().enumerate() {
        let dedicated = spec.pilot_fill == PilotFill::Null && pilot_rows.contains(&l);
        for (k, cell) in row.iter_mut().enumerate() {
            if spec.pilot_cells.contains(&(l, k)) {
                *cell = pilot;
                grid.known.insert((l, k));
            } else if dedicated {
                grid.known.insert((l, k));
            } else {
                *cell = draw_point(spec.kind, &mut rng);
                if spec.kind == ConstellationKind::KnownUnit {
                    grid.known.insert((l, k));
                }
            }
        }
    }
    grid
}

fn scale<T: Real>(buf: &mut [Complex<T>]) {
    let s = T::one() / T::from_usize_lossy(buf.len()).sqrt();
    for z in buf.iter_mut() {
        *z = *z * s;
    }
}

/// Inverse transform of every grid row with `1/√N` scaling, then prepends the
/// last `cp_len` body samples as the cyclic prefix.
pub fn modulate_frame<T: Real>(grid: &FreqGrid<T>, params: &OfdmParams) -> Result<TimeFrame<T>> {
    params.validate()?;
    grid.check(params)?;
    let n = params.n;
    let ifft = FftPlanner::new().plan_fft_inverse(n);
    let symbols = grid
        .symbols
        .iter()
        .map(|row| {
            let mut body = row.clone();
            ifft.process(&mut body);
            scale(&mut body);
            let mut sym = Vec::with_capacity(params.symbol_len());
            sym.extend_from_slice(&body[n - params.cp_len..]);
            sym.extend_from_slice(&body);
            sym
        })
        .collect();
    Ok(TimeFrame {
        symbols,
        cp_len: params.cp_len,
    })
}

/// Strips the prefix and applies the forward transform with `1/√N` scaling.
pub fn demodulate_frame<T: Real>(frame: &TimeFrame<T>, params: &OfdmParams) -> Result<FreqGrid<T>> {
    params.validate()?;
    if frame.cp_len != params.cp_len {
        return Err(Error::dim(format!(
            "frame carries cp_len {}, params expect {}",
            frame.cp_len, params.cp_len
        )));
    }
    frame.check(params)?;
    let fft = FftPlanner::new().plan_fft_forward(params.n);
    let symbols = (0..frame.symbols.len())
        .map(|l| {
            let mut row = frame.body(l).to_vec();
            fft.process(&mut row);
            scale(&mut row);
            row
        })
        .collect();
    Ok(FreqGrid::from_rows(symbols))
}
