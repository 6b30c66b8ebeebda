//! Domain types shared by the transmitter, channel, and estimators.
//!
//! The normalized frequency offset ε is always a fraction of the subcarrier
//! spacing. Pilot sample indices count from the first body sample of a symbol
//! (the cyclic prefix is skipped) and start at zero.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Static link dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OfdmParams {
    /// Subcarrier count, equal to the symbol body length in samples.
    pub n: usize,
    pub cp_len: usize,
    /// Symbols per frame.
    pub l_symbols: usize,
}

impl OfdmParams {
    pub fn new(n: usize, cp_len: usize, l_symbols: usize) -> Result<Self> {
        let p = Self {
            n,
            cp_len,
            l_symbols,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || !self.n.is_power_of_two() {
            return Err(Error::invalid(format!(
                "n must be a power of two >= 2 (got {})",
                self.n
            )));
        }
        if self.cp_len >= self.n {
            return Err(Error::invalid(format!(
                "cp_len < n violated (cp_len={}, n={})",
                self.cp_len, self.n
            )));
        }
        if self.l_symbols < 1 {
            return Err(Error::invalid("l_symbols >= 1 violated"));
        }
        Ok(())
    }

    /// Samples per symbol including the cyclic prefix.
    pub fn symbol_len(&self) -> usize {
        self.n + self.cp_len
    }
}

/// Pilot lattice shape, named after the usual time-frequency layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternKind {
    Block,
    Comb,
    Rectangular,
    Hexagonal,
    Parallelogram,
    Diamond,
}

impl PatternKind {
    pub const ALL: [PatternKind; 6] = [
        PatternKind::Block,
        PatternKind::Comb,
        PatternKind::Rectangular,
        PatternKind::Hexagonal,
        PatternKind::Parallelogram,
        PatternKind::Diamond,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PatternKind::Block => "block",
            PatternKind::Comb => "comb",
            PatternKind::Rectangular => "rectangular",
            PatternKind::Hexagonal => "hexagonal",
            PatternKind::Parallelogram => "parallelogram",
            PatternKind::Diamond => "diamond",
        }
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PatternKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PatternKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown pattern kind '{s}'")))
    }
}

/// Where the pilots sit, both inside a symbol (sample spacing `delta_t`,
/// `n_p` observations) and on the time-frequency grid (`x1` symbols by `y2`
/// subcarriers).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PilotGeometry {
    pub delta_t: usize,
    pub n_p: usize,
    pub pattern: PatternKind,
    pub x1: usize,
    pub y2: usize,
}

impl PilotGeometry {
    /// Largest |ε| whose per-pilot phase step stays inside (-π, π].
    pub fn unambiguous_range(&self, params: &OfdmParams) -> f64 {
        params.n as f64 / (2.0 * self.delta_t as f64)
    }
}

/// Checks every joint invariant of the link dimensions and pilot geometry.
pub fn validate(params: &OfdmParams, geometry: &PilotGeometry) -> Result<()> {
    params.validate()?;
    let g = geometry;
    if g.delta_t < 1 {
        return Err(Error::invalid("delta_t >= 1 violated"));
    }
    if g.n_p < 1 {
        return Err(Error::invalid("n_p >= 1 violated"));
    }
    if (g.n_p - 1) * g.delta_t >= params.n {
        return Err(Error::invalid(format!(
            "pilot indices exceed symbol: (n_p-1)*delta_t = {} >= n = {}",
            (g.n_p - 1) * g.delta_t,
            params.n
        )));
    }
    if g.x1 < 1 {
        return Err(Error::invalid("x1 >= 1 violated"));
    }
    if g.y2 < 1 {
        return Err(Error::invalid("y2 >= 1 violated"));
    }
    Ok(())
}

/// Body-relative sample indices `k·Δt`, `k = 0 … n_p-1`.
pub fn pilot_time_indices(geometry: &PilotGeometry) -> Vec<usize> {
    (0..geometry.n_p).map(|k| k * geometry.delta_t).collect()
}

/// Frequency-domain symbols `S_l(k)`, one row per OFDM symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqGrid<T> {
    pub symbols: Vec<Vec<Complex<T>>>,
    /// Cells `(l, k)` whose values the receiver knows in advance.
    pub known: BTreeSet<(usize, usize)>,
}

impl<T: Real> FreqGrid<T> {
    pub fn zeros(params: &OfdmParams) -> Self {
        Self {
            symbols: vec![vec![Complex::new(T::zero(), T::zero()); params.n]; params.l_symbols],
            known: BTreeSet::new(),
        }
    }

    pub fn from_rows(symbols: Vec<Vec<Complex<T>>>) -> Self {
        Self {
            symbols,
            known: BTreeSet::new(),
        }
    }

    pub fn check(&self, params: &OfdmParams) -> Result<()> {
        if self.symbols.len() != params.l_symbols {
            return Err(Error::dim(format!(
                "grid has {} symbols, expected {}",
                self.symbols.len(),
                params.l_symbols
            )));
        }
        for (l, row) in self.symbols.iter().enumerate() {
            if row.len() != params.n {
                return Err(Error::dim(format!(
                    "grid symbol {l} has {} subcarriers, expected {}",
                    row.len(),
                    params.n
                )));
            }
            if row.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::invalid(format!("grid symbol {l} is not finite")));
            }
        }
        Ok(())
    }
}

/// Time-domain samples per symbol, cyclic prefix first.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFrame<T> {
    pub symbols: Vec<Vec<Complex<T>>>,
    /// Prefix samples present at the head of every symbol (0 when stripped).
    pub cp_len: usize,
}

impl<T: Real> TimeFrame<T> {
    pub fn empty() -> Self {
        Self {
            symbols: Vec::new(),
            cp_len: 0,
        }
    }

    pub fn has_cp(&self) -> bool {
        self.cp_len > 0
    }

    /// Body (post-prefix) samples of symbol `l`.
    pub fn body(&self, l: usize) -> &[Complex<T>] {
        &self.symbols[l][self.cp_len..]
    }

    pub fn num_samples(&self) -> usize {
        self.symbols.iter().map(Vec::len).sum()
    }

    pub fn samples(&self) -> impl Iterator<Item = &Complex<T>> {
        self.symbols.iter().flatten()
    }

    pub fn check(&self, params: &OfdmParams) -> Result<()> {
        if self.symbols.len() != params.l_symbols {
            return Err(Error::dim(format!(
                "frame has {} symbols, expected {}",
                self.symbols.len(),
                params.l_symbols
            )));
        }
        if self.cp_len != 0 && self.cp_len != params.cp_len {
            return Err(Error::dim(format!(
                "frame cp_len {} does not match params cp_len {}",
                self.cp_len, params.cp_len
            )));
        }
        let want = params.n + self.cp_len;
        for (l, s) in self.symbols.iter().enumerate() {
            if s.len() != want {
                return Err(Error::dim(format!(
                    "frame symbol {l} has {} samples, expected {want}",
                    s.len()
                )));
            }
        }
        if self
            .samples()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::invalid("frame contains non-finite samples"));
        }
        Ok(())
    }
}

/// Per-symbol estimator output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateRecord<T> {
    pub symbol_index: usize,
    /// Normalized frequency offset (fraction of subcarrier spacing).
    pub epsilon_hat: T,
    /// Regression intercept `2πεl + φ_PHN(l)` in radians.
    pub c_hat: T,
    /// Phase-noise angle of the symbol in radians.
    pub phn_hat: T,
    /// False for pilot-bearing symbols, true when the values were carried over
    /// from neighbouring pilot-bearing symbols.
    pub interpolated: bool,
}
