//! Frequency-offset and phase-noise estimation from pilot sample phases.
//!
//! The phase observed at body sample `iΔt` of symbol `l` is modelled as a line
//! in the pilot index `i`,
//!
//! ```text
//! θ_l(i) = A·i + C(l) + disturbance,   A = 2πεΔt/N,   C(l) = 2πεl + φ_PHN(l)
//! ```
//!
//! so a least-squares fit yields the offset from the slope and the phase
//! noise from the intercept. The slope does not depend on `l`, which makes the
//! regression path immune to the accumulated `2πεl` phase that breaks the
//! phase-sum estimator on later symbols.
//!
//! Pilot indices run `0 … N_p-1` throughout.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::model::{EstimateRecord, FreqGrid, OfdmParams, PilotGeometry, TimeFrame};
use crate::pilots::{pilot_bearing_symbols, PilotLattice};
use crate::scalar::{cis, wrap_angle, Real};

/// How the data-dependent signal phase `φ_s(l, i)` is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EstimationMode {
    /// Treat `φ_s` as a zero-mean disturbance and subtract nothing.
    #[default]
    PilotOnly,
    /// Subtract `φ_s` computed from the known grid and channel response.
    KnownSignal,
}

/// Per-symbol estimator used by [`estimate_frame`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PilotEstimator {
    /// Phase sum; needs `φ_PHN = 0` and small `|εl|`.
    Sum,
    /// Joint slope/intercept least squares.
    #[default]
    Regression,
}

/// Transmitted grid (and optionally the realized channel) available to the
/// receiver in [`EstimationMode::KnownSignal`].
#[derive(Debug, Clone, Copy)]
pub struct KnownSignal<'a, T> {
    pub grid: &'a FreqGrid<T>,
    pub channel: Option<&'a [Vec<Complex<T>>]>,
}

/// Phases `θ_l(i)` of the `N_p` pilot observations of one symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSeries<T> {
    pub theta: Vec<T>,
    pub symbol_index: usize,
    pub delta_t: usize,
    pub unwrapped: bool,
}

impl<T: Real> PhaseSeries<T> {
    pub fn new(theta: Vec<T>, symbol_index: usize, delta_t: usize) -> Self {
        Self {
            theta,
            symbol_index,
            delta_t,
            unwrapped: false,
        }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }
}

/// Least-squares line `θ(i) ≈ a_hat·i + c_hat`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionFit<T> {
    /// Slope in radians per pilot index.
    pub a_hat: T,
    /// Intercept in radians.
    pub c_hat: T,
}

impl<T: Real> RegressionFit<T> {
    pub fn residuals(&self, series: &PhaseSeries<T>) -> Vec<T> {
        series
            .theta
            .iter()
            .enumerate()
            .map(|(i, &th)| th - self.a_hat * T::from_usize_lossy(i) - self.c_hat)
            .collect()
    }
}

/// `φ_s(l, i) = arg Σ_m S_l(m) H_l(m) e^{j2π·i·mΔt/N}` by direct summation.
fn signal_phase<T: Real>(
    known: &KnownSignal<'_, T>,
    l: usize,
    sample: usize,
    n: usize,
) -> Result<T> {
    let row = known
        .grid
        .symbols
        .get(l)
        .ok_or_else(|| Error::dim(format!("known grid has no symbol {l}")))?;
    if row.len() != n {
        return Err(Error::dim(format!(
            "known grid row has {} cells, expected {n}",
            row.len()
        )));
    }
    let h = match known.channel {
        Some(h) => Some(
            h.get(l)
                .filter(|r| r.len() == n)
                .ok_or_else(|| Error::dim(format!("channel response missing for symbol {l}")))?,
        ),
        None => None,
    };
    let nf = T::from_usize_lossy(n);
    let mut acc = Complex::new(T::zero(), T::zero());
    for (m, s) in row.iter().enumerate() {
        let sh = match h {
            Some(h) => s * h[m],
            None => *s,
        };
        let idx = (sample * m) % n;
        acc = acc + sh * cis(T::two_pi() * T::from_usize_lossy(idx) / nf);
    }
    if acc.re == T::zero() && acc.im == T::zero() {
        return Err(Error::Undefined(format!(
            "known signal is exactly zero at sample {sample} of symbol {l}"
        )));
    }
    Ok(acc.arg())
}

/// Reads `arg r_l[iΔt]` for the pilot observations of symbol `l`.
///
/// In known-signal mode the transmitted phase `φ_s(l, i)` is subtracted and
/// the difference wrapped to (-π, π]. The result is not unwrapped yet.
pub fn extract_phase_series<T: Real>(
    frame: &TimeFrame<T>,
    l: usize,
    geometry: &PilotGeometry,
    params: &OfdmParams,
    mode: EstimationMode,
    known: Option<&KnownSignal<'_, T>>,
) -> Result<PhaseSeries<T>> {
    if l >= frame.symbols.len() {
        return Err(Error::dim(format!(
            "symbol {l} out of range ({} symbols)",
            frame.symbols.len()
        )));
    }
    let body = frame.body(l);
    if body.len() != params.n {
        return Err(Error::dim(format!(
            "symbol body has {} samples, expected {}",
            body.len(),
            params.n
        )));
    }
    let known = match mode {
        EstimationMode::KnownSignal => Some(
            known.ok_or_else(|| Error::invalid("known-signal mode needs the transmitted grid"))?,
        ),
        EstimationMode::PilotOnly => None,
    };
    let mut theta = Vec::with_capacity(geometry.n_p);
    for i in 0..geometry.n_p {
        let idx = i * geometry.delta_t;
        let r = *body
            .get(idx)
            .ok_or_else(|| Error::dim(format!("pilot sample {idx} beyond symbol body")))?;
        if r.re == T::zero() && r.im == T::zero() {
            return Err(Error::ZeroSample {
                symbol: l,
                index: i,
            });
        }
        let phase = match known {
            Some(k) => wrap_angle(r.arg() - signal_phase(k, l, idx, params.n)?),
            None => r.arg(),
        };
        theta.push(phase);
    }
    Ok(PhaseSeries::new(theta, l, geometry.delta_t))
}

/// Removes 2π jumps: whenever a consecutive difference leaves (-π, π], the
/// correcting multiple of 2π is added to that and every later value.
pub fn unwrap<T: Real>(series: &PhaseSeries<T>) -> PhaseSeries<T> {
    let tau = T::two_pi();
    let mut correction = T::zero();
    let mut out = Vec::with_capacity(series.len());
    let mut prev: Option<T> = None;
    for &x in &series.theta {
        if let Some(p) = prev {
            let d = x - p;
            let m = ((T::PI() - d) / tau).floor();
            correction = correction + m * tau;
        }
        prev = Some(x);
        out.push(x + correction);
    }
    PhaseSeries {
        theta: out,
        unwrapped: true,
        ..series.clone()
    }
}

/// Phase-sum estimate
/// `ε̂ = N·Σθ(k) / (π·N_p·(Δt(N_p−1) + 2lN))`.
///
/// The phases must carry the absolute `2πεl` term, which only holds while
/// `|εl| < 1/2`; past that the observations wrap.
pub fn estimate_cfo_sum<T: Real>(
    series: &PhaseSeries<T>,
    l: usize,
    geometry: &PilotGeometry,
    params: &OfdmParams,
) -> Result<T> {
    let n_p = series.len();
    if n_p == 0 {
        return Err(Error::Undefined("empty phase series".into()));
    }
    let denom = (geometry.delta_t * (n_p - 1) + 2 * l * params.n) as f64;
    if denom == 0.0 {
        return Err(Error::Undefined(
            "phase-sum estimator needs n_p >= 2 or l >= 1".into(),
        ));
    }
    let sum = series.theta.iter().fold(T::zero(), |a, &b| a + b);
    Ok(T::from_usize_lossy(params.n) * sum / (T::PI() * T::from_usize_lossy(n_p) * T::lit(denom)))
}

/// Closed-form least-squares line through `(i, θ(i))`:
///
/// ```text
/// Â = 12/((N_p−1)N_p(N_p+1)) · [Σ i·θ(i) − (N_p−1)/2 · Σ θ(i)]
/// Ĉ = Σ θ(i)/N_p − (N_p−1)/2 · Â
/// ```
pub fn fit_phase_line<T: Real>(series: &PhaseSeries<T>) -> Result<RegressionFit<T>> {
    let n_p = series.len();
    if n_p < 2 {
        return Err(Error::Undefined(format!(
            "regression needs n_p >= 2 (got {n_p})"
        )));
    }
    let np = T::from_usize_lossy(n_p);
    let half_span = (np - T::one()) / T::lit(2.0);
    let (mut sum, mut weighted) = (T::zero(), T::zero());
    for (i, &th) in series.theta.iter().enumerate() {
        sum = sum + th;
        weighted = weighted + T::from_usize_lossy(i) * th;
    }
    let a_hat =
        T::lit(12.0) / ((np - T::one()) * np * (np + T::one())) * (weighted - half_span * sum);
    let c_hat = sum / np - half_span * a_hat;
    Ok(RegressionFit { a_hat, c_hat })
}

/// Reference least-squares solver: builds the 2×2 normal equations
/// `[[Σi², Σi], [Σi, N_p]]·[A, C]ᵀ = [Σiθ, Σθ]ᵀ` by explicit accumulation and
/// inverts them directly. Kept independent of [`fit_phase_line`] so the two can
/// check each other.
pub fn ls_oracle<T: Real>(series: &PhaseSeries<T>) -> Result<RegressionFit<T>> {
    let n_p = series.len();
    if n_p < 2 {
        return Err(Error::Undefined(format!(
            "regression needs n_p >= 2 (got {n_p})"
        )));
    }
    let (mut sxx, mut sx, mut sxy, mut sy) = (T::zero(), T::zero(), T::zero(), T::zero());
    for (i, &th) in series.theta.iter().enumerate() {
        let x = T::from_usize_lossy(i);
        sxx = sxx + x * x;
        sx = sx + x;
        sxy = sxy + x * th;
        sy = sy + th;
    }
    let count = T::from_usize_lossy(n_p);
    let det = sxx * count - sx * sx;
    if det == T::zero() {
        return Err(Error::Undefined("singular normal equations".into()));
    }
    Ok(RegressionFit {
        a_hat: (count * sxy - sx * sy) / det,
        c_hat: (sxx * sy - sx * sxy) / det,
    })
}

/// Regression estimate `ε̂ = Â·N/(2πΔt)`.
pub fn estimate_cfo_regression<T: Real>(
    series: &PhaseSeries<T>,
    geometry: &PilotGeometry,
    params: &OfdmParams,
) -> Result<T> {
    let fit = fit_phase_line(series)?;
    Ok(cfo_from_slope(fit.a_hat, geometry, params))
}

pub fn cfo_from_slope<T: Real>(a_hat: T, geometry: &PilotGeometry, params: &OfdmParams) -> T {
    a_hat * T::from_usize_lossy(params.n) / (T::two_pi() * T::from_usize_lossy(geometry.delta_t))
}

/// `φ̂_PHN(l) = Ĉ(l) − 2πε̂l`.
pub fn estimate_phn<T: Real>(fit: &RegressionFit<T>, epsilon_hat: T, l: usize) -> T {
    fit.c_hat - T::two_pi() * epsilon_hat * T::from_usize_lossy(l)
}

/// Linear interpolation between pilot-bearing symbols `l` and `l + x1` at
/// offset `delta`: `((x1−Δ)/x1)·ε̂_l + (Δ/x1)·ε̂_{l+x1}`.
pub fn interpolate_cfo<T: Real>(eps_l: T, eps_next: T, delta: usize, x1: usize) -> Result<T> {
    if delta == 0 || delta >= x1 {
        return Err(Error::invalid(format!(
            "interpolation offset must satisfy 0 < delta < x1 (delta={delta}, x1={x1})"
        )));
    }
    let x = T::from_usize_lossy(x1);
    let v =
        (x - T::from_usize_lossy(delta)) / x * eps_l + T::from_usize_lossy(delta) / x * eps_next;
    // the clamp keeps equal endpoints exact
    Ok(v.max(eps_l.min(eps_next)).min(eps_l.max(eps_next)))
}

/// Forgetting-factor smoothing
/// `(ε̂_l + γε̂_{l−1} + γε̂_{l+1}) / (1 + 2γ)`; end points renormalize over the
/// one neighbour they have.
pub fn smooth_cfo<T: Real>(seq: &[T], gamma: T) -> Result<Vec<T>> {
    if seq.is_empty() {
        return Err(Error::invalid("cannot smooth an empty sequence"));
    }
    if gamma.is_nan() || gamma < T::zero() {
        return Err(Error::invalid("forgetting factor must be >= 0"));
    }
    let len = seq.len();
    Ok((0..len)
        .map(|l| {
            let centre = seq[l];
            let neighbours: Vec<T> = [l.checked_sub(1), Some(l + 1).filter(|&j| j < len)]
                .into_iter()
                .flatten()
                .map(|j| seq[j])
                .collect();
            if neighbours.is_empty() {
                return centre;
            }
            let count = T::from_usize_lossy(neighbours.len());
            let w = gamma / (T::one() + count * gamma);
            // offsets from the centre vanish exactly on a constant run
            let pull = neighbours.iter().fold(T::zero(), |a, &b| a + (b - centre));
            let (lo, hi) = neighbours
                .iter()
                .fold((centre, centre), |(lo, hi), &b| (lo.min(b), hi.max(b)));
            (centre + w * pull).max(lo).min(hi)
        })
        .collect())
}

/// Moose estimate from two identical transmitted symbols:
/// `ε̂ = arg(Σ b[n]·conj(a[n])) / 2π`, unambiguous for `|ε| < 1/2`.
pub fn estimate_cfo_moose<T: Real>(sym_a: &[Complex<T>], sym_b: &[Complex<T>]) -> Result<T> {
    if sym_a.len() != sym_b.len() {
        return Err(Error::dim(format!(
            "Moose symbols differ in length ({} vs {})",
            sym_a.len(),
            sym_b.len()
        )));
    }
    let corr = sym_a
        .iter()
        .zip(sym_b)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| {
            acc + b * a.conj()
        });
    if corr.re == T::zero() && corr.im == T::zero() {
        return Err(Error::Undefined("zero correlation magnitude".into()));
    }
    Ok(corr.arg() / T::two_pi())
}

/// Options for [`estimate_frame`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameOptions<T> {
    pub mode: EstimationMode,
    pub estimator: PilotEstimator,
    /// Forgetting factor; 0 disables smoothing.
    pub gamma: T,
}

impl<T: Real> Default for FrameOptions<T> {
    fn default() -> Self {
        Self {
            mode: EstimationMode::PilotOnly,
            estimator: PilotEstimator::Regression,
            gamma: T::zero(),
        }
    }
}

/// Direct estimate for one pilot-bearing symbol.
pub fn estimate_symbol<T: Real>(
    frame: &TimeFrame<T>,
    l: usize,
    geometry: &PilotGeometry,
    params: &OfdmParams,
    opts: &FrameOptions<T>,
    known: Option<&KnownSignal<'_, T>>,
) -> Result<EstimateRecord<T>> {
    let raw = extract_phase_series(frame, l, geometry, params, opts.mode, known)?;
    let series = unwrap(&raw);
    let (epsilon_hat, c_hat, phn_hat) = match opts.estimator {
        PilotEstimator::Regression => {
            let fit = fit_phase_line(&series)?;
            let eps = cfo_from_slope(fit.a_hat, geometry, params);
            (eps, fit.c_hat, estimate_phn(&fit, eps, l))
        }
        PilotEstimator::Sum => {
            let eps = estimate_cfo_sum(&series, l, geometry, params)?;
            (eps, T::two_pi() * eps * T::from_usize_lossy(l), T::zero())
        }
    };
    Ok(EstimateRecord {
        symbol_index: l,
        epsilon_hat,
        c_hat,
        phn_hat,
        interpolated: false,
    })
}

/// Estimates every symbol of a frame.
///
/// Pilot-bearing symbols get a direct estimate (extract, unwrap, fit). With
/// `gamma > 0` the direct offset estimates are smoothed across consecutive
/// pilot-bearing symbols. Symbols between two pilot-bearing symbols take the
/// linear interpolation of their offsets and phase noise; symbols before the
/// first or after the last one hold the nearest estimate.
pub fn estimate_frame<T: Real>(
    frame: &TimeFrame<T>,
    lattice: &PilotLattice,
    geometry: &PilotGeometry,
    params: &OfdmParams,
    opts: &FrameOptions<T>,
    known: Option<&KnownSignal<'_, T>>,
) -> Result<Vec<EstimateRecord<T>>> {
    frame.check(params)?;
    let pilot_rows: Vec<usize> = pilot_bearing_symbols(lattice)
        .into_iter()
        .filter(|&l| l < params.l_symbols)
        .collect();
    if pilot_rows.is_empty() {
        return Err(Error::Undefined(
            "lattice has no pilot-bearing symbols".into(),
        ));
    }
    let mut direct = pilot_rows
        .iter()
        .map(|&l| estimate_symbol(frame, l, geometry, params, opts, known))
        .collect::<Result<Vec<_>>>()?;
    if opts.gamma > T::zero() {
        let eps: Vec<T> = direct.iter().map(|r| r.epsilon_hat).collect();
        for (r, e) in direct.iter_mut().zip(smooth_cfo(&eps, opts.gamma)?) {
            r.epsilon_hat = e;
        }
    }

    let mut out = Vec::with_capacity(params.l_symbols);
    let mut next = 0;
    for l in 0..params.l_symbols {
        while next < direct.len() && direct[next].symbol_index < l {
            next += 1;
        }
        let rec = match (next.checked_sub(1).map(|i| &direct[i]), direct.get(next)) {
            (_, Some(d)) if d.symbol_index == l => *d,
            (Some(a), Some(b)) => {
                let (delta, gap) = (l - a.symbol_index, b.symbol_index - a.symbol_index);
                let epsilon_hat = interpolate_cfo(a.epsilon_hat, b.epsilon_hat, delta, gap)?;
                let phn_hat = interpolate_cfo(a.phn_hat, b.phn_hat, delta, gap)?;
                EstimateRecord {
                    symbol_index: l,
                    epsilon_hat,
                    c_hat: T::two_pi() * epsilon_hat * T::from_usize_lossy(l) + phn_hat,
                    phn_hat,
                    interpolated: true,
                }
            }
            (Some(d), None) | (None, Some(d)) => EstimateRecord {
                symbol_index: l,
                c_hat: T::two_pi() * d.epsilon_hat * T::from_usize_lossy(l) + d.phn_hat,
                interpolated: true,
                ..*d
            },
            (None, None) => unreachable!("at least one pilot-bearing symbol"),
        };
        out.push(rec);
    }
    Ok(out)
}
