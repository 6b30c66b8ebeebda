//! Channel and oscillator impairments applied to a transmitted frame.
//!
//! The CFO sample counter runs over body samples only: sample `n` of symbol
//! `l`'s body carries phase `2πε(n + lN)/N`, and prefix samples continue the
//! count backwards (`n ∈ [-cp_len, 0)`). The per-symbol phase ramp therefore
//! starts at exactly `2πεl`.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{FreqGrid, OfdmParams, PilotGeometry, TimeFrame};
use crate::scalar::{cis, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelKind {
    #[default]
    Identity,
    /// Fixed impulse response, the same for every symbol.
    StaticTaps,
    /// Rayleigh taps redrawn per symbol with first-order correlation `rho`.
    BlockRayleigh,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel<T> {
    pub kind: ChannelKind,
    /// Impulse response for `StaticTaps`; for `BlockRayleigh` the tap
    /// magnitudes give the power-delay profile (normalized to unit power).
    pub taps: Vec<Complex<T>>,
    /// Doppler density `S_H1(w)` sampled on a uniform grid over [-π, π].
    pub doppler_spectrum: Vec<T>,
    /// Delay power profile density `S_H2(w)`, same sampling.
    pub power_profile: Vec<T>,
    /// Correlation between consecutive symbols' taps.
    pub rho: T,
}

impl<T: Real> Default for ChannelModel<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> ChannelModel<T> {
    pub fn identity() -> Self {
        Self {
            kind: ChannelKind::Identity,
            taps: Vec::new(),
            doppler_spectrum: Vec::new(),
            power_profile: Vec::new(),
            rho: T::zero(),
        }
    }

    pub fn static_taps(taps: Vec<Complex<T>>) -> Self {
        Self {
            kind: ChannelKind::StaticTaps,
            taps,
            ..Self::identity()
        }
    }

    pub fn block_rayleigh(profile: Vec<Complex<T>>, rho: T) -> Self {
        Self {
            kind: ChannelKind::BlockRayleigh,
            taps: profile,
            rho,
            ..Self::identity()
        }
    }

    /// Fourth moment of the sampled Doppler density.
    pub fn doppler_moment4(&self) -> Result<T> {
        spectrum_moment4(&self.doppler_spectrum)
    }

    /// Fourth moment of the sampled delay power profile.
    pub fn delay_moment4(&self) -> Result<T> {
        spectrum_moment4(&self.power_profile)
    }
}

/// True impairment parameters of one simulated frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpairmentState<T> {
    pub epsilon: T,
    /// Variance of the per-symbol Wiener phase-noise increment (rad²).
    pub phn_sigma2: T,
    /// Realized `φ_PHN(l)`; filled in by [`apply_phn`] when absent.
    pub phn_trajectory: Option<Vec<T>>,
    pub snr_db: T,
    pub channel: ChannelModel<T>,
}

impl<T: Real> ImpairmentState<T> {
    pub fn new(epsilon: T, phn_sigma2: T, snr_db: T, channel: ChannelModel<T>) -> Result<Self> {
        if phn_sigma2.is_nan() || phn_sigma2 < T::zero() {
            return Err(Error::invalid("phn_sigma2 >= 0 violated"));
        }
        Ok(Self {
            epsilon,
            phn_sigma2,
            phn_trajectory: None,
            snr_db,
            channel,
        })
    }

    /// Whether `epsilon` lies inside the estimator's unambiguous slope range.
    pub fn is_estimable(&self, params: &OfdmParams, geometry: &PilotGeometry) -> bool {
        self.epsilon.abs().to_f64().unwrap_or(f64::INFINITY) < geometry.unambiguous_range(params)
    }
}

/// Multiplies every sample by the CFO phasor `e^{j2πε(n + lN)/N}`.
pub fn apply_cfo<T: Real>(frame: &TimeFrame<T>, epsilon: T, params: &OfdmParams) -> TimeFrame<T> {
    let n = params.n as i64;
    let cp = frame.cp_len as i64;
    let step = T::two_pi() * epsilon / T::from_usize_lossy(params.n);
    let symbols = frame
        .symbols
        .iter()
        .enumerate()
        .map(|(l, sym)| {
            sym.iter()
                .enumerate()
                .map(|(pos, z)| {
                    let counter = pos as i64 - cp + l as i64 * n;
                    z * cis(step * T::from_i64(counter).expect("counter fits"))
                })
                .collect()
        })
        .collect();
    TimeFrame {
        symbols,
        cp_len: frame.cp_len,
    }
}

/// Draws a Wiener phase walk `φ(l) = φ(l-1) + N(0, σ²)` with `φ(-1) = 0`.
pub fn phn_walk<T: Real>(len: usize, sigma2: T, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = sigma2.sqrt();
    let mut phi = T::zero();
    (0..len)
        .map(|_| {
            let g: f64 = StandardNormal.sample(&mut rng);
            phi = phi + sigma * T::lit(g);
            phi
        })
        .collect()
}

/// Rotates every sample of symbol `l` by `e^{jφ_PHN(l)}`.
///
/// If `state` has no trajectory yet, one is drawn with [`phn_walk`] and stored.
pub fn apply_phn<T: Real>(
    frame: &TimeFrame<T>,
    state: &mut ImpairmentState<T>,
    seed: u64,
) -> Result<TimeFrame<T>> {
    let traj = state
        .phn_trajectory
        .get_or_insert_with(|| phn_walk(frame.symbols.len(), state.phn_sigma2, seed));
    if traj.len() < frame.symbols.len() {
        return Err(Error::dim(format!(
            "phase-noise trajectory has {} entries for {} symbols",
            traj.len(),
            frame.symbols.len()
        )));
    }
    let symbols = frame
        .symbols
        .iter()
        .zip(traj.iter())
        .map(|(sym, &phi)| {
            if phi == T::zero() {
                return sym.clone();
            }
            let rot = cis(phi);
            sym.iter().map(|z| z * rot).collect()
        })
        .collect();
    Ok(TimeFrame {
        symbols,
        cp_len: frame.cp_len,
    })
}

/// Adds circular complex Gaussian noise at `snr_db` relative to the measured
/// mean sample power. `+∞` leaves the frame untouched.
pub fn apply_awgn<T: Real>(frame: &TimeFrame<T>, snr_db: T, seed: u64) -> Result<TimeFrame<T>> {
    if snr_db == T::infinity() {
        return Ok(frame.clone());
    }
    let count = frame.num_samples();
    let power = if count == 0 {
        T::zero()
    } else {
        frame
            .samples()
            .map(|z| z.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            / T::from_usize_lossy(count)
    };
    if power.is_nan() || power <= T::zero() {
        return Err(Error::ZeroPower);
    }
    let variance = power / T::lit(10.0).powf(snr_db / T::lit(10.0));
    let sd = (variance / T::lit(2.0)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symbols = frame
        .symbols
        .iter()
        .map(|sym| {
            sym.iter()
                .map(|z| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    z + Complex::new(T::lit(re), T::lit(im)) * sd
                })
                .collect()
        })
        .collect();
    Ok(TimeFrame {
        symbols,
        cp_len: frame.cp_len,
    })
}

/// `H(k) = Σ_d h_d e^{-j2πkd/N}`.
pub fn frequency_response<T: Real>(taps: &[Complex<T>], n: usize) -> Vec<Complex<T>> {
    let nf = T::from_usize_lossy(n);
    (0..n)
        .map(|k| {
            taps.iter()
                .enumerate()
                .fold(Complex::new(T::zero(), T::zero()), |acc, (d, h)| {
                    let idx = (k * d) % n;
                    acc + h * cis(-T::two_pi() * T::from_usize_lossy(idx) / nf)
                })
        })
        .collect()
}

/// Per-symbol frequency response `H_l(k)`, indexed `[l][k]`.
pub type Response<T> = Vec<Vec<Complex<T>>>;

/// Multiplies each grid cell by the channel response and returns the realized
/// per-symbol `H_l(k)` alongside the faded grid.
pub fn apply_channel<T: Real>(
    grid: &FreqGrid<T>,
    channel: &ChannelModel<T>,
    params: &OfdmParams,
    seed: u64,
) -> Result<(FreqGrid<T>, Response<T>)> {
    grid.check(params)?;
    if channel.taps.len() > params.cp_len.max(1) {
        return Err(Error::invalid(format!(
            "channel has {} taps, longer than cp_len {}",
            channel.taps.len(),
            params.cp_len
        )));
    }
    let l_symbols = grid.symbols.len();
    let one = Complex::new(T::one(), T::zero());
    let response: Vec<Vec<Complex<T>>> = match channel.kind {
        ChannelKind::Identity => vec![vec![one; params.n]; l_symbols],
        ChannelKind::StaticTaps => {
            let h = frequency_response(&channel.taps, params.n);
            vec![h; l_symbols]
        }
        ChannelKind::BlockRayleigh => rayleigh_taps(channel, l_symbols, seed)?
            .iter()
            .map(|taps| frequency_response(taps, params.n))
            .collect(),
    };
    let symbols = grid
        .symbols
        .iter()
        .zip(&response)
        .map(|(row, h)| row.iter().zip(h).map(|(s, h)| s * h).collect())
        .collect();
    Ok((
        FreqGrid {
            symbols,
            known: grid.known.clone(),
        },
        response,
    ))
}

/// Per-symbol Rayleigh tap draws, `h_l = ρ h_{l-1} + √(1-ρ²) w_l` with
/// `w_l ~ CN(0, p_d)`.
pub fn rayleigh_taps<T: Real>(
    channel: &ChannelModel<T>,
    l_symbols: usize,
    seed: u64,
) -> Result<Vec<Vec<Complex<T>>>> {
    let rho = channel.rho;
    if !(rho >= T::zero() && rho <= T::one()) {
        return Err(Error::invalid("rho must lie in [0, 1]"));
    }
    let mut profile: Vec<T> = channel.taps.iter().map(|h| h.norm_sqr()).collect();
    if profile.is_empty() {
        profile.push(T::one());
    }
    let total = profile.iter().fold(T::zero(), |a, &b| a + b);
    if total.is_nan() || total <= T::zero() {
        return Err(Error::invalid("power-delay profile has zero power"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |p: T| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex::new(T::lit(re), T::lit(im)) * (p / total / T::lit(2.0)).sqrt()
    };
    let innov = (T::one() - rho * rho).sqrt();
    let mut out: Vec<Vec<Complex<T>>> = Vec::with_capacity(l_symbols);
    for l in 0..l_symbols {
        let taps = profile
            .iter()
            .enumerate()
            .map(|(d, &p)| match out.get(l.wrapping_sub(1)) {
                Some(prev) if l > 0 => prev[d] * rho + draw(p) * innov,
                _ => draw(p),
            })
            .collect();
        out.push(taps);
    }
    Ok(out)
}

/// Minimum sample count for [`spectrum_moment4`].
pub const MIN_SPECTRUM_POINTS: usize = 4096;

/// The uniform frequency grid over [-π, π] (endpoints included) that
/// [`spectrum_moment4`] assumes its samples lie on.
pub fn spectrum_grid<T: Real>(len: usize) -> Vec<T> {
    let step = T::two_pi() / T::from_usize_lossy(len - 1);
    (0..len)
        .map(|i| -T::PI() + step * T::from_usize_lossy(i))
        .collect()
}

fn trapezoid<T: Real>(values: impl Iterator<Item = T>, step: T) -> T {
    let mut first = None;
    let mut last = T::zero();
    let mut sum = T::zero();
    for v in values {
        if first.is_none() {
            first = Some(v);
        }
        sum = sum + v;
        last = v;
    }
    let half = T::lit(0.5);
    (sum - half * (first.unwrap_or(T::zero()) + last)) * step
}

/// `(1/2π) ∫ w⁴ S(w) dw` over [-π, π] by the trapezoid rule.
///
/// `density` holds `S(w)` sampled on [`spectrum_grid`]. The density must be
/// normalized, `(1/2π) ∫ S(w) dw = 1` within 1e-3.
pub fn spectrum_moment4<T: Real>(density: &[T]) -> Result<T> {
    if density.len() < MIN_SPECTRUM_POINTS {
        return Err(Error::invalid(format!(
            "spectrum needs at least {MIN_SPECTRUM_POINTS} samples, got {}",
            density.len()
        )));
    }
    if density.iter().any(|s| !s.is_finite() || *s < T::zero()) {
        return Err(Error::invalid(
            "spectrum samples must be finite and non-negative",
        ));
    }
    let w = spectrum_grid::<T>(density.len());
    let step = w[1] - w[0];
    let norm = trapezoid(density.iter().copied(), step) / T::two_pi();
    if (norm - T::one()).abs() > T::lit(1e-3) {
        return Err(Error::invalid(format!(
            "spectrum is not a normalized density: (1/2π)∫S = {norm}"
        )));
    }
    let m4 = trapezoid(w.iter().zip(density).map(|(&w, &s)| w.powi(4) * s), step);
    Ok(m4 / T::two_pi())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::txrx::{modulate_frame, random_grid, ConstellationKind, ConstellationSpec};
    use std::f64::consts::PI;

    fn params() -> OfdmParams {
        OfdmParams {
            n: 16,
            cp_len: 4,
            l_symbols: 3,
        }
    }

    fn frame(seed: u64) -> TimeFrame<f64> {
        let p = params();
        let g = random_grid(&p, &ConstellationSpec::data(ConstellationKind::Qpsk), seed);
        modulate_frame(&g, &p).unwrap()
    }

    fn max_diff(a: &TimeFrame<f64>, b: &TimeFrame<f64>) -> f64 {
        a.samples()
            .zip(b.samples())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    fn unit_frame(p: &OfdmParams) -> TimeFrame<f64> {
        TimeFrame {
            symbols: vec![vec![Complex::new(1.0, 0.0); p.n + p.cp_len]; p.l_symbols],
            cp_len: p.cp_len,
        }
    }

    #[test]
    fn zero_cfo_is_identity() {
        let f = frame(1);
        assert_eq!(apply_cfo(&f, 0.0, &params()), f);
    }

    #[test]
    fn cfo_phase_at_known_points() {
        let p = params();
        let f = unit_frame(&p);
        // ε = 1, body sample N/2 of symbol 0: half a turn.
        let g = apply_cfo(&f, 1.0, &p);
        assert!((g.body(0)[8] - Complex::new(-1.0, 0.0)).norm() < 1e-14);
        // ε = 0.5, body sample 0 of symbol 1: 2π·0.5·N/N = π.
        let g = apply_cfo(&f, 0.5, &p);
        assert!((g.body(1)[0] - Complex::new(-1.0, 0.0)).norm() < 1e-14);
        // prefix continues the counter backwards.
        let want = Complex::from_polar(1.0, -2.0 * PI * 0.5 * 4.0 / 16.0);
        assert!((g.symbols[0][0] - want).norm() < 1e-14);
    }

    #[test]
    fn phn_zero_variance_is_identity() {
        let f = frame(2);
        let mut st =
            ImpairmentState::new(0.0, 0.0, f64::INFINITY, ChannelModel::identity()).unwrap();
        let g = apply_phn(&f, &mut st, 3).unwrap();
        assert_eq!(g, f);
        assert_eq!(st.phn_trajectory.unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn phn_fixed_trajectory_rotates_symbol() {
        let p = OfdmParams {
            l_symbols: 1,
            ..params()
        };
        let f = unit_frame(&p);
        let mut st =
            ImpairmentState::new(0.0, 0.0, f64::INFINITY, ChannelModel::identity()).unwrap();
        st.phn_trajectory = Some(vec![0.1]);
        let g = apply_phn(&f, &mut st, 0).unwrap();
        for z in g.samples() {
            assert!((z.arg() - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn phn_short_trajectory_is_rejected() {
        let f = frame(1);
        let mut st = ImpairmentState::new(0.0, 0.0, 10.0, ChannelModel::identity()).unwrap();
        st.phn_trajectory = Some(vec![0.0]);
        assert!(apply_phn(&f, &mut st, 0).is_err());
        assert!(ImpairmentState::new(0.0, -1.0, 10.0, ChannelModel::<f64>::identity()).is_err());
    }

    #[test]
    fn phn_walk_variance_grows_linearly() {
        let sigma2 = 0.01;
        let trials = 10_000;
        let len = 20;
        let mut sumsq = vec![0.0; len];
        for t in 0..trials {
            for (l, phi) in phn_walk::<f64>(len, sigma2, t).into_iter().enumerate() {
                sumsq[l] += phi * phi;
            }
        }
        for (l, s) in sumsq.iter().enumerate() {
            let var = s / trials as f64;
            let want = (l + 1) as f64 * sigma2;
            assert!(
                (var / want - 1.0).abs() < 0.1,
                "l={l} var={var} want={want}"
            );
        }
    }

    #[test]
    fn awgn_infinite_snr_and_zero_power() {
        let f = frame(4);
        assert_eq!(apply_awgn(&f, f64::INFINITY, 1).unwrap(), f);
        let p = params();
        let z = TimeFrame {
            symbols: vec![vec![Complex::new(0.0, 0.0); 20]; 3],
            cp_len: p.cp_len,
        };
        assert!(matches!(apply_awgn(&z, 10.0, 1), Err(Error::ZeroPower)));
    }

    #[test]
    fn awgn_hits_target_snr() {
        let p = OfdmParams {
            n: 1024,
            cp_len: 0,
            l_symbols: 1000,
        };
        let f = unit_frame(&p);
        let noisy = apply_awgn(&f, 7.0, 99).unwrap();
        let noise: f64 = f
            .samples()
            .zip(noisy.samples())
            .map(|(a, b)| (b - a).norm_sqr())
            .sum::<f64>()
            / f.num_samples() as f64;
        let snr = 10.0 * (1.0 / noise).log10();
        assert!((snr - 7.0).abs() < 0.1, "{snr}");
        assert_eq!(noisy, apply_awgn(&f, 7.0, 99).unwrap());
    }

    #[test]
    fn identity_channel_and_delay_theorem() {
        let p = OfdmParams {
            n: 4,
            cp_len: 2,
            l_symbols: 2,
        };
        let g = random_grid::<f64>(&p, &ConstellationSpec::data(ConstellationKind::Qpsk), 1);
        let (out, h) = apply_channel(&g, &ChannelModel::identity(), &p, 0).unwrap();
        assert_eq!(out, g);
        assert!(h.iter().flatten().all(|z| *z == Complex::new(1.0, 0.0)));

        let ch = ChannelModel::static_taps(vec![Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)]);
        let (_, h) = apply_channel(&g, &ch, &p, 0).unwrap();
        for (k, z) in h[0].iter().enumerate() {
            let want = Complex::from_polar(1.0, -2.0 * PI * k as f64 / 4.0);
            assert!((z - want).norm() < 1e-15);
        }
    }

    #[test]
    fn long_channel_is_rejected() {
        let p = OfdmParams {
            n: 8,
            cp_len: 2,
            l_symbols: 1,
        };
        let g = FreqGrid::<f64>::zeros(&p);
        let ch = ChannelModel::static_taps(vec![Complex::new(1.0, 0.0); 3]);
        assert!(apply_channel(&g, &ch, &p, 0).is_err());
    }

    #[test]
    fn static_channel_matches_circular_convolution() {
        let p = OfdmParams {
            n: 32,
            cp_len: 4,
            l_symbols: 2,
        };
        let g = random_grid::<f64>(&p, &ConstellationSpec::data(ConstellationKind::Qpsk), 8);
        let taps = vec![
            Complex::new(0.8, 0.1),
            Complex::new(-0.3, 0.4),
            Complex::new(0.2, -0.2),
            Complex::new(0.05, 0.1),
        ];
        let (faded, _) =
            apply_channel(&g, &ChannelModel::static_taps(taps.clone()), &p, 0).unwrap();
        let tx = modulate_frame(&g, &p).unwrap();
        let rx = modulate_frame(&faded, &p).unwrap();
        for l in 0..2 {
            let body = tx.body(l);
            for n in 0..p.n {
                let conv: Complex<f64> = (0..taps.len())
                    .map(|d| taps[d] * body[(n + p.n - d) % p.n])
                    .sum();
                assert!((conv - rx.body(l)[n]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn rayleigh_is_seeded_and_correlated() {
        let ch =
            ChannelModel::block_rayleigh(vec![Complex::new(1.0, 0.0), Complex::new(0.5, 0.0)], 0.9);
        let a = rayleigh_taps::<f64>(&ch, 4000, 5).unwrap();
        assert_eq!(a, rayleigh_taps(&ch, 4000, 5).unwrap());
        let power: f64 = a
            .iter()
            .map(|t| t.iter().map(|h| h.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            / 4000.0;
        assert!((power - 1.0).abs() < 0.15, "{power}");
        let corr: f64 = a
            .windows(2)
            .map(|w| (w[1][0] * w[0][0].conj()).re)
            .sum::<f64>()
            / a.iter().map(|t| t[0].norm_sqr()).sum::<f64>();
        assert!((corr - 0.9).abs() < 0.05, "{corr}");
    }

    #[test]
    fn moment_of_flat_density() {
        let s = vec![1.0; 4096];
        let m = spectrum_moment4(&s).unwrap();
        assert!((m - PI.powi(4) / 5.0).abs() < 1e-4, "{m}");
    }

    #[test]
    fn moment_of_point_masses() {
        let len = 4097;
        let w = spectrum_grid::<f64>(len);
        let step = w[1] - w[0];
        // a single interior sample integrates to step·S under the trapezoid rule
        let at = |target: f64| w.iter().position(|x| (x - target).abs() < 1e-9).unwrap();
        let mut s = vec![0.0; len];
        s[at(0.0)] = 2.0 * PI / step;
        assert!(spectrum_moment4(&s).unwrap().abs() < 1e-12);

        let mut s = vec![0.0; len];
        s[at(PI / 2.0)] = PI / step;
        s[at(-PI / 2.0)] = PI / step;
        let m = spectrum_moment4(&s).unwrap();
        assert!((m - (PI / 2.0).powi(4)).abs() < 1e-3, "{m}");
    }

    #[test]
    fn moment_rejects_bad_density() {
        assert!(spectrum_moment4(&vec![2.0; 4096]).is_err());
        assert!(spectrum_moment4(&vec![1.0; 100]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cfo_is_additive(seed in 0u64..1000, e1 in -2.0f64..2.0, e2 in -2.0f64..2.0) {
                let p = params();
                let f = frame(seed);
                let two = apply_cfo(&apply_cfo(&f, e1, &p), e2, &p);
                let one = apply_cfo(&f, e1 + e2, &p);
                prop_assert!(max_diff(&two, &one) < 1e-12);
                let back = apply_cfo(&apply_cfo(&f, e1, &p), -e1, &p);
                prop_assert!(max_diff(&back, &f) < 1e-12);
            }

            #[test]
            fn cfo_keeps_magnitudes(seed in 0u64..1000, e in -3.0f64..3.0) {
                let p = params();
                let f = frame(seed);
                let g = apply_cfo(&f, e, &p);
                for (a, b) in f.samples().zip(g.samples()) {
                    prop_assert!((a.norm() - b.norm()).abs() < 1e-14);
                }
            }

            #[test]
            fn phn_commutes_with_cfo(seed in 0u64..1000, e in -1.0f64..1.0) {
                let p = params();
                let f = frame(seed);
                let mut st = ImpairmentState::new(e, 0.05, 10.0, ChannelModel::identity()).unwrap();
                let a = apply_cfo(&apply_phn(&f, &mut st, seed).unwrap(), e, &p);
                let b = apply_phn(&apply_cfo(&f, e, &p), &mut st, seed).unwrap();
                prop_assert!(max_diff(&a, &b) < 1e-12);
            }

            #[test]
            fn moment_is_linear_and_even(a in 0.0f64..1.0, tilt in -0.2f64..0.2) {
                let w = spectrum_grid::<f64>(4096);
                let s1: Vec<f64> = w.iter().map(|x| 1.0 + tilt * x.sin() + 0.5 * x.cos()).collect();
                let flat = vec![1.0; 4096];
                let mix: Vec<f64> = s1.iter().zip(&flat).map(|(x, y)| a * x + (1.0 - a) * y).collect();
                let m1 = spectrum_moment4(&s1).unwrap();
                let mf = spectrum_moment4(&flat).unwrap();
                let mm = spectrum_moment4(&mix).unwrap();
                prop_assert!((mm - (a * m1 + (1.0 - a) * mf)).abs() < 1e-9);
                let rev: Vec<f64> = s1.iter().rev().copied().collect();
                prop_assert!((spectrum_moment4(&rev).unwrap() - m1).abs() < 1e-9);
            }
        }
    }
}
