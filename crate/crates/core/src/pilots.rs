//! Pilot lattices over the symbol × subcarrier grid and the isotropy rule
//! that ties the symbol interval `x1` to the subcarrier interval `y2`.
//!
//! Every pattern is parameterized by the same `(x1, y2)` pair:
//!
//! * block: every subcarrier of symbols `l ≡ 0 (mod x1)`
//! * comb: subcarriers `k ≡ 0 (mod y2)` of every symbol
//! * rectangular: both conditions
//! * hexagonal, diamond: rectangular, with every other pilot row offset by `⌊y2/2⌋`
//! * parallelogram: rectangular, pilot row `r` sheared by `r·⌊y2/2⌋ (mod N)`

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{validate, OfdmParams, PatternKind, PilotGeometry};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct PilotLattice {
    /// Pilot cells `(l, k)`.
    pub points: BTreeSet<(usize, usize)>,
    pub kind: PatternKind,
    /// Fraction of grid cells that are pilots.
    pub density: f64,
}

impl PilotLattice {
    pub fn from_points(
        kind: PatternKind,
        points: impl IntoIterator<Item = (usize, usize)>,
        params: &OfdmParams,
    ) -> Self {
        let points: BTreeSet<_> = points.into_iter().collect();
        let density = points.len() as f64 / (params.l_symbols * params.n) as f64;
        Self {
            points,
            kind,
            density,
        }
    }

    /// Lattice rows as `l,k` CSV, header included.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("l,k\n");
        for (l, k) in &self.points {
            out.push_str(&format!("{l},{k}\n"));
        }
        out
    }
}

fn strided(n: usize, step: usize, offset: usize) -> impl Iterator<Item = usize> {
    let count = n.div_ceil(step);
    (0..count).map(move |j| (j * step + offset) % n)
}

pub fn gen_pattern(
    kind: PatternKind,
    params: &OfdmParams,
    geometry: &PilotGeometry,
) -> Result<PilotLattice> {
    validate(params, geometry)?;
    let (n, x1, y2) = (params.n, geometry.x1, geometry.y2);
    let half = y2 / 2;
    let mut points = BTreeSet::new();
    for l in 0..params.l_symbols {
        let on_row = l % x1 == 0;
        let row = l / x1;
        match kind {
            PatternKind::Block if on_row => points.extend((0..n).map(|k| (l, k))),
            PatternKind::Comb => points.extend(strided(n, y2, 0).map(|k| (l, k))),
            PatternKind::Rectangular if on_row => points.extend(strided(n, y2, 0).map(|k| (l, k))),
            PatternKind::Hexagonal | PatternKind::Diamond if on_row => {
                let offset = if row % 2 == 1 { half } else { 0 };
                points.extend(
                    (0..n.div_ceil(y2))
                        .map(|j| j * y2 + offset)
                        .filter(|&k| k < n)
                        .map(|k| (l, k)),
                );
            }
            PatternKind::Parallelogram if on_row => {
                points.extend(strided(n, y2, (row * half) % n).map(|k| (l, k)))
            }
            _ => {}
        }
    }
    Ok(PilotLattice::from_points(kind, points, params))
}

/// Symbols holding at least one pilot, ascending.
pub fn pilot_bearing_symbols(lattice: &PilotLattice) -> Vec<usize> {
    let rows: BTreeSet<usize> = lattice.points.iter().map(|&(l, _)| l).collect();
    rows.into_iter().collect()
}

/// `m1·x1⁴ − m2·y2⁴`, zero on the isotropic line.
pub fn isotropy_gap<T: Real>(x1: T, y2: T, m1: T, m2: T) -> T {
    m1 * x1.powi(4) - m2 * y2.powi(4)
}

/// Subcarrier interval that balances the isotropy condition for a given
/// symbol interval: the real root `(m1/m2)^{1/4}·x1`, and its lattice value
/// `max(1, ⌊root⌋)`.
pub fn solve_y2<T: Real>(x1: T, m1: T, m2: T) -> Result<(T, usize)> {
    if m2.is_nan() || m2 <= T::zero() {
        return Err(Error::invalid("solve_y2 requires m2 > 0"));
    }
    if m1 < T::zero() || x1 < T::zero() {
        return Err(Error::invalid("solve_y2 requires m1 >= 0 and x1 >= 0"));
    }
    let real = (m1 / m2).powf(T::lit(0.25)) * x1;
    // guard against 3.9999999 from the fourth root
    let snapped = (real + T::lit(1e-9)).floor();
    let lattice = snapped.to_usize().unwrap_or(usize::MAX).max(1);
    Ok((real, lattice))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(n: usize, l: usize, x1: usize, y2: usize) -> (OfdmParams, PilotGeometry) {
        (
            OfdmParams {
                n,
                cp_len: 0,
                l_symbols: l,
            },
            PilotGeometry {
                delta_t: 1,
                n_p: 2,
                pattern: PatternKind::Rectangular,
                x1,
                y2,
            },
        )
    }

    fn cells(l: impl IntoIterator<Item = usize> + Clone, k: &[usize]) -> BTreeSet<(usize, usize)> {
        l.into_iter()
            .flat_map(|l| k.iter().map(move |&k| (l, k)))
            .collect()
    }

    #[test]
    fn comb_lattice() {
        let (p, g) = setup(16, 4, 1, 4);
        let lat = gen_pattern(PatternKind::Comb, &p, &g).unwrap();
        assert_eq!(lat.points, cells(0..4, &[0, 4, 8, 12]));
        assert_eq!(pilot_bearing_symbols(&lat), vec![0, 1, 2, 3]);
    }

    #[test]
    fn rectangular_lattice() {
        let (p, g) = setup(16, 8, 4, 4);
        let lat = gen_pattern(PatternKind::Rectangular, &p, &g).unwrap();
        assert_eq!(lat.points, cells([0, 4], &[0, 4, 8, 12]));
        assert_eq!(pilot_bearing_symbols(&lat), vec![0, 4]);
        assert_eq!(lat.density, 8.0 / 128.0);
    }

    #[test]
    fn diamond_offsets_alternate_rows() {
        let (p, g) = setup(16, 8, 4, 4);
        let lat = gen_pattern(PatternKind::Diamond, &p, &g).unwrap();
        let mut want = cells([0], &[0, 4, 8, 12]);
        want.extend(cells([4], &[2, 6, 10, 14]));
        assert_eq!(lat.points, want);
        assert_eq!(
            gen_pattern(PatternKind::Hexagonal, &p, &g).unwrap().points,
            want
        );
    }

    #[test]
    fn parallelogram_shears_rows() {
        let (p, g) = setup(16, 12, 4, 4);
        let lat = gen_pattern(PatternKind::Parallelogram, &p, &g).unwrap();
        let mut want = cells([0], &[0, 4, 8, 12]);
        want.extend(cells([4], &[2, 6, 10, 14]));
        want.extend(cells([8], &[0, 4, 8, 12]));
        assert_eq!(lat.points, want);
    }

    #[test]
    fn block_lattice() {
        let (p, g) = setup(8, 5, 2, 4);
        let lat = gen_pattern(PatternKind::Block, &p, &g).unwrap();
        assert_eq!(lat.points, cells([0, 2, 4], &[0, 1, 2, 3, 4, 5, 6, 7]));
    }

    #[test]
    fn empty_lattice_has_no_symbols() {
        let (p, _) = setup(8, 4, 1, 1);
        let lat = PilotLattice::from_points(PatternKind::Comb, [], &p);
        assert!(pilot_bearing_symbols(&lat).is_empty());
    }

    #[test]
    fn csv_rows() {
        let (p, g) = setup(4, 2, 2, 2);
        let lat = gen_pattern(PatternKind::Rectangular, &p, &g).unwrap();
        assert_eq!(lat.to_csv(), "l,k\n0,0\n0,2\n");
    }

    #[test]
    fn isotropy_examples() {
        assert_eq!(isotropy_gap(3.0, 3.0, 1.0, 1.0), 0.0);
        assert_eq!(isotropy_gap(1.0, 2.0, 16.0, 1.0), 0.0);
        assert_eq!(isotropy_gap(2.0, 1.0, 1.0, 1.0), 15.0);
    }

    #[test]
    fn solve_y2_examples() {
        let (r, i) = solve_y2::<f64>(4.0, 2.5, 2.5).unwrap();
        assert!((r - 4.0).abs() < 1e-12);
        assert_eq!(i, 4);
        let (r, i) = solve_y2::<f64>(1.0, 16.0, 1.0).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
        assert_eq!(i, 2);
        let (r, i) = solve_y2::<f64>(4.0, 1.0, 16.0).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
        assert_eq!(i, 2);
        assert_eq!(solve_y2(1.0, 1.0, 100.0).unwrap().1, 1);
        assert!(solve_y2(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn default_density_in_band() {
        // x1 = 8 symbols, y2 = 4 subcarriers; and the harness pilot-only config.
        for (n, l, x1, y2) in [(64, 16, 8, 4), (128, 17, 8, 16)] {
            let (p, g) = setup(n, l, x1, y2);
            let d = gen_pattern(PatternKind::Rectangular, &p, &g)
                .unwrap()
                .density;
            assert!((0.01..=0.05).contains(&d), "{d}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn kind() -> impl Strategy<Value = PatternKind> {
            prop::sample::select(PatternKind::ALL.to_vec())
        }

        proptest! {
            #[test]
            fn density_tracks_analytic(kind in kind(), log_n in 3u32..8, x1 in 1usize..8, y2 in 1usize..8, extra in 0usize..12) {
                let n = 1usize << log_n;
                prop_assume!(y2 <= n);
                let (p, g) = setup(n, x1 + extra, x1, y2);
                let lat = gen_pattern(kind, &p, &g).unwrap();
                let rows = p.l_symbols.div_ceil(x1) as f64 / p.l_symbols as f64;
                let cols = n.div_ceil(y2) as f64 / n as f64;
                let analytic = match kind {
                    PatternKind::Block => rows,
                    PatternKind::Comb => cols,
                    _ => rows * cols,
                };
                match kind {
                    PatternKind::Block | PatternKind::Comb | PatternKind::Rectangular => {
                        prop_assert!((lat.density - analytic).abs() < 1e-12, "{} vs {}", lat.density, analytic);
                    }
                    _ => prop_assert!(lat.density >= 0.5 * analytic && lat.density <= 2.0 * analytic,
                        "{} vs {}", lat.density, analytic),
                }
                prop_assert!(lat.density > 0.0 && lat.density <= 1.0);
                for &(l, k) in &lat.points {
                    prop_assert!(l < p.l_symbols && k < p.n);
                }
            }

            #[test]
            fn isotropic_iff_equal_intervals(x1 in 1u32..50, y2 in 1u32..50, m in 0.01f64..100.0) {
                let gap = isotropy_gap(x1 as f64, y2 as f64, m, m);
                prop_assert_eq!(gap == 0.0, x1 == y2);
            }
        }
    }
}
