//! Born-rule photon counts: expected (ideal operators) and measured
//! (jitter-blurred operators).
//!
//! Counts are real-valued expectations `N Tr{M(t_k) rho}`; no shot noise is
//! sampled. The only distortion between the two vectors is detector jitter.

use thiserror::Error;

use crate::linalg::DensityMatrix;
use crate::povm::{MeasurementSet, TimeGrid};
use crate::pulse::PulseConfig;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CountError {
    #[error("state has dimension {found}, measurement expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountRecord {
    pub time: f64,
    pub expected: f64,
    pub measured: f64,
}

/// `N Tr{M_k rho}` for each element of `set`.
pub fn counts_for(set: &MeasurementSet, rho: &DensityMatrix, photons: f64) -> Result<Vec<f64>, CountError> {
    if set.dim() != rho.dim() {
        return Err(CountError::DimensionMismatch {
            expected: set.dim(),
            found: rho.dim(),
        });
    }
    Ok(counts_unchecked(set, rho, photons))
}

pub(crate) fn counts_unchecked(set: &MeasurementSet, rho: &DensityMatrix, photons: f64) -> Vec<f64> {
    set.elements()
        .iter()
        .map(|e| photons * e.matrix.trace_product_real(rho.matrix()).max(0.0))
        .collect()
}

pub fn expected_counts(rho: &DensityMatrix, grid: &TimeGrid, cfg: &PulseConfig) -> Result<Vec<f64>, CountError> {
    counts_for(&MeasurementSet::ideal(cfg, grid), rho, cfg.photons)
}

pub fn measured_counts(rho: &DensityMatrix, grid: &TimeGrid, cfg: &PulseConfig) -> Result<Vec<f64>, CountError> {
    counts_for(&MeasurementSet::jittered(cfg, grid), rho, cfg.photons)
}

/// Both count vectors, zipped with their detection instants.
pub fn simulate(rho: &DensityMatrix, grid: &TimeGrid, cfg: &PulseConfig) -> Result<Vec<CountRecord>, CountError> {
    let expected = expected_counts(rho, grid, cfg)?;
    let measured = measured_counts(rho, grid, cfg)?;
    Ok(grid
        .instants()
        .iter()
        .zip(expected.into_iter().zip(measured))
        .map(|(&time, (expected, measured))| CountRecord {
            time,
            expected,
            measured,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexMatrix;
    use crate::povm::make_time_grid;
    use crate::sampling::random_state;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn equatorial(phi: f64) -> DensityMatrix {
        let off = Complex64::from_polar(0.5, -phi);
        let m = ComplexMatrix::from_rows(&[
            vec![Complex64::new(0.5, 0.0), off],
            vec![off.conj(), Complex64::new(0.5, 0.0)],
        ]);
        crate::linalg::validate_density(&m).unwrap()
    }

    #[test]
    fn maximally_mixed_gives_weight_over_d() {
        for dim in [2, 3] {
            let cfg = PulseConfig::default().with_dim(dim).with_length(300.0);
            let grid = make_time_grid(&cfg, 13).unwrap();
            let set = MeasurementSet::ideal(&cfg, &grid);
            let n = expected_counts(&DensityMatrix::maximally_mixed(dim), &grid, &cfg).unwrap();
            for (e, count) in set.elements().iter().zip(&n) {
                let want = cfg.photons * e.weight / dim as f64;
                assert!((count - want).abs() <= 1e-12 * want);
            }
        }
    }

    #[test]
    fn orthogonal_support_gives_nothing() {
        let cfg = PulseConfig::default();
        let grid = TimeGrid::new(vec![cfg.tau + 6.0 * cfg.sigma0]);
        let ket1 = DensityMatrix::pure(&[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        let ket0 = DensityMatrix::pure(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let n0 = expected_counts(&ket0, &grid, &cfg).unwrap()[0];
        let n1 = expected_counts(&ket1, &grid, &cfg).unwrap()[0];
        assert!(n0 < 1e-12 * n1);
    }

    #[test]
    fn equatorial_midpoint_count() {
        let cfg = PulseConfig::default();
        let t = cfg.tau / 2.0;
        let grid = TimeGrid::new(vec![t]);
        let u = cfg.amplitude(0, t).re;
        let mu = 2.0 * u * u;
        for phi in [0.0, PI / 3.0, PI / 2.0, PI] {
            let n = expected_counts(&equatorial(phi), &grid, &cfg).unwrap()[0];
            // Tr{(mu/2)[[1,1],[1,1]] rho(phi)} by hand
            let want = cfg.photons * mu * (1.0 + phi.cos()) / 2.0;
            assert!((n - want).abs() <= 1e-12 * cfg.photons * mu, "phi={phi}");
        }
    }

    #[test]
    fn zero_jitter_measured_equals_expected() {
        let cfg = PulseConfig::default().with_length(200.0);
        let grid = make_time_grid(&cfg, 13).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let rho = random_state(&mut rng, 2);
            let e = expected_counts(&rho, &grid, &cfg).unwrap();
            let m = measured_counts(&rho, &grid, &cfg).unwrap();
            for (a, b) in e.iter().zip(&m) {
                assert!((a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE));
            }
        }
    }

    #[test]
    fn jitter_redistributes_without_creating_counts() {
        for dim in [2, 3] {
            let cfg = PulseConfig::default().with_dim(dim).with_length(200.0).with_jitter(1e-12);
            let rho = DensityMatrix::maximally_mixed(dim);
            let w = cfg.dispersed_width().hypot(cfg.sigma_d);
            let n = 2000;
            let (a, b) = (-12.0 * w, cfg.bin_center(dim - 1) + 12.0 * w);
            let h = (b - a) / n as f64;
            let dense = TimeGrid::new((0..=n).map(|i| a + i as f64 * h).collect());
            let simpson = |v: &[f64]| {
                v.iter()
                    .enumerate()
                    .map(|(i, x)| x * if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 })
                    .sum::<f64>()
                    * h
                    / 3.0
            };
            let e = simpson(&expected_counts(&rho, &dense, &cfg).unwrap());
            let m = simpson(&measured_counts(&rho, &dense, &cfg).unwrap());
            assert!((e / m - 1.0).abs() < 1e-4);
            assert!((e / cfg.photons - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn jitter_channel_is_active() {
        let cfg = PulseConfig::default().with_length(200.0).with_jitter(1e-12);
        let grid = make_time_grid(&cfg, 13).unwrap();
        let rho = equatorial(PI / 2.0);
        let e = expected_counts(&rho, &grid, &cfg).unwrap();
        let m = measured_counts(&rho, &grid, &cfg).unwrap();
        let worst = e
            .iter()
            .zip(&m)
            .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()))
            .fold(0.0, f64::max);
        assert!(worst > 1e-3, "max relative deviation {worst}");
    }

    #[test]
    fn linear_in_state_and_photons() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for dim in [2, 3] {
            let cfg = PulseConfig::default().with_dim(dim).with_length(500.0).with_jitter(1e-12);
            let grid = make_time_grid(&cfg, 13).unwrap();
            for _ in 0..10 {
                let r1 = random_state(&mut rng, dim);
                let r2 = random_state(&mut rng, dim);
                let alpha = 0.3;
                let mix = r1.mix(&r2, alpha).unwrap();
                for f in [expected_counts, measured_counts] {
                    let c1 = f(&r1, &grid, &cfg).unwrap();
                    let c2 = f(&r2, &grid, &cfg).unwrap();
                    let cm = f(&mix, &grid, &cfg).unwrap();
                    let scale = cfg.photons * 1e12;
                    for k in 0..grid.len() {
                        let lin = alpha * c1[k] + (1.0 - alpha) * c2[k];
                        assert!((cm[k] - lin).abs() <= 1e-10 * scale);
                    }
                    let doubled = f(&r1, &grid, &cfg.with_photons(2.0 * cfg.photons)).unwrap();
                    for k in 0..grid.len() {
                        assert_eq!(doubled[k], 2.0 * c1[k]);
                    }
                }
            }
        }
    }

    #[test]
    fn nonnegative_for_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for dim in [2, 3] {
            let cfg = PulseConfig::default().with_dim(dim).with_length(400.0).with_jitter(2e-12);
            let grid = make_time_grid(&cfg, 13).unwrap();
            for _ in 0..100 {
                let rho = random_state(&mut rng, dim);
                for r in simulate(&rho, &grid, &cfg).unwrap() {
                    assert!(r.expected >= 0.0 && r.measured >= 0.0);
                }
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let cfg = PulseConfig::default().with_dim(3);
        let grid = make_time_grid(&cfg, 13).unwrap();
        assert!(matches!(
            expected_counts(&DensityMatrix::maximally_mixed(2), &grid, &cfg),
            Err(CountError::DimensionMismatch { expected: 3, found: 2 })
        ));
    }
}
