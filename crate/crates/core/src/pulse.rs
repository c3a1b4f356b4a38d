//! Gaussian time-bin wave packets after group-velocity dispersion.
//!
//! A transform-limited Gaussian amplitude of intensity width `sigma0`, sent
//! through `length` meters of fiber with dispersion `beta`, acquires the
//! quadratic spectral phase `exp(i beta omega^2 L / 2)`. In the time domain this
//! turns the real variance `sigma0^2` into the complex variance
//! `Sigma = sigma0^2 + i beta L / 2`:
//!
//! ```text
//! u_j(t) = (2 pi sigma0^2)^(-1/4) (1 + i beta L / (2 sigma0^2))^(-1/2)
//!          * exp(-(t - j tau)^2 / (4 Sigma))
//! ```
//!
//! Every amplitude is a [`ComplexGaussian`], which is what makes the jitter
//! convolution in [`crate::povm`] closed-form.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PulseConfigError {
    #[error("{field} must be {requirement}, got {value}")]
    OutOfRange {
        field: &'static str,
        requirement: &'static str,
        value: f64,
    },
}

/// Physical parameters shared by the whole pipeline. Times in seconds,
/// lengths in meters, `beta` in s²/m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseConfig {
    pub sigma0: f64,
    pub tau: f64,
    pub beta: f64,
    pub length: f64,
    pub dim: usize,
    pub sigma_d: f64,
    pub photons: f64,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self {
            sigma0: 1e-12,
            tau: 4e-12,
            beta: 2.3e-26,
            length: 0.0,
            dim: 2,
            sigma_d: 0.0,
            photons: 1e4,
        }
    }
}

impl PulseConfig {
    pub fn with_length(mut self, length: f64) -> Self {
        self.length = length;
        self
    }

    pub fn with_jitter(mut self, sigma_d: f64) -> Self {
        self.sigma_d = sigma_d;
        self
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    pub fn with_photons(mut self, photons: f64) -> Self {
        self.photons = photons;
        self
    }

    /// Checks the hard invariants. Overlapping bins (`tau < 2 sigma0`) only
    /// produce a warning.
    pub fn validate(&self) -> Result<(), PulseConfigError> {
        let check = |ok: bool, field, requirement, value| {
            if ok {
                Ok(())
            } else {
                Err(PulseConfigError::OutOfRange {
                    field,
                    requirement,
                    value,
                })
            }
        };
        check(self.sigma0 > 0.0 && self.sigma0.is_finite(), "sigma0", "> 0", self.sigma0)?;
        check(self.tau > 0.0 && self.tau.is_finite(), "tau", "> 0", self.tau)?;
        check(self.beta.is_finite(), "beta", "finite", self.beta)?;
        check(self.length >= 0.0 && self.length.is_finite(), "length", ">= 0", self.length)?;
        check(self.sigma_d >= 0.0 && self.sigma_d.is_finite(), "sigma_d", ">= 0", self.sigma_d)?;
        check(self.photons >= 1.0 && self.photons.is_finite(), "photons", ">= 1", self.photons)?;
        check(self.dim >= 1, "dim", ">= 1", self.dim as f64)?;
        if self.tau < 2.0 * self.sigma0 {
            log::warn!(
                "time bins overlap before propagation: tau = {:e} s < 2 sigma0 = {:e} s",
                self.tau,
                2.0 * self.sigma0
            );
        }
        Ok(())
    }

    /// `beta L / (2 sigma0^2)`, the dimensionless dispersion strength.
    pub fn dispersion_ratio(&self) -> f64 {
        self.beta * self.length / (2.0 * self.sigma0 * self.sigma0)
    }

    /// `sigma0^2 + i beta L / 2`
    pub fn complex_variance(&self) -> Complex64 {
        Complex64::new(self.sigma0 * self.sigma0, 0.5 * self.beta * self.length)
    }

    /// Standard deviation of the dispersed intensity profile `|u_j(t)|^2`.
    pub fn dispersed_width(&self) -> f64 {
        self.sigma0 * (1.0 + self.dispersion_ratio().powi(2)).sqrt()
    }

    /// Center of time bin `j`.
    pub fn bin_center(&self, bin: usize) -> f64 {
        bin as f64 * self.tau
    }

    /// Amplitude of bin `bin` at time `t`. See the module docs for the formula.
    pub fn amplitude(&self, bin: usize, t: f64) -> Complex64 {
        let variance = self.complex_variance();
        let shifted = t - self.bin_center(bin);
        let prefactor = (2.0 * PI * self.sigma0 * self.sigma0).powf(-0.25)
            / Complex64::new(1.0, self.dispersion_ratio()).sqrt();
        prefactor * (-(shifted * shifted) / (4.0 * variance)).exp()
    }

    /// All `d` amplitudes at time `t`.
    pub fn amplitudes(&self, t: f64) -> Vec<Complex64> {
        (0..self.dim).map(|j| self.amplitude(j, t)).collect()
    }

    /// The amplitude of bin `bin` written as `exp(a t^2 + b t + c)`.
    pub fn amplitude_as_gaussian(&self, bin: usize) -> ComplexGaussian {
        let inv = 1.0 / (4.0 * self.complex_variance());
        let center = self.bin_center(bin);
        let log_prefactor = -0.25 * (2.0 * PI * self.sigma0 * self.sigma0).ln()
            - 0.5 * Complex64::new(1.0, self.dispersion_ratio()).ln();
        ComplexGaussian {
            a: -inv,
            b: 2.0 * center * inv,
            c: -center * center * inv + log_prefactor,
        }
    }
}

/// `exp(a t^2 + b t + c)` with complex coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexGaussian {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
}

impl ComplexGaussian {
    pub fn eval(&self, t: f64) -> Complex64 {
        (self.a * t * t + self.b * t + self.c).exp()
    }

    pub fn conj(&self) -> Self {
        Self {
            a: self.a.conj(),
            b: self.b.conj(),
            c: self.c.conj(),
        }
    }

    /// Pointwise product, again a complex Gaussian.
    pub fn product(&self, other: &Self) -> Self {
        Self {
            a: self.a + other.a,
            b: self.b + other.b,
            c: self.c + other.c,
        }
    }

    pub fn is_integrable(&self) -> bool {
        self.a.re < 0.0
    }

    /// `∫ exp(a t^2 + b t + c) dt` over the real line. Requires `Re a < 0`.
    pub fn integral(&self) -> Complex64 {
        debug_assert!(self.is_integrable());
        let alpha = -self.a;
        (Complex64::from(PI) / alpha).sqrt() * (self.c + self.b * self.b / (4.0 * alpha)).exp()
    }

    /// `∫ g(t') q(t - t') dt'` with `q` the normalized Gaussian of standard
    /// deviation `sigma`. `sigma = 0` returns the point value `g(t)`.
    pub fn convolve_normal(&self, sigma: f64, t: f64) -> Complex64 {
        if sigma == 0.0 {
            return self.eval(t);
        }
        let s2 = sigma * sigma;
        let kernel_weight = 1.0 / (2.0 * PI * s2).sqrt();
        let merged = Self {
            a: self.a - 1.0 / (2.0 * s2),
            b: self.b + t / s2,
            c: self.c - t * t / (2.0 * s2),
        };
        merged.integral() * kernel_weight
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson on [lo, hi] with `n` (even) intervals.
    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let h = (hi - lo) / n as f64;
        let mut s = f(lo) + f(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(lo + i as f64 * h);
        }
        s * h / 3.0
    }

    fn moments(cfg: &PulseConfig, bin: usize) -> (f64, f64, f64) {
        let w = cfg.dispersed_width();
        let c = cfg.bin_center(bin);
        let (lo, hi) = (c - 14.0 * w, c + 14.0 * w);
        let n = 20_000;
        let dens = |t: f64| cfg.amplitude(bin, t).norm_sqr();
        let m0 = simpson(dens, lo, hi, n);
        let m1 = simpson(|t| t * dens(t), lo, hi, n);
        let m2 = simpson(|t| t * t * dens(t), lo, hi, n);
        (m0, m1 / m0, (m2 / m0 - (m1 / m0).powi(2)).sqrt())
    }

    #[test]
    fn peak_at_zero_length() {
        let cfg = PulseConfig::default();
        let peak = cfg.amplitude(0, 0.0).norm_sqr();
        let expected = 1.0 / (2.0 * PI * cfg.sigma0 * cfg.sigma0).sqrt();
        assert!((peak / expected - 1.0).abs() < 1e-14);
    }

    #[test]
    fn norm_is_conserved() {
        for length in [0.0, 200.0, 500.0, 2000.0, 1e6] {
            let cfg = PulseConfig::default().with_length(length);
            for bin in 0..3 {
                let (norm, mean, _) = moments(&cfg, bin);
                assert!((norm - 1.0).abs() < 1e-9, "L={length} norm={norm}");
                assert!((mean - cfg.bin_center(bin)).abs() < 1e-6 * cfg.dispersed_width());
            }
        }
    }

    #[test]
    fn width_matches_second_moment() {
        let cfg = PulseConfig {
            sigma0: 1e-12,
            beta: 2.3e-26,
            length: 1000.0,
            ..PulseConfig::default()
        };
        let (_, _, std) = moments(&cfg, 0);
        assert!((std / cfg.dispersed_width() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn width_identities() {
        let cfg = PulseConfig::default();
        assert_eq!(cfg.dispersed_width(), cfg.sigma0);
        let l = 2.0 * cfg.sigma0 * cfg.sigma0 / cfg.beta;
        let w = cfg.with_length(l).dispersed_width();
        assert!((w / (cfg.sigma0 * 2f64.sqrt()) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn width_monotone_in_length() {
        let cfg = PulseConfig::default();
        let mut last = 0.0;
        for i in 0..200 {
            let w = cfg.with_length(i as f64 * 50.0).dispersed_width();
            assert!(w >= last);
            last = w;
        }
    }

    #[test]
    fn bin_translation() {
        let cfg = PulseConfig::default().with_length(700.0).with_dim(3);
        for &t in &[-3e-12, 0.0, 1.7e-12, 9e-12] {
            for bin in 0..3 {
                let shifted = cfg.amplitude(0, t - cfg.bin_center(bin));
                assert_eq!(cfg.amplitude(bin, t), shifted);
            }
        }
    }

    #[test]
    fn gaussian_form_at_zero_length() {
        let cfg = PulseConfig::default();
        let g0 = cfg.amplitude_as_gaussian(0);
        let s2 = cfg.sigma0 * cfg.sigma0;
        assert!((g0.a.re + 1.0 / (4.0 * s2)).abs() <= 1e-15 / s2);
        assert_eq!(g0.a.im, 0.0);
        assert_eq!(g0.b, Complex64::new(0.0, 0.0));
        let g1 = cfg.amplitude_as_gaussian(1);
        assert!((g1.b.re / (cfg.tau / (2.0 * s2)) - 1.0).abs() < 1e-14);
        assert_eq!(g1.b.im, 0.0);
        let expected_c = -cfg.tau * cfg.tau / (4.0 * s2) - 0.25 * (2.0 * PI * s2).ln();
        assert!((g1.c.re - expected_c).abs() < 1e-12);
    }

    #[test]
    fn gaussian_form_matches_pointwise() {
        for length in [0.0, 1000.0, 1e5] {
            let cfg = PulseConfig::default().with_length(length).with_dim(3);
            let tau = cfg.tau;
            for bin in 0..3 {
                let g = cfg.amplitude_as_gaussian(bin);
                assert!(g.is_integrable());
                for t in [-2.0 * tau, 0.0, tau / 2.0, tau, 3.0 * tau] {
                    let direct = cfg.amplitude(bin, t);
                    let via = g.eval(t);
                    let scale = direct.norm().max(1e-300);
                    assert!((direct - via).norm() / scale < 1e-10, "L={length} bin={bin} t={t}");
                }
            }
        }
    }

    #[test]
    fn gaussian_integral_matches_quadrature() {
        let cfg = PulseConfig::default().with_length(300.0);
        let g = cfg.amplitude_as_gaussian(1).product(&cfg.amplitude_as_gaussian(0).conj());
        let w = cfg.dispersed_width();
        let re = simpson(|t| g.eval(t).re, -20.0 * w, 20.0 * w + cfg.tau, 40_000);
        let im = simpson(|t| g.eval(t).im, -20.0 * w, 20.0 * w + cfg.tau, 40_000);
        let exact = g.integral();
        assert!((Complex64::new(re, im) - exact).norm() < 1e-9 * exact.norm().max(1.0));
    }

    #[test]
    fn validation() {
        assert!(PulseConfig::default().validate().is_ok());
        let bad = PulseConfig {
            sigma0: 0.0,
            ..PulseConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(PulseConfig::default().with_length(-1.0).validate().is_err());
        assert!(PulseConfig::default().with_jitter(-1e-12).validate().is_err());
        assert!(PulseConfig::default().with_photons(0.0).validate().is_err());
        // overlap only warns
        let overlap = PulseConfig {
            tau: 1e-12,
            ..PulseConfig::default()
        };
        assert!(overlap.validate().is_ok());
    }
}
