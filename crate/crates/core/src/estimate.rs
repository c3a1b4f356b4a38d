//! State reconstruction from photon counts.
//!
//! The search space is the Cholesky-style factorization `rho = W^H W / Tr(W^H W)`
//! with `W` lower triangular, so every real parameter vector (except the
//! origin) maps to a physical state. Two objectives are available: the
//! likelihood-style sum `Σ (n^M - n^E)^2 / n^E + ln n^E` and plain least squares
//! `Σ (n^M - n^E)^2`. Both are minimized by multistart Nelder–Mead.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::counts::{counts_unchecked, CountError};
use crate::linalg::{ComplexMatrix, DensityMatrix};
use crate::povm::{MeasurementSet, TimeGrid};
use crate::pulse::PulseConfig;
use crate::simplex::{nelder_mead, NelderMeadOptions};

pub const DEFAULT_RESTARTS: usize = 5;
/// Expected counts are floored at `COUNT_FLOOR * N` inside the likelihood.
pub const COUNT_FLOOR: f64 = 1e-10;
const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("parameter vector has norm {norm:e}; no state corresponds to it")]
    DegenerateParams { norm: f64 },
    #[error("parameter vector of length {len} is not a square number")]
    BadLength { len: usize },
    #[error("measured counts have length {found}, grid has {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Counts(#[from] CountError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Mle,
    Ls,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Ls, Method::Mle];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Mle => "MLE",
            Method::Ls => "LS",
        })
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_uppercase().as_str() {
            "MLE" => Ok(Method::Mle),
            "LS" => Ok(Method::Ls),
            other => Err(format!("unknown method {other:?} (expected MLE or LS)")),
        }
    }
}

/// Real parameters of the lower-triangular `W`: the `d` diagonal entries,
/// then each strictly-lower entry as a `(re, im)` pair in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyParams(Vec<f64>);

impl CholeskyParams {
    pub fn new(values: Vec<f64>) -> Result<Self, EstimateError> {
        let len = values.len();
        let d = (len as f64).sqrt().round() as usize;
        if d == 0 || d * d != len {
            return Err(EstimateError::BadLength { len });
        }
        Ok(Self(values))
    }

    /// `W = I`, i.e. the maximally mixed state.
    pub fn maximally_mixed(dim: usize) -> Self {
        let mut v = vec![0.0; dim * dim];
        v[..dim].iter_mut().for_each(|x| *x = 1.0);
        Self(v)
    }

    pub fn dim(&self) -> usize {
        dim_of(self.0.len())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn lower_factor(&self) -> ComplexMatrix {
        lower_factor(&self.0)
    }

    /// Parameters whose state is `rho`. The diagonal of `W` comes out
    /// nonnegative.
    pub fn from_state(rho: &DensityMatrix) -> Self {
        let d = rho.dim();
        let m = rho.matrix();
        // Cholesky of the index-reversed matrix: P rho P = L L^H, W = (P L P)^H.
        let rev = |i: usize| d - 1 - i;
        let mut l = ComplexMatrix::zeros(d);
        let tol = 1e-14;
        for j in 0..d {
            let mut diag = m[(rev(j), rev(j))].re;
            for k in 0..j {
                diag -= l[(j, k)].norm_sqr();
            }
            if diag <= tol {
                continue;
            }
            let ljj = diag.sqrt();
            l[(j, j)] = Complex64::new(ljj, 0.0);
            for i in (j + 1)..d {
                let mut s = m[(rev(i), rev(j))];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / ljj;
            }
        }
        let mut w = ComplexMatrix::zeros(d);
        for i in 0..d {
            for j in 0..=i {
                w[(i, j)] = l[(rev(j), rev(i))].conj();
            }
        }
        let mut v = Vec::with_capacity(d * d);
        v.extend((0..d).map(|i| w[(i, i)].re));
        for i in 0..d {
            for j in 0..i {
                v.push(w[(i, j)].re);
                v.push(w[(i, j)].im);
            }
        }
        Self(v)
    }
}

fn dim_of(len: usize) -> usize {
    (len as f64).sqrt().round() as usize
}

fn lower_factor(p: &[f64]) -> ComplexMatrix {
    let d = dim_of(p.len());
    let mut w = ComplexMatrix::zeros(d);
    for i in 0..d {
        w[(i, i)] = Complex64::new(p[i], 0.0);
    }
    let mut k = d;
    for i in 0..d {
        for j in 0..i {
            w[(i, j)] = Complex64::new(p[k], p[k + 1]);
            k += 2;
        }
    }
    w
}

/// `W^H W / Tr(W^H W)`.
pub fn params_to_state(p: &CholeskyParams) -> Result<DensityMatrix, EstimateError> {
    state_from_slice(&p.0)
}

fn state_from_slice(p: &[f64]) -> Result<DensityMatrix, EstimateError> {
    let norm_sq: f64 = p.iter().map(|x| x * x).sum();
    let norm = norm_sq.sqrt();
    if !(norm > DEGENERATE_NORM) {
        return Err(EstimateError::DegenerateParams { norm });
    }
    let w = lower_factor(p);
    let d = w.dim();
    let mut rho = ComplexMatrix::zeros(d);
    for a in 0..d {
        for b in a..d {
            let mut s = Complex64::new(0.0, 0.0);
            for i in b..d {
                s += w[(i, a)].conj() * w[(i, b)];
            }
            s /= norm_sq;
            if a == b {
                rho[(a, a)] = Complex64::new(s.re, 0.0);
            } else {
                rho[(a, b)] = s;
                rho[(b, a)] = s.conj();
            }
        }
    }
    Ok(DensityMatrix::from_trusted(rho))
}

/// Objective to minimize over Cholesky parameters, given the measured counts
/// and the ideal operators used to predict them.
#[derive(Debug, Clone, Copy)]
pub struct Objective<'a> {
    pub method: Method,
    pub measured: &'a [f64],
    pub model: &'a MeasurementSet,
    pub photons: f64,
}

impl<'a> Objective<'a> {
    pub fn new(
        method: Method,
        measured: &'a [f64],
        model: &'a MeasurementSet,
        photons: f64,
    ) -> Result<Self, EstimateError> {
        if measured.len() != model.len() {
            return Err(EstimateError::LengthMismatch {
                expected: model.len(),
                found: measured.len(),
            });
        }
        Ok(Self {
            method,
            measured,
            model,
            photons,
        })
    }

    /// Objective value at `p`; `+inf` at the degenerate origin.
    pub fn value(&self, p: &[f64]) -> f64 {
        let Ok(rho) = state_from_slice(p) else {
            return f64::INFINITY;
        };
        let expected = counts_unchecked(self.model, &rho, self.photons);
        match self.method {
            Method::Mle => likelihood(self.measured, &expected, COUNT_FLOOR * self.photons),
            Method::Ls => least_squares(self.measured, &expected),
        }
    }
}

/// `Σ_k (n^M - n^E)^2 / n^E + ln n^E`, with `n^E` floored at `floor`.
pub fn likelihood(measured: &[f64], expected: &[f64], floor: f64) -> f64 {
    measured
        .iter()
        .zip(expected)
        .map(|(&m, &e)| {
            let e = e.max(floor);
            (m - e) * (m - e) / e + e.ln()
        })
        .sum()
}

/// `Σ_k (n^M - n^E)^2`
pub fn least_squares(measured: &[f64], expected: &[f64]) -> f64 {
    measured.iter().zip(expected).map(|(&m, &e)| (m - e) * (m - e)).sum()
}

pub fn mle_objective(p: &CholeskyParams, measured: &[f64], grid: &TimeGrid, cfg: &PulseConfig) -> Result<f64, EstimateError> {
    let model = MeasurementSet::ideal(cfg, grid);
    Ok(Objective::new(Method::Mle, measured, &model, cfg.photons)?.value(p.values()))
}

pub fn ls_objective(p: &CholeskyParams, measured: &[f64], grid: &TimeGrid, cfg: &PulseConfig) -> Result<f64, EstimateError> {
    let model = MeasurementSet::ideal(cfg, grid);
    Ok(Objective::new(Method::Ls, measured, &model, cfg.photons)?.value(p.values()))
}

#[derive(Debug, Clone)]
pub struct MinimizeOutcome {
    pub params: CholeskyParams,
    pub value: f64,
    pub restarts_used: usize,
    /// False when every restart ran into the iteration cap.
    pub converged: bool,
}

/// Multistart Nelder–Mead over `R^{d^2}`. The first start is the maximally
/// mixed state; the others are drawn uniformly from `[-1, 1]^{d^2}` with a
/// generator seeded by `seed`. The best result wins, earliest on ties.
pub fn minimize(objective: impl Fn(&[f64]) -> f64, dim: usize, seed: u64, restarts: usize) -> MinimizeOutcome {
    minimize_with(objective, dim, seed, restarts, &NelderMeadOptions::default())
}

pub fn minimize_with(
    objective: impl Fn(&[f64]) -> f64,
    dim: usize,
    seed: u64,
    restarts: usize,
    opts: &NelderMeadOptions,
) -> MinimizeOutcome {
    let n = dim * dim;
    let restarts = restarts.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut any_converged = false;
    for r in 0..restarts {
        let start = if r == 0 {
            CholeskyParams::maximally_mixed(dim).0
        } else {
            (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
        };
        let run = nelder_mead(&objective, &start, opts);
        any_converged |= run.converged;
        let better = match &best {
            None => true,
            Some((_, v)) => run.value < *v,
        };
        if better {
            best = Some((run.x, run.value));
        }
    }
    let (x, value) = best.expect("at least one restart");
    MinimizeOutcome {
        params: CholeskyParams(x),
        value,
        restarts_used: restarts,
        converged: any_converged,
    }
}

#[derive(Debug, Clone)]
pub struct EstimationResult {
    pub rho: DensityMatrix,
    pub objective: f64,
    pub method: Method,
    pub restarts_used: usize,
    pub converged: bool,
}

/// Reconstructs a state from `measured` counts using the ideal operators of
/// `model`.
pub fn estimate_with_model(
    measured: &[f64],
    model: &MeasurementSet,
    photons: f64,
    method: Method,
    seed: u64,
    restarts: usize,
) -> Result<EstimationResult, EstimateError> {
    let objective = Objective::new(method, measured, model, photons)?;
    let outcome = minimize(|p| objective.value(p), model.dim(), seed, restarts);
    let rho = params_to_state(&outcome.params)?;
    Ok(EstimationResult {
        rho,
        objective: outcome.value,
        method,
        restarts_used: outcome.restarts_used,
        converged: outcome.converged,
    })
}

pub fn estimate(
    measured: &[f64],
    grid: &TimeGrid,
    cfg: &PulseConfig,
    method: Method,
    seed: u64,
) -> Result<EstimationResult, EstimateError> {
    let model = MeasurementSet::ideal(cfg, grid);
    estimate_with_model(measured, &model, cfg.photons, method, seed, DEFAULT_RESTARTS)
}
