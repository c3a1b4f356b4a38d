//! Time-resolved measurement operators for time-bin qudits.
//!
//! The ideal element at detection time `t` is `M(t) = u(t) u(t)^H` with
//! `u(t) = (u_0(t), ..., u_{d-1}(t))`, i.e. `mu(t) |psi(t)><psi(t)|`. Detector
//! jitter blurs it into `M_D(t) = ∫ M(t') q_D(t - t') dt'`. Since each entry of
//! `M(t')` is a complex Gaussian in `t'`, the blurred entries are evaluated in
//! closed form; [`numeric_jitter_oracle`] does the same integral by quadrature.

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::ComplexMatrix;
use crate::pulse::{ComplexGaussian, PulseConfig};

/// Default number of detection instants.
pub const DEFAULT_GRID_POINTS: usize = 13;
/// Half-width of the detection window beyond the outer bin centers, in units
/// of the effective width `sqrt(sigma_L^2 + sigma_D^2)`.
pub const DEFAULT_WINDOW_WIDTHS: f64 = 3.0;

const ORACLE_MIN_NODES: usize = 2001;
const ORACLE_MAX_NODES: usize = 1 << 22;
const ORACLE_TOL: f64 = 1e-8;
const ORACLE_HALF_WIDTHS: f64 = 8.0;
const ZERO_WEIGHT: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PovmError {
    #[error("expected dimension {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("element weight {weight:e} is too small to normalize")]
    ZeroWeight { weight: f64 },
    #[error("quadrature did not converge: change {change:e} at {nodes} nodes")]
    QuadratureNotConverged { change: f64, nodes: usize },
    #[error("grid needs at least {min} instants for dimension {dim}, got {requested}")]
    TooFewInstants {
        requested: usize,
        min: usize,
        dim: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Ideal,
    Jittered,
}

/// One measurement operator of the continuous time-resolved POVM.
#[derive(Debug, Clone)]
pub struct PovmElement {
    pub time: f64,
    /// `Tr(matrix)`; the probability density scale in s⁻¹.
    pub weight: f64,
    /// Normalized `|psi_M>` for ideal elements with nonzero weight.
    pub state: Option<Vec<Complex64>>,
    pub matrix: ComplexMatrix,
    pub kind: ElementKind,
}

/// `M(t)` for the dispersed amplitudes of `cfg`.
pub fn ideal_element(cfg: &PulseConfig, t: f64) -> PovmElement {
    let amps = cfg.amplitudes(t);
    let weight: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    if !(weight > ZERO_WEIGHT) {
        return PovmElement {
            time: t,
            weight: 0.0,
            state: None,
            matrix: ComplexMatrix::zeros(cfg.dim),
            kind: ElementKind::Ideal,
        };
    }
    let norm = weight.sqrt();
    PovmElement {
        time: t,
        weight,
        state: Some(amps.iter().map(|z| z / norm).collect()),
        matrix: ComplexMatrix::outer(&amps),
        kind: ElementKind::Ideal,
    }
}

/// Entry `(j, k)` of `M(t')` as a complex Gaussian in `t'`.
fn entry_gaussians(cfg: &PulseConfig) -> Vec<ComplexGaussian> {
    let amps: Vec<ComplexGaussian> = (0..cfg.dim).map(|j| cfg.amplitude_as_gaussian(j)).collect();
    let mut out = Vec::with_capacity(cfg.dim * cfg.dim);
    for j in 0..cfg.dim {
        for k in 0..cfg.dim {
            out.push(amps[j].product(&amps[k].conj()));
        }
    }
    out
}

fn jittered_from_entries(cfg: &PulseConfig, entries: &[ComplexGaussian], t: f64) -> PovmElement {
    let d = cfg.dim;
    let mut m = ComplexMatrix::zeros(d);
    for j in 0..d {
        for k in j..d {
            let v = entries[j * d + k].convolve_normal(cfg.sigma_d, t);
            if j == k {
                m[(j, j)] = Complex64::new(v.re, 0.0);
            } else {
                m[(j, k)] = v;
                m[(k, j)] = v.conj();
            }
        }
    }
    let weight = m.trace().re.max(0.0);
    PovmElement {
        time: t,
        weight,
        state: None,
        matrix: m,
        kind: ElementKind::Jittered,
    }
}

/// `M_D(t)`, the jitter-blurred element, in closed form. With `sigma_d == 0`
/// this is [`ideal_element`].
pub fn jittered_element(cfg: &PulseConfig, t: f64) -> PovmElement {
    if cfg.sigma_d == 0.0 {
        return ideal_element(cfg, t);
    }
    jittered_from_entries(cfg, &entry_gaussians(cfg), t)
}

/// Reference evaluation of `M_D(t)` by composite Simpson quadrature over
/// `t ± 8 sigma_D`, doubling the node count until successive results agree to
/// `1e-8` relative to the largest entry.
pub fn numeric_jitter_oracle(cfg: &PulseConfig, t: f64) -> Result<PovmElement, PovmError> {
    if cfg.sigma_d == 0.0 {
        return Ok(ideal_element(cfg, t));
    }
    let d = cfg.dim;
    let s = cfg.sigma_d;
    let lo = t - ORACLE_HALF_WIDTHS * s;
    let hi = t + ORACLE_HALF_WIDTHS * s;
    let kernel = |x: f64| (-x * x / (2.0 * s * s)).exp() / (2.0 * std::f64::consts::PI * s * s).sqrt();

    let integrate = |intervals: usize| -> ComplexMatrix {
        let h = (hi - lo) / intervals as f64;
        let mut acc = ComplexMatrix::zeros(d);
        for i in 0..=intervals {
            let tp = lo + i as f64 * h;
            let w = if i == 0 || i == intervals {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let amps = cfg.amplitudes(tp);
            let q = w * kernel(t - tp);
            for j in 0..d {
                for k in 0..d {
                    acc[(j, k)] += amps[j] * amps[k].conj() * q;
                }
            }
        }
        acc.scale(h / 3.0)
    };

    let mut intervals = ORACLE_MIN_NODES - 1;
    let mut current = integrate(intervals);
    loop {
        let refined = integrate(2 * intervals);
        let scale = refined.max_abs().max(f64::MIN_POSITIVE);
        let change = refined.max_abs_diff(&current) / scale;
        intervals *= 2;
        current = refined;
        if change <= ORACLE_TOL {
            break;
        }
        if intervals + 1 >= ORACLE_MAX_NODES {
            return Err(PovmError::QuadratureNotConverged {
                change,
                nodes: intervals + 1,
            });
        }
    }
    let m = current.hermitian_part();
    Ok(PovmElement {
        time: t,
        weight: m.trace().re.max(0.0),
        state: None,
        matrix: m,
        kind: ElementKind::Jittered,
    })
}

/// Strictly increasing detection instants.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    instants: Vec<f64>,
}

impl TimeGrid {
    pub fn new(instants: Vec<f64>) -> Self {
        debug_assert!(instants.windows(2).all(|w| w[0] < w[1]));
        Self { instants }
    }

    pub fn instants(&self) -> &[f64] {
        &self.instants
    }

    pub fn len(&self) -> usize {
        self.instants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instants.is_empty()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.instants[0], *self.instants.last().unwrap())
    }

    pub fn spacing(&self) -> f64 {
        let (a, b) = self.span();
        (b - a) / (self.len() - 1) as f64
    }
}

/// `k` uniform instants over `[-w sigma_eff, (d-1) tau + w sigma_eff]`, where
/// `sigma_eff = sqrt(sigma_L^2 + sigma_D^2)` and `w` is
/// [`DEFAULT_WINDOW_WIDTHS`]. The window widens with fiber length.
pub fn make_time_grid(cfg: &PulseConfig, k: usize) -> Result<TimeGrid, PovmError> {
    make_time_grid_with_window(cfg, k, DEFAULT_WINDOW_WIDTHS)
}

pub fn make_time_grid_with_window(
    cfg: &PulseConfig,
    k: usize,
    widths: f64,
) -> Result<TimeGrid, PovmError> {
    let min = (cfg.dim * cfg.dim).max(2);
    if k < min {
        return Err(PovmError::TooFewInstants {
            requested: k,
            min,
            dim: cfg.dim,
        });
    }
    let sigma_eff = cfg.dispersed_width().hypot(cfg.sigma_d);
    let first = -widths * sigma_eff;
    let last = cfg.bin_center(cfg.dim - 1) + widths * sigma_eff;
    let step = (last - first) / (k - 1) as f64;
    let instants = (0..k)
        .map(|i| if i + 1 == k { last } else { first + i as f64 * step })
        .collect();
    Ok(TimeGrid::new(instants))
}

/// Bloch-ball coordinates of a qubit element, normalized by its trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub mu: f64,
}

impl BlochPoint {
    pub fn radius(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn transverse(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

pub fn bloch_coordinates(e: &PovmElement) -> Result<BlochPoint, PovmError> {
    if e.matrix.dim() != 2 {
        return Err(PovmError::DimensionMismatch {
            expected: 2,
            found: e.matrix.dim(),
        });
    }
    let tr = e.matrix.trace().re;
    if !(e.weight > ZERO_WEIGHT) || !(tr > ZERO_WEIGHT) {
        return Err(PovmError::ZeroWeight { weight: e.weight });
    }
    let m01 = e.matrix[(0, 1)] / tr;
    Ok(BlochPoint {
        x: 2.0 * m01.re,
        y: -2.0 * m01.im,
        z: (e.matrix[(0, 0)].re - e.matrix[(1, 1)].re) / tr,
        mu: e.weight,
    })
}

/// Precomputed operator matrices on a grid, for repeated Born-rule evaluation.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    dim: usize,
    elements: Vec<PovmElement>,
}

impl MeasurementSet {
    pub fn ideal(cfg: &PulseConfig, grid: &TimeGrid) -> Self {
        Self {
            dim: cfg.dim,
            elements: grid.instants().iter().map(|&t| ideal_element(cfg, t)).collect(),
        }
    }

    pub fn jittered(cfg: &PulseConfig, grid: &TimeGrid) -> Self {
        if cfg.sigma_d == 0.0 {
            return Self::ideal(cfg, grid);
        }
        let entries = entry_gaussians(cfg);
        Self {
            dim: cfg.dim,
            elements: grid
                .instants()
                .iter()
                .map(|&t| jittered_from_entries(cfg, &entries, t))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[PovmElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}
