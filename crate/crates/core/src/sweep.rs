//! Worst-case reconstruction quality over (fiber length, jitter, method).
//!
//! For each triple the measurement grid and operators are built once, every
//! sample state is reconstructed from its jitter-distorted counts in
//! parallel, and the per-state scores are reduced sequentially in sample
//! order. Each state's optimizer seed depends only on the sweep seed and the
//! state's index, so results do not depend on the worker count.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::counts::counts_for;
use crate::estimate::{estimate_with_model, EstimateError, Method, DEFAULT_RESTARTS};
use crate::linalg::DensityMatrix;
use crate::metrics::{fidelity, max_of, min_of, trace_distance, MetricError};
use crate::povm::{
    bloch_coordinates, make_time_grid_with_window, BlochPoint, MeasurementSet, PovmError,
    DEFAULT_GRID_POINTS, DEFAULT_WINDOW_WIDTHS,
};
use crate::pulse::{PulseConfig, PulseConfigError};
use crate::sampling::{
    haar_sample, qubit_grid, qubit_phase_family, qutrit_grid, qutrit_phase_family, SamplingError,
    StateSample,
};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid `{field}`: {message}")]
    Config { field: String, message: String },
    #[error(transparent)]
    Pulse(#[from] PulseConfigError),
    #[error(transparent)]
    Povm(#[from] PovmError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl SweepError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        SweepError::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(
            self,
            SweepError::Config { .. } | SweepError::Pulse(_) | SweepError::Sampling(_)
        )
    }
}

impl From<crate::counts::CountError> for SweepError {
    fn from(e: crate::counts::CountError) -> Self {
        SweepError::Estimate(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    QubitGrid,
    QutritGrid,
    QubitPhase,
    QutritPhase,
    HaarQubit,
    HaarQutrit,
}

impl SampleKind {
    pub fn dim(self) -> usize {
        match self {
            SampleKind::QubitGrid | SampleKind::QubitPhase | SampleKind::HaarQubit => 2,
            SampleKind::QutritGrid | SampleKind::QutritPhase | SampleKind::HaarQutrit => 3,
        }
    }

    pub fn is_phase_family(self) -> bool {
        matches!(self, SampleKind::QubitPhase | SampleKind::QutritPhase)
    }

    /// Desk-scale size parameter.
    pub fn default_size(self) -> usize {
        match self {
            SampleKind::QubitGrid | SampleKind::QutritGrid => 5,
            SampleKind::QubitPhase => 51,
            SampleKind::QutritPhase => 21,
            SampleKind::HaarQubit | SampleKind::HaarQutrit => 125,
        }
    }

    /// Size parameter matching the published sample counts (9261, 201, 1681).
    pub fn full_size(self) -> usize {
        match self {
            SampleKind::QubitGrid | SampleKind::QutritGrid => 21,
            SampleKind::QubitPhase => 201,
            SampleKind::QutritPhase => 41,
            SampleKind::HaarQubit | SampleKind::HaarQutrit => 9261,
        }
    }

    pub fn default_for_dim(dim: usize) -> Self {
        if dim == 3 {
            SampleKind::QutritGrid
        } else {
            SampleKind::QubitGrid
        }
    }
}

impl fmt::Display for SampleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SampleKind::QubitGrid => "qubit-grid",
            SampleKind::QutritGrid => "qutrit-grid",
            SampleKind::QubitPhase => "qubit-phase",
            SampleKind::QutritPhase => "qutrit-phase",
            SampleKind::HaarQubit => "haar-qubit",
            SampleKind::HaarQutrit => "haar-qutrit",
        })
    }
}

impl FromStr for SampleKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s.trim() {
            "qubit-grid" => SampleKind::QubitGrid,
            "qutrit-grid" => SampleKind::QutritGrid,
            "qubit-phase" => SampleKind::QubitPhase,
            "qutrit-phase" => SampleKind::QutritPhase,
            "haar-qubit" => SampleKind::HaarQubit,
            "haar-qutrit" => SampleKind::HaarQutrit,
            other => return Err(format!("unknown sample kind {other:?}")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleSpec {
    pub kind: SampleKind,
    /// Points per axis for grids and phase families, state count for Haar samples.
    pub size: usize,
}

impl SampleSpec {
    pub fn new(kind: SampleKind, size: usize) -> Self {
        Self { kind, size }
    }

    pub fn build(&self, seed: u64) -> Result<StateSample, SamplingError> {
        match self.kind {
            SampleKind::QubitGrid => qubit_grid(self.size),
            SampleKind::QutritGrid => qutrit_grid(self.size),
            SampleKind::QubitPhase => qubit_phase_family(self.size),
            SampleKind::QutritPhase => qutrit_phase_family(self.size),
            SampleKind::HaarQubit => Ok(haar_sample(2, self.size, seed)),
            SampleKind::HaarQutrit => Ok(haar_sample(3, self.size, seed)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base: PulseConfig,
    pub lengths: Vec<f64>,
    pub jitters: Vec<f64>,
    pub methods: Vec<Method>,
    pub sample: SampleSpec,
    pub grid_points: usize,
    pub window_widths: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Rayon worker threads; 0 uses the global pool.
    pub workers: usize,
    /// Record wall-clock time in the CSV `seconds` column.
    pub timing: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            base: PulseConfig::default(),
            lengths: vec![200.0, 500.0],
            jitters: vec![0.0, 1e-12, 4e-12],
            methods: Method::ALL.to_vec(),
            sample: SampleSpec::new(SampleKind::QubitGrid, SampleKind::QubitGrid.default_size()),
            grid_points: DEFAULT_GRID_POINTS,
            window_widths: DEFAULT_WINDOW_WIDTHS,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            workers: 0,
            timing: false,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.lengths.is_empty() {
            return Err(SweepError::config("lengths", "must not be empty"));
        }
        if let Some(&bad) = self.lengths.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
            return Err(SweepError::config("lengths", format!("{bad} is not a length >= 0")));
        }
        if self.jitters.is_empty() {
            return Err(SweepError::config("jitters", "must not be empty"));
        }
        if let Some(&bad) = self.jitters.iter().find(|j| !(**j >= 0.0 && j.is_finite())) {
            return Err(SweepError::config("jitters", format!("{bad} is not a jitter >= 0")));
        }
        if self.methods.is_empty() {
            return Err(SweepError::config("methods", "must not be empty"));
        }
        if self.sample.kind.dim() != self.base.dim {
            return Err(SweepError::config(
                "sample",
                format!("{} needs dim = {}, config has dim = {}", self.sample.kind, self.sample.kind.dim(), self.base.dim),
            ));
        }
        let min_points = self.base.dim * self.base.dim;
        if self.grid_points < min_points {
            return Err(SweepError::config(
                "grid_points",
                format!("dim = {} needs at least {min_points} instants, got {}", self.base.dim, self.grid_points),
            ));
        }
        if self.restarts == 0 {
            return Err(SweepError::config("restarts", "must be >= 1"));
        }
        if !(self.window_widths > 0.0) {
            return Err(SweepError::config("window_widths", "must be > 0"));
        }
        self.base.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub length: f64,
    pub jitter: f64,
    pub method: Method,
    pub f_min: f64,
    pub d_max: f64,
    /// Parameters of the state attaining `f_min`.
    pub worst_state: String,
    pub worst_index: usize,
    pub nonconverged: usize,
    pub wall_time: f64,
}

/// Optimizer seed for sample member `index`.
pub fn state_seed(seed: u64, index: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-state outcome inside one triple.
#[derive(Debug, Clone, Copy)]
struct StateScore {
    fidelity: f64,
    distance: f64,
    converged: bool,
}

/// Scores every sample member for one (length, jitter, method) triple using
/// the current rayon pool.
pub fn evaluate_triple(
    cfg: &SweepConfig,
    sample: &StateSample,
    length: f64,
    jitter: f64,
    method: Method,
) -> Result<SweepResult, SweepError> {
    if sample.is_empty() {
        return Err(SweepError::config("sample", "sample is empty"));
    }
    let started = Instant::now();
    let pulse = cfg.base.with_length(length).with_jitter(jitter);
    let grid = make_time_grid_with_window(&pulse, cfg.grid_points, cfg.window_widths)?;
    let model = MeasurementSet::ideal(&pulse, &grid);
    let noisy = MeasurementSet::jittered(&pulse, &grid);

    let score = |index: usize, rho: &DensityMatrix| -> Result<StateScore, SweepError> {
        let measured = counts_for(&noisy, rho, pulse.photons)?;
        let est = estimate_with_model(
            &measured,
            &model,
            pulse.photons,
            method,
            state_seed(cfg.seed, index),
            cfg.restarts,
        )?;
        Ok(StateScore {
            fidelity: fidelity(rho, &est.rho)?,
            distance: trace_distance(rho, &est.rho)?,
            converged: est.converged,
        })
    };
    let scores: Vec<StateScore> = sample
        .states
        .par_iter()
        .enumerate()
        .map(|(i, rho)| score(i, rho))
        .collect::<Result<_, _>>()?;

    let fids: Vec<f64> = scores.iter().map(|s| s.fidelity).collect();
    let dists: Vec<f64> = scores.iter().map(|s| s.distance).collect();
    let worst = min_of(&fids).expect("nonempty");
    let farthest = max_of(&dists).expect("nonempty");
    let nonconverged = scores.iter().filter(|s| !s.converged).count();
    if nonconverged > 0 {
        log::warn!(
            "L={length} m, sigma_D={jitter:e} s, {method}: {nonconverged} of {} reconstructions hit the iteration cap",
            scores.len()
        );
    }
    Ok(SweepResult {
        length,
        jitter,
        method,
        f_min: worst.value,
        d_max: farthest.value,
        worst_state: sample.describe(worst.index),
        worst_index: worst.index,
        nonconverged,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

fn with_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T, SweepError> {
    if workers == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SweepError::ThreadPool(e.to_string()))?;
    Ok(pool.install(job))
}

/// Runs every (length, jitter, method) triple, in that nesting order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepResult>, SweepError> {
    cfg.validate()?;
    let sample = cfg.sample.build(cfg.seed)?;
    if sample.is_empty() {
        return Err(SweepError::config("sample", "sample is empty"));
    }
    with_pool(cfg.workers, || {
        let mut out = Vec::with_capacity(cfg.lengths.len() * cfg.jitters.len() * cfg.methods.len());
        for &length in &cfg.lengths {
            for &jitter in &cfg.jitters {
                for &method in &cfg.methods {
                    let r = evaluate_triple(cfg, &sample, length, jitter, method)?;
                    log::info!(
                        "L={length} m sigma_D={jitter:e} s {method}: F_min={:.6} D_max={:.6} ({:.1} s)",
                        r.f_min,
                        r.d_max,
                        r.wall_time
                    );
                    out.push(r);
                }
            }
        }
        Ok(out)
    })?
}

/// [`run_sweep`] restricted to the equatorial phase families.
pub fn run_phase_sweep(cfg: &SweepConfig) -> Result<Vec<SweepResult>, SweepError> {
    if !cfg.sample.kind.is_phase_family() {
        return Err(SweepError::config(
            "sample",
            format!("phase sweep needs qubit-phase or qutrit-phase, got {}", cfg.sample.kind),
        ));
    }
    run_sweep(cfg)
}

/// `count` lengths spaced evenly in log scale over `[start, stop]`.
pub fn log_spaced(start: f64, stop: f64, count: usize) -> Result<Vec<f64>, SweepError> {
    if !(start > 0.0 && stop >= start) || count == 0 {
        return Err(SweepError::config(
            "log_lengths",
            "needs 0 < start <= stop and count >= 1",
        ));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let (a, b) = (start.ln(), stop.ln());
    Ok((0..count)
        .map(|i| {
            if i + 1 == count {
                stop
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect())
}

/// One row of the Bloch-ball export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochRow {
    pub time: f64,
    pub point: BlochPoint,
}

/// Bloch coordinates of the jittered qubit operators on the measurement grid.
pub fn export_bloch(
    base: &PulseConfig,
    length: f64,
    jitter: f64,
    grid_points: usize,
) -> Result<Vec<BlochRow>, PovmError> {
    if base.dim != 2 {
        return Err(PovmError::DimensionMismatch {
            expected: 2,
            found: base.dim,
        });
    }
    let pulse = base.with_length(length).with_jitter(jitter);
    let grid = make_time_grid_with_window(&pulse, grid_points, DEFAULT_WINDOW_WIDTHS)?;
    MeasurementSet::jittered(&pulse, &grid)
        .elements()
        .iter()
        .map(|e| {
            Ok(BlochRow {
                time: e.time,
                point: bloch_coordinates(e)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: SampleKind, size: usize) -> SweepConfig {
        SweepConfig {
            base: PulseConfig::default().with_dim(kind.dim()),
            sample: SampleSpec::new(kind, size),
            lengths: vec![200.0],
            jitters: vec![0.0],
            methods: vec![Method::Ls],
            ..SweepConfig::default()
        }
    }

    #[test]
    fn noiseless_small_grid_is_perfect() {
        let cfg = small(SampleKind::QubitGrid, 3);
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].f_min >= 0.999, "{rows:?}");
        assert!(rows[0].d_max <= 1e-2);
    }

    #[test]
    fn row_order_and_count() {
        let cfg = SweepConfig {
            lengths: vec![300.0, 100.0],
            jitters: vec![0.0, 1e-12],
            methods: vec![Method::Mle, Method::Ls],
            ..small(SampleKind::QubitGrid, 2)
        };
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 8);
        let keys: Vec<(f64, f64, Method)> = rows.iter().map(|r| (r.length, r.jitter, r.method)).collect();
        assert_eq!(keys[0], (300.0, 0.0, Method::Mle));
        assert_eq!(keys[1], (300.0, 0.0, Method::Ls));
        assert_eq!(keys[2], (300.0, 1e-12, Method::Mle));
        assert_eq!(keys[7], (100.0, 1e-12, Method::Ls));
        for r in &rows {
            assert!((0.0..=1.0).contains(&r.f_min) && (0.0..=1.0).contains(&r.d_max));
        }
    }

    #[test]
    fn config_errors() {
        let mut cfg = small(SampleKind::QubitGrid, 3);
        cfg.lengths.clear();
        assert!(matches!(run_sweep(&cfg), Err(SweepError::Config { ref field, .. }) if field == "lengths"));
        let mut cfg = small(SampleKind::QubitGrid, 3);
        cfg.methods.clear();
        assert!(matches!(run_sweep(&cfg), Err(SweepError::Config { ref field, .. }) if field == "methods"));
        let mut cfg = small(SampleKind::QubitGrid, 3);
        cfg.lengths = vec![-5.0];
        assert!(run_sweep(&cfg).unwrap_err().is_config());
        let cfg = SweepConfig {
            sample: SampleSpec::new(SampleKind::HaarQubit, 0),
            ..small(SampleKind::QubitGrid, 3)
        };
        assert!(matches!(run_sweep(&cfg), Err(SweepError::Config { ref field, .. }) if field == "sample"));
        let cfg = SweepConfig {
            base: PulseConfig::default().with_dim(3),
            ..small(SampleKind::QubitGrid, 3)
        };
        assert!(run_sweep(&cfg).unwrap_err().is_config());
        assert!(run_phase_sweep(&small(SampleKind::QubitGrid, 3)).is_err());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut cfg = small(SampleKind::QubitGrid, 3);
        cfg.jitters = vec![1e-12];
        cfg.methods = vec![Method::Mle];
        cfg.workers = 1;
        let a = run_sweep(&cfg).unwrap();
        cfg.workers = 4;
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a[0].f_min.to_bits(), b[0].f_min.to_bits());
        assert_eq!(a[0].d_max.to_bits(), b[0].d_max.to_bits());
        assert_eq!(a[0].worst_state, b[0].worst_state);
    }

    #[test]
    fn log_spacing() {
        let v = log_spaced(10.0, 1e4, 4).unwrap();
        assert_eq!(v.len(), 4);
        assert!((v[1] - 100.0).abs() < 1e-9 && (v[2] - 1000.0).abs() < 1e-9);
        assert_eq!(v[3], 1e4);
        assert!(log_spaced(0.0, 10.0, 3).is_err());
    }

    #[test]
    fn bloch_export_shapes() {
        let base = PulseConfig::default();
        let rows = export_bloch(&base, 0.0, 0.0, 13).unwrap();
        assert_eq!(rows.len(), 13);
        for r in &rows {
            assert!((r.point.radius() - 1.0).abs() < 1e-9);
        }
        assert!(export_bloch(&base.with_dim(3), 0.0, 0.0, 13).is_err());
    }

    #[test]
    fn bloch_export_vertical_line_under_strong_jitter() {
        let rows = export_bloch(&PulseConfig::default(), 300.0, 4e-12, 13).unwrap();
        let max_t = rows.iter().map(|r| r.point.x.abs().max(r.point.y.abs())).fold(0.0, f64::max);
        let max_z = rows.iter().map(|r| r.point.z.abs()).fold(0.0, f64::max);
        assert!(max_t < max_z, "transverse {max_t} vs z {max_z}");
    }
}
