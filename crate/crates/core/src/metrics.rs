//! Fidelity, trace distance and their worst case over a sample of states.

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{eig_hermitian, DensityMatrix, LinalgError, PSD_CLAMP_TOL};
use crate::sampling::StateSample;

const OVERSHOOT: f64 = 1e-9;
const ROUNDOFF_CUTOFF: f64 = 64.0 * f64::EPSILON;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("sample is empty")]
    EmptySample,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn check_dims(a: &DensityMatrix, b: &DensityMatrix) -> Result<(), MetricError> {
    if a.dim() != b.dim() {
        return Err(MetricError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

fn clamp_unit(x: f64) -> f64 {
    debug_assert!(x > -OVERSHOOT && x < 1.0 + OVERSHOOT, "metric out of range: {x}");
    x.clamp(0.0, 1.0)
}

/// Square root of an eigenvalue, with round-off sized values (relative to the
/// spectrum's top) zeroed so that rank-deficient inputs do not pick up
/// `sqrt(eps)` sized errors.
fn root_of(x: f64, top: f64) -> f64 {
    if x <= ROUNDOFF_CUTOFF * top {
        0.0
    } else {
        x.sqrt()
    }
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(a) b sqrt(a)))^2`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64, MetricError> {
    check_dims(a, b)?;
    let eig_a = eig_hermitian(a.matrix())?;
    if let Some(&lowest) = eig_a.eigenvalues.first() {
        if lowest < -PSD_CLAMP_TOL {
            return Err(LinalgError::NotPositive { eigenvalue: lowest }.into());
        }
    }
    let top_a = eig_a.eigenvalues.last().copied().unwrap_or(0.0);
    let root = eig_a.reconstruct_with(|x| root_of(x, top_a));
    let inner = (&(&root * b.matrix()) * &root).hermitian_part();
    let eig = eig_hermitian(&inner)?;
    let top = eig.eigenvalues.last().copied().unwrap_or(0.0);
    let tr: f64 = eig.eigenvalues.iter().map(|&x| root_of(x, top)).sum();
    Ok(clamp_unit(tr * tr))
}

/// `Tr |a - b| / 2`
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64, MetricError> {
    check_dims(a, b)?;
    let diff = (a.matrix() - b.matrix()).hermitian_part();
    let eig = eig_hermitian(&diff)?;
    Ok(clamp_unit(0.5 * eig.eigenvalues.iter().map(|x| x.abs()).sum::<f64>()))
}

/// Worst value over a sample and where it occurred.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub value: f64,
    pub index: usize,
}

/// Index of the extreme element under `better`, lowest index on ties.
fn reduce_extremum(values: &[f64], better: impl Fn(f64, f64) -> bool) -> Option<Extremum> {
    let mut out: Option<Extremum> = None;
    for (index, &value) in values.iter().enumerate() {
        match out {
            Some(e) if !better(value, e.value) => {}
            _ => out = Some(Extremum { value, index }),
        }
    }
    out
}

pub fn min_of(values: &[f64]) -> Option<Extremum> {
    reduce_extremum(values, |a, b| a < b)
}

pub fn max_of(values: &[f64]) -> Option<Extremum> {
    reduce_extremum(values, |a, b| a > b)
}

/// Evaluates `metric(rho_in, reconstruct(rho_in))` over the sample in
/// parallel, keeping sample order.
fn per_state<F, R, E>(sample: &StateSample, reconstruct: R, metric: F) -> Result<Vec<f64>, E>
where
    R: Fn(&DensityMatrix) -> Result<DensityMatrix, E> + Sync,
    F: Fn(&DensityMatrix, &DensityMatrix) -> Result<f64, MetricError> + Sync,
    E: From<MetricError> + Send,
{
    sample
        .states
        .par_iter()
        .map(|rho| {
            let out = reconstruct(rho)?;
            Ok(metric(rho, &out)?)
        })
        .collect()
}

/// `min_i F(rho_i, reconstruct(rho_i))`.
pub fn min_fidelity<R, E>(sample: &StateSample, reconstruct: R) -> Result<Extremum, E>
where
    R: Fn(&DensityMatrix) -> Result<DensityMatrix, E> + Sync,
    E: From<MetricError> + Send,
{
    if sample.states.is_empty() {
        return Err(MetricError::EmptySample.into());
    }
    let values = per_state(sample, reconstruct, fidelity)?;
    Ok(min_of(&values).expect("nonempty"))
}

/// `max_i D(rho_i, reconstruct(rho_i))`.
pub fn max_trace_distance<R, E>(sample: &StateSample, reconstruct: R) -> Result<Extremum, E>
where
    R: Fn(&DensityMatrix) -> Result<DensityMatrix, E> + Sync,
    E: From<MetricError> + Send,
{
    if sample.states.is_empty() {
        return Err(MetricError::EmptySample.into());
    }
    let values = per_state(sample, reconstruct, trace_distance)?;
    Ok(max_of(&values).expect("nonempty"))
}
