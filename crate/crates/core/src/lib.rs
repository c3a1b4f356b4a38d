//! Tomography of time-bin qubits and qutrits sent through a dispersive fiber
//! and detected with a jittery single-photon counter.
//!
//! The pipeline: dispersed Gaussian amplitudes ([`pulse`]) define a
//! time-resolved POVM ([`povm`]); the Born rule turns a state into expected
//! and jitter-distorted counts ([`counts`]); the state is reconstructed by
//! likelihood or least-squares fitting over a Cholesky parametrization
//! ([`estimate`]); and reconstruction quality is scored by worst-case
//! fidelity and trace distance over a sample of inputs ([`metrics`],
//! [`sampling`], [`sweep`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod counts;
pub mod estimate;
pub mod linalg;
pub mod metrics;
pub mod output;
pub mod povm;
pub mod pulse;
pub mod sampling;
pub mod simplex;
pub mod sweep;

pub use estimate::Method;
pub use linalg::{ComplexMatrix, DensityMatrix};
pub use pulse::PulseConfig;
