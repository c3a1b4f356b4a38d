//! Input-state samples: Bloch-ball and purity×phase product grids, the
//! equatorial phase families, and random states.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use thiserror::Error;

use crate::linalg::{ComplexMatrix, DensityMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error("need at least 2 points per axis, got {0}")]
    TooFewPoints(usize),
}

/// Coordinates that generated a sample member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateParams {
    Bloch { r: f64, theta: f64, phi: f64 },
    Qutrit { p: f64, phi12: f64, phi13: f64 },
    QubitPhase { phi: f64 },
    QutritPhase { phi12: f64, phi13: f64 },
    Random { index: usize },
}

impl fmt::Display for StateParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            StateParams::Bloch { r, theta, phi } => write!(f, "(r={r:.6},theta={theta:.6},phi={phi:.6})"),
            StateParams::Qutrit { p, phi12, phi13 } => {
                write!(f, "(p={p:.6},phi12={phi12:.6},phi13={phi13:.6})")
            }
            StateParams::QubitPhase { phi } => write!(f, "(phi={phi:.6})"),
            StateParams::QutritPhase { phi12, phi13 } => write!(f, "(phi12={phi12:.6},phi13={phi13:.6})"),
            StateParams::Random { index } => write!(f, "(index={index})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StateSample {
    pub states: Vec<DensityMatrix>,
    pub label: String,
    /// Either empty or one entry per state.
    pub params: Vec<StateParams>,
}

impl StateSample {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.states.first().map(DensityMatrix::dim)
    }

    pub fn describe(&self, index: usize) -> String {
        match self.params.get(index) {
            Some(p) => p.to_string(),
            None => format!("(index={index})"),
        }
    }
}

fn check_points(n: usize) -> Result<(), SamplingError> {
    if n < 2 {
        Err(SamplingError::TooFewPoints(n))
    } else {
        Ok(())
    }
}

/// `n` points on `[0, hi]` including both ends.
fn closed_axis(n: usize, hi: f64) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| hi * i as f64 / (n - 1) as f64)
}

/// `n` points on `[0, 2 pi)`.
fn periodic_axis(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| 2.0 * PI * i as f64 / n as f64)
}

/// `(I + r n·sigma) / 2`
pub fn bloch_state(r: f64, theta: f64, phi: f64) -> DensityMatrix {
    let (x, y, z) = (r * theta.sin() * phi.cos(), r * theta.sin() * phi.sin(), r * theta.cos());
    let m = ComplexMatrix::from_rows(&[
        vec![Complex64::new(0.5 * (1.0 + z), 0.0), Complex64::new(0.5 * x, -0.5 * y)],
        vec![Complex64::new(0.5 * x, 0.5 * y), Complex64::new(0.5 * (1.0 - z), 0.0)],
    ]);
    DensityMatrix::from_trusted(m)
}

/// Equal-amplitude qutrit `(1, e^{i phi12}, e^{i phi13}) / sqrt 3`.
fn equal_qutrit(phi12: f64, phi13: f64) -> Vec<Complex64> {
    let s = 1.0 / 3f64.sqrt();
    vec![
        Complex64::new(s, 0.0),
        Complex64::from_polar(s, phi12),
        Complex64::from_polar(s, phi13),
    ]
}

/// `p |psi(phi12, phi13)><psi| + (1 - p) I / 3`
pub fn qutrit_state(p: f64, phi12: f64, phi13: f64) -> DensityMatrix {
    let pure = ComplexMatrix::outer(&equal_qutrit(phi12, phi13));
    let mixed = ComplexMatrix::identity(3).scale(1.0 / 3.0);
    DensityMatrix::from_trusted(&pure.scale(p) + &mixed.scale(1.0 - p))
}

/// `(1/2) [[1, e^{-i phi}], [e^{i phi}, 1]]`
pub fn qubit_phase_state(phi: f64) -> DensityMatrix {
    DensityMatrix::from_trusted(ComplexMatrix::outer(&[
        Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        Complex64::from_polar(std::f64::consts::FRAC_1_SQRT_2, phi),
    ]))
}

pub fn qutrit_phase_state(phi12: f64, phi13: f64) -> DensityMatrix {
    DensityMatrix::from_trusted(ComplexMatrix::outer(&equal_qutrit(phi12, phi13)))
}

/// Product grid over `r ∈ [0,1]`, `theta ∈ [0,pi]`, `phi ∈ [0,2pi)`; `n^3`
/// states. Coordinate degeneracies (r = 0, poles) are kept as duplicates.
pub fn qubit_grid(n: usize) -> Result<StateSample, SamplingError> {
    check_points(n)?;
    let mut states = Vec::with_capacity(n * n * n);
    let mut params = Vec::with_capacity(n * n * n);
    for r in closed_axis(n, 1.0) {
        for theta in closed_axis(n, PI) {
            for phi in periodic_axis(n) {
                states.push(bloch_state(r, theta, phi));
                params.push(StateParams::Bloch { r, theta, phi });
            }
        }
    }
    Ok(StateSample {
        states,
        label: format!("qubit-grid-{}", n * n * n),
        params,
    })
}

/// Product grid over purity `p ∈ [0,1]` and both phases on `[0,2pi)`.
pub fn qutrit_grid(n: usize) -> Result<StateSample, SamplingError> {
    check_points(n)?;
    let mut states = Vec::with_capacity(n * n * n);
    let mut params = Vec::with_capacity(n * n * n);
    for p in closed_axis(n, 1.0) {
        for phi12 in periodic_axis(n) {
            for phi13 in periodic_axis(n) {
                states.push(qutrit_state(p, phi12, phi13));
                params.push(StateParams::Qutrit { p, phi12, phi13 });
            }
        }
    }
    Ok(StateSample {
        states,
        label: format!("qutrit-grid-{}", n * n * n),
        params,
    })
}

/// Equatorial qubits with `phi` on `[0, 2pi]`, both ends included.
pub fn qubit_phase_family(n: usize) -> Result<StateSample, SamplingError> {
    check_points(n)?;
    let (states, params) = closed_axis(n, 2.0 * PI)
        .map(|phi| (qubit_phase_state(phi), StateParams::QubitPhase { phi }))
        .unzip();
    Ok(StateSample {
        states,
        label: format!("qubit-phase-{n}"),
        params,
    })
}

/// Equal-amplitude qutrits with both phases on `[0, 2pi]`; `n^2` states.
pub fn qutrit_phase_family(n: usize) -> Result<StateSample, SamplingError> {
    check_points(n)?;
    let mut states = Vec::with_capacity(n * n);
    let mut params = Vec::with_capacity(n * n);
    for phi12 in closed_axis(n, 2.0 * PI) {
        for phi13 in closed_axis(n, 2.0 * PI) {
            states.push(qutrit_phase_state(phi12, phi13));
            params.push(StateParams::QutritPhase { phi12, phi13 });
        }
    }
    Ok(StateSample {
        states,
        label: format!("qutrit-phase-{}", n * n),
        params,
    })
}

fn complex_normal(rng: &mut impl Rng) -> Complex64 {
    // Box–Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    Complex64::from_polar((-u1.ln()).sqrt(), 2.0 * PI * u2)
}

/// Full-rank random state `G G^H / Tr(G G^H)` with a complex Gaussian `G`.
pub fn random_state(rng: &mut impl Rng, dim: usize) -> DensityMatrix {
    let mut g = ComplexMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            g[(i, j)] = complex_normal(rng);
        }
    }
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::from_trusted(m.hermitian_part().scale(1.0 / tr))
}

/// Haar-random pure state.
pub fn random_pure(rng: &mut impl Rng, dim: usize) -> DensityMatrix {
    let v: Vec<Complex64> = (0..dim).map(|_| complex_normal(rng)).collect();
    DensityMatrix::pure(&v)
}

/// `count` Haar-random pure states of dimension `dim`.
pub fn haar_sample(dim: usize, count: usize, seed: u64) -> StateSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    StateSample {
        states: (0..count).map(|_| random_pure(&mut rng, dim)).collect(),
        label: format!("haar-{dim}-{count}"),
        params: (0..count).map(|index| StateParams::Random { index }).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eig_hermitian, validate_density};

    fn all_valid(s: &StateSample) {
        for rho in &s.states {
            validate_density(rho.matrix()).unwrap();
        }
        assert_eq!(s.params.len(), s.states.len());
    }

    #[test]
    fn qubit_grid_counts_and_validity() {
        let s = qubit_grid(21).unwrap();
        assert_eq!(s.len(), 9261);
        all_valid(&s);
        for (rho, p) in s.states.iter().zip(&s.params) {
            if let StateParams::Bloch { r, .. } = p {
                if *r == 1.0 {
                    let e = eig_hermitian(rho.matrix()).unwrap();
                    assert!(e.eigenvalues[0].abs() < 1e-10 && (e.eigenvalues[1] - 1.0).abs() < 1e-10);
                }
            }
        }
        assert_eq!(qubit_grid(5).unwrap().len(), 125);
        assert!(qubit_grid(1).is_err());
    }

    #[test]
    fn qutrit_grid_counts_and_slices() {
        let s = qutrit_grid(21).unwrap();
        assert_eq!(s.len(), 9261);
        all_valid(&s);
        let mixed = ComplexMatrix::identity(3).scale(1.0 / 3.0);
        for rho in &s.states[..21 * 21] {
            assert!(rho.matrix().max_abs_diff(&mixed) < 1e-15);
        }
        let top = qutrit_state(1.0, 0.0, 0.0);
        let ones = ComplexMatrix::from_real_rows(&vec![vec![1.0 / 3.0; 3]; 3]);
        assert!(top.matrix().max_abs_diff(&ones) < 1e-15);
        let e = eig_hermitian(top.matrix()).unwrap();
        assert!(e.eigenvalues[1].abs() < 1e-12 && (e.eigenvalues[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qubit_phase_family_members() {
        let s = qubit_phase_family(201).unwrap();
        assert_eq!(s.len(), 201);
        all_valid(&s);
        let half = ComplexMatrix::from_real_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert!(s.states[0].matrix().max_abs_diff(&half) < 1e-15);
        let anti = ComplexMatrix::from_real_rows(&[vec![0.5, -0.5], vec![-0.5, 0.5]]);
        assert!(s.states[100].matrix().max_abs_diff(&anti) < 1e-15);
        for rho in &s.states {
            let m = rho.matrix();
            let (x, y, z) = (2.0 * m[(0, 1)].re, -2.0 * m[(0, 1)].im, (m[(0, 0)] - m[(1, 1)]).re);
            assert!(z.abs() < 1e-12);
            assert!(((x * x + y * y + z * z).sqrt() - 1.0).abs() < 1e-12);
        }
        // matches the explicit matrix form
        let phi = 0.7;
        let explicit = ComplexMatrix::from_rows(&[
            vec![Complex64::new(0.5, 0.0), Complex64::from_polar(0.5, -phi)],
            vec![Complex64::from_polar(0.5, phi), Complex64::new(0.5, 0.0)],
        ]);
        assert!(qubit_phase_state(phi).matrix().max_abs_diff(&explicit) < 1e-15);
    }

    #[test]
    fn qutrit_phase_family_members() {
        let s = qutrit_phase_family(41).unwrap();
        assert_eq!(s.len(), 1681);
        all_valid(&s);
        let ones = ComplexMatrix::from_real_rows(&vec![vec![1.0 / 3.0; 3]; 3]);
        assert!(s.states[0].matrix().max_abs_diff(&ones) < 1e-15);
        let (a, b) = (0.4, 1.9);
        let third = |phase: f64| Complex64::from_polar(1.0 / 3.0, phase);
        let explicit = ComplexMatrix::from_rows(&[
            vec![third(0.0), third(-a), third(-b)],
            vec![third(a), third(0.0), third(a - b)],
            vec![third(b), third(b - a), third(0.0)],
        ]);
        assert!(qutrit_phase_state(a, b).matrix().max_abs_diff(&explicit) < 1e-15);
    }

    #[test]
    fn random_states_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for dim in [2, 3] {
            for _ in 0..100 {
                validate_density(random_state(&mut rng, dim).matrix()).unwrap();
                validate_density(random_pure(&mut rng, dim).matrix()).unwrap();
            }
        }
        let h = haar_sample(3, 10, 5);
        assert_eq!(h.len(), 10);
        all_valid(&h);
    }
}
