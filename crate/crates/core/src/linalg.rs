//! Small dense complex matrices and Hermitian eigendecomposition.
//!
//! Everything here targets the tiny dimensions of time-bin qudits (d = 2, 3).
//! The 2×2 eigenproblem is solved in closed form; larger Hermitian matrices use
//! cyclic complex Jacobi rotations. All tolerances are absolute on the
//! max-entry norm since the matrices of interest are O(1).

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

/// Hermiticity tolerance accepted by [`eig_hermitian`].
pub const HERMITIAN_INPUT_TOL: f64 = 1e-8;
/// Eigenvalues in `[-PSD_CLAMP_TOL, 0)` are treated as round-off and clamped.
pub const PSD_CLAMP_TOL: f64 = 1e-10;
/// Tolerance for each of the three density-matrix invariants.
pub const DENSITY_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not Hermitian: max |A - A^H| = {deviation:e}")]
    NonHermitianInput { deviation: f64 },
    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e}")]
    NotPositive { eigenvalue: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Which density-matrix invariant a candidate violated.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DensityError {
    #[error("not Hermitian: max |A - A^H| = {deviation:e}")]
    NotHermitian { deviation: f64 },
    #[error("trace is {trace}, expected 1")]
    NotUnitTrace { trace: f64 },
    #[error("not positive semidefinite: smallest eigenvalue {min_eigenvalue:e}")]
    NotPsd { min_eigenvalue: f64 },
}

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row slices. Panics if the rows are ragged or not square.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            assert_eq!(row.len(), dim, "matrix rows must form a square");
            data.extend_from_slice(row);
        }
        Self { dim, data }
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(x, 0.0);
        }
        m
    }

    /// `|v><v|`
    pub fn outer(v: &[Complex64]) -> Self {
        let dim = v.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |A_ij - B_ij|`. Panics on dimension mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// `(A + A^H) / 2`
    pub fn hermitian_part(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
            }
        }
        m
    }

    /// `Re Tr(A B)` for Hermitian `A`, `B`, without forming the product.
    pub fn trace_product_real(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let a = self.data[i * n + j];
                let b = other.data[j * n + i];
                acc += a.re * b.re - a.im * b.im;
            }
        }
        acc
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:>+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim {
            for j in 0..self.dim {
                let z = self[(i, j)];
                if j > 0 {
                    write!(f, "  ")?;
                }
                write!(f, "{:+.6}{:+.6}i", z.re, z.im)?;
            }
            if i + 1 < self.dim {
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored as the columns of `eigenvectors`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    /// `V diag(f(λ)) V^H`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mut out = ComplexMatrix::zeros(n);
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = v[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vik * v[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|x| x)
    }

    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        let n = self.eigenvalues.len();
        (0..n).map(|i| self.eigenvectors[(i, k)]).collect()
    }
}

/// Hermitian eigendecomposition. The input is symmetrized before solving.
pub fn eig_hermitian(a: &ComplexMatrix) -> Result<EigenDecomposition, LinalgError> {
    let deviation = a.hermiticity_defect();
    if !(deviation <= HERMITIAN_INPUT_TOL) {
        return Err(LinalgError::NonHermitianInput { deviation });
    }
    let h = a.hermitian_part();
    Ok(match h.dim() {
        0 => EigenDecomposition {
            eigenvalues: vec![],
            eigenvectors: ComplexMatrix::zeros(0),
        },
        1 => EigenDecomposition {
            eigenvalues: vec![h[(0, 0)].re],
            eigenvectors: ComplexMatrix::identity(1),
        },
        2 => eig2(&h),
        _ => jacobi(h),
    })
}

fn eig2(h: &ComplexMatrix) -> EigenDecomposition {
    let a = h[(0, 0)].re;
    let c = h[(1, 1)].re;
    let b = h[(0, 1)];
    let mean = 0.5 * (a + c);
    let half_gap = 0.5 * (a - c);
    let radius = half_gap.hypot(b.norm());
    let lo = mean - radius;
    let hi = mean + radius;

    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let scale = a.abs().max(c.abs()).max(b.norm());
    if b.norm() <= f64::EPSILON * scale || radius == 0.0 {
        // already diagonal
        let (vals, cols) = if a <= c {
            (vec![a, c], [[one, zero], [zero, one]])
        } else {
            (vec![c, a], [[zero, one], [one, zero]])
        };
        let mut v = ComplexMatrix::zeros(2);
        for (k, col) in cols.iter().enumerate() {
            v[(0, k)] = col[0];
            v[(1, k)] = col[1];
        }
        return EigenDecomposition {
            eigenvalues: vals,
            eigenvectors: v,
        };
    }

    let vector_for = |lam: f64| -> [Complex64; 2] {
        // Both (b, lam - a) and (lam - c, conj b) solve (H - lam) v = 0; keep
        // whichever has the larger norm.
        let v1 = [b, Complex64::new(lam - a, 0.0)];
        let v2 = [Complex64::new(lam - c, 0.0), b.conj()];
        let n1 = (v1[0].norm_sqr() + v1[1].norm_sqr()).sqrt();
        let n2 = (v2[0].norm_sqr() + v2[1].norm_sqr()).sqrt();
        if n1 >= n2 {
            [v1[0] / n1, v1[1] / n1]
        } else {
            [v2[0] / n2, v2[1] / n2]
        }
    };
    let vlo = vector_for(lo);
    let vhi = vector_for(hi);
    let mut v = ComplexMatrix::zeros(2);
    v[(0, 0)] = vlo[0];
    v[(1, 0)] = vlo[1];
    v[(0, 1)] = vhi[0];
    v[(1, 1)] = vhi[1];
    EigenDecomposition {
        eigenvalues: vec![lo, hi],
        eigenvectors: v,
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi for complex Hermitian matrices.
fn jacobi(mut a: ComplexMatrix) -> EigenDecomposition {
    let n = a.dim();
    let mut v = ComplexMatrix::identity(n);
    let total = a.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let target = f64::EPSILON * total.max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= f64::MIN_POSITIVE {
                    continue;
                }
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let zeta = (aqq - app) / (2.0 * mag);
                let t = if zeta.is_infinite() {
                    0.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Rotation R = diag phase fix followed by a real Givens rotation.
                let r_pp = Complex64::new(c, 0.0);
                let r_pq = Complex64::new(s, 0.0);
                let r_qp = phase.conj() * (-s);
                let r_qq = phase.conj() * c;

                // A <- A R
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * r_pp + akq * r_qp;
                    a[(k, q)] = akp * r_pq + akq * r_qq;
                }
                // A <- R^H A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = r_pp.conj() * apk + r_qp.conj() * aqk;
                    a[(q, k)] = r_pq.conj() * apk + r_qq.conj() * aqk;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                // V <- V R
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * r_pp + vkq * r_qp;
                    v[(k, q)] = vkp * r_pq + vkq * r_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    EigenDecomposition {
        eigenvalues,
        eigenvectors: vectors,
    }
}

/// Principal square root of a PSD Hermitian matrix.
pub fn psd_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    let eig = eig_hermitian(a)?;
    if let Some(&lowest) = eig.eigenvalues.first() {
        if lowest < -PSD_CLAMP_TOL {
            return Err(LinalgError::NotPositive { eigenvalue: lowest });
        }
    }
    Ok(eig.reconstruct_with(|x| x.max(0.0).sqrt()))
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// `I / d`
    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    /// `|v><v|` for a nonzero vector, normalized.
    pub fn pure(v: &[Complex64]) -> Self {
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let unit: Vec<Complex64> = v.iter().map(|z| z / norm).collect();
        Self(ComplexMatrix::outer(&unit))
    }

    /// Wraps a matrix that is a state by construction, skipping validation.
    pub(crate) fn from_trusted(m: ComplexMatrix) -> Self {
        Self(m)
    }

    /// Convex combination `w * self + (1 - w) * other`.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self, LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Self(&self.0.scale(w) + &other.0.scale(1.0 - w)))
    }
}

impl fmt::Display for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl TryFrom<ComplexMatrix> for DensityMatrix {
    type Error = DensityError;
    fn try_from(m: ComplexMatrix) -> Result<Self, DensityError> {
        validate_density(&m)
    }
}

/// Checks Hermiticity, unit trace and positivity, in that order.
pub fn validate_density(a: &ComplexMatrix) -> Result<DensityMatrix, DensityError> {
    let deviation = a.hermiticity_defect();
    if !(deviation <= DENSITY_TOL) {
        return Err(DensityError::NotHermitian { deviation });
    }
    let tr = a.trace();
    if !((tr.re - 1.0).abs() <= DENSITY_TOL) || !(tr.im.abs() <= DENSITY_TOL) {
        return Err(DensityError::NotUnitTrace { trace: tr.re });
    }
    let eig = eig_hermitian(a).map_err(|_| DensityError::NotHermitian { deviation })?;
    let min_eigenvalue = eig.eigenvalues.first().copied().unwrap_or(0.0);
    if !(min_eigenvalue >= -DENSITY_TOL) {
        return Err(DensityError::NotPsd { min_eigenvalue });
    }
    Ok(DensityMatrix(a.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = c(rng.gen_range(-1.0..1.0), 0.0);
            for j in (i + 1)..n {
                let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let mut g = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        // random rank: zero out some rows
        let rank = rng.gen_range(1..=n);
        for i in rank..n {
            for j in 0..n {
                g[(i, j)] = c(0.0, 0.0);
            }
        }
        &g.adjoint() * &g
    }

    fn assert_unitary(v: &ComplexMatrix, tol: f64) {
        let p = &v.adjoint() * v;
        assert!(p.max_abs_diff(&ComplexMatrix::identity(v.dim())) <= tol, "{p:?}");
    }

    #[test]
    fn identity_eigen() {
        let e = eig_hermitian(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0]);
        assert_unitary(&e.eigenvectors, 1e-12);
    }

    #[test]
    fn diagonal_is_sorted() {
        let e = eig_hermitian(&ComplexMatrix::from_diagonal(&[3.0, 1.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 3.0]);
        let e = eig_hermitian(&ComplexMatrix::from_diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn pauli_x() {
        let x = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let e = eig_hermitian(&x).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-15);
        let v0 = e.eigenvector(0);
        let v1 = e.eigenvector(1);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // up to a global phase
        assert!(((v0[0] * v0[1].conj()).re + 0.5).abs() < 1e-12);
        assert!(((v1[0] * v1[1].conj()).re - 0.5).abs() < 1e-12);
        assert!((v0[0].norm() - h).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        assert!(matches!(
            eig_hermitian(&m),
            Err(LinalgError::NonHermitianInput { .. })
        ));
    }

    #[test]
    fn random_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2, 3, 4] {
            for _ in 0..200 {
                let a = random_hermitian(&mut rng, n);
                let e = eig_hermitian(&a).unwrap();
                assert!(e.reconstruct().max_abs_diff(&a) <= 1e-9);
                assert_unitary(&e.eigenvectors, 1e-9);
                assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_hermitian(&mut rng, 3);
        let e1 = eig_hermitian(&a).unwrap();
        let e2 = eig_hermitian(&a).unwrap();
        assert_eq!(e1.eigenvalues, e2.eigenvalues);
        assert_eq!(e1.eigenvectors, e2.eigenvectors);
    }

    #[test]
    fn sqrt_examples() {
        let i3 = ComplexMatrix::identity(3);
        assert!(psd_sqrt(&i3).unwrap().max_abs_diff(&i3) < 1e-14);
        let r = psd_sqrt(&ComplexMatrix::from_diagonal(&[4.0, 9.0])).unwrap();
        assert!(r.max_abs_diff(&ComplexMatrix::from_diagonal(&[2.0, 3.0])) < 1e-14);
        let p = ComplexMatrix::from_real_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert!(psd_sqrt(&p).unwrap().max_abs_diff(&p) < 1e-8);
    }

    #[test]
    fn sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2, 3] {
            for _ in 0..100 {
                let a = random_psd(&mut rng, n);
                let r = psd_sqrt(&a).unwrap();
                assert!(r.is_hermitian(1e-12));
                assert!((&r * &r).max_abs_diff(&a) <= 1e-8);
                let e = eig_hermitian(&r).unwrap();
                assert!(e.eigenvalues[0] >= -1e-12);
            }
        }
    }

    #[test]
    fn sqrt_rejects_negative() {
        let m = ComplexMatrix::from_diagonal(&[1.0, -1e-6]);
        assert!(matches!(psd_sqrt(&m), Err(LinalgError::NotPositive { .. })));
        // round-off level negativity is clamped
        let m = ComplexMatrix::from_diagonal(&[1.0, -1e-12]);
        let r = psd_sqrt(&m).unwrap();
        assert_eq!(r[(1, 1)], c(0.0, 0.0));
    }

    #[test]
    fn validate_examples() {
        assert!(validate_density(&ComplexMatrix::identity(2).scale(0.5)).is_ok());
        match validate_density(&ComplexMatrix::from_diagonal(&[1.0, 0.5])) {
            Err(DensityError::NotUnitTrace { trace }) => assert!((trace - 1.5).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            validate_density(&ComplexMatrix::from_diagonal(&[1.2, -0.2])),
            Err(DensityError::NotPsd { .. })
        ));
        let mut m = ComplexMatrix::identity(2).scale(0.5);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(matches!(
            validate_density(&m),
            Err(DensityError::NotHermitian { .. })
        ));
    }

    #[test]
    fn trace_product_matches_matmul() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a = random_hermitian(&mut rng, 3);
            let b = random_hermitian(&mut rng, 3);
            let full = (&a * &b).trace();
            assert!((a.trace_product_real(&b) - full.re).abs() < 1e-12);
            assert!(full.im.abs() < 1e-12);
        }
    }
}
