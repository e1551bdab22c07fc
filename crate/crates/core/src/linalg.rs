//! Dense complex linear algebra at desk scale: row-major complex matrices,
//! a cyclic Jacobi eigensolver for Hermitian matrices, and PSD square roots.

use num_complex::Complex64;
use thiserror::Error;

/// Relative tolerance for the Hermitian symmetry check.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues above this (relative) threshold below zero fail the PSD check;
/// anything in between is clipped to zero.
pub const PSD_CLIP_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (max asymmetry {violation:.3e} exceeds tolerance {tol:.3e})")]
    NotHermitian { violation: f64, tol: f64 },
    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    NotPsd { eigenvalue: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// Dense complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            entries: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<Complex64>) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count must be rows*cols");
        Self {
            rows,
            cols,
            entries,
        }
    }

    /// Convenience constructor from real entries, row major.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Self {
        Self::from_entries(
            rows,
            cols,
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, Complex64::new(v, 0.0));
        }
        m
    }

    /// Outer product `v v†` of a (not necessarily normalized) vector.
    pub fn outer(v: &[Complex64]) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, v[i] * v[j].conj());
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.entries[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max-entry norm of the difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m.set(c, r, self.get(r, c).conj());
            }
        }
        m
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    let v = out.get(r, c) + a * other.get(k, c);
                    out.set(r, c, v);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Self::from_entries(self.rows, self.cols, entries)
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Self::from_entries(self.rows, self.cols, entries)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let entries = self.entries.iter().map(|a| a * factor).collect();
        Self::from_entries(self.rows, self.cols, entries)
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    /// Kronecker (tensor) product.
    pub fn kron(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let a = self.get(r1, c1);
                for r2 in 0..other.rows {
                    for c2 in 0..other.cols {
                        out.set(
                            r1 * other.rows + r2,
                            c1 * other.cols + c2,
                            a * other.get(r2, c2),
                        );
                    }
                }
            }
        }
        out
    }

    /// Max over entries of |M[j][k] - conj(M[k][j])|.
    pub fn hermitian_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in 0..self.cols {
                let v = (self.get(r, c) - self.get(c, r).conj()).norm();
                worst = worst.max(v);
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.is_square() && self.hermitian_violation() <= HERMITIAN_TOL * (1.0 + self.max_abs())
    }

    /// Re Tr(A B); the usual Hilbert-Schmidt pairing for Hermitian operands.
    pub fn real_trace_product(&self, other: &Self) -> f64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..self.rows {
            for k in 0..self.cols {
                acc += self.get(r, k) * other.get(k, r);
            }
        }
        acc.re
    }
}

/// Spectral decomposition M = V D V† of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Eigenvalues in ascending order.
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    /// V D V† with the stored eigenvalues.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_function(|x| x)
    }

    /// V f(D) V† for a real function of the eigenvalues.
    pub fn apply_function(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += v.get(r, k) * f(self.eigenvalues[k]) * v.get(c, k).conj();
                }
                out.set(r, c, acc);
            }
        }
        out
    }

    /// V diag(z) V† for a complex function of the eigenvalues (used for e^{-ixD}).
    pub fn apply_complex_function(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += v.get(r, k) * f(self.eigenvalues[k]) * v.get(c, k).conj();
                }
                out.set(r, c, acc);
            }
        }
        out
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Adequate for the dimensions this crate works at (a few tens); the sweep
/// count is capped and convergence is checked against the off-diagonal norm.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<EigenDecomposition, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let scale = 1.0 + m.max_abs();
    let violation = m.hermitian_violation();
    if violation > HERMITIAN_TOL * scale {
        return Err(LinalgError::NotHermitian {
            violation,
            tol: HERMITIAN_TOL * scale,
        });
    }
    let n = m.rows;
    // Work on the exactly-Hermitian part so rounding in the input cannot leak
    // imaginary components into the diagonal.
    let mut a = m.add(&m.adjoint()).scale(Complex64::new(0.5, 0.0));
    let mut v = ComplexMatrix::identity(n);

    let stop = 1e-15 * scale;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a.get(p, q).norm());
            }
        }
        if off <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let r = apq.norm();
                if r <= stop * 1e-2 {
                    continue;
                }
                let phase = apq / r;
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Unitary J differs from the identity only in the (p,q) plane:
                // J[p][p] = c*phase, J[p][q] = s*phase, J[q][p] = -s, J[q][q] = c.
                // Columns: A <- A J, V <- V J.
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, phase * c * akp - s * akq);
                    a.set(k, q, phase * s * akp + c * akq);
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, phase * c * vkp - s * vkq);
                    v.set(k, q, phase * s * vkp + c * vkq);
                }
                // Rows: A <- J† A.
                let phc = phase.conj();
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, phc * c * apk - s * aqk);
                    a.set(q, k, phc * s * apk + c * aqk);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, new_col, v.get(r, old_col));
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors: vectors,
    })
}

/// Hermitian square root of a PSD matrix via the spectral decomposition.
///
/// Eigenvalues in [-PSD_CLIP_TOL*scale, 0) are clipped to zero; anything more
/// negative is rejected.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    let eig = hermitian_eig(m)?;
    let scale = 1.0 + m.max_abs();
    let min = eig.eigenvalues.first().copied().unwrap_or(0.0);
    if min < -PSD_CLIP_TOL * scale {
        return Err(LinalgError::NotPsd { eigenvalue: min });
    }
    Ok(eig.apply_function(|x| x.max(0.0).sqrt()))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_hermitian(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
        let g = ComplexMatrix::from_entries(
            n,
            n,
            (0..n * n)
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect(),
        );
        g.add(&g.adjoint()).scale(Complex64::new(0.5, 0.0))
    }

    #[test]
    fn identity_eigenvalues() {
        let eig = hermitian_eig(&ComplexMatrix::identity(2)).unwrap();
        assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_eigenvalues_and_vectors() {
        let eig = hermitian_eig(&ComplexMatrix::diagonal(&[0.0, 1.0])).unwrap();
        assert!((eig.eigenvalues[0]).abs() < 1e-12);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-12);
        // standard basis, up to phase
        assert!((eig.eigenvectors.get(0, 0).norm() - 1.0).abs() < 1e-12);
        assert!((eig.eigenvectors.get(1, 1).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pauli_x_spectrum() {
        let x = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let eig = hermitian_eig(&x).unwrap();
        assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-12);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_square_and_non_hermitian() {
        let m = ComplexMatrix::zeros(2, 3);
        assert!(matches!(
            hermitian_eig(&m),
            Err(LinalgError::NotSquare { .. })
        ));
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            hermitian_eig(&m),
            Err(LinalgError::NotHermitian { .. })
        ));
    }

    #[test]
    fn reconstruction_and_unitarity_dims_2_to_8() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for n in 2..=8 {
            for _ in 0..20 {
                let m = random_hermitian(n, &mut rng);
                let scale = 1.0 + m.max_abs();
                let eig = hermitian_eig(&m).unwrap();
                for w in eig.eigenvalues.windows(2) {
                    assert!(w[0] <= w[1] + 1e-14);
                }
                assert!(eig.reconstruct().max_abs_diff(&m) <= 1e-10 * scale);
                let v = &eig.eigenvectors;
                let gram = v.adjoint().mul(v);
                assert!(gram.max_abs_diff(&ComplexMatrix::identity(n)) <= 1e-10);
                // trace equals eigenvalue sum
                let tr = m.trace().re;
                let sum: f64 = eig.eigenvalues.iter().sum();
                assert!((tr - sum).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn psd_sqrt_trivial_cases() {
        let id = ComplexMatrix::identity(3);
        assert!(psd_sqrt(&id).unwrap().max_abs_diff(&id) < 1e-12);
        let d = ComplexMatrix::diagonal(&[4.0, 9.0]);
        let r = psd_sqrt(&d).unwrap();
        assert!(r.max_abs_diff(&ComplexMatrix::diagonal(&[2.0, 3.0])) < 1e-10);
    }

    #[test]
    fn psd_sqrt_rejects_indefinite() {
        let m = ComplexMatrix::diagonal(&[1.0, -0.5]);
        assert!(matches!(psd_sqrt(&m), Err(LinalgError::NotPsd { .. })));
    }

    #[test]
    fn psd_sqrt_squares_back_on_random_psd() {
        // construct-and-square oracle: A = B B† is PSD by construction
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let n = rng.gen_range(2..=6);
            let b = ComplexMatrix::from_entries(
                n,
                n,
                (0..n * n)
                    .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                    .collect(),
            );
            let a = b.mul(&b.adjoint());
            let r = psd_sqrt(&a).unwrap();
            let scale = 1.0 + a.max_abs();
            assert!(r.mul(&r).max_abs_diff(&a) <= 1e-9 * scale);
            assert!(r.is_hermitian());
        }
    }
}
