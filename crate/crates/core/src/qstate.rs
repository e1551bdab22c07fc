//! Probe states, unitary phase encoding, Uhlmann fidelity, and the resource
//! quantities that enter the bounds: ⟨H⟩, ΔH, and the populated ground level E0.

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{hermitian_eig, psd_sqrt, ComplexMatrix, EigenDecomposition, LinalgError};

/// Default population threshold below which an eigenspace counts as empty.
pub const DEFAULT_SUPPORT_TOL: f64 = 1e-12;
/// Eigenvalues closer than this are treated as one degenerate level.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum StateError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("density matrix trace is {trace}, expected 1")]
    BadTrace { trace: f64 },
    #[error("no eigenspace population exceeds the support tolerance {support_tol}")]
    EmptySupport { support_tol: f64 },
    #[error("repetition count must be at least 1")]
    ZeroCopies,
}

/// Density matrix of a finite-dimensional probe.
#[derive(Debug, Clone)]
pub struct QuantumState {
    rho: ComplexMatrix,
    dim: usize,
    is_pure: bool,
}

impl QuantumState {
    /// Validates Hermiticity, unit trace, and positivity before accepting the matrix.
    pub fn new(rho: ComplexMatrix) -> Result<Self, StateError> {
        let scale = 1.0 + rho.max_abs();
        if !rho.is_square() {
            return Err(StateError::Linalg(LinalgError::NotSquare {
                rows: rho.rows(),
                cols: rho.cols(),
            }));
        }
        let violation = rho.hermitian_violation();
        if violation > 1e-12 * scale {
            return Err(StateError::Linalg(LinalgError::NotHermitian {
                violation,
                tol: 1e-12 * scale,
            }));
        }
        let trace = rho.trace().re;
        if (trace - 1.0).abs() > 1e-10 {
            return Err(StateError::BadTrace { trace });
        }
        let eig = hermitian_eig(&rho)?;
        let min = eig.eigenvalues.first().copied().unwrap_or(0.0);
        if min < -crate::linalg::PSD_CLIP_TOL * scale {
            return Err(StateError::Linalg(LinalgError::NotPsd { eigenvalue: min }));
        }
        let purity = rho.real_trace_product(&rho);
        let dim = rho.rows();
        Ok(Self {
            rho,
            dim,
            is_pure: purity >= 1.0 - 1e-9,
        })
    }

    /// Pure state |ψ⟩⟨ψ| from a state vector (normalized internally).
    pub fn from_state_vector(amplitudes: &[Complex64]) -> Result<Self, StateError> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let v: Vec<Complex64> = amplitudes.iter().map(|a| a / norm).collect();
        Self::new(ComplexMatrix::outer(&v))
    }

    /// Equal-weight superposition of two basis levels of dimension `dim`.
    pub fn two_level_superposition(dim: usize, a: usize, b: usize) -> Result<Self, StateError> {
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        let w = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        v[a] = w;
        v[b] = w;
        Self::new(ComplexMatrix::outer(&v))
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_pure(&self) -> bool {
        self.is_pure
    }

    pub fn purity(&self) -> f64 {
        self.rho.real_trace_product(&self.rho)
    }
}

/// Hermitian generator H of the encoding U_x = e^{-ixH}, with its
/// eigendecomposition cached.
#[derive(Debug, Clone)]
pub struct Generator {
    h: ComplexMatrix,
    eig: EigenDecomposition,
}

impl Generator {
    pub fn new(h: ComplexMatrix) -> Result<Self, StateError> {
        let eig = hermitian_eig(&h)?;
        Ok(Self { h, eig })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.h
    }

    pub fn eig(&self) -> &EigenDecomposition {
        &self.eig
    }

    pub fn dim(&self) -> usize {
        self.h.rows()
    }
}

/// The resource quantities of a probe/generator pair.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ResourceSummary {
    pub mean_h: f64,
    pub var_h: f64,
    pub e0: f64,
    pub gap: f64,
}

fn check_dims(state: &QuantumState, gen: &Generator) -> Result<(), StateError> {
    if state.dim() != gen.dim() {
        return Err(StateError::DimensionMismatch {
            left: state.dim(),
            right: gen.dim(),
        });
    }
    Ok(())
}

/// U_x ρ U_x† with U_x = V e^{-ixD} V†.
pub fn evolve(state: &QuantumState, gen: &Generator, x: f64) -> Result<QuantumState, StateError> {
    check_dims(state, gen)?;
    let u = gen
        .eig
        .apply_complex_function(|e| Complex64::from_polar(1.0, -x * e));
    let rho = u.mul(state.rho()).mul(&u.adjoint());
    QuantumState::new(rho)
}

/// Uhlmann fidelity [Tr √(√a b √a)]², clipped to [0, 1].
pub fn fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64, StateError> {
    if a.dim() != b.dim() {
        return Err(StateError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let sa = psd_sqrt(a.rho())?;
    let m = sa.mul(b.rho()).mul(&sa);
    // symmetrize away the rounding from the two products
    let m = m.add(&m.adjoint()).scale(Complex64::new(0.5, 0.0));
    let eig = hermitian_eig(&m)?;
    let root_sum: f64 = eig.eigenvalues.iter().map(|&e| e.max(0.0).sqrt()).sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0))
}

/// Fidelity between the ν-copy tensor powers, via multiplicativity.
pub fn joint_fidelity(a: &QuantumState, b: &QuantumState, nu: u32) -> Result<f64, StateError> {
    if nu == 0 {
        return Err(StateError::ZeroCopies);
    }
    Ok(fidelity(a, b)?.powi(nu as i32))
}

/// (⟨H⟩, (ΔH)²) on the given state; the variance is clipped at zero.
pub fn moments(state: &QuantumState, gen: &Generator) -> Result<(f64, f64), StateError> {
    check_dims(state, gen)?;
    let mean = state.rho().real_trace_product(gen.matrix());
    let h2 = gen.matrix().mul(gen.matrix());
    let second = state.rho().real_trace_product(&h2);
    Ok((mean, (second - mean * mean).max(0.0)))
}

/// Minimum eigenvalue of H whose eigenspace carries population above
/// `support_tol` in the state. Degenerate levels are grouped within
/// [`DEGENERACY_TOL`].
pub fn ground_energy(
    state: &QuantumState,
    gen: &Generator,
    support_tol: f64,
) -> Result<f64, StateError> {
    check_dims(state, gen)?;
    let eig = gen.eig();
    let n = gen.dim();
    // population of eigenvector k: ⟨v_k|ρ|v_k⟩
    let pop_of = |k: usize| -> f64 {
        let v = &eig.eigenvectors;
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..n {
            for c in 0..n {
                acc += v.get(r, k).conj() * state.rho().get(r, c) * v.get(c, k);
            }
        }
        acc.re
    };
    let mut k = 0;
    while k < n {
        let level = eig.eigenvalues[k];
        let mut pop = 0.0;
        let mut j = k;
        while j < n && eig.eigenvalues[j] - level <= DEGENERACY_TOL {
            pop += pop_of(j);
            j += 1;
        }
        if pop > support_tol {
            return Ok(level);
        }
        k = j;
    }
    Err(StateError::EmptySupport { support_tol })
}

/// ⟨H⟩, (ΔH)², E0 and the gap ⟨H⟩-E0 in one report.
pub fn resource_summary(
    state: &QuantumState,
    gen: &Generator,
    support_tol: f64,
) -> Result<ResourceSummary, StateError> {
    let (mean_h, var_h) = moments(state, gen)?;
    let e0 = ground_energy(state, gen, support_tol)?;
    Ok(ResourceSummary {
        mean_h,
        var_h,
        e0,
        gap: (mean_h - e0).max(0.0),
    })
}
