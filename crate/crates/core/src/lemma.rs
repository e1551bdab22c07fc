//! Brute-force verification of the proof chain behind the averaged bound:
//! inlier-set construction, the two Tchebychev tail steps, the
//! Cauchy-Schwarz split of the Bhattacharyya coefficient, and the final
//! classical-fidelity bound 4/λ², cross-checked against the quantum fidelity
//! when the underlying states are attached.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::estimation::{rmse_report, Distribution, EstimationError, EstimatorMap};
use crate::linalg::{hermitian_eig, ComplexMatrix};
use crate::qstate::{fidelity, Generator, QuantumState, StateError};
use crate::rng::{substream, tags};

/// Slack applied to every chain step to absorb floating-point rounding.
pub const STEP_TOL: f64 = 1e-9;
/// Eq. (9): the RMSE at x must exceed this.
pub const MIN_RMSE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LemmaError {
    #[error("distributions have different outcome sets")]
    OutcomeMismatch,
    #[error("precondition {equation} fails: {detail}")]
    PreconditionFailed { equation: String, detail: String },
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// A fully specified two-point instance of the lemma.
#[derive(Debug, Clone)]
pub struct LemmaInstance {
    pub x: f64,
    pub x_prime: f64,
    pub dist_x: Distribution,
    pub dist_xp: Distribution,
    pub estimator: EstimatorMap,
    pub lambda: f64,
    pub biased: bool,
    /// The states the two distributions were measured on, when available.
    pub state_pair: Option<(QuantumState, QuantumState)>,
}

impl LemmaInstance {
    /// The separation multiplier of Eq. (10): λ+1 when biased, λ otherwise.
    pub fn separation_multiplier(&self) -> f64 {
        if self.biased {
            self.lambda + 1.0
        } else {
            self.lambda
        }
    }
}

/// Margin of one verified step; positive margins mean the step holds.
#[derive(Debug, Clone, Serialize)]
pub struct StepMargin {
    pub step: &'static str,
    pub margin: f64,
    pub holds: bool,
}

/// All quantities of the verified chain.
#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    pub bhattacharyya: f64,
    pub inlier_mass_x: f64,
    pub outlier_mass_xp: f64,
    pub classical_fidelity_bound: f64,
    pub quantum_fidelity: Option<f64>,
    pub lambda: f64,
    pub all_steps_hold: bool,
    pub margins: Vec<StepMargin>,
}

/// Σ_j √(p_j q_j) over a shared outcome set, clipped to [0, 1].
pub fn bhattacharyya(p: &Distribution, q: &Distribution) -> Result<f64, LemmaError> {
    if p.labels() != q.labels() {
        return Err(LemmaError::OutcomeMismatch);
    }
    let sum: f64 = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(&a, &b)| (a * b).sqrt())
        .sum();
    Ok(sum.clamp(0.0, 1.0))
}

/// The inlier set I = { j : |x_j - x̄'| ≤ λ·δX' }, boundary included.
///
/// With δX' = 0 the set degenerates to exact matches of x̄' (within 1e-12).
pub fn inlier_set(
    estimator: &EstimatorMap,
    x_bar_prime: f64,
    delta_x_prime: f64,
    lambda: f64,
) -> BTreeSet<String> {
    let radius = if delta_x_prime > 0.0 {
        lambda * delta_x_prime
    } else {
        1e-12
    };
    estimator
        .values()
        .iter()
        .filter(|(_, &v)| (v - x_bar_prime).abs() <= radius)
        .map(|(label, _)| label.clone())
        .collect()
}

/// Checks the instance preconditions and then every step of the chain.
pub fn verify_chain(instance: &LemmaInstance) -> Result<ChainReport, LemmaError> {
    let inst = instance;
    if inst.dist_x.labels() != inst.dist_xp.labels() {
        return Err(LemmaError::OutcomeMismatch);
    }
    let r_x = rmse_report(&inst.dist_x, &inst.estimator, inst.x)?;
    let r_xp = rmse_report(&inst.dist_xp, &inst.estimator, inst.x_prime)?;
    if r_x.delta_x <= MIN_RMSE {
        return Err(LemmaError::PreconditionFailed {
            equation: "eq9".into(),
            detail: format!("rmse at x is {:.3e}", r_x.delta_x),
        });
    }
    let separation = (inst.x - inst.x_prime).abs();
    let required = inst.separation_multiplier() * (r_x.delta_x + r_xp.delta_x);
    if (separation - required).abs() > STEP_TOL {
        return Err(LemmaError::PreconditionFailed {
            equation: "eq10".into(),
            detail: format!(
                "|x-x'| = {separation:.6e} but the multiplier form gives {required:.6e}"
            ),
        });
    }

    let lambda = inst.lambda;
    let inv_l2 = 1.0 / (lambda * lambda);
    let inliers = inlier_set(&inst.estimator, r_xp.x_bar, r_xp.small_delta_x, lambda);
    let mut inlier_mass_x = 0.0;
    let mut outlier_mass_xp = 0.0;
    for ((label, px), pxp) in inst.dist_x.iter().zip(inst.dist_xp.probs()) {
        if inliers.contains(label) {
            inlier_mass_x += px;
        } else {
            outlier_mass_xp += pxp;
        }
    }
    let bc = bhattacharyya(&inst.dist_x, &inst.dist_xp)?;

    let mut margins = Vec::new();
    let mut push = |step: &'static str, margin: f64| {
        margins.push(StepMargin {
            step,
            margin,
            holds: margin >= -STEP_TOL,
        });
    };

    // (a) Tchebychev on P(x'): mass outside I is at most 1/lambda^2
    push("outlier_tail", inv_l2 - outlier_mass_xp);
    // (b) mean separation survives the bias terms
    let mean_sep = (r_x.x_bar - r_xp.x_bar).abs();
    push(
        "mean_separation",
        mean_sep - lambda * (r_x.delta_x + r_xp.delta_x),
    );
    // (c) every inlier estimate is at least lambda*DeltaX from x-bar
    let min_dist = inliers
        .iter()
        .filter_map(|l| inst.estimator.get(l))
        .map(|v| (v - r_x.x_bar).abs())
        .fold(f64::INFINITY, f64::min);
    push("inlier_distance", min_dist - lambda * r_x.delta_x);
    // (d) Tchebychev on P(x): mass inside I is at most 1/lambda^2
    push("inlier_tail", inv_l2 - inlier_mass_x);
    // (e) Cauchy-Schwarz split of the Bhattacharyya sum
    push(
        "bhattacharyya_split",
        inlier_mass_x.sqrt() + outlier_mass_xp.sqrt() - bc,
    );
    // (f) classical fidelity bound
    let classical_bound = bc * bc;
    push("classical_fidelity", 4.0 * inv_l2 - classical_bound);
    // (g) quantum fidelity is dominated by the classical one
    let quantum_fidelity = match &inst.state_pair {
        Some((a, b)) => {
            let f = fidelity(a, b)?;
            push("quantum_fidelity", classical_bound - f);
            Some(f)
        }
        None => None,
    };

    let all_steps_hold = margins.iter().all(|m| m.holds);
    Ok(ChainReport {
        bhattacharyya: bc,
        inlier_mass_x,
        outlier_mass_xp,
        classical_fidelity_bound: classical_bound,
        quantum_fidelity,
        lambda,
        all_steps_hold,
        margins,
    })
}

/// Outcome of the instance generator: rejection is a value, never a retry.
#[derive(Debug)]
pub enum Generated {
    Instance(Box<LemmaInstance>),
    Rejected { reason: String },
}

/// Fast evaluation of POVM outcome probabilities along the evolution orbit,
/// working entirely in the generator eigenbasis.
struct OrbitDistribution {
    levels: Vec<f64>,
    /// coeff[j][(n,m)] = Ẽ_j[m][n]·ρ̃[n][m]; p_j(t) = Re Σ coeff·z_n·conj(z_m)
    coeff: Vec<ComplexMatrix>,
}

impl OrbitDistribution {
    fn new(levels: Vec<f64>, rho_eb: &ComplexMatrix, elements_eb: &[ComplexMatrix]) -> Self {
        let d = levels.len();
        let coeff = elements_eb
            .iter()
            .map(|e| {
                let mut c = ComplexMatrix::zeros(d, d);
                for n in 0..d {
                    for m in 0..d {
                        c.set(n, m, e.get(m, n) * rho_eb.get(n, m));
                    }
                }
                c
            })
            .collect();
        Self { levels, coeff }
    }

    fn probs(&self, t: f64) -> Vec<f64> {
        let d = self.levels.len();
        let z: Vec<Complex64> = self
            .levels
            .iter()
            .map(|&e| Complex64::from_polar(1.0, -t * e))
            .collect();
        self.coeff
            .iter()
            .map(|c| {
                let mut acc = Complex64::new(0.0, 0.0);
                for n in 0..d {
                    for m in 0..d {
                        acc += c.get(n, m) * z[n] * z[m].conj();
                    }
                }
                acc.re.max(0.0)
            })
            .collect()
    }

    fn rmse(&self, values: &[f64], t_true: f64) -> f64 {
        let p = self.probs(t_true);
        p.iter()
            .zip(values)
            .map(|(&pj, &v)| pj * (v - t_true) * (v - t_true))
            .sum::<f64>()
            .sqrt()
    }
}

fn random_unit_vector(dim: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    v
}

/// Orthonormal basis starting from `first`, completed by Gram-Schmidt over
/// random directions.
fn complete_basis(first: Vec<Complex64>, rng: &mut impl Rng) -> Vec<Vec<Complex64>> {
    let dim = first.len();
    let mut basis = vec![first];
    while basis.len() < dim {
        let mut v = random_unit_vector(dim, rng);
        for b in &basis {
            let overlap: Complex64 = b.iter().zip(&v).map(|(bi, vi)| bi.conj() * vi).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= overlap * bi;
            }
        }
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|z| *z /= norm);
            basis.push(v);
        }
    }
    basis
}

fn random_unitary(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    // eigenvectors of a random Hermitian matrix form a Haar-like unitary
    let h = {
        let g = ComplexMatrix::from_entries(
            dim,
            dim,
            (0..dim * dim)
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect(),
        );
        g.add(&g.adjoint()).scale(Complex64::new(0.5, 0.0))
    };
    hermitian_eig(&h).expect("random Hermitian").eigenvectors
}

const SEPARATION_WINDOW: f64 = 4.0 * std::f64::consts::PI;

/// Draws a random instance honoring Eqs. (9)-(10): random probe (pure or
/// slightly mixed), random near-harmonic generator spectrum in [0, 1], a
/// sharp per-copy POVM anchored at the probe, monotone estimator values, and
/// a separation |x-x'| solved by bisection on the Eq. (10) residual.
///
/// Returns `Rejected` when no solution exists inside the window [0, 4π];
/// rejection is reported, never silently retried.
pub fn random_instance(
    dim: usize,
    n_outcomes: usize,
    lambda: f64,
    seed: u64,
) -> Result<Generated, LemmaError> {
    assert!((2..=8).contains(&dim), "dim must be in 2..=8");
    assert!(n_outcomes >= 2, "need at least two outcomes");
    assert!(lambda > 1.0, "lambda must exceed 1");
    let mut rng = substream(seed, tags::INSTANCE, 0);

    // near-harmonic spectrum in [0, 1] with a little jitter, so the probe
    // overlap can nearly cancel somewhere inside the window
    let width = 0.3 + 0.7 * rng.gen::<f64>();
    let base = width / (dim - 1) as f64;
    let mut levels: Vec<f64> = (0..dim)
        .map(|m| (m as f64 + 0.02 * rng.gen::<f64>()) * base)
        .collect();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.iter_mut().for_each(|e| *e = e.clamp(0.0, 1.0));
    let rotation = random_unitary(dim, &mut rng);
    let h = {
        let mut d = ComplexMatrix::zeros(dim, dim);
        for (k, &e) in levels.iter().enumerate() {
            d.set(k, k, Complex64::new(e, 0.0));
        }
        rotation.mul(&d).mul(&rotation.adjoint())
    };
    let gen = Generator::new(h)?;

    // probe: near-uniform amplitudes across the eigenbasis, random phases,
    // optionally a touch of mixedness
    let coeffs: Vec<Complex64> = (0..dim)
        .map(|_| {
            let amp = 1.0 + 0.3 * (rng.gen::<f64>() - 0.5);
            amp * Complex64::from_polar(1.0, rng.gen::<f64>() * std::f64::consts::TAU)
        })
        .collect();
    let norm: f64 = coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut psi = vec![Complex64::new(0.0, 0.0); dim];
    for (r, p) in psi.iter_mut().enumerate() {
        for (k, &c) in coeffs.iter().enumerate() {
            *p += rotation.get(r, k) * c / norm;
        }
    }
    let eta = 0.3 * 10f64.powf(-6.0 + 4.0 * rng.gen::<f64>());
    let rho = {
        let pure = ComplexMatrix::outer(&psi);
        let g = ComplexMatrix::from_entries(
            dim,
            dim,
            (0..dim * dim)
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect(),
        );
        let noise = g.mul(&g.adjoint());
        let tr = noise.trace().re;
        pure.scale(Complex64::new(1.0 - eta, 0.0))
            .add(&noise.scale(Complex64::new(eta / tr, 0.0)))
    };
    let probe = QuantumState::new(rho)?;

    // sharp POVM: projectors onto a basis anchored at the probe, refined into
    // n_outcomes elements by random weight splitting
    let basis = complete_basis(psi.clone(), &mut rng);
    let groups = n_outcomes.min(dim);
    let mut group_projectors: Vec<ComplexMatrix> = Vec::with_capacity(groups);
    for b in basis.iter().take(groups - 1) {
        group_projectors.push(ComplexMatrix::outer(b));
    }
    let mut tail = ComplexMatrix::zeros(dim, dim);
    for b in basis.iter().skip(groups - 1) {
        tail = tail.add(&ComplexMatrix::outer(b));
    }
    group_projectors.push(tail);

    let mut slots = vec![1usize; groups];
    for _ in groups..n_outcomes {
        let g = rng.gen_range(0..groups);
        slots[g] += 1;
    }
    let mut elements = Vec::with_capacity(n_outcomes);
    let mut element_group = Vec::with_capacity(n_outcomes);
    for (gi, (proj, &k)) in group_projectors.iter().zip(&slots).enumerate() {
        let raw: Vec<f64> = (0..k).map(|_| 0.2 + rng.gen::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        for w in raw {
            elements.push(proj.scale(Complex64::new(w / total, 0.0)));
            element_group.push(gi);
        }
    }

    let rho_eb = rotation.adjoint().mul(probe.rho()).mul(&rotation);
    let elements_eb: Vec<ComplexMatrix> = elements
        .iter()
        .map(|e| rotation.adjoint().mul(e).mul(&rotation))
        .collect();
    let orbit = OrbitDistribution::new(levels.clone(), &rho_eb, &elements_eb);

    // anchor the far end where the probe-group probability is smallest
    let anchor_probability = |t: f64| -> f64 {
        orbit
            .probs(t)
            .iter()
            .zip(&element_group)
            .filter(|(_, &g)| g == 0)
            .map(|(p, _)| p)
            .sum()
    };
    let mut t_star = 0.0;
    let mut best_p = f64::INFINITY;
    for k in 0..300 {
        let t = 0.05 + (SEPARATION_WINDOW - 0.05) * k as f64 / 299.0;
        let p = anchor_probability(t);
        if p < best_p {
            best_p = p;
            t_star = t;
        }
    }

    // monotone estimator values: probe-group outcomes near 0, the rest near
    // t_star, with tiny distinct offsets
    let jitter = 0.002 * t_star;
    let mut values = vec![0.0; elements.len()];
    let mut near = 0;
    let mut far = 0;
    for (v, &g) in values.iter_mut().zip(&element_group) {
        if g == 0 {
            *v = near as f64 * jitter;
            near += 1;
        } else {
            *v = t_star - far as f64 * jitter;
            far += 1;
        }
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let sorted_values: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let sorted_elements: Vec<ComplexMatrix> = order.iter().map(|&i| elements[i].clone()).collect();
    let sorted_elements_eb: Vec<ComplexMatrix> =
        order.iter().map(|&i| elements_eb[i].clone()).collect();
    let orbit = OrbitDistribution::new(levels, &rho_eb, &sorted_elements_eb);
    let labels: Vec<String> = (0..sorted_elements.len())
        .map(|i| format!("o{i:02}"))
        .collect();

    // anchor x at the best RMSE the instrument achieves near the origin
    let mut x = 0.0;
    let mut delta_x = orbit.rmse(&sorted_values, 0.0);
    for k in 0..24 {
        let t = t_star * 1e-4 * (0.25 / 1e-4f64).powf(k as f64 / 23.0);
        let dx = orbit.rmse(&sorted_values, t);
        if dx < delta_x {
            delta_x = dx;
            x = t;
        }
    }
    if delta_x <= MIN_RMSE {
        return Ok(Generated::Rejected {
            reason: "zero RMSE at the anchor point (eq9)".into(),
        });
    }

    // bisection on the Eq. (10) residual over the window
    let multiplier = lambda + 1.0;
    let residual = |xp: f64| (xp - x) - multiplier * (delta_x + orbit.rmse(&sorted_values, xp));
    let grid_n = 400;
    let mut prev_t = x + 1e-6;
    let mut prev_r = residual(prev_t);
    let mut bracket = None;
    for k in 1..=grid_n {
        let t = x + 1e-6 + (SEPARATION_WINDOW - x - 1e-6) * k as f64 / grid_n as f64;
        let r = residual(t);
        if prev_r < 0.0 && r >= 0.0 {
            bracket = Some((prev_t, t));
            break;
        }
        prev_t = t;
        prev_r = r;
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Ok(Generated::Rejected {
            reason: "no Eq. (10) solution in the window".into(),
        });
    };
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x_prime = 0.5 * (lo + hi);

    let dist_x = Distribution::new(labels.clone(), orbit.probs(x))?;
    let dist_xp = Distribution::new(labels.clone(), orbit.probs(x_prime))?;
    let estimator =
        EstimatorMap::from_pairs(labels.iter().cloned().zip(sorted_values.iter().copied()));
    let state_x = crate::qstate::evolve(&probe, &gen, x)?;
    let state_xp = crate::qstate::evolve(&probe, &gen, x_prime)?;
    Ok(Generated::Instance(Box::new(LemmaInstance {
        x,
        x_prime,
        dist_x,
        dist_xp,
        estimator,
        lambda,
        biased: true,
        state_pair: Some((state_x, state_xp)),
    })))
}
