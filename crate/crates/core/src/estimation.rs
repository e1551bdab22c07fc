//! POVM measurement statistics, estimators, the RMSE decomposition
//! ΔX² = δX² + bias², and Fisher/Cramér-Rao quantities.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{hermitian_eig, ComplexMatrix, LinalgError};
use crate::qstate::{evolve, moments, Generator, QuantumState, StateError};

/// Joint outcome counts above this are refused rather than enumerated.
pub const DEFAULT_JOINT_CAP: usize = 10_000_000;
/// Probabilities this far below zero are rounding noise and get clipped.
pub const PROB_CLIP: f64 = 1e-12;
/// Total probability may deviate from 1 by at most this much.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("POVM elements do not sum to the identity (max deviation {deviation:.3e})")]
    NotResolution { deviation: f64 },
    #[error("distribution sums to {sum}, outside the normalization tolerance")]
    Unnormalized { sum: f64 },
    #[error("joint outcome count {count} exceeds the cap {cap}")]
    CombinatorialOverflow { count: u128, cap: usize },
    #[error("outcome {label} has no estimator value")]
    MissingEstimate { label: String },
    #[error("probe state is not pure")]
    NotPure,
    #[error("generator variance is zero; the Cramér-Rao bound diverges")]
    ZeroVariance,
    #[error("estimator kind not usable with this measurement scope")]
    UnsupportedEstimator,
    #[error("bad POVM: {reason}")]
    BadPovm { reason: String },
}

/// Positive operator-valued measure: PSD elements summing to the identity.
#[derive(Debug, Clone)]
pub struct Povm {
    elements: Vec<ComplexMatrix>,
    labels: Vec<String>,
}

impl Povm {
    pub fn new(elements: Vec<ComplexMatrix>, labels: Vec<String>) -> Result<Self, EstimationError> {
        if elements.is_empty() {
            return Err(EstimationError::BadPovm {
                reason: "no elements".into(),
            });
        }
        if elements.len() != labels.len() {
            return Err(EstimationError::BadPovm {
                reason: "label count differs from element count".into(),
            });
        }
        let dim = elements[0].rows();
        let mut sum = ComplexMatrix::zeros(dim, dim);
        let mut scale = 1.0f64;
        for e in &elements {
            if e.rows() != dim || e.cols() != dim {
                return Err(EstimationError::DimensionMismatch {
                    left: e.rows(),
                    right: dim,
                });
            }
            scale = scale.max(1.0 + e.max_abs());
            let eig = hermitian_eig(e)?;
            let min = eig.eigenvalues.first().copied().unwrap_or(0.0);
            if min < -crate::linalg::PSD_CLIP_TOL * (1.0 + e.max_abs()) {
                return Err(EstimationError::Linalg(LinalgError::NotPsd {
                    eigenvalue: min,
                }));
            }
            sum = sum.add(e);
        }
        let deviation = sum.max_abs_diff(&ComplexMatrix::identity(dim));
        if deviation > NORMALIZATION_TOL * scale {
            return Err(EstimationError::NotResolution { deviation });
        }
        Ok(Self { elements, labels })
    }

    /// Projective measurement onto an orthonormal set of vectors.
    pub fn projective(
        vectors: &[Vec<num_complex::Complex64>],
        labels: Vec<String>,
    ) -> Result<Self, EstimationError> {
        let elements = vectors.iter().map(|v| ComplexMatrix::outer(v)).collect();
        Self::new(elements, labels)
    }

    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// A finite outcome distribution with stable labels.
#[derive(Debug, Clone)]
pub struct Distribution {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(labels: Vec<String>, probs: Vec<f64>) -> Result<Self, EstimationError> {
        assert_eq!(labels.len(), probs.len());
        let mut clipped = Vec::with_capacity(probs.len());
        for &p in &probs {
            if p < -PROB_CLIP {
                return Err(EstimationError::Unnormalized { sum: p });
            }
            clipped.push(p.max(0.0));
        }
        let sum: f64 = clipped.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(EstimationError::Unnormalized { sum });
        }
        Ok(Self {
            labels,
            probs: clipped,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.labels
            .iter()
            .map(String::as_str)
            .zip(self.probs.iter().copied())
    }
}

/// Outcome label → estimate x_j.
#[derive(Debug, Clone, Default)]
pub struct EstimatorMap {
    values: BTreeMap<String, f64>,
}

impl EstimatorMap {
    pub fn new(values: BTreeMap<String, f64>) -> Self {
        Self { values }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, f64)>) -> Self {
        Self {
            values: pairs.into_iter().collect(),
        }
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.values.get(label).copied()
    }

    pub fn values(&self) -> &BTreeMap<String, f64> {
        &self.values
    }
}

/// How the ν-copy measurement is laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PovmScope {
    /// The POVM acts on each copy; joint outcomes are ν-tuples with product
    /// probabilities.
    PerCopyProduct,
    /// The POVM acts on the explicit dim^ν joint space.
    JointExplicit,
}

/// Data processing applied to the measurement record.
#[derive(Debug, Clone)]
pub enum Estimator {
    /// A value per single-copy outcome; the joint estimate is the mean over
    /// the ν copies.
    OutcomeMean(Vec<f64>),
    /// Maximum-likelihood inversion of P(outcome) = cos²(freq·x/2):
    /// x̂ = 2·arccos(√(k/ν))/freq with k the count of the designated outcome.
    CountInversion { outcome: usize, frequency: f64 },
    /// Explicit value per joint outcome label.
    JointMap(EstimatorMap),
}

/// A full estimation strategy: probe, generator, measurement, estimator, and
/// repetition count.
#[derive(Debug, Clone)]
pub struct Strategy {
    pub probe: QuantumState,
    pub gen: Generator,
    pub povm: Povm,
    pub estimator: Estimator,
    pub nu: u32,
    pub povm_scope: PovmScope,
}

impl Strategy {
    pub fn new(
        probe: QuantumState,
        gen: Generator,
        povm: Povm,
        estimator: Estimator,
        nu: u32,
        povm_scope: PovmScope,
    ) -> Result<Self, EstimationError> {
        if probe.dim() != gen.dim() {
            return Err(EstimationError::DimensionMismatch {
                left: probe.dim(),
                right: gen.dim(),
            });
        }
        let expected = match povm_scope {
            PovmScope::PerCopyProduct => probe.dim(),
            PovmScope::JointExplicit => {
                probe
                    .dim()
                    .checked_pow(nu)
                    .ok_or(EstimationError::CombinatorialOverflow {
                        count: u128::MAX,
                        cap: DEFAULT_JOINT_CAP,
                    })?
            }
        };
        if povm.dim() != expected {
            return Err(EstimationError::DimensionMismatch {
                left: povm.dim(),
                right: expected,
            });
        }
        Ok(Self {
            probe,
            gen,
            povm,
            estimator,
            nu,
            povm_scope,
        })
    }

    /// Single-copy outcome distribution at parameter value `x`.
    pub fn per_copy_distribution(&self, x: f64) -> Result<Distribution, EstimationError> {
        let state = evolve(&self.probe, &self.gen, x)?;
        single_copy_distribution(&state, &self.povm)
    }

    /// Estimate from per-copy outcome counts (sampling path).
    pub fn estimate_from_counts(&self, counts: &[u64]) -> Result<f64, EstimationError> {
        let nu: u64 = counts.iter().sum();
        match &self.estimator {
            Estimator::OutcomeMean(values) => {
                let mut acc = 0.0;
                for (j, &c) in counts.iter().enumerate() {
                    acc += c as f64 * values[j];
                }
                Ok(acc / nu as f64)
            }
            Estimator::CountInversion { outcome, frequency } => {
                let k = counts[*outcome] as f64;
                Ok(2.0 * (k / nu as f64).sqrt().acos() / frequency)
            }
            Estimator::JointMap(_) => Err(EstimationError::UnsupportedEstimator),
        }
    }

    fn tuple_estimate(&self, tuple: &[usize]) -> Result<f64, EstimationError> {
        match &self.estimator {
            Estimator::OutcomeMean(values) => {
                Ok(tuple.iter().map(|&j| values[j]).sum::<f64>() / tuple.len() as f64)
            }
            Estimator::CountInversion { outcome, frequency } => {
                let k = tuple.iter().filter(|&&j| j == *outcome).count() as f64;
                Ok(2.0 * (k / tuple.len() as f64).sqrt().acos() / frequency)
            }
            Estimator::JointMap(map) => {
                let label = join_label(tuple, self.povm.labels());
                map.get(&label)
                    .ok_or(EstimationError::MissingEstimate { label })
            }
        }
    }

    /// Enumerated joint outcome table: label, probability, and estimate.
    ///
    /// For the per-copy scope the ν-tuples are enumerated explicitly, so the
    /// outcome count n^ν must stay below `cap`.
    pub fn outcome_table(&self, x: f64, cap: usize) -> Result<Vec<OutcomeRow>, EstimationError> {
        match self.povm_scope {
            PovmScope::JointExplicit => {
                // the encoding acts per copy; evolve one copy and tensor it up
                let evolved = evolve(&self.probe, &self.gen, x)?;
                let mut joint = evolved.rho().clone();
                for _ in 1..self.nu {
                    joint = joint.kron(evolved.rho());
                }
                let state = QuantumState::new(joint)?;
                let dist = single_copy_distribution(&state, &self.povm)?;
                dist.iter()
                    .enumerate()
                    .map(|(j, (label, p))| {
                        let estimate = match &self.estimator {
                            Estimator::OutcomeMean(values) => values[j],
                            Estimator::JointMap(map) => {
                                map.get(label).ok_or(EstimationError::MissingEstimate {
                                    label: label.to_string(),
                                })?
                            }
                            Estimator::CountInversion { .. } => {
                                return Err(EstimationError::UnsupportedEstimator)
                            }
                        };
                        Ok(OutcomeRow {
                            label: label.to_string(),
                            probability: p,
                            estimate,
                        })
                    })
                    .collect()
            }
            PovmScope::PerCopyProduct => {
                let per_copy = self.per_copy_distribution(x)?;
                let n = per_copy.len();
                let count = (n as u128).pow(self.nu);
                if count > cap as u128 {
                    return Err(EstimationError::CombinatorialOverflow { count, cap });
                }
                let mut rows = Vec::with_capacity(count as usize);
                let mut tuple = vec![0usize; self.nu as usize];
                loop {
                    let p: f64 = tuple.iter().map(|&j| per_copy.probs()[j]).product();
                    rows.push(OutcomeRow {
                        label: join_label(&tuple, self.povm.labels()),
                        probability: p,
                        estimate: self.tuple_estimate(&tuple)?,
                    });
                    // odometer increment
                    let mut k = tuple.len();
                    loop {
                        if k == 0 {
                            return Ok(rows);
                        }
                        k -= 1;
                        tuple[k] += 1;
                        if tuple[k] < n {
                            break;
                        }
                        tuple[k] = 0;
                    }
                }
            }
        }
    }

    /// Joint outcome distribution (labels and probabilities only).
    pub fn outcome_distribution(
        &self,
        x: f64,
        cap: usize,
    ) -> Result<Distribution, EstimationError> {
        let rows = self.outcome_table(x, cap)?;
        Distribution::new(
            rows.iter().map(|r| r.label.clone()).collect(),
            rows.iter().map(|r| r.probability).collect(),
        )
    }

    /// Exact RMSE report from the enumerated joint distribution.
    pub fn exact_rmse(&self, x: f64, cap: usize) -> Result<RmseReport, EstimationError> {
        let rows = self.outcome_table(x, cap)?;
        Ok(rmse_from_rows(
            rows.iter().map(|r| (r.probability, r.estimate)),
            x,
        ))
    }
}

/// One enumerated joint outcome.
#[derive(Debug, Clone)]
pub struct OutcomeRow {
    pub label: String,
    pub probability: f64,
    pub estimate: f64,
}

fn join_label(tuple: &[usize], labels: &[String]) -> String {
    tuple
        .iter()
        .map(|&j| labels[j].as_str())
        .collect::<Vec<_>>()
        .join("|")
}

/// Outcome probabilities Tr[E_j ρ] for a single system.
pub fn single_copy_distribution(
    state: &QuantumState,
    povm: &Povm,
) -> Result<Distribution, EstimationError> {
    if state.dim() != povm.dim() {
        return Err(EstimationError::DimensionMismatch {
            left: state.dim(),
            right: povm.dim(),
        });
    }
    let probs: Vec<f64> = povm
        .elements()
        .iter()
        .map(|e| e.real_trace_product(state.rho()))
        .collect();
    Distribution::new(povm.labels().to_vec(), probs)
}

/// RMSE report: ΔX, spread δX, mean x̄ and bias at a given true value.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RmseReport {
    pub delta_x: f64,
    pub small_delta_x: f64,
    pub x_bar: f64,
    pub bias: f64,
    pub x_true: f64,
}

fn rmse_from_rows(rows: impl Iterator<Item = (f64, f64)> + Clone, x_true: f64) -> RmseReport {
    let mut x_bar = 0.0;
    for (p, v) in rows.clone() {
        x_bar += p * v;
    }
    let mut var = 0.0;
    let mut mse = 0.0;
    for (p, v) in rows {
        var += p * (v - x_bar) * (v - x_bar);
        mse += p * (v - x_true) * (v - x_true);
    }
    RmseReport {
        delta_x: mse.sqrt(),
        small_delta_x: var.sqrt(),
        x_bar,
        bias: x_bar - x_true,
        x_true,
    }
}

/// RMSE decomposition of a labeled distribution under an estimator map.
pub fn rmse_report(
    dist: &Distribution,
    estimator: &EstimatorMap,
    x_true: f64,
) -> Result<RmseReport, EstimationError> {
    let mut pairs = Vec::with_capacity(dist.len());
    for (label, p) in dist.iter() {
        let v = estimator
            .get(label)
            .ok_or_else(|| EstimationError::MissingEstimate {
                label: label.to_string(),
            })?;
        pairs.push((p, v));
    }
    Ok(rmse_from_rows(pairs.iter().copied(), x_true))
}

/// Convention factor for the quantum Fisher information of pure states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QfiConvention {
    /// Q = (ΔH)².
    #[default]
    Variance,
    /// Q = 4(ΔH)², the common alternative normalization.
    FourTimesVariance,
}

impl QfiConvention {
    pub fn factor(self) -> f64 {
        match self {
            QfiConvention::Variance => 1.0,
            QfiConvention::FourTimesVariance => 4.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            QfiConvention::Variance => "variance",
            QfiConvention::FourTimesVariance => "4x-variance",
        }
    }
}

/// Quantum Fisher information of a pure probe under the chosen convention.
pub fn qfi_pure(
    probe: &QuantumState,
    gen: &Generator,
    convention: QfiConvention,
) -> Result<f64, EstimationError> {
    if !probe.is_pure() {
        return Err(EstimationError::NotPure);
    }
    let (_, var) = moments(probe, gen)?;
    Ok(convention.factor() * var)
}

/// The Cramér-Rao lower bound 1/(√ν·ΔH).
pub fn cramer_rao(nu: u32, delta_h: f64) -> Result<f64, EstimationError> {
    if delta_h <= 0.0 {
        return Err(EstimationError::ZeroVariance);
    }
    Ok(1.0 / ((nu as f64).sqrt() * delta_h))
}
