//! Built-in physical scenarios: the qubit phase probe, the truncated coherent
//! state under the number operator, the (|0>+|N>)/sqrt(2) superposition, and a
//! fully custom JSON-specified strategy.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimation::{EstimationError, Estimator, Povm, PovmScope, Strategy};
use crate::linalg::ComplexMatrix;
use crate::qstate::{Generator, QuantumState, StateError};

/// Norm a truncated coherent state may lose before the build fails.
pub const TRUNCATION_TOL: f64 = 1e-8;
/// Default truncation keeps the Poisson tail below this.
pub const DEFAULT_TAIL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("bad scenario spec: {reason}")]
    BadSpec { reason: String },
    #[error("truncation insufficient: norm deficit {deficit:.3e} exceeds {TRUNCATION_TOL:.0e}")]
    TruncationInsufficient { deficit: f64 },
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    LinearReadout,
    MlInversion,
    UserTable,
}

/// Complex matrix entries as [re, im] rows for the JSON schema.
pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "snake_case")]
pub enum ScenarioParams {
    QubitPhase,
    TruncatedCoherentPhase {
        mean_photons: f64,
        #[serde(default)]
        n_max: Option<usize>,
    },
    ZeroNSuperposition {
        n: usize,
    },
    Custom {
        hamiltonian: JsonMatrix,
        probe: Vec<[f64; 2]>,
        povm: Vec<JsonMatrix>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(flatten)]
    pub scenario: ScenarioParams,
    pub nu: u32,
    pub estimator_kind: EstimatorKind,
    /// Outcome values for the UserTable estimator, in outcome order.
    #[serde(default)]
    pub estimator_values: Option<Vec<f64>>,
}

fn parse_matrix(m: &JsonMatrix) -> Result<ComplexMatrix, ScenarioError> {
    let rows = m.len();
    if rows == 0 || m.iter().any(|r| r.len() != rows) {
        return Err(ScenarioError::BadSpec {
            reason: "matrices must be square and nonempty".into(),
        });
    }
    let entries = m
        .iter()
        .flat_map(|r| r.iter().map(|&[re, im]| Complex64::new(re, im)))
        .collect();
    Ok(ComplexMatrix::from_entries(rows, rows, entries))
}

fn user_values(spec: &ScenarioSpec, n_outcomes: usize) -> Result<Vec<f64>, ScenarioError> {
    let values = spec
        .estimator_values
        .clone()
        .ok_or_else(|| ScenarioError::BadSpec {
            reason: "user_table estimator needs estimator_values".into(),
        })?;
    if values.len() != n_outcomes {
        return Err(ScenarioError::BadSpec {
            reason: format!(
                "estimator_values has {} entries, POVM has {n_outcomes} outcomes",
                values.len()
            ),
        });
    }
    Ok(values)
}

/// Smallest n_max whose Poisson(mean) tail mass is at most DEFAULT_TAIL.
fn default_truncation(mean: f64) -> usize {
    let mut term = (-mean).exp();
    let mut cdf = term;
    let mut n = 0usize;
    while 1.0 - cdf > DEFAULT_TAIL && n < 10_000 {
        n += 1;
        term *= mean / n as f64;
        cdf += term;
    }
    n
}

fn coherent_amplitudes(mean: f64, n_max: usize) -> (Vec<Complex64>, f64) {
    // c_n = e^{-mu/2} * sqrt(mu^n / n!) with real alpha = sqrt(mu)
    let mut c = Vec::with_capacity(n_max + 1);
    let mut log_term = -mean / 2.0;
    let mut norm_sq = 0.0;
    for n in 0..=n_max {
        if n > 0 {
            log_term += 0.5 * (mean.ln() - (n as f64).ln());
        }
        let a = log_term.exp();
        norm_sq += a * a;
        c.push(Complex64::new(a, 0.0));
    }
    (c, 1.0 - norm_sq)
}

/// The canonical phase POVM on dim levels: projectors onto the Fourier basis
/// v_k = d^{-1/2} sum_n e^{i n theta_k} |n>, theta_k = 2 pi k / d.
fn phase_povm(dim: usize) -> Result<(Povm, Vec<f64>), ScenarioError> {
    let scale = 1.0 / (dim as f64).sqrt();
    let mut vectors = Vec::with_capacity(dim);
    let mut thetas = Vec::with_capacity(dim);
    let mut labels = Vec::with_capacity(dim);
    for k in 0..dim {
        let theta = std::f64::consts::TAU * k as f64 / dim as f64;
        vectors.push(
            (0..dim)
                .map(|n| Complex64::from_polar(scale, n as f64 * theta))
                .collect::<Vec<_>>(),
        );
        thetas.push(theta);
        labels.push(format!("theta{k:02}"));
    }
    Ok((Povm::projective(&vectors, labels)?, thetas))
}

/// Builds the concrete Strategy for a scenario spec.
pub fn build_scenario(spec: &ScenarioSpec) -> Result<Strategy, ScenarioError> {
    if spec.nu == 0 {
        return Err(ScenarioError::BadSpec {
            reason: "nu must be positive".into(),
        });
    }
    match &spec.scenario {
        ScenarioParams::QubitPhase => {
            let probe = QuantumState::two_level_superposition(2, 0, 1)?;
            let gen = Generator::new(ComplexMatrix::from_real(2, 2, &[0.0, 0.0, 0.0, 1.0]))?;
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let plus = vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)];
            let minus = vec![Complex64::new(s, 0.0), Complex64::new(-s, 0.0)];
            let povm = Povm::projective(&[plus, minus], vec!["plus".into(), "minus".into()])?;
            let estimator = match spec.estimator_kind {
                EstimatorKind::MlInversion => Estimator::CountInversion {
                    outcome: 0,
                    frequency: 1.0,
                },
                EstimatorKind::LinearReadout => {
                    Estimator::OutcomeMean(vec![0.0, std::f64::consts::PI])
                }
                EstimatorKind::UserTable => Estimator::OutcomeMean(user_values(spec, 2)?),
            };
            Ok(Strategy::new(
                probe,
                gen,
                povm,
                estimator,
                spec.nu,
                PovmScope::PerCopyProduct,
            )?)
        }
        ScenarioParams::TruncatedCoherentPhase {
            mean_photons,
            n_max,
        } => {
            if *mean_photons <= 0.0 {
                return Err(ScenarioError::BadSpec {
                    reason: "mean_photons must be positive".into(),
                });
            }
            let n_max = n_max.unwrap_or_else(|| default_truncation(*mean_photons));
            let (amps, deficit) = coherent_amplitudes(*mean_photons, n_max);
            if deficit > TRUNCATION_TOL {
                return Err(ScenarioError::TruncationInsufficient { deficit });
            }
            let dim = n_max + 1;
            let probe = QuantumState::from_state_vector(&amps)?;
            let h = ComplexMatrix::diagonal(&(0..dim).map(|n| n as f64).collect::<Vec<_>>());
            let gen = Generator::new(h)?;
            let (povm, thetas) = phase_povm(dim)?;
            let estimator = match spec.estimator_kind {
                EstimatorKind::LinearReadout => Estimator::OutcomeMean(thetas),
                EstimatorKind::UserTable => Estimator::OutcomeMean(user_values(spec, dim)?),
                EstimatorKind::MlInversion => {
                    return Err(ScenarioError::BadSpec {
                        reason: "ml_inversion applies only to two-outcome scenarios".into(),
                    })
                }
            };
            Ok(Strategy::new(
                probe,
                gen,
                povm,
                estimator,
                spec.nu,
                PovmScope::PerCopyProduct,
            )?)
        }
        ScenarioParams::ZeroNSuperposition { n } => {
            if *n == 0 {
                return Err(ScenarioError::BadSpec {
                    reason: "superposition level N must be positive".into(),
                });
            }
            let dim = n + 1;
            let probe = QuantumState::two_level_superposition(dim, 0, *n)?;
            let h = ComplexMatrix::diagonal(&(0..dim).map(|m| m as f64).collect::<Vec<_>>());
            let gen = Generator::new(h)?;
            // (|0> +/- |N>)/sqrt(2), completed with the untouched middle levels
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let mut vectors = Vec::with_capacity(dim);
            let mut labels = Vec::with_capacity(dim);
            let mut plus = vec![Complex64::new(0.0, 0.0); dim];
            plus[0] = Complex64::new(s, 0.0);
            plus[*n] = Complex64::new(s, 0.0);
            let mut minus = vec![Complex64::new(0.0, 0.0); dim];
            minus[0] = Complex64::new(s, 0.0);
            minus[*n] = Complex64::new(-s, 0.0);
            vectors.push(plus);
            labels.push("plus".to_string());
            vectors.push(minus);
            labels.push("minus".to_string());
            for m in 1..*n {
                let mut v = vec![Complex64::new(0.0, 0.0); dim];
                v[m] = Complex64::new(1.0, 0.0);
                vectors.push(v);
                labels.push(format!("level{m}"));
            }
            let povm = Povm::projective(&vectors, labels)?;
            let estimator = match spec.estimator_kind {
                EstimatorKind::MlInversion => Estimator::CountInversion {
                    outcome: 0,
                    frequency: *n as f64,
                },
                EstimatorKind::LinearReadout => {
                    let mut values = vec![0.0; dim];
                    values[1] = std::f64::consts::PI / *n as f64;
                    Estimator::OutcomeMean(values)
                }
                EstimatorKind::UserTable => Estimator::OutcomeMean(user_values(spec, dim)?),
            };
            Ok(Strategy::new(
                probe,
                gen,
                povm,
                estimator,
                spec.nu,
                PovmScope::PerCopyProduct,
            )?)
        }
        ScenarioParams::Custom {
            hamiltonian,
            probe,
            povm,
        } => {
            let h = parse_matrix(hamiltonian)?;
            let amps: Vec<Complex64> = probe
                .iter()
                .map(|&[re, im]| Complex64::new(re, im))
                .collect();
            if amps.len() != h.rows() {
                return Err(ScenarioError::BadSpec {
                    reason: "probe length does not match the Hamiltonian dimension".into(),
                });
            }
            let elements: Vec<ComplexMatrix> =
                povm.iter().map(parse_matrix).collect::<Result<_, _>>()?;
            let labels = (0..elements.len()).map(|j| format!("e{j:02}")).collect();
            let povm = Povm::new(elements, labels)?;
            let n_out = povm.len();
            let estimator = match spec.estimator_kind {
                EstimatorKind::UserTable => Estimator::OutcomeMean(user_values(spec, n_out)?),
                _ => {
                    return Err(ScenarioError::BadSpec {
                        reason: "custom scenarios require the user_table estimator".into(),
                    })
                }
            };
            Ok(Strategy::new(
                QuantumState::from_state_vector(&amps)?,
                Generator::new(h)?,
                povm,
                estimator,
                spec.nu,
                PovmScope::PerCopyProduct,
            )?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::resource_summary;

    fn spec(scenario: ScenarioParams, nu: u32, kind: EstimatorKind) -> ScenarioSpec {
        ScenarioSpec {
            scenario,
            nu,
            estimator_kind: kind,
            estimator_values: None,
        }
    }

    #[test]
    fn qubit_phase_resources() {
        let s = build_scenario(&spec(
            ScenarioParams::QubitPhase,
            1,
            EstimatorKind::MlInversion,
        ))
        .unwrap();
        let r = resource_summary(&s.probe, &s.gen, crate::qstate::DEFAULT_SUPPORT_TOL).unwrap();
        assert!((r.mean_h - 0.5).abs() <= 1e-12);
        assert!((r.var_h - 0.25).abs() <= 1e-12);
        assert!(r.e0.abs() <= 1e-12);
        assert!((r.gap - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn zero_n_superposition_resources() {
        let s = build_scenario(&spec(
            ScenarioParams::ZeroNSuperposition { n: 4 },
            1,
            EstimatorKind::MlInversion,
        ))
        .unwrap();
        let r = resource_summary(&s.probe, &s.gen, crate::qstate::DEFAULT_SUPPORT_TOL).unwrap();
        assert!((r.gap - 2.0).abs() <= 1e-12);
        assert!((r.var_h.sqrt() - 2.0).abs() <= 1e-12);
        assert!(r.e0.abs() <= 1e-12);
    }

    #[test]
    fn coherent_scenario_mean_energy() {
        let s = build_scenario(&spec(
            ScenarioParams::TruncatedCoherentPhase {
                mean_photons: 1.0,
                n_max: Some(20),
            },
            1,
            EstimatorKind::LinearReadout,
        ))
        .unwrap();
        let r = resource_summary(&s.probe, &s.gen, crate::qstate::DEFAULT_SUPPORT_TOL).unwrap();
        assert!((r.mean_h - 1.0).abs() <= 1e-8);
        assert!(r.e0.abs() <= 1e-12);
    }

    #[test]
    fn coherent_default_truncation_and_failure() {
        assert!(default_truncation(1.0) >= 10);
        let err = build_scenario(&spec(
            ScenarioParams::TruncatedCoherentPhase {
                mean_photons: 4.0,
                n_max: Some(5),
            },
            1,
            EstimatorKind::LinearReadout,
        ));
        assert!(matches!(
            err,
            Err(ScenarioError::TruncationInsufficient { .. })
        ));
        let err = build_scenario(&spec(
            ScenarioParams::TruncatedCoherentPhase {
                mean_photons: 1.0,
                n_max: Some(20),
            },
            1,
            EstimatorKind::MlInversion,
        ));
        assert!(matches!(err, Err(ScenarioError::BadSpec { .. })));
    }

    #[test]
    fn distributions_normalized_over_phase_grid() {
        let scenarios = [
            spec(ScenarioParams::QubitPhase, 1, EstimatorKind::MlInversion),
            spec(
                ScenarioParams::ZeroNSuperposition { n: 3 },
                1,
                EstimatorKind::MlInversion,
            ),
            spec(
                ScenarioParams::TruncatedCoherentPhase {
                    mean_photons: 1.0,
                    n_max: None,
                },
                1,
                EstimatorKind::LinearReadout,
            ),
        ];
        for sp in &scenarios {
            let s = build_scenario(sp).unwrap();
            for k in 0..20 {
                let x = std::f64::consts::TAU * k as f64 / 20.0;
                let d = s.per_copy_distribution(x).unwrap();
                let sum: f64 = d.probs().iter().sum();
                assert!((sum - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{
            "kind": "truncated_coherent_phase",
            "parameters": { "mean_photons": 1.0, "n_max": 20 },
            "nu": 5,
            "estimator_kind": "linear_readout"
        }"#;
        let sp: ScenarioSpec = serde_json::from_str(text).unwrap();
        assert_eq!(sp.nu, 5);
        let s = build_scenario(&sp).unwrap();
        assert_eq!(s.nu, 5);
        let back = serde_json::to_string(&sp).unwrap();
        let again: ScenarioSpec = serde_json::from_str(&back).unwrap();
        assert_eq!(again.nu, 5);
    }

    #[test]
    fn custom_scenario_from_json() {
        let text = r#"{
            "kind": "custom",
            "parameters": {
                "hamiltonian": [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]],
                "probe": [[0.7071067811865476, 0.0], [0.7071067811865476, 0.0]],
                "povm": [
                    [[[0.5, 0.0], [0.5, 0.0]], [[0.5, 0.0], [0.5, 0.0]]],
                    [[[0.5, 0.0], [-0.5, 0.0]], [[-0.5, 0.0], [0.5, 0.0]]]
                ]
            },
            "nu": 2,
            "estimator_kind": "user_table",
            "estimator_values": [0.0, 3.141592653589793]
        }"#;
        let sp: ScenarioSpec = serde_json::from_str(text).unwrap();
        let s = build_scenario(&sp).unwrap();
        let d = s.per_copy_distribution(0.0).unwrap();
        assert!((d.probs()[0] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn bound_decreases_with_superposition_level() {
        use crate::kappa::{optimize_kappa, KappaMode};
        use crate::speed_limit::AlphaModel;
        let kappa = optimize_kappa(KappaMode::Unbiased, &AlphaModel::default()).unwrap();
        let mut prev = f64::INFINITY;
        for n in [2usize, 4, 8] {
            let s = build_scenario(&spec(
                ScenarioParams::ZeroNSuperposition { n },
                1,
                EstimatorKind::MlInversion,
            ))
            .unwrap();
            let r = resource_summary(&s.probe, &s.gen, crate::qstate::DEFAULT_SUPPORT_TOL).unwrap();
            let bound = kappa.kappa / r.gap;
            assert!(bound < prev);
            prev = bound;
        }
    }
}
