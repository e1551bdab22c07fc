//! Sampled estimation experiments: empirical RMSE with bootstrap error bars
//! and the three-way bound-compliance verdict.

use rand::Rng;
use serde::Serialize;

use crate::bounds::BoundReport;
use crate::estimation::{EstimationError, Strategy};
use crate::rng::{substream, tags};

pub const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub strategy: Strategy,
    pub x_true: f64,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalReport {
    pub delta_x_hat: f64,
    pub std_error: f64,
    pub trials: u64,
    pub x_true: f64,
}

/// Runs `trials` independent experiments of ν per-copy draws each.
///
/// Every trial gets its own substream keyed by (seed, trial index), so the
/// result does not depend on scheduling or batching. The bootstrap standard
/// error uses 200 resamples on their own substreams.
pub fn simulate(config: &TrialConfig) -> Result<EmpiricalReport, EstimationError> {
    assert!(config.trials >= 1, "need at least one trial");
    let dist = config.strategy.per_copy_distribution(config.x_true)?;
    let mut cdf = Vec::with_capacity(dist.len());
    let mut acc = 0.0;
    for &p in dist.probs() {
        acc += p;
        cdf.push(acc);
    }
    let nu = config.strategy.nu as usize;
    let n_out = dist.len();

    let mut sq_errors = Vec::with_capacity(config.trials as usize);
    let mut counts = vec![0u64; n_out];
    for trial in 0..config.trials {
        let mut rng = substream(config.seed, tags::TRIAL, trial);
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..nu {
            let u: f64 = rng.gen::<f64>() * acc;
            let j = cdf.partition_point(|&c| c < u).min(n_out - 1);
            counts[j] += 1;
        }
        let x_hat = config.strategy.estimate_from_counts(&counts)?;
        let err = x_hat - config.x_true;
        sq_errors.push(err * err);
    }
    let n = sq_errors.len() as f64;
    let delta_x_hat = (sq_errors.iter().sum::<f64>() / n).sqrt();

    let std_error = if config.trials > 1 {
        let mut resampled = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
        for b in 0..BOOTSTRAP_RESAMPLES {
            let mut rng = substream(config.seed, tags::BOOTSTRAP, b as u64);
            let mut total = 0.0;
            for _ in 0..sq_errors.len() {
                total += sq_errors[rng.gen_range(0..sq_errors.len())];
            }
            resampled.push((total / n).sqrt());
        }
        let mean = resampled.iter().sum::<f64>() / resampled.len() as f64;
        (resampled
            .iter()
            .map(|r| (r - mean) * (r - mean))
            .sum::<f64>()
            / resampled.len() as f64)
            .sqrt()
    } else {
        0.0
    };

    Ok(EmpiricalReport {
        delta_x_hat,
        std_error,
        trials: config.trials,
        x_true: config.x_true,
    })
}

/// Three-way verdict of an empirical RMSE against a bound envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ComplianceVerdict {
    Compliant,
    Violation,
    Inconclusive,
}

impl std::fmt::Display for ComplianceVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ComplianceVerdict::Compliant => write!(f, "compliant"),
            ComplianceVerdict::Violation => write!(f, "violation"),
            ComplianceVerdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

/// Compliant when the RMSE clears the bound even after subtracting the
/// slack, Violation when it stays below the bound even after adding it,
/// Inconclusive in between.
///
/// The verdict tests the expectation-value bound, not the full envelope: the
/// Cramér-Rao branch assumes an unbiased estimator and may legitimately sit
/// above the RMSE of inversion estimators at small trial counts.
pub fn compliance(
    report: &EmpiricalReport,
    bound: &BoundReport,
    sigma_slack: f64,
) -> ComplianceVerdict {
    assert!(sigma_slack >= 0.0, "sigma_slack must be nonnegative");
    let slack = sigma_slack * report.std_error;
    if report.delta_x_hat - slack >= bound.ev_bound {
        ComplianceVerdict::Compliant
    } else if report.delta_x_hat + slack < bound.ev_bound {
        ComplianceVerdict::Violation
    } else {
        ComplianceVerdict::Inconclusive
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::forbidden_region;
    use crate::estimation::{rmse_report, Estimator, EstimatorMap, Povm, PovmScope};
    use crate::kappa::{optimize_kappa, KappaMode};
    use crate::linalg::ComplexMatrix;
    use crate::qstate::{Generator, QuantumState};
    use crate::speed_limit::AlphaModel;
    use num_complex::Complex64;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn qubit_phase_strategy(nu: u32, estimator: Estimator) -> Strategy {
        let probe = QuantumState::from_state_vector(&[
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(FRAC_1_SQRT_2, 0.0),
        ])
        .unwrap();
        let gen = Generator::new(ComplexMatrix::from_real(2, 2, &[0.0, 0.0, 0.0, 1.0])).unwrap();
        let plus = vec![
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(FRAC_1_SQRT_2, 0.0),
        ];
        let minus = vec![
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(-FRAC_1_SQRT_2, 0.0),
        ];
        let povm = Povm::projective(&[plus, minus], vec!["plus".into(), "minus".into()]).unwrap();
        Strategy::new(probe, gen, povm, estimator, nu, PovmScope::PerCopyProduct).unwrap()
    }

    #[test]
    fn deterministic_distribution_gives_zero_rmse() {
        // x = 0 makes the plus outcome certain; estimator maps it to 0
        let s = qubit_phase_strategy(5, Estimator::OutcomeMean(vec![0.0, 1.0]));
        let r = simulate(&TrialConfig {
            strategy: s,
            x_true: 0.0,
            trials: 50,
            seed: 7,
        })
        .unwrap();
        assert_eq!(r.delta_x_hat, 0.0);
        assert_eq!(r.std_error, 0.0);
    }

    #[test]
    fn reports_are_reproducible() {
        let s = qubit_phase_strategy(
            10,
            Estimator::CountInversion {
                outcome: 0,
                frequency: 1.0,
            },
        );
        let cfg = TrialConfig {
            strategy: s,
            x_true: 1.0,
            trials: 200,
            seed: 99,
        };
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a.delta_x_hat, b.delta_x_hat);
        assert_eq!(a.std_error, b.std_error);
    }

    #[test]
    fn ml_inversion_matches_delta_method() {
        // at x = pi/2 the inversion estimator has asymptotic variance 1/nu
        let nu = 100;
        let s = qubit_phase_strategy(
            nu,
            Estimator::CountInversion {
                outcome: 0,
                frequency: 1.0,
            },
        );
        let r = simulate(&TrialConfig {
            strategy: s,
            x_true: std::f64::consts::FRAC_PI_2,
            trials: 2000,
            seed: 1,
        })
        .unwrap();
        let scaled = (nu as f64).sqrt() * r.delta_x_hat;
        assert!((0.9..=1.1).contains(&scaled), "sqrt(nu)*rmse = {scaled}");
        assert!(r.std_error > 0.0);
    }

    #[test]
    fn empirical_rmse_converges_to_exact() {
        let nu = 4;
        let s = qubit_phase_strategy(nu, Estimator::OutcomeMean(vec![0.5, 2.5]));
        let x = 1.2;
        let exact = s.exact_rmse(x, 10_000).unwrap().delta_x;
        let r = simulate(&TrialConfig {
            strategy: s,
            x_true: x,
            trials: 100_000,
            seed: 3,
        })
        .unwrap();
        assert!(
            (r.delta_x_hat - exact).abs() <= 4.0 * r.std_error.max(1e-4),
            "empirical {} vs exact {}",
            r.delta_x_hat,
            exact
        );
    }

    #[test]
    fn exact_rmse_agrees_with_distribution_rmse() {
        let s = qubit_phase_strategy(1, Estimator::OutcomeMean(vec![0.0, std::f64::consts::PI]));
        let x = 0.7;
        let dist = s.per_copy_distribution(x).unwrap();
        let est = EstimatorMap::from_pairs([
            ("plus".to_string(), 0.0),
            ("minus".to_string(), std::f64::consts::PI),
        ]);
        let direct = rmse_report(&dist, &est, x).unwrap().delta_x;
        let via_strategy = s.exact_rmse(x, 100).unwrap().delta_x;
        assert!((direct - via_strategy).abs() <= 1e-12);
    }

    #[test]
    fn compliance_decision_rule() {
        let kappa = optimize_kappa(KappaMode::Unbiased, &AlphaModel::default()).unwrap();
        let region = forbidden_region(1..=1, 0.5, 0.5, &kappa).unwrap();
        let bound = &region.reports[0];
        let far_above = EmpiricalReport {
            delta_x_hat: bound.ev_bound * 10.0,
            std_error: 0.01,
            trials: 100,
            x_true: 0.0,
        };
        assert_eq!(
            compliance(&far_above, bound, 3.0),
            ComplianceVerdict::Compliant
        );
        let below = EmpiricalReport {
            delta_x_hat: bound.ev_bound * 0.5,
            std_error: 1e-6,
            trials: 100,
            x_true: 0.0,
        };
        assert_eq!(compliance(&below, bound, 3.0), ComplianceVerdict::Violation);
        let near = EmpiricalReport {
            delta_x_hat: bound.ev_bound * 0.99,
            std_error: bound.ev_bound * 0.1,
            trials: 100,
            x_true: 0.0,
        };
        assert_eq!(
            compliance(&near, bound, 3.0),
            ComplianceVerdict::Inconclusive
        );
    }

    #[test]
    fn qubit_sweep_never_violates() {
        let kappa = optimize_kappa(KappaMode::Unbiased, &AlphaModel::default()).unwrap();
        // gap = <H> - E0 = 0.5 so the envelope at small nu is 2*kappa/nu
        for nu in [1u32, 3, 10, 30] {
            let s = qubit_phase_strategy(
                nu,
                Estimator::CountInversion {
                    outcome: 0,
                    frequency: 1.0,
                },
            );
            let r = simulate(&TrialConfig {
                strategy: s,
                x_true: std::f64::consts::FRAC_PI_2,
                trials: 500,
                seed: nu as u64,
            })
            .unwrap();
            let region = forbidden_region(nu..=nu, 0.5, 0.5, &kappa).unwrap();
            let v = compliance(&r, &region.reports[0], 3.0);
            assert_ne!(v, ComplianceVerdict::Violation, "nu = {nu}");
        }
    }
}
