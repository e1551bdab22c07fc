//! The prefactor κ of the expectation-value bound, obtained as a supremum
//! over λ of a speed-limit expression, plus the related curve and the
//! Cramér-Rao-type prefactor.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::speed_limit::{alpha, AlphaModel, SpeedLimitError};

#[derive(Debug, Error, PartialEq)]
pub enum KappaError {
    #[error("lambda {lambda} below the domain boundary 2")]
    OutOfDomain { lambda: f64 },
    #[error(transparent)]
    SpeedLimit(#[from] SpeedLimitError),
}

/// Whether the estimation is unbiased (denominator 4λ) or possibly biased
/// (denominator 4(λ+1)).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaMode {
    Unbiased,
    Biased,
}

impl std::fmt::Display for KappaMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KappaMode::Unbiased => write!(f, "unbiased"),
            KappaMode::Biased => write!(f, "biased"),
        }
    }
}

/// Result of the κ optimization, tagged with the α model that produced it so
/// approximate and exact values are never mixed silently.
#[derive(Debug, Clone, Serialize)]
pub struct KappaResult {
    pub kappa: f64,
    pub lambda_star: f64,
    pub mode: KappaMode,
    pub alpha_model_id: String,
}

/// π·α(4/λ²)/(4λ), or π·α(4/λ²)/[4(λ+1)] in the biased mode.
pub fn kappa_objective(
    lambda: f64,
    mode: KappaMode,
    model: &AlphaModel,
) -> Result<f64, KappaError> {
    if lambda < 2.0 {
        return Err(KappaError::OutOfDomain { lambda });
    }
    let f = 4.0 / (lambda * lambda);
    let a = alpha(f, model)?;
    let denom = match mode {
        KappaMode::Unbiased => 4.0 * lambda,
        KappaMode::Biased => 4.0 * (lambda + 1.0),
    };
    Ok(PI * a / denom)
}

// The objective decays like 1/lambda for large lambda (alpha <= 1), so with
// observed values around 0.07-0.09 near lambda 4-5 the supremum cannot lie
// beyond this cap.
const LAMBDA_MAX: f64 = 100.0;
const GRID_STEP: f64 = 1e-3;

fn golden_section_maximize(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_895;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a).abs() > tol {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Coarse grid scan over λ followed by golden-section refinement.
///
/// Golden-section assumes unimodality; the scan verifies it first and falls
/// back to the best grid point if the objective is not unimodal (possible
/// with user tables).
pub fn optimize_kappa(mode: KappaMode, model: &AlphaModel) -> Result<KappaResult, KappaError> {
    let start = 2.0 + 1e-6;
    let n = ((LAMBDA_MAX - start) / GRID_STEP).ceil() as usize;
    let mut best_idx = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    let mut values = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let lam = (start + i as f64 * GRID_STEP).min(LAMBDA_MAX);
        let v = kappa_objective(lam, mode, model)?;
        if v > best_val {
            best_val = v;
            best_idx = i;
        }
        values.push(v);
    }
    // unimodality: the sign of successive differences may switch at most once
    let mut switches = 0;
    let mut rising = true;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        if d.abs() <= 1e-15 {
            continue;
        }
        if rising && d < 0.0 {
            rising = false;
            switches += 1;
        } else if !rising && d > 0.0 {
            rising = true;
            switches += 1;
        }
    }
    let lambda_at = |i: usize| (start + i as f64 * GRID_STEP).min(LAMBDA_MAX);
    let (lambda_star, kappa) = if switches <= 1 {
        let lo = lambda_at(best_idx.saturating_sub(1));
        let hi = lambda_at((best_idx + 1).min(n));
        golden_section_maximize(
            |lam| kappa_objective(lam, mode, model).unwrap_or(f64::NEG_INFINITY),
            lo,
            hi,
            1e-8,
        )
    } else {
        (lambda_at(best_idx), best_val)
    };
    Ok(KappaResult {
        kappa,
        lambda_star,
        mode,
        alpha_model_id: model.label(),
    })
}

/// Pointwise objective evaluations on a caller-supplied λ grid (the dashed
/// curves of the κ plot).
pub fn kappa_curve(
    mode: KappaMode,
    model: &AlphaModel,
    lambda_grid: &[f64],
) -> Result<Vec<(f64, f64)>, KappaError> {
    lambda_grid
        .iter()
        .map(|&lam| Ok((lam, kappa_objective(lam, mode, model)?)))
        .collect()
}

/// Supremum over λ of the Cramér-Rao-type prefactor π·β(4/λ²)/(4λ), in the
/// simplified closed form arccos(2/λ)/(2λ). Always below 1.
pub fn cr_prefactor_sup() -> (f64, f64) {
    let obj = |lam: f64| (2.0 / lam).acos() / (2.0 * lam);
    let mut best_lam = 2.0;
    let mut best = 0.0;
    let n = ((LAMBDA_MAX - 2.0) / GRID_STEP) as usize;
    for i in 0..=n {
        let lam = 2.0 + i as f64 * GRID_STEP;
        let v = obj(lam);
        if v > best {
            best = v;
            best_lam = lam;
        }
    }
    let (lam, sup) =
        golden_section_maximize(obj, best_lam - GRID_STEP, best_lam + GRID_STEP, 1e-10);
    debug_assert!(sup < 1.0);
    (sup, lam)
}
