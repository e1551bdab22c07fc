//! Evaluation and comparison of the precision bounds: the Cramér-Rao bound,
//! the expectation-value bound κ/(ν·gap), their forbidden-region envelope,
//! the averaged two-point bound, the chained speed-limit inequality, and the
//! exclusion of superlinear accuracy profiles.

use serde::Serialize;
use thiserror::Error;

use crate::estimation::{cramer_rao, EstimationError};
use crate::kappa::KappaResult;
use crate::speed_limit::{qsl_min_separation, AlphaModel, SpeedLimitError};

#[derive(Debug, Error)]
pub enum BoundError {
    #[error("gap is zero or negative; the expectation-value bound diverges")]
    ZeroGap,
    #[error("RMSE is zero; the averaged bound precondition fails")]
    ZeroRmse,
    #[error("lambda {lambda} must exceed 1")]
    OutOfDomain { lambda: f64 },
    #[error(transparent)]
    SpeedLimit(#[from] SpeedLimitError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
}

/// Both lower bounds at one repetition count, with their envelope.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub nu: u32,
    pub cr_bound: f64,
    pub ev_bound: f64,
    pub envelope: f64,
    pub kappa_used: KappaResult,
    pub gap: f64,
    pub delta_h: f64,
}

/// The expectation-value bound κ/(ν·gap).
pub fn ev_bound(nu: u32, gap: f64, kappa: &KappaResult) -> Result<f64, BoundError> {
    if gap <= 0.0 {
        return Err(BoundError::ZeroGap);
    }
    Ok(kappa.kappa / (nu as f64 * gap))
}

/// The forbidden-region sweep over ν, with the analytic crossover ν* where
/// the two bounds meet.
#[derive(Debug, Clone, Serialize)]
pub struct ForbiddenRegion {
    pub reports: Vec<BoundReport>,
    /// ν* = (κ·ΔH/gap)²; the expectation-value bound dominates below it.
    pub nu_star: f64,
}

pub fn forbidden_region(
    nu_range: std::ops::RangeInclusive<u32>,
    gap: f64,
    delta_h: f64,
    kappa: &KappaResult,
) -> Result<ForbiddenRegion, BoundError> {
    if gap <= 0.0 {
        return Err(BoundError::ZeroGap);
    }
    let mut reports = Vec::new();
    for nu in nu_range {
        let cr = cramer_rao(nu, delta_h)?;
        let ev = ev_bound(nu, gap, kappa)?;
        reports.push(BoundReport {
            nu,
            cr_bound: cr,
            ev_bound: ev,
            envelope: cr.max(ev),
            kappa_used: kappa.clone(),
            gap,
            delta_h,
        });
    }
    let nu_star = (kappa.kappa * delta_h / gap).powi(2);
    Ok(ForbiddenRegion { reports, nu_star })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated,
}

/// The two-point averaged bound: (ΔX(x) + ΔX(x'))/2 ≥ κ/(ν·gap).
///
/// The caller asserts that the pair is sufficiently separated; both RMSEs must
/// be nonzero.
pub fn averaged_bound_check(
    delta_x_at_x: f64,
    delta_x_at_xp: f64,
    nu: u32,
    gap: f64,
    kappa_biased: &KappaResult,
) -> Result<Verdict, BoundError> {
    if delta_x_at_x <= 0.0 || delta_x_at_xp <= 0.0 {
        return Err(BoundError::ZeroRmse);
    }
    let bound = ev_bound(nu, gap, kappa_biased)?;
    if (delta_x_at_x + delta_x_at_xp) / 2.0 >= bound {
        Ok(Verdict::Satisfied)
    } else {
        Ok(Verdict::Violated)
    }
}

/// One evaluation of the chained inequality at a fixed λ.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChainInequality {
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// λ(ΔX+ΔX') (unbiased) or (λ+1)(ΔX+ΔX') (biased) against the speed-limit
/// right-hand side at fidelity 4/λ².
#[allow(clippy::too_many_arguments)]
pub fn chain_inequality(
    lambda: f64,
    delta_x: f64,
    delta_x_p: f64,
    nu: u32,
    gap: f64,
    delta_h: f64,
    model: &AlphaModel,
    biased: bool,
) -> Result<ChainInequality, BoundError> {
    if lambda <= 1.0 {
        return Err(BoundError::OutOfDomain { lambda });
    }
    let multiplier = if biased { lambda + 1.0 } else { lambda };
    let lhs = multiplier * (delta_x + delta_x_p);
    let f = (4.0 / (lambda * lambda)).min(1.0);
    let rhs = qsl_min_separation(f, nu, gap, delta_h, model)?;
    Ok(ChainInequality {
        lambda,
        lhs,
        rhs,
        holds: lhs >= rhs,
    })
}

/// An RMSE accuracy profile ΔX(ν).
#[derive(Debug, Clone)]
pub enum AccuracyProfile {
    /// ΔX = coefficient/(ν·⟨H⟩)^γ.
    PowerLaw { coefficient: f64, gamma: f64 },
    /// Explicit (ν, ΔX) samples.
    UserTable(Vec<(u32, f64)>),
}

impl AccuracyProfile {
    fn delta_x(&self, nu: u32, mean_h: f64) -> Option<f64> {
        match self {
            AccuracyProfile::PowerLaw { coefficient, gamma } => {
                Some(coefficient / (nu as f64 * mean_h).powf(*gamma))
            }
            AccuracyProfile::UserTable(samples) => {
                samples.iter().find(|(n, _)| *n == nu).map(|&(_, dx)| dx)
            }
        }
    }
}

/// All ν in the range where the profile claims a smaller error than the
/// averaged bound allows.
///
/// Assumes the separation precondition of the averaged bound is satisfiable;
/// table profiles are not checked for it.
pub fn accuracy_profile_analysis(
    profile: &AccuracyProfile,
    mean_h: f64,
    gap: f64,
    nu_range: std::ops::RangeInclusive<u32>,
    kappa: &KappaResult,
) -> Result<Vec<u32>, BoundError> {
    if gap <= 0.0 {
        return Err(BoundError::ZeroGap);
    }
    let mut incompatible = Vec::new();
    for nu in nu_range {
        if let Some(dx) = profile.delta_x(nu, mean_h) {
            if dx < kappa.kappa / (nu as f64 * gap) {
                incompatible.push(nu);
            }
        }
    }
    Ok(incompatible)
}
