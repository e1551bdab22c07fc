//! Quantum-speed-limit machinery: the decreasing functions α(F) and β(F) and
//! the minimum parameter separation they impose at a given fidelity.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::BufRead;

use thiserror::Error;

/// Inputs this far outside [0, 1] are clipped instead of rejected.
pub const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SpeedLimitError {
    #[error("fidelity {value} outside [0, 1]")]
    OutOfDomain { value: f64 },
    #[error("fidelity {value} outside the lookup-table range [{min}, {max}]")]
    TableRangeExceeded { value: f64, min: f64, max: f64 },
    #[error("invalid alpha table: {reason}")]
    BadTable { reason: String },
    #[error("gap and delta_h are both zero with fidelity below 1")]
    NoResources,
}

/// How α(F) is evaluated: the β² approximation, or an externally supplied
/// lookup table (e.g. with exact values), interpolated piecewise-linearly.
#[derive(Debug, Clone, Default)]
pub enum AlphaModel {
    #[default]
    BetaSquaredApprox,
    LookupTable(AlphaTable),
}

impl AlphaModel {
    /// Stable label recorded in every κ-dependent output.
    pub fn label(&self) -> String {
        match self {
            AlphaModel::BetaSquaredApprox => "beta-squared".to_string(),
            AlphaModel::LookupTable(t) => format!("table({} points)", t.points.len()),
        }
    }
}

/// Table of (F, α) pairs with F strictly increasing in [0, 1] and α
/// non-increasing.
#[derive(Debug, Clone)]
pub struct AlphaTable {
    points: Vec<(f64, f64)>,
}

impl AlphaTable {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, SpeedLimitError> {
        if points.len() < 2 {
            return Err(SpeedLimitError::BadTable {
                reason: "need at least two points".into(),
            });
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(SpeedLimitError::BadTable {
                    reason: format!(
                        "F values must be strictly increasing ({} then {})",
                        w[0].0, w[1].0
                    ),
                });
            }
            if w[1].1 > w[0].1 {
                return Err(SpeedLimitError::BadTable {
                    reason: format!(
                        "alpha must be non-increasing in F ({} then {})",
                        w[0].1, w[1].1
                    ),
                });
            }
        }
        for &(f, a) in &points {
            if !(0.0..=1.0).contains(&f) || !(0.0..=1.0).contains(&a) {
                return Err(SpeedLimitError::BadTable {
                    reason: format!("point ({f}, {a}) outside the unit square"),
                });
            }
        }
        Ok(Self { points })
    }

    /// Parses a two-column CSV `F,alpha`; a header row is required.
    pub fn from_csv(reader: impl BufRead) -> Result<Self, SpeedLimitError> {
        let mut points = Vec::new();
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| SpeedLimitError::BadTable {
                reason: "empty file".into(),
            })
            .and_then(|r| {
                r.map_err(|e| SpeedLimitError::BadTable {
                    reason: e.to_string(),
                })
            })?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() != 2 {
            return Err(SpeedLimitError::BadTable {
                reason: "expected a two-column header row".into(),
            });
        }
        for line in lines {
            let line = line.map_err(|e| SpeedLimitError::BadTable {
                reason: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 2 {
                return Err(SpeedLimitError::BadTable {
                    reason: format!("bad row: {line}"),
                });
            }
            let f: f64 = parts[0].parse().map_err(|_| SpeedLimitError::BadTable {
                reason: format!("bad number in row: {line}"),
            })?;
            let a: f64 = parts[1].parse().map_err(|_| SpeedLimitError::BadTable {
                reason: format!("bad number in row: {line}"),
            })?;
            points.push((f, a));
        }
        Self::new(points)
    }

    pub fn min_f(&self) -> f64 {
        self.points.first().unwrap().0
    }

    pub fn max_f(&self) -> f64 {
        self.points.last().unwrap().0
    }

    fn interpolate(&self, f: f64) -> Result<f64, SpeedLimitError> {
        if f < self.min_f() - DOMAIN_SLACK || f > self.max_f() + DOMAIN_SLACK {
            return Err(SpeedLimitError::TableRangeExceeded {
                value: f,
                min: self.min_f(),
                max: self.max_f(),
            });
        }
        let f = f.clamp(self.min_f(), self.max_f());
        let idx = self
            .points
            .partition_point(|&(pf, _)| pf <= f)
            .min(self.points.len() - 1)
            .max(1);
        let (f0, a0) = self.points[idx - 1];
        let (f1, a1) = self.points[idx];
        Ok(a0 + (a1 - a0) * (f - f0) / (f1 - f0))
    }
}

fn clip_fidelity(f: f64) -> Result<f64, SpeedLimitError> {
    if !(-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&f) {
        return Err(SpeedLimitError::OutOfDomain { value: f });
    }
    Ok(f.clamp(0.0, 1.0))
}

/// β(F) = 2 arccos(√F)/π; strictly decreasing with β(0)=1 and β(1)=0.
pub fn beta(f: f64) -> Result<f64, SpeedLimitError> {
    let f = clip_fidelity(f)?;
    Ok(2.0 * f.sqrt().acos() / PI)
}

/// α(F) under the given model.
pub fn alpha(f: f64, model: &AlphaModel) -> Result<f64, SpeedLimitError> {
    let f = clip_fidelity(f)?;
    match model {
        AlphaModel::BetaSquaredApprox => {
            let b = beta(f)?;
            Ok(b * b)
        }
        AlphaModel::LookupTable(t) => t.interpolate(f),
    }
}

/// The minimum parameter separation |x'-x| compatible with joint fidelity `f`
/// at the given resources: (π/2)·max{α(F)/(ν·gap), β(F)/(√ν·ΔH)}.
///
/// A branch whose denominator vanishes is dropped from the max; if both vanish
/// while F < 1 no finite separation bound exists and `NoResources` is
/// returned.
pub fn qsl_min_separation(
    f: f64,
    nu: u32,
    gap: f64,
    delta_h: f64,
    model: &AlphaModel,
) -> Result<f64, SpeedLimitError> {
    let f = clip_fidelity(f)?;
    let a = alpha(f, model)?;
    let b = beta(f)?;
    let nu = nu as f64;
    let mut best: Option<f64> = None;
    if gap > 0.0 {
        best = Some(a / (nu * gap));
    }
    if delta_h > 0.0 {
        let branch = b / (nu.sqrt() * delta_h);
        best = Some(best.map_or(branch, |v| v.max(branch)));
    }
    match best {
        Some(v) => Ok(FRAC_PI_2 * v),
        None if f >= 1.0 => Ok(0.0),
        None => Err(SpeedLimitError::NoResources),
    }
}
