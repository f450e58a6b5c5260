//! Trend-stability checks of the normalised growth ratios.
//!
//! The constants in the lower and upper bounds are not computable, so a
//! bound "holds" on a scan when its normalised ratio stays within a fixed
//! factor of its value at the start of the scan.

use serde::{Deserialize, Serialize};

use super::{Family, NormRecord, ScanTable};
use crate::geometry::Manifold;
use crate::{Error, Result};

/// Lower-bounded ratios must keep `min ≥ TREND_FACTOR × head`; upper-bounded
/// ones `max ≤ head / TREND_FACTOR`, where `head` is the median of the first
/// three rows.
pub const TREND_FACTOR: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    BoundedBelow,
    BoundedAbove,
    /// In `(0, Vol(M)^{1/2}]` and bounded below.
    PositiveUpToRootVolume,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioCheck {
    pub name: String,
    /// Power of `λ` multiplying the raw column.
    pub lambda_power: f64,
    pub kind: BoundKind,
    pub values: Vec<f64>,
    pub min: f64,
    pub max: f64,
    /// Median of the first three rows.
    pub head_median: f64,
    /// `(max − min) / min`.
    pub variation: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub family: Family,
    pub manifold: String,
    pub dim: usize,
    pub n_rows: usize,
    pub ratios: Vec<RatioCheck>,
    pub passed: bool,
}

impl BoundReport {
    pub fn ratio(&self, name: &str) -> Option<&RatioCheck> {
        self.ratios.iter().find(|r| r.name == name)
    }
}

fn ratio_check<F>(table: &ScanTable, name: &str, lambda_power: f64, kind: BoundKind, root_vol: f64, raw: F) -> RatioCheck
where
    F: Fn(&NormRecord) -> f64,
{
    let values: Vec<f64> = table.records.iter().map(|r| raw(r) * r.lambda.powf(lambda_power)).collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut head: Vec<f64> = values.iter().take(3).copied().collect();
    head.sort_by(f64::total_cmp);
    let head_median = head[head.len() / 2];
    let below = min >= TREND_FACTOR * head_median && min > 0.0;
    let passed = match kind {
        BoundKind::BoundedBelow => below,
        BoundKind::BoundedAbove => max <= head_median / TREND_FACTOR,
        BoundKind::PositiveUpToRootVolume => below && max <= root_vol * (1.0 + 1e-8),
    };
    RatioCheck {
        name: name.to_string(),
        lambda_power,
        kind,
        values,
        min,
        max,
        head_median,
        variation: (max - min) / min,
        passed,
    }
}

/// Normalised ratios of a scan on an `n`-manifold:
///
/// - `l1 · λ^{(n−1)/4}` bounded below,
/// - `grad_sup · λ^{−(n+1)/2}` bounded above,
/// - `nodal_measure · λ^{−(7/4 − 3n/4)}` bounded below,
/// - `∫_N|∇φ| · λ^{−2}` in `(0, Vol^{1/2}]`.
pub fn verify_bounds(table: &ScanTable, manifold: Manifold) -> Result<BoundReport> {
    if table.records.is_empty() {
        return Err(Error::InvalidArgument("empty scan table".into()));
    }
    if table.manifold() != manifold {
        return Err(Error::ManifoldMismatch(table.manifold().to_string(), manifold.to_string()));
    }
    let n = manifold.dim() as f64;
    let rv = manifold.volume().sqrt();
    let ratios = vec![
        ratio_check(table, "l1", (n - 1.0) / 4.0, BoundKind::BoundedBelow, rv, |r| r.l1),
        ratio_check(table, "grad_sup", -(n + 1.0) / 2.0, BoundKind::BoundedAbove, rv, |r| r.grad_sup),
        ratio_check(table, "nodal_measure", -(1.75 - 0.75 * n), BoundKind::BoundedBelow, rv, |r| r.nodal_measure),
        ratio_check(table, "weighted_nodal_integral", -2.0, BoundKind::PositiveUpToRootVolume, rv, |r| {
            r.weighted_nodal_integral
        }),
    ];
    let passed = ratios.iter().all(|r| r.passed);
    Ok(BoundReport {
        family: table.family,
        manifold: manifold.name().to_string(),
        dim: manifold.dim(),
        n_rows: table.records.len(),
        ratios,
        passed,
    })
}
