use serde::{Deserialize, Serialize};

use super::IdentityReport;
use crate::{Error, Result};

/// Residuals below this are treated as round-off.
pub const SATURATION_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceStatus {
    Converging,
    /// Some residual hit the round-off floor; no order is estimated.
    Saturated,
    /// A residual grew under refinement; no order is estimated.
    NonMonotone,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub identity_name: String,
    pub resolutions: Vec<usize>,
    pub residuals: Vec<f64>,
    pub reports: Vec<IdentityReport>,
    /// Mean of `log₂(r_i / r_{i+1})`; `None` unless converging.
    pub estimated_order: Option<f64>,
    pub status: ConvergenceStatus,
}

/// Runs `check` at `base · 2^i`, `i = 0..=n_doublings`, and estimates the
/// order from the judged residuals.
pub fn convergence_study<C>(check: C, base_resolution: usize, n_doublings: usize) -> Result<ConvergenceReport>
where
    C: Fn(usize) -> Result<IdentityReport>,
{
    if n_doublings < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 doublings, got {n_doublings}")));
    }
    let resolutions: Vec<usize> = (0..=n_doublings).map(|i| base_resolution << i).collect();
    let reports = resolutions.iter().map(|&r| check(r)).collect::<Result<Vec<_>>>()?;
    let residuals: Vec<f64> = reports.iter().map(IdentityReport::judged_residual).collect();
    let (estimated_order, status) = estimate_order(&residuals);
    Ok(ConvergenceReport {
        identity_name: reports[0].identity_name.clone(),
        resolutions,
        residuals,
        reports,
        estimated_order,
        status,
    })
}

pub(crate) fn estimate_order(residuals: &[f64]) -> (Option<f64>, ConvergenceStatus) {
    if residuals.iter().any(|r| *r < SATURATION_FLOOR) {
        return (None, ConvergenceStatus::Saturated);
    }
    if residuals.windows(2).any(|w| w[1] > w[0]) {
        return (None, ConvergenceStatus::NonMonotone);
    }
    let orders: Vec<f64> = residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let mean = orders.iter().sum::<f64>() / orders.len() as f64;
    (Some(mean), ConvergenceStatus::Converging)
}
