//! Least-squares power-law fits on scan tables.

use serde::{Deserialize, Serialize};

use super::{Family, NormRecord, ScanTable, MIN_ROWS};
use crate::{Error, Result};

/// A numeric column of a scan table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    Index,
    Lambda,
    L1,
    L2,
    /// `‖φ‖_p` for the given `p`.
    Lp(f64),
    Sup,
    GradSup,
    GradSupNodal,
    NodalMeasure,
    WeightedNodalIntegral,
    /// `∫_N |∇φ| dS / λ²`.
    WeightedOverLambda2,
}

impl Column {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "index" => Column::Index,
            "lambda" => Column::Lambda,
            "l1" => Column::L1,
            "l2" => Column::L2,
            "sup" => Column::Sup,
            "grad_sup" => Column::GradSup,
            "grad_sup_nodal" => Column::GradSupNodal,
            "nodal_measure" => Column::NodalMeasure,
            "weighted_nodal_integral" => Column::WeightedNodalIntegral,
            "weighted_over_lambda2" => Column::WeightedOverLambda2,
            other => match other.strip_prefix("lp_").map(str::parse::<f64>) {
                Some(Ok(p)) if p >= 1.0 && p.is_finite() => Column::Lp(p),
                _ => return Err(Error::InvalidArgument(format!("unknown column '{other}'"))),
            },
        })
    }

    pub fn name(&self) -> String {
        match self {
            Column::Index => "index".into(),
            Column::Lambda => "lambda".into(),
            Column::L1 => "l1".into(),
            Column::L2 => "l2".into(),
            Column::Lp(p) => format!("lp_{p}"),
            Column::Sup => "sup".into(),
            Column::GradSup => "grad_sup".into(),
            Column::GradSupNodal => "grad_sup_nodal".into(),
            Column::NodalMeasure => "nodal_measure".into(),
            Column::WeightedNodalIntegral => "weighted_nodal_integral".into(),
            Column::WeightedOverLambda2 => "weighted_over_lambda2".into(),
        }
    }

    pub fn value(&self, r: &NormRecord) -> Option<f64> {
        Some(match self {
            Column::Index => r.index as f64,
            Column::Lambda => r.lambda,
            Column::L1 => r.l1,
            Column::L2 => r.l2,
            Column::Lp(p) => return r.lp_value(*p),
            Column::Sup => r.sup,
            Column::GradSup => r.grad_sup,
            Column::GradSupNodal => r.grad_sup_nodal,
            Column::NodalMeasure => r.nodal_measure,
            Column::WeightedNodalIntegral => r.weighted_nodal_integral,
            Column::WeightedOverLambda2 => r.weighted_nodal_integral / (r.lambda * r.lambda),
        })
    }

    fn values(&self, table: &ScanTable) -> Result<Vec<f64>> {
        table
            .records
            .iter()
            .map(|r| {
                self.value(r)
                    .ok_or_else(|| Error::InvalidArgument(format!("column {} missing on row {}", self.name(), r.index)))
            })
            .collect()
    }
}

/// `log y ≈ intercept + slope · log x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub x: String,
    pub y: String,
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Ordinary least squares on `(ln x, ln y)`.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<ExponentFit> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { got: ys.len(), expected: xs.len() });
    }
    if xs.len() < MIN_ROWS {
        return Err(Error::InvalidArgument(format!("fit needs at least {MIN_ROWS} points, got {}", xs.len())));
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("log-log fit needs positive finite values, got {v}")));
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("log-log fit needs at least two distinct x values".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (ssr / (n - 2.0) / sxx).sqrt();
    let r_squared = if syy > 0.0 { (1.0 - ssr / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(ExponentFit { x: String::new(), y: String::new(), slope, intercept, stderr, r_squared, n_points: xs.len() })
}

/// Fits `y ∝ x^slope` over a scan table.
pub fn fit_exponent(table: &ScanTable, x: Column, y: Column) -> Result<ExponentFit> {
    let mut fit = fit_power_law(&x.values(table)?, &y.values(table)?)?;
    fit.x = x.name();
    fit.y = y.name();
    Ok(fit)
}

/// Acceptance band for a fitted column.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Band {
    /// Fitted slope within `target ± tol`.
    Slope { target: f64, tol: f64 },
    /// `(max − min) / min` of `y` at most `max_variation`.
    Constant { max_variation: f64 },
}

/// Outcome of one band.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandCheck {
    pub family: Family,
    pub x: String,
    pub y: String,
    pub band: Band,
    /// Slope, or relative variation for [`Band::Constant`].
    pub observed: f64,
    pub fit: ExponentFit,
    pub passed: bool,
}

impl Band {
    pub fn check(&self, table: &ScanTable, x: Column, y: Column) -> Result<BandCheck> {
        let fit = fit_exponent(table, x, y)?;
        let (observed, passed) = match *self {
            Band::Slope { target, tol } => (fit.slope, (fit.slope - target).abs() <= tol),
            Band::Constant { max_variation } => {
                let v = y.values(table)?;
                let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let var = (hi - lo) / lo;
                (var, var <= max_variation)
            }
        };
        Ok(BandCheck { family: table.family, x: x.name(), y: y.name(), band: *self, observed, fit, passed })
    }
}

/// Expected scaling per family as `(y, x, band)` triples.
pub fn default_bands(family: Family) -> Vec<(Column, Column, Band)> {
    use Column::*;
    let slope = |target, tol| Band::Slope { target, tol };
    match family {
        Family::Circle => vec![(L1, Lambda, slope(0.0, 1e-6)), (NodalMeasure, Lambda, slope(1.0, 1e-6))],
        Family::TorusAxis | Family::TorusDiag => vec![
            (NodalMeasure, Lambda, slope(1.0, 0.05)),
            (WeightedOverLambda2, Lambda, Band::Constant { max_variation: 0.05 }),
        ],
        Family::Zonal => vec![(L1, Lambda, slope(0.0, 0.05)), (GradSup, Lambda, slope(1.5, 0.05))],
        Family::Sectoral => vec![(L1, Lambda, slope(-0.25, 0.03)), (GradSup, Lambda, slope(1.25, 0.05))],
    }
}
