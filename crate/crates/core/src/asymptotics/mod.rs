//! Norm scans along eigenvalue sequences, log–log exponent fits and
//! trend-stability checks of the normalised growth ratios.
//!
//! A scan evaluates one [`NormRecord`] per index of a [`Family`]: `L¹`, `L²`
//! and `Lᵖ` norms by kink-aware quadrature, refined sup norms of `φ` and
//! `|∇φ|`, and the measure and gradient-weighted measure of the nodal set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{build_axisymmetric_grid, build_grid, integrate_split, polish_max, Field, Manifold, Point, QuadratureGrid, SplitRule};
use crate::levelset::{extract, gradient_integral, hausdorff_measure, ExtractionConfig};
use crate::spectra::{circle_mode, sectoral_harmonic, torus_mode, zonal_harmonic, EigenMode, ModeFamily};
use crate::{Error, Result};

mod bounds;
mod fit;

pub use bounds::{verify_bounds, BoundKind, BoundReport, RatioCheck, TREND_FACTOR};
pub use fit::{default_bands, fit_exponent, fit_power_law, Band, BandCheck, Column, ExponentFit};

/// Smallest number of indices a scan (or a fit) accepts.
pub const MIN_ROWS: usize = 5;

/// Eigenfunction sequences that can be scanned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `(1/√π) sin(m x)` on the circle.
    Circle,
    /// Plane waves `k = (m, 0)` on T².
    TorusAxis,
    /// Plane waves `k = (m, m+1)` on T², never aligned with the grid.
    TorusDiag,
    /// `Y_N⁰ ∝ P_N(cos θ)`.
    Zonal,
    /// `Y_N^N ∝ sinᴺθ cos Nφ`.
    Sectoral,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Circle, Family::TorusAxis, Family::TorusDiag, Family::Zonal, Family::Sectoral];

    pub fn name(self) -> &'static str {
        match self {
            Family::Circle => "circle",
            Family::TorusAxis => "torus-axis",
            Family::TorusDiag => "torus-diag",
            Family::Zonal => "zonal",
            Family::Sectoral => "sectoral",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown family '{s}'")))
    }

    pub fn manifold(self) -> Manifold {
        match self {
            Family::Circle => Manifold::circle(),
            Family::TorusAxis | Family::TorusDiag => Manifold::torus(2).expect("T² is supported"),
            Family::Zonal | Family::Sectoral => Manifold::sphere(),
        }
    }

    /// The member with the given index (`m` or `N`, at least 1).
    pub fn mode(self, index: u32) -> Result<EigenMode> {
        if index == 0 {
            return Err(Error::InvalidArgument(format!("{} index must be positive", self.name())));
        }
        let m = index as i64;
        match self {
            Family::Circle => circle_mode(m, 0.0),
            Family::TorusAxis => torus_mode(2, &[m, 0], 0.0),
            Family::TorusDiag => torus_mode(2, &[m, m + 1], 0.0),
            Family::Zonal => zonal_harmonic(index),
            Family::Sectoral => sectoral_harmonic(index),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Inclusive index range `start:stop[:step]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexRange {
    pub start: u32,
    pub stop: u32,
    pub step: u32,
}

impl IndexRange {
    pub fn new(start: u32, stop: u32, step: u32) -> Result<Self> {
        if start == 0 || step == 0 || stop < start {
            return Err(Error::InvalidArgument(format!("bad index range {start}:{stop}:{step}")));
        }
        Ok(Self { start, stop, step })
    }

    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("index range '{s}' is not start:stop[:step]"));
        let parts: Vec<u32> = s
            .split(':')
            .map(|p| p.trim().parse::<u32>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        match parts[..] {
            [a, b] => Self::new(a, b, 1),
            [a, b, c] => Self::new(a, b, c),
            _ => Err(bad()),
        }
    }

    pub fn indices(&self) -> Vec<u32> {
        (self.start..=self.stop).step_by(self.step as usize).collect()
    }
}

impl std::fmt::Display for IndexRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

/// Knobs for [`scan_family`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Floor on the per-row resolution.
    pub base_resolution: usize,
    /// Grid nodes per wavelength; the row resolution grows with `λ`.
    pub points_per_wavelength: f64,
    /// Finite exponents reported in the `lp` column.
    pub p_values: Vec<f64>,
    pub extraction: ExtractionConfig,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            base_resolution: 64,
            points_per_wavelength: 8.0,
            p_values: vec![1.0, 2.0, 4.0, 6.0],
            extraction: ExtractionConfig::default(),
        }
    }
}

impl ScanConfig {
    /// Resolution used for a mode: enough nodes per wavelength along every
    /// chart axis, rounded up to a multiple of 8.
    pub fn resolution_for(&self, mode: &EigenMode) -> usize {
        // the sphere's colatitude axis spans π with `resolution` nodes
        let span = if mode.manifold().is_flat() { 1.0 } else { 0.5 };
        let want = (self.points_per_wavelength * mode.lambda() * span).ceil() as usize;
        want.max(self.base_resolution).div_ceil(8) * 8
    }
}

/// Norms and nodal quantities of one eigenfunction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRecord {
    pub index: u32,
    pub label: String,
    pub resolution: usize,
    pub lambda: f64,
    pub l1: f64,
    pub l2: f64,
    /// `(p, ‖φ‖_p)` pairs.
    pub lp: Vec<(f64, f64)>,
    pub sup: f64,
    pub grad_sup: f64,
    /// Largest `|∇φ|` over the nodal mesh vertices.
    pub grad_sup_nodal: f64,
    pub nodal_measure: f64,
    /// `∫_N |∇φ| dS`.
    pub weighted_nodal_integral: f64,
    /// `|2∫_N|∇φ| − λ²‖φ‖₁| / max(…)`, the nodal identity on this row.
    pub identity_rel_residual: f64,
    /// Extraction needed an ambiguity fallback on this row.
    pub flagged: bool,
}

impl NormRecord {
    pub fn lp_value(&self, p: f64) -> Option<f64> {
        self.lp.iter().find(|(q, _)| *q == p).map(|(_, v)| *v)
    }
}

/// One scan: a family and its records in index order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanTable {
    pub family: Family,
    pub records: Vec<NormRecord>,
}

impl ScanTable {
    pub fn manifold(&self) -> Manifold {
        self.family.manifold()
    }

    /// CSV with a header row; `lp_<p>` columns follow the union of exponents.
    pub fn to_csv(&self) -> Result<String> {
        let mut ps: Vec<f64> = Vec::new();
        for r in &self.records {
            for (p, _) in &r.lp {
                if !ps.contains(p) {
                    ps.push(*p);
                }
            }
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let mut header: Vec<String> = ["family", "index", "label", "resolution", "lambda", "l1", "l2"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend(ps.iter().map(|p| format!("lp_{p}")));
        header.extend(
            [
                "sup",
                "grad_sup",
                "grad_sup_nodal",
                "nodal_measure",
                "weighted_nodal_integral",
                "identity_rel_residual",
                "flagged",
            ]
            .iter()
            .map(|s| s.to_string()),
        );
        let csv_err = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.records {
            let mut row = vec![
                self.family.name().to_string(),
                r.index.to_string(),
                r.label.clone(),
                r.resolution.to_string(),
                r.lambda.to_string(),
                r.l1.to_string(),
                r.l2.to_string(),
            ];
            row.extend(ps.iter().map(|p| r.lp_value(*p).map(|v| v.to_string()).unwrap_or_default()));
            row.extend([
                r.sup.to_string(),
                r.grad_sup.to_string(),
                r.grad_sup_nodal.to_string(),
                r.nodal_measure.to_string(),
                r.weighted_nodal_integral.to_string(),
                r.identity_rel_residual.to_string(),
                r.flagged.to_string(),
            ]);
            w.write_record(&row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// Polish a grid maximum of `g` by coordinate golden-section search.
fn refined_max<G: Fn(&Point) -> f64 + Sync>(grid: &QuadratureGrid, g: G) -> f64 {
    let samples = grid.sample(&g);
    let mut best = 0;
    for (i, v) in samples.iter().enumerate() {
        if *v > samples[best] {
            best = i;
        }
    }
    // a single-node axis (axisymmetric grid) carries no spacing information
    let h = grid.axes().iter().filter(|a| a.len() > 1).map(|a| a.max_spacing()).fold(0.0, f64::max);
    let (_, v) = polish_max(grid.manifold(), &g, &grid.node(best), h, 3);
    v
}

/// `‖φ‖_p` for `p ≥ 1`; `p = ∞` gives the grid maximum of `|φ|` after one
/// local refinement pass.
pub fn lp_norm(mode: &EigenMode, p: f64, grid: &QuadratureGrid) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument(format!("Lp exponent {p} below 1")));
    }
    if p.is_infinite() {
        return Ok(refined_max(grid, |x| mode.eval(x).abs()));
    }
    let v = integrate_split(grid, mode.split_axis(), mode, 0.0, &(), &SplitRule::default(), 1, |x, out| {
        out[0] = mode.eval(x).abs().powf(p);
    });
    Ok(v[0].powf(1.0 / p))
}

/// `sup |∇φ|`: best grid node, then a golden-section polish around it.
pub fn grad_sup(mode: &EigenMode, grid: &QuadratureGrid) -> f64 {
    refined_max(grid, |x| mode.grad(x).1)
}

fn scan_row(family: Family, index: u32, cfg: &ScanConfig) -> Result<NormRecord> {
    let mode = family.mode(index)?;
    let resolution = cfg.resolution_for(&mode);
    // zonal integrands do not depend on longitude
    let grid = match mode.family() {
        ModeFamily::Zonal { .. } => build_axisymmetric_grid(resolution)?,
        _ => build_grid(mode.manifold(), resolution)?,
    };
    let ps: Vec<f64> = cfg.p_values.clone();
    if let Some(p) = ps.iter().find(|p| p.is_nan() || **p < 1.0 || p.is_infinite()) {
        return Err(Error::InvalidArgument(format!("Lp exponent {p} must be finite and at least 1")));
    }
    let width = 2 + ps.len();
    let v = integrate_split(&grid, mode.split_axis(), &mode, 0.0, &(), &SplitRule::default(), width, |x, out| {
        let a = mode.eval(x).abs();
        out[0] = a;
        out[1] = a * a;
        for (o, p) in out[2..].iter_mut().zip(&ps) {
            *o = a.powf(*p);
        }
    });
    let (l1, l2) = (v[0], v[1].sqrt());
    let lp: Vec<(f64, f64)> = ps.iter().zip(&v[2..]).map(|(p, s)| (*p, s.powf(1.0 / p))).collect();
    let sup = lp_norm(&mode, f64::INFINITY, &grid)?;
    let gsup = grad_sup(&mode, &grid);

    let ex = ExtractionConfig { resolution, ..cfg.extraction };
    let mesh = extract(&mode, 0.0, &ex)?;
    let nodal_measure = hausdorff_measure(&mesh);
    let weighted = gradient_integral(&mesh);
    let grad_sup_nodal = mesh.grad_norms.iter().copied().fold(0.0, f64::max);
    let lhs = 2.0 * weighted;
    let rhs = mode.eigenvalue() * l1;
    let identity_rel_residual = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-300);

    Ok(NormRecord {
        index,
        label: mode.label(),
        resolution,
        lambda: mode.lambda(),
        l1,
        l2,
        lp,
        sup,
        grad_sup: gsup,
        grad_sup_nodal,
        nodal_measure,
        weighted_nodal_integral: weighted,
        identity_rel_residual,
        flagged: mesh.stats.flagged(),
    })
}

/// One [`NormRecord`] per index, in index order. Rows are computed in
/// parallel and are independent of the thread count.
pub fn scan_family(family: Family, indices: &[u32], cfg: &ScanConfig) -> Result<ScanTable> {
    if indices.len() < MIN_ROWS {
        return Err(Error::InvalidArgument(format!(
            "scan needs at least {MIN_ROWS} indices, got {}",
            indices.len()
        )));
    }
    cfg.extraction.validate()?;
    let records = indices
        .par_iter()
        .map(|&i| scan_row(family, i, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanTable { family, records })
}

#[cfg(test)]
mod tests;
