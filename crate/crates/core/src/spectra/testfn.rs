//! Test functions `f` with analytic `(Δ + λ²) f`.

use serde::Serialize;

use super::EigenMode;
use crate::geometry::{periodic_delta, Field, LineBreaks, Manifold, ManifoldKind, Point};
use crate::{Error, Result};

/// A finite combination `constant + Σ c_μ φ_μ` of eigenmodes on one manifold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeExpansion {
    manifold: Manifold,
    terms: Vec<(f64, EigenMode)>,
    constant: f64,
}

impl ModeExpansion {
    pub fn new(manifold: Manifold) -> Self {
        Self { manifold, terms: Vec::new(), constant: 0.0 }
    }

    pub fn from_terms(manifold: Manifold, terms: Vec<(f64, EigenMode)>) -> Result<Self> {
        terms.into_iter().try_fold(Self::new(manifold), |acc, (c, m)| acc.with_term(c, m))
    }

    pub fn single(mode: &EigenMode) -> Self {
        Self { manifold: mode.manifold(), terms: vec![(1.0, mode.clone())], constant: 0.0 }
    }

    pub fn with_term(mut self, coefficient: f64, mode: EigenMode) -> Result<Self> {
        if mode.manifold() != self.manifold {
            return Err(Error::ManifoldMismatch(
                self.manifold.to_string(),
                mode.manifold().to_string(),
            ));
        }
        self.terms.push((coefficient, mode));
        Ok(self)
    }

    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant = constant;
        self
    }

    pub fn terms(&self) -> &[(f64, EigenMode)] {
        &self.terms
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// `(Δ + λ²)` of the expansion, term by term: `Σ c_μ (λ² − μ²) φ_μ + λ² c₀`.
    pub fn helmholtz(&self, p: &Point, lambda: f64) -> f64 {
        let l2 = lambda * lambda;
        self.terms
            .iter()
            .map(|(c, m)| c * (l2 - m.eigenvalue()) * m.eval(p))
            .sum::<f64>()
            + l2 * self.constant
    }

    pub fn laplacian(&self, p: &Point) -> f64 {
        -self.terms.iter().map(|(c, m)| c * m.eigenvalue() * m.eval(p)).sum::<f64>()
    }

    pub fn sup_bound(&self) -> f64 {
        self.constant.abs() + self.terms.iter().map(|(c, m)| c.abs() * m.sup_abs()).sum::<f64>()
    }

    fn describe(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        if self.constant != 0.0 || self.terms.is_empty() {
            parts.push(format!("{}", self.constant));
        }
        for (c, m) in &self.terms {
            parts.push(if *c == 1.0 { format!("[{m}]") } else { format!("{c}*[{m}]") });
        }
        parts.join(" + ")
    }
}

impl Field for ModeExpansion {
    fn manifold(&self) -> Manifold {
        self.manifold
    }

    fn value(&self, p: &Point) -> f64 {
        self.constant + self.terms.iter().map(|(c, m)| c * m.eval(p)).sum::<f64>()
    }

    fn partials(&self, p: &Point) -> Point {
        let mut out = [0.0; 3];
        for (c, m) in &self.terms {
            let d = m.partials(p);
            for i in 0..3 {
                out[i] += c * d[i];
            }
        }
        out
    }

    fn split_axis(&self) -> usize {
        self.terms
            .iter()
            .max_by(|a, b| (a.0.abs() * a.1.lambda()).total_cmp(&(b.0.abs() * b.1.lambda())))
            .map_or(0, |(_, m)| m.split_axis())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Constant(f64),
    Expansion { expansion: ModeExpansion, lambda_ref: Option<f64> },
    /// `(1 − r²/R²)³` inside the periodic ball of radius `R`, zero outside.
    Bump { center: Point, radius: f64 },
    Linear(Vec<(f64, TestFunction)>),
}

/// A C² function on a manifold with analytic value, gradient and Laplacian.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestFunction {
    manifold: Manifold,
    kind: TestKind,
    description: String,
}

/// Wraps an expansion as a test function whose `(Δ + λ_ref²) f` is evaluated
/// term by term, so modes with `μ = λ_ref` drop out exactly.
pub fn apply_helmholtz(expansion: &ModeExpansion, lambda_ref: f64) -> Result<TestFunction> {
    let m = expansion.manifold;
    if let Some((_, bad)) = expansion.terms.iter().find(|(_, t)| t.manifold() != m) {
        return Err(Error::ManifoldMismatch(m.to_string(), bad.manifold().to_string()));
    }
    Ok(TestFunction {
        manifold: m,
        description: expansion.describe(),
        kind: TestKind::Expansion { expansion: expansion.clone(), lambda_ref: Some(lambda_ref) },
    })
}

/// The C² polynomial bump `(1 − r²/R²)³` centred on a torus point.
pub fn bump_test_function(manifold: Manifold, center: Point, radius: f64) -> Result<TestFunction> {
    if !matches!(manifold.kind(), ManifoldKind::FlatTorus { .. }) {
        return Err(Error::UnsupportedManifold(format!("bump test function on {manifold}")));
    }
    if !(radius > 0.0 && radius < std::f64::consts::PI) {
        return Err(Error::InvalidArgument(format!("bump radius {radius} outside (0, π)")));
    }
    Ok(TestFunction {
        manifold,
        description: format!("bump center=({:.6},{:.6},{:.6}) radius={radius}", center[0], center[1], center[2]),
        kind: TestKind::Bump { center, radius },
    })
}

impl TestFunction {
    pub fn constant(manifold: Manifold, value: f64) -> Self {
        Self { manifold, kind: TestKind::Constant(value), description: format!("constant {value}") }
    }

    pub fn from_mode(mode: &EigenMode) -> Self {
        Self {
            manifold: mode.manifold(),
            description: format!("[{mode}]"),
            kind: TestKind::Expansion { expansion: ModeExpansion::single(mode), lambda_ref: None },
        }
    }

    /// `a·f + b·g`.
    pub fn combine(a: f64, f: &TestFunction, b: f64, g: &TestFunction) -> Result<Self> {
        if f.manifold != g.manifold {
            return Err(Error::ManifoldMismatch(f.manifold.to_string(), g.manifold.to_string()));
        }
        Ok(Self {
            manifold: f.manifold,
            description: format!("{a}*({}) + {b}*({})", f.description, g.description),
            kind: TestKind::Linear(vec![(a, f.clone()), (b, g.clone())]),
        })
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn kind(&self) -> &TestKind {
        &self.kind
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// The value when `f` is constant.
    pub fn as_constant(&self) -> Option<f64> {
        match self.kind {
            TestKind::Constant(v) => Some(v),
            _ => None,
        }
    }

    /// Reference frequency fixed by [`apply_helmholtz`], if any.
    pub fn lambda_ref(&self) -> Option<f64> {
        match self.kind {
            TestKind::Expansion { lambda_ref, .. } => lambda_ref,
            _ => None,
        }
    }

    pub fn value(&self, p: &Point) -> f64 {
        match &self.kind {
            TestKind::Constant(v) => *v,
            TestKind::Expansion { expansion, .. } => expansion.value(p),
            TestKind::Bump { center, radius } => {
                let s = self.bump_s(center, *radius, p);
                if s >= 1.0 {
                    0.0
                } else {
                    (1.0 - s).powi(3)
                }
            }
            TestKind::Linear(parts) => parts.iter().map(|(a, f)| a * f.value(p)).sum(),
        }
    }

    pub fn partials(&self, p: &Point) -> Point {
        match &self.kind {
            TestKind::Constant(_) => [0.0; 3],
            TestKind::Expansion { expansion, .. } => expansion.partials(p),
            TestKind::Bump { center, radius } => {
                let s = self.bump_s(center, *radius, p);
                let mut out = [0.0; 3];
                if s < 1.0 {
                    let k = -6.0 * (1.0 - s).powi(2) / (radius * radius);
                    for (i, o) in out.iter_mut().enumerate().take(self.manifold.dim()) {
                        *o = k * periodic_delta(center[i], p[i]);
                    }
                }
                out
            }
            TestKind::Linear(parts) => {
                let mut out = [0.0; 3];
                for (a, f) in parts {
                    let d = f.partials(p);
                    for i in 0..3 {
                        out[i] += a * d[i];
                    }
                }
                out
            }
        }
    }

    pub fn laplacian(&self, p: &Point) -> f64 {
        match &self.kind {
            TestKind::Constant(_) => 0.0,
            TestKind::Expansion { expansion, .. } => expansion.laplacian(p),
            TestKind::Bump { center, radius } => {
                let s = self.bump_s(center, *radius, p);
                if s >= 1.0 {
                    return 0.0;
                }
                let n = self.manifold.dim() as f64;
                -6.0 / (radius * radius) * (1.0 - s) * (n * (1.0 - s) - 4.0 * s)
            }
            TestKind::Linear(parts) => parts.iter().map(|(a, f)| a * f.laplacian(p)).sum(),
        }
    }

    /// `(Δ + λ²) f` at `p`.
    pub fn helmholtz(&self, p: &Point, lambda: f64) -> f64 {
        match &self.kind {
            TestKind::Constant(v) => lambda * lambda * v,
            TestKind::Expansion { expansion, .. } => expansion.helmholtz(p, lambda),
            TestKind::Bump { .. } => self.laplacian(p) + lambda * lambda * self.value(p),
            TestKind::Linear(parts) => parts.iter().map(|(a, f)| a * f.helmholtz(p, lambda)).sum(),
        }
    }

    /// An upper bound for `sup |f|`.
    pub fn sup_bound(&self) -> f64 {
        match &self.kind {
            TestKind::Constant(v) => v.abs(),
            TestKind::Expansion { expansion, .. } => expansion.sup_bound(),
            TestKind::Bump { .. } => 1.0,
            TestKind::Linear(parts) => parts.iter().map(|(a, f)| a.abs() * f.sup_bound()).sum(),
        }
    }

    fn bump_s(&self, center: &Point, radius: f64, p: &Point) -> f64 {
        let r2: f64 = (0..self.manifold.dim())
            .map(|i| periodic_delta(center[i], p[i]).powi(2))
            .sum();
        r2 / (radius * radius)
    }
}

impl LineBreaks for TestFunction {
    /// The bump's support boundary is a kink of `Δf`; report where a grid line
    /// crosses it.
    fn breaks(&self, axis: usize, base: &Point) -> Vec<f64> {
        match &self.kind {
            TestKind::Bump { center, radius } => {
                let perp: f64 = (0..self.manifold.dim())
                    .filter(|&i| i != axis)
                    .map(|i| periodic_delta(center[i], base[i]).powi(2))
                    .sum();
                let r2 = radius * radius;
                if perp >= r2 {
                    return Vec::new();
                }
                let half = (r2 - perp).sqrt();
                vec![center[axis] - half, center[axis] + half]
            }
            TestKind::Linear(parts) => parts.iter().flat_map(|(_, f)| f.breaks(axis, base)).collect(),
            _ => Vec::new(),
        }
    }
}
