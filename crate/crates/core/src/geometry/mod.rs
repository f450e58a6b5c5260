//! Model manifolds, their charts and metrics, and volume quadrature.
//!
//! Charts:
//! - circle: `x ∈ [0, 2π)`;
//! - flat torus `R^n / (2πZ)^n`: `(x₁, …, xₙ) ∈ [0, 2π)^n`;
//! - round unit sphere: colatitude–longitude `(θ, φ)`, volume factor `sin θ`.
//!
//! Points are stored as `[f64; 3]`; coordinates past the intrinsic dimension
//! are ignored and kept at zero.

mod optimize;
mod quadrature;
mod split;

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use quadrature::{
    build_axisymmetric_grid, build_grid, gauss_legendre, integrate, pairwise_sum, pairwise_sum_by, Axis, AxisKind, QuadratureGrid,
};
pub use optimize::{golden_max, polish_max};
pub use split::{integrate_split, LineBreaks, SplitRule};

/// A point in chart coordinates.
pub type Point = [f64; 3];

/// Poles are treated analytically within this colatitude distance.
pub const POLE_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    Circle,
    FlatTorus { dim: usize },
    Sphere2,
}

/// One of the supported model manifolds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ManifoldKind", into = "ManifoldKind")]
pub struct Manifold {
    kind: ManifoldKind,
}

impl TryFrom<ManifoldKind> for Manifold {
    type Error = Error;

    fn try_from(kind: ManifoldKind) -> Result<Self> {
        Manifold::new(kind)
    }
}

impl From<Manifold> for ManifoldKind {
    fn from(m: Manifold) -> Self {
        m.kind
    }
}

impl Manifold {
    pub fn new(kind: ManifoldKind) -> Result<Self> {
        match kind {
            ManifoldKind::FlatTorus { dim } if !(2..=3).contains(&dim) => Err(
                Error::UnsupportedManifold(format!("flat torus of dimension {dim}")),
            ),
            _ => Ok(Self { kind }),
        }
    }

    pub const fn circle() -> Self {
        Self { kind: ManifoldKind::Circle }
    }

    pub fn torus(dim: usize) -> Result<Self> {
        Self::new(ManifoldKind::FlatTorus { dim })
    }

    pub const fn sphere() -> Self {
        Self { kind: ManifoldKind::Sphere2 }
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    /// Intrinsic dimension `n`.
    pub fn dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Circle => 1,
            ManifoldKind::FlatTorus { dim } => dim,
            ManifoldKind::Sphere2 => 2,
        }
    }

    /// Period of the flat coordinates (the sphere longitude shares it).
    pub fn period(&self) -> f64 {
        TAU
    }

    pub fn volume(&self) -> f64 {
        match self.kind {
            ManifoldKind::Circle => TAU,
            ManifoldKind::FlatTorus { dim } => TAU.powi(dim as i32),
            ManifoldKind::Sphere2 => 4.0 * PI,
        }
    }

    pub fn is_flat(&self) -> bool {
        !matches!(self.kind, ManifoldKind::Sphere2)
    }

    /// Short name used in configs and reports: `circle`, `torus2`, `torus3`, `sphere`.
    pub fn name(&self) -> &'static str {
        match self.kind {
            ManifoldKind::Circle => "circle",
            ManifoldKind::FlatTorus { dim: 2 } => "torus2",
            ManifoldKind::FlatTorus { .. } => "torus3",
            ManifoldKind::Sphere2 => "sphere",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.trim() {
            "circle" => Ok(Self::circle()),
            "torus2" => Self::torus(2),
            "torus3" => Self::torus(3),
            "sphere" | "sphere2" => Ok(Self::sphere()),
            other => Err(Error::UnsupportedManifold(other.to_string())),
        }
    }

    /// Metric norm of a covector given by its chart partial derivatives.
    pub fn metric_norm(&self, p: &Point, partials: &Point) -> f64 {
        match self.kind {
            ManifoldKind::Sphere2 => {
                let s = p[0].sin();
                partials[0].hypot(partials[1] / s)
            }
            _ => partials[..self.dim()].iter().map(|d| d * d).sum::<f64>().sqrt(),
        }
    }

    /// Raises an index: chart components of the gradient vector.
    pub fn raise(&self, p: &Point, partials: &Point) -> Point {
        match self.kind {
            ManifoldKind::Sphere2 => {
                let s = p[0].sin();
                [partials[0], partials[1] / (s * s), 0.0]
            }
            _ => *partials,
        }
    }

    /// Maps a chart point back into the fundamental domain.
    pub fn wrap(&self, p: &Point) -> Point {
        let mut q = *p;
        match self.kind {
            ManifoldKind::Sphere2 => q[1] = q[1].rem_euclid(TAU),
            _ => {
                for x in q.iter_mut().take(self.dim()) {
                    *x = x.rem_euclid(TAU);
                }
            }
        }
        q
    }

    /// Embedding of a sphere chart point into R³.
    pub fn embed(&self, p: &Point) -> Point {
        match self.kind {
            ManifoldKind::Sphere2 => {
                let (st, ct) = p[0].sin_cos();
                let (sp, cp) = p[1].sin_cos();
                [st * cp, st * sp, ct]
            }
            _ => *p,
        }
    }

    /// Length element between two nearby points.
    ///
    /// Flat manifolds use the periodic-minimal difference; the sphere uses the
    /// chord between the R³ embeddings.
    pub fn segment_length(&self, p: &Point, q: &Point) -> f64 {
        match self.kind {
            ManifoldKind::Sphere2 => {
                let a = self.embed(p);
                let b = self.embed(q);
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
            }
            _ => (0..self.dim())
                .map(|i| periodic_delta(p[i], q[i]).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// `q` re-expressed as the periodic image closest to `origin`.
    pub fn unwrap_near(&self, origin: &Point, q: &Point) -> Point {
        let mut out = *q;
        match self.kind {
            ManifoldKind::Sphere2 => out[1] = origin[1] + periodic_delta(origin[1], q[1]),
            _ => {
                for i in 0..self.dim() {
                    out[i] = origin[i] + periodic_delta(origin[i], q[i]);
                }
            }
        }
        out
    }
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Minimal periodic image of `b − a` for period 2π, in `[−π, π)`.
pub fn periodic_delta(a: f64, b: f64) -> f64 {
    (b - a + PI).rem_euclid(TAU) - PI
}

/// A smooth scalar field on a manifold with analytic chart derivatives.
pub trait Field: Sync {
    fn manifold(&self) -> Manifold;

    fn value(&self, p: &Point) -> f64;

    /// Chart partial derivatives `∂φ/∂xᵢ`.
    fn partials(&self, p: &Point) -> Point;

    /// Metric norm `|∇φ|`.
    fn grad_norm(&self, p: &Point) -> f64 {
        self.manifold().metric_norm(p, &self.partials(p))
    }

    /// Preferred chart axis for line quadrature of kinked integrands such as
    /// `|φ − c|`: the axis most transversal to the level sets.
    fn split_axis(&self) -> usize {
        0
    }
}
