//! Extraction of level sets `{φ = c}` as discrete hypersurfaces, with their
//! Hausdorff measure and gradient-weighted surface integrals.
//!
//! Points (circle), polylines (2-manifolds) and triangle meshes (T³) are
//! built from the grid samples by sign classification (`φ − c ≥ 0` is
//! "inside"). Every vertex starts at the linear interpolation along its grid
//! edge and is Newton-projected onto the level set along `∇φ`; `|∇φ|` is then
//! evaluated analytically at the projected vertex.

mod cubes;
pub mod export;
mod points;
pub mod project;
mod squares;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{
    build_grid, pairwise_sum_by, AxisKind, Field, Manifold, ManifoldKind, Point, QuadratureGrid,
};
use crate::roots::bracketed_newton;
use crate::{Error, Result};

pub use project::newton_project;

/// Smallest supported extraction resolution.
pub const MIN_RESOLUTION: usize = 8;

/// Measures below this are reported as exactly zero.
pub const MEASURE_SNAP: f64 = 1e-12;

/// Vertices whose residual stays above `VERTEX_TOL·(1+|c|)` after Newton are
/// re-solved by bracketing along their grid edge.
pub const VERTEX_TOL: f64 = 1e-10;

/// How saddle cells (alternating corner signs) are resolved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmbiguityPolicy {
    /// Sample the field on 2ᵈ×2ᵈ sub-grids, `d = 1..=4`, and connect the
    /// corners that the refined sign pattern connects; fall back to the
    /// bilinear decider when no depth decides.
    #[default]
    Subdivide,
    /// Sign of the bilinear interpolant at its saddle point.
    BilinearDecider,
}

impl AmbiguityPolicy {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "subdivide" => Ok(Self::Subdivide),
            "bilinear-decider" | "bilinear" => Ok(Self::BilinearDecider),
            other => Err(Error::InvalidArgument(format!("unknown ambiguity policy '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Subdivide => "subdivide",
            Self::BilinearDecider => "bilinear-decider",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub resolution: usize,
    pub newton_steps: usize,
    pub ambiguity_policy: AmbiguityPolicy,
    pub newton_tol: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            resolution: 256,
            newton_steps: 3,
            ambiguity_policy: AmbiguityPolicy::Subdivide,
            newton_tol: 1e-12,
        }
    }
}

impl ExtractionConfig {
    pub fn with_resolution(resolution: usize) -> Self {
        Self { resolution, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < MIN_RESOLUTION {
            return Err(Error::ResolutionTooSmall { got: self.resolution, min: MIN_RESOLUTION });
        }
        if !(self.newton_tol >= 0.0) {
            return Err(Error::InvalidArgument("newton_tol must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "indices", rename_all = "snake_case")]
pub enum Elements {
    /// Every vertex is an isolated point.
    Points,
    Segments(Vec<[usize; 2]>),
    Triangles(Vec<[usize; 3]>),
}

impl Elements {
    pub fn len(&self, n_vertices: usize) -> usize {
        match self {
            Elements::Points => n_vertices,
            Elements::Segments(s) => s.len(),
            Elements::Triangles(t) => t.len(),
        }
    }
}

/// Bookkeeping from one extraction.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractionStats {
    pub crossing_edges: usize,
    /// Cells (faces on T³) with alternating corner signs.
    pub ambiguous_cells: usize,
    /// Ambiguous cells that subdivision could not decide.
    pub decider_fallbacks: usize,
    /// Vertices re-solved along their edge after Newton fell short.
    pub edge_solves: usize,
    /// Colatitude of the first Gauss ring; the caps inside it are covered by
    /// triangle fans through the poles.
    pub pole_ring_colatitude: Option<f64>,
}

impl ExtractionStats {
    /// Whether any ambiguity fallback fired.
    pub fn flagged(&self) -> bool {
        self.decider_fallbacks > 0
    }
}

/// A discrete level set `{φ = c}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSetMesh {
    pub manifold: Manifold,
    pub level: f64,
    pub resolution: usize,
    pub vertices: Vec<Point>,
    pub grad_norms: Vec<f64>,
    pub elements: Elements,
    pub stats: ExtractionStats,
}

impl LevelSetMesh {
    pub fn dim(&self) -> usize {
        self.manifold.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.n_elements() == 0
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len(self.vertices.len())
    }

    /// Per-element measure, in element order.
    pub fn element_measures(&self) -> Vec<f64> {
        (0..self.n_elements()).map(|e| self.element_measure(e)).collect()
    }

    fn element_measure(&self, e: usize) -> f64 {
        match &self.elements {
            Elements::Points => 1.0,
            Elements::Segments(s) => {
                let [a, b] = s[e];
                self.manifold.segment_length(&self.vertices[a], &self.vertices[b])
            }
            Elements::Triangles(t) => {
                let [a, b, c] = t[e];
                triangle_area(&self.manifold, &self.vertices[a], &self.vertices[b], &self.vertices[c])
            }
        }
    }

    /// `Σ_e |e| · mean_{v∈e} g(v)` from per-vertex values.
    fn integrate_vertex_values(&self, g: &[f64]) -> f64 {
        match &self.elements {
            Elements::Points => pairwise_sum_by(g.len(), &|i| g[i]),
            Elements::Segments(s) => pairwise_sum_by(s.len(), &|e| {
                let [a, b] = s[e];
                self.element_measure(e) * 0.5 * (g[a] + g[b])
            }),
            Elements::Triangles(t) => pairwise_sum_by(t.len(), &|e| {
                let [a, b, c] = t[e];
                self.element_measure(e) * (g[a] + g[b] + g[c]) / 3.0
            }),
        }
    }
}

/// Area of a flat-chart triangle after unwrapping around its first vertex.
fn triangle_area(m: &Manifold, a: &Point, b: &Point, c: &Point) -> f64 {
    let b = m.unwrap_near(a, b);
    let c = m.unwrap_near(a, c);
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let w = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
    0.5 * (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt()
}

/// `H^{n−1}` of the mesh: point count, total length, or total area.
pub fn hausdorff_measure(mesh: &LevelSetMesh) -> f64 {
    let m = match &mesh.elements {
        Elements::Points => mesh.vertices.len() as f64,
        _ => pairwise_sum_by(mesh.n_elements(), &|e| mesh.element_measure(e)),
    };
    if m < MEASURE_SNAP {
        0.0
    } else {
        m
    }
}

/// `∫_{φ=c} g dS` with `g` evaluated at the vertices.
pub fn surface_integral<G>(mesh: &LevelSetMesh, g: G) -> f64
where
    G: Fn(&Point) -> f64 + Sync,
{
    let vals: Vec<f64> = mesh.vertices.par_iter().map(&g).collect();
    mesh.integrate_vertex_values(&vals)
}

/// `∫_{φ=c} f |∇φ| dS` using the stored analytic gradient norms.
pub fn weighted_gradient_integral<G>(mesh: &LevelSetMesh, f: G) -> f64
where
    G: Fn(&Point) -> f64 + Sync,
{
    let vals: Vec<f64> = mesh
        .vertices
        .par_iter()
        .zip(mesh.grad_norms.par_iter())
        .map(|(v, gn)| f(v) * gn)
        .collect();
    mesh.integrate_vertex_values(&vals)
}

/// `∫_{φ=c} |∇φ| dS`.
pub fn gradient_integral(mesh: &LevelSetMesh) -> f64 {
    mesh.integrate_vertex_values(&mesh.grad_norms)
}

/// Extracts `{field = c}` in one shot.
pub fn extract<F: Field + ?Sized>(field: &F, c: f64, config: &ExtractionConfig) -> Result<LevelSetMesh> {
    Extractor::new(field, config)?.extract(c)
}

/// Samples a field once and extracts any number of its level sets.
pub struct Extractor<'a, F: Field + ?Sized> {
    field: &'a F,
    grid: QuadratureGrid,
    samples: Vec<f64>,
    /// Field values at the north and south pole (sphere only).
    poles: [f64; 2],
    config: ExtractionConfig,
    max_step: f64,
}

impl<'a, F: Field + ?Sized> Extractor<'a, F> {
    pub fn new(field: &'a F, config: &ExtractionConfig) -> Result<Self> {
        config.validate()?;
        let grid = build_grid(field.manifold(), config.resolution)?;
        let samples = grid.sample_field(field);
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(grid.node(i)));
        }
        let poles = if grid.manifold() == Manifold::sphere() {
            let n = field.value(&[0.0; 3]);
            let s = field.value(&[std::f64::consts::PI, 0.0, 0.0]);
            if !n.is_finite() || !s.is_finite() {
                return Err(Error::NonFinite([0.0; 3]));
            }
            [n, s]
        } else {
            [0.0; 2]
        };
        let max_step = grid.axes().iter().map(|a| a.max_spacing()).fold(0.0, f64::max);
        Ok(Self { field, grid, samples, poles, config: *config, max_step })
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn field(&self) -> &'a F {
        self.field
    }

    pub fn extract(&self, c: f64) -> Result<LevelSetMesh> {
        if !c.is_finite() {
            return Err(Error::InvalidArgument(format!("level {c} is not finite")));
        }
        let manifold = self.grid.manifold();
        let (vertices, elements, stats) = match manifold.kind() {
            ManifoldKind::Circle => {
                let (v, stats) = points::extract(self, c);
                (v, Elements::Points, stats)
            }
            ManifoldKind::FlatTorus { dim: 3 } => {
                let (v, t, stats) = cubes::extract(self, c);
                (v, Elements::Triangles(t), stats)
            }
            _ => {
                let (v, s, stats) = squares::extract(self, c);
                (v, Elements::Segments(s), stats)
            }
        };
        let grad_norms: Vec<f64> = vertices.par_iter().map(|p| self.field.grad_norm(p)).collect();
        Ok(LevelSetMesh {
            manifold,
            level: c,
            resolution: self.config.resolution,
            vertices,
            grad_norms,
            elements,
            stats,
        })
    }

    fn inside(&self, v: f64, c: f64) -> bool {
        v - c >= 0.0
    }

    fn is_sphere(&self) -> bool {
        self.grid.manifold() == Manifold::sphere()
    }

    /// Number of edge directions per node (axes, plus the pole spokes on the sphere).
    fn edge_axes(&self) -> usize {
        if self.is_sphere() {
            3
        } else {
            self.grid.axes().len()
        }
    }

    /// Multi-index of the node one step forward along `axis`, if it exists.
    fn step(&self, m: &[usize; 3], axis: usize) -> Option<[usize; 3]> {
        let ax = &self.grid.axes()[axis];
        let mut out = *m;
        if m[axis] + 1 < ax.len() {
            out[axis] += 1;
        } else if ax.is_periodic() {
            out[axis] = 0;
        } else {
            return None;
        }
        Some(out)
    }

    /// Chart coordinates of the node `m`, plus the unwrapped coordinate of its
    /// forward neighbour along `axis`.
    fn forward_coordinate(&self, m: &[usize; 3], axis: usize) -> f64 {
        let ax = &self.grid.axes()[axis];
        if m[axis] + 1 < ax.len() {
            ax.nodes[m[axis] + 1]
        } else {
            ax.nodes[0] + ax.domain().1
        }
    }

    fn node_point(&self, m: &[usize; 3]) -> Point {
        let mut p = [0.0; 3];
        for (a, ax) in self.grid.axes().iter().enumerate() {
            p[a] = ax.nodes[m[a]];
        }
        p
    }

    /// Endpoints and sampled values of edge `id = 3·node + dir`, oriented from
    /// the node forward (pole spokes run from the north pole or to the south pole).
    fn edge(&self, id: usize) -> Option<(Point, Point, f64, f64)> {
        let idx = id / 3;
        let dir = id % 3;
        let m = self.grid.unravel(idx);
        let p = self.node_point(&m);
        if dir < self.grid.axes().len() {
            let n = self.step(&m, dir)?;
            let mut q = p;
            q[dir] = self.forward_coordinate(&m, dir);
            return Some((p, q, self.samples[idx], self.samples[self.grid.ravel(&n)]));
        }
        if !self.is_sphere() {
            return None;
        }
        let rows = self.grid.axes()[0].len();
        if m[0] == 0 {
            Some(([0.0, p[1], 0.0], p, self.poles[0], self.samples[idx]))
        } else if m[0] + 1 == rows {
            Some((p, [std::f64::consts::PI, p[1], 0.0], self.samples[idx], self.poles[1]))
        } else {
            None
        }
    }

    /// Sorted ids of all edges whose endpoints classify differently.
    fn crossing_edges(&self, c: f64) -> Vec<usize> {
        let dirs = self.edge_axes();
        (0..self.grid.len())
            .into_par_iter()
            .flat_map_iter(|idx| {
                (0..dirs).filter_map(move |d| {
                    let id = 3 * idx + d;
                    let (_, _, a, b) = self.edge(id)?;
                    (self.inside(a, c) != self.inside(b, c)).then_some(id)
                })
            })
            .collect()
    }

    /// Projected vertex for each crossing edge, plus the count of edge re-solves.
    fn edge_vertices(&self, edges: &[usize], c: f64) -> (Vec<Point>, usize) {
        let out: Vec<(Point, bool)> = edges
            .par_iter()
            .map(|&id| {
                let (p, q, a, b) = self.edge(id).expect("crossing edge exists");
                self.vertex_on_edge(&p, &q, a, b, c)
            })
            .collect();
        let solves = out.iter().filter(|v| v.1).count();
        (out.into_iter().map(|v| v.0).collect(), solves)
    }

    fn vertex_on_edge(&self, p: &Point, q: &Point, a: f64, b: f64, c: f64) -> (Point, bool) {
        let t = if a == b { 0.5 } else { ((c - a) / (b - a)).clamp(0.0, 1.0) };
        let mut x = [0.0; 3];
        for i in 0..3 {
            x[i] = p[i] + t * (q[i] - p[i]);
        }
        let (y, r) = newton_project(
            self.field,
            &x,
            c,
            self.config.newton_steps,
            self.config.newton_tol,
            self.max_step,
        );
        if r < VERTEX_TOL * (1.0 + c.abs()) {
            return (self.clamp(&y), false);
        }
        // bracketed solve along the edge
        let d = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
        let at = |s: f64| [p[0] + s * d[0], p[1] + s * d[1], p[2] + s * d[2]];
        let s = bracketed_newton(
            |s| {
                let z = at(s);
                let g = self.field.partials(&z);
                (self.field.value(&z) - c, g[0] * d[0] + g[1] * d[1] + g[2] * d[2])
            },
            0.0,
            1.0,
            a - c,
            b - c,
            1e-15,
        );
        let z = at(s);
        let rz = (self.field.value(&z) - c).abs();
        if rz < r {
            (self.clamp(&z), true)
        } else {
            (self.clamp(&y), true)
        }
    }

    fn clamp(&self, p: &Point) -> Point {
        let mut q = self.grid.manifold().wrap(p);
        if self.is_sphere() {
            q[0] = q[0].clamp(0.0, std::f64::consts::PI);
        }
        q
    }

    fn pole_ring(&self) -> Option<f64> {
        let ax = &self.grid.axes()[0];
        (ax.kind == AxisKind::Colatitude).then(|| ax.nodes[0])
    }
}

/// Index of `id` in the sorted crossing-edge list.
fn vertex_index(edges: &[usize], id: usize) -> usize {
    edges.binary_search(&id).expect("segment endpoint on a crossing edge")
}

#[cfg(test)]
mod tests;
