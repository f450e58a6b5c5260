use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use super::{Field, Manifold, ManifoldKind, Point};
use crate::{Error, Result};

/// Below this many terms a block is summed sequentially.
const PAIRWISE_BLOCK: usize = 64;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let half = n.div_ceil(2);
    let pairs: Vec<(f64, f64)> = (0..half)
        .into_par_iter()
        .map(|i| {
            // i-th largest root
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1e-3) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect();
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for (i, &(x, w)) in pairs.iter().enumerate() {
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let (p, pm1) = if n == 0 { (1.0, 0.0) } else { (p1, p0) };
    let d = n as f64 * (x * p - pm1) / (x * x - 1.0);
    (p, d)
}

/// Deterministic pairwise summation of `len` terms produced by `term`.
///
/// The reduction tree depends only on `len`, so the result is independent of
/// the number of worker threads.
pub fn pairwise_sum_by<F>(len: usize, term: &F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    fn rec<F: Fn(usize) -> f64 + Sync>(lo: usize, hi: usize, term: &F) -> f64 {
        let n = hi - lo;
        if n <= PAIRWISE_BLOCK {
            let mut s = 0.0;
            for i in lo..hi {
                s += term(i);
            }
            return s;
        }
        let mid = lo + n / 2;
        if n > 1 << 14 {
            let (a, b) = rayon::join(|| rec(lo, mid, term), || rec(mid, hi, term));
            a + b
        } else {
            rec(lo, mid, term) + rec(mid, hi, term)
        }
    }
    rec(0, len, term)
}

pub fn pairwise_sum(values: &[f64]) -> f64 {
    pairwise_sum_by(values.len(), &|i| values[i])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisKind {
    /// Uniform nodes on `[0, 2π)`, wrapping.
    Periodic,
    /// Sphere colatitude: Gauss–Legendre nodes in `cos θ`, ascending in `θ`.
    /// Weights are with respect to `d(cos θ)`.
    Colatitude,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub kind: AxisKind,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Axis {
    fn periodic(n: usize) -> Self {
        let h = TAU / n as f64;
        Self {
            kind: AxisKind::Periodic,
            nodes: (0..n).map(|j| j as f64 * h).collect(),
            weights: vec![h; n],
        }
    }

    fn colatitude(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        // θ ascending means cos θ descending
        Self {
            kind: AxisKind::Colatitude,
            nodes: x.iter().rev().map(|c| c.acos()).collect(),
            weights: w.into_iter().rev().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_periodic(&self) -> bool {
        self.kind == AxisKind::Periodic
    }

    /// Chart extent of the axis.
    pub fn domain(&self) -> (f64, f64) {
        match self.kind {
            AxisKind::Periodic => (0.0, TAU),
            AxisKind::Colatitude => (0.0, PI),
        }
    }

    /// Largest gap between consecutive nodes, including the wrap or the poles.
    pub fn max_spacing(&self) -> f64 {
        let (lo, hi) = self.domain();
        let mut gap = match self.kind {
            AxisKind::Periodic => hi - self.nodes[self.len() - 1] + self.nodes[0] - lo,
            AxisKind::Colatitude => (self.nodes[0] - lo).max(hi - self.nodes[self.len() - 1]),
        };
        for w in self.nodes.windows(2) {
            gap = gap.max(w[1] - w[0]);
        }
        gap
    }
}

/// Tensor-product volume quadrature on a manifold chart.
///
/// Nodes are enumerated in row-major order (axis 0 slowest). Flat manifolds
/// use the uniform trapezoid rule; the sphere uses Gauss–Legendre nodes in
/// `cos θ` times `2·resolution` uniform longitudes, so no node sits on a pole.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    manifold: Manifold,
    axes: Vec<Axis>,
    resolution: usize,
}

pub fn build_grid(manifold: Manifold, resolution: usize) -> Result<QuadratureGrid> {
    if resolution < 4 {
        return Err(Error::ResolutionTooSmall { got: resolution, min: 4 });
    }
    let axes = match manifold.kind() {
        ManifoldKind::Circle => vec![Axis::periodic(resolution)],
        ManifoldKind::FlatTorus { dim } => (0..dim).map(|_| Axis::periodic(resolution)).collect(),
        ManifoldKind::Sphere2 => vec![Axis::colatitude(resolution), Axis::periodic(2 * resolution)],
    };
    Ok(QuadratureGrid { manifold, axes, resolution })
}

/// Sphere grid with a single longitude of weight `2π`: exact reduction of
/// the volume quadrature for integrands that do not depend on longitude.
pub fn build_axisymmetric_grid(resolution: usize) -> Result<QuadratureGrid> {
    if resolution < 4 {
        return Err(Error::ResolutionTooSmall { got: resolution, min: 4 });
    }
    let longitude = Axis { kind: AxisKind::Periodic, nodes: vec![0.0], weights: vec![TAU] };
    Ok(QuadratureGrid {
        manifold: Manifold::sphere(),
        axes: vec![Axis::colatitude(resolution), longitude],
        resolution,
    })
}

impl QuadratureGrid {
    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::len).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Axis::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Multi-index of a flat node index.
    pub fn unravel(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for (a, axis) in self.axes.iter().enumerate().rev() {
            out[a] = idx % axis.len();
            idx /= axis.len();
        }
        out
    }

    pub fn ravel(&self, multi: &[usize; 3]) -> usize {
        self.axes
            .iter()
            .enumerate()
            .fold(0, |acc, (a, axis)| acc * axis.len() + multi[a])
    }

    pub fn node(&self, idx: usize) -> Point {
        let m = self.unravel(idx);
        let mut p = [0.0; 3];
        for (a, axis) in self.axes.iter().enumerate() {
            p[a] = axis.nodes[m[a]];
        }
        p
    }

    pub fn weight(&self, idx: usize) -> f64 {
        let m = self.unravel(idx);
        self.axes.iter().enumerate().map(|(a, axis)| axis.weights[m[a]]).product()
    }

    pub fn nodes(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(|i| self.node(i))
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    /// Evaluates `f` at every node, in node order.
    pub fn sample<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(&Point) -> f64 + Sync,
    {
        (0..self.len()).into_par_iter().map(|i| f(&self.node(i))).collect()
    }

    pub fn sample_field<F: Field + ?Sized>(&self, field: &F) -> Vec<f64> {
        self.sample(|p| field.value(p))
    }

    /// Weighted sum of per-node samples.
    pub fn integrate(&self, samples: &[f64]) -> Result<f64> {
        integrate(self, samples)
    }

    /// Integrates a function evaluated on the fly at the nodes.
    pub fn integrate_fn<F>(&self, f: F) -> f64
    where
        F: Fn(&Point) -> f64 + Sync,
    {
        pairwise_sum_by(self.len(), &|i| self.weight(i) * f(&self.node(i)))
    }
}

/// `∫_M s dV` from per-node samples, summed pairwise in node order.
pub fn integrate(grid: &QuadratureGrid, samples: &[f64]) -> Result<f64> {
    if samples.len() != grid.len() {
        return Err(Error::LengthMismatch { got: samples.len(), expected: grid.len() });
    }
    Ok(pairwise_sum_by(samples.len(), &|i| grid.weight(i) * samples[i]))
}
