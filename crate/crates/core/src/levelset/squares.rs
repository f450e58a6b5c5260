//! Marching squares on 2-dimensional charts, and the face rule shared with
//! marching cubes.
//!
//! A face is spanned by axes `a < b` from its lowest corner `m`. Corners and
//! edges are enumerated around the face:
//!
//! ```text
//!   c01 ──e2── c11
//!    │          │
//!   e3         e1        (a → right, b → up)
//!    │          │
//!   c00 ──e0── c10
//! ```
//!
//! Everything a face decides depends only on the face itself, so the two
//! cubes sharing a face agree on its segments.

use rayon::prelude::*;

use super::{vertex_index, ExtractionStats, Extractor};
use crate::geometry::{Field, Point};
use crate::levelset::AmbiguityPolicy;

/// Maximum subdivision depth for saddle cells.
pub(super) const MAX_DEPTH: u32 = 4;

#[derive(Clone, Copy, Debug, Default)]
pub(super) struct FaceCounts {
    pub ambiguous: usize,
    pub fallbacks: usize,
}

/// Segments of one face as pairs of edge ids; `len` of them are valid.
#[derive(Clone, Copy, Debug, Default)]
pub(super) struct FaceSegments {
    pub segs: [[usize; 2]; 2],
    pub len: usize,
}

impl FaceSegments {
    fn push(&mut self, a: usize, b: usize) {
        self.segs[self.len] = [a, b];
        self.len += 1;
    }

    pub fn iter(&self) -> impl Iterator<Item = [usize; 2]> + '_ {
        self.segs[..self.len].iter().copied()
    }
}

/// Segments of the face at `m` spanned by axes `a`, `b`, or `None` if the
/// face leaves the chart (colatitude boundary).
pub(super) fn face_segments<F: Field + ?Sized>(
    ex: &Extractor<'_, F>,
    m: &[usize; 3],
    a: usize,
    b: usize,
    c: f64,
    counts: &mut FaceCounts,
) -> Option<FaceSegments> {
    let grid = &ex.grid;
    let n10 = ex.step(m, a)?;
    let n01 = ex.step(m, b)?;
    let n11 = ex.step(&n10, b)?;
    let i00 = grid.ravel(m);
    let i10 = grid.ravel(&n10);
    let i01 = grid.ravel(&n01);
    let i11 = grid.ravel(&n11);
    let v = [ex.samples[i00], ex.samples[i10], ex.samples[i11], ex.samples[i01]];
    let inside = v.map(|x| ex.inside(x, c));
    let e = [3 * i00 + a, 3 * i10 + b, 3 * i01 + a, 3 * i00 + b];

    let mut out = FaceSegments::default();
    let crossing: Vec<usize> = (0..4).filter(|&k| inside[k] != inside[(k + 1) % 4]).map(|k| e[k]).collect();
    match crossing.len() {
        0 => {}
        2 => out.push(crossing[0], crossing[1]),
        _ => {
            counts.ambiguous += 1;
            // pattern A: c00 and c11 share a class
            let pattern_a = inside[0];
            let connected = match ex.config.ambiguity_policy {
                AmbiguityPolicy::BilinearDecider => bilinear_decider(&v, c),
                AmbiguityPolicy::Subdivide => match subdivide(ex, m, a, b, c, &inside) {
                    Some(d) => d,
                    None => {
                        counts.fallbacks += 1;
                        bilinear_decider(&v, c)
                    }
                },
            };
            // cut off c10 and c01, or c00 and c11
            if pattern_a == connected {
                out.push(e[0], e[1]);
                out.push(e[2], e[3]);
            } else {
                out.push(e[0], e[3]);
                out.push(e[1], e[2]);
            }
        }
    }
    Some(out)
}

/// Whether the inside corners are joined through the saddle, judged by the
/// sign of the bilinear interpolant at its critical point.
/// `v` is in cycle order `c00, c10, c11, c01`.
pub(super) fn bilinear_decider(v: &[f64; 4], c: f64) -> bool {
    let (v00, v10, v11, v01) = (v[0] - c, v[1] - c, v[2] - c, v[3] - c);
    let den = v00 + v11 - v10 - v01;
    let s = if den == 0.0 { 0.25 * (v00 + v10 + v11 + v01) } else { (v00 * v11 - v10 * v01) / den };
    s >= 0.0
}

/// Decides a saddle face from refined samples of the analytic field.
/// Returns whether the inside corners are connected, or `None` if no depth
/// up to [`MAX_DEPTH`] separates the two classes.
fn subdivide<F: Field + ?Sized>(
    ex: &Extractor<'_, F>,
    m: &[usize; 3],
    a: usize,
    b: usize,
    c: f64,
    corners: &[bool; 4],
) -> Option<bool> {
    let base = ex.node_point(m);
    let da = ex.forward_coordinate(m, a) - base[a];
    let db = ex.forward_coordinate(m, b) - base[b];
    for depth in 1..=MAX_DEPTH {
        let n = 1usize << depth;
        let w = n + 1;
        let mut cls = vec![false; w * w];
        for s in 0..=n {
            for t in 0..=n {
                let mut p: Point = base;
                p[a] += da * s as f64 / n as f64;
                p[b] += db * t as f64 / n as f64;
                cls[s * w + t] = ex.inside(ex.field.value(&p), c);
            }
        }
        // the corners keep their grid classification
        cls[0] = corners[0];
        cls[n * w] = corners[1];
        cls[n * w + n] = corners[2];
        cls[n] = corners[3];
        let (ia, ib, oa, ob) = if corners[0] {
            ((0, 0), (n, n), (n, 0), (0, n))
        } else {
            ((n, 0), (0, n), (0, 0), (n, n))
        };
        if flood_connects(&cls, w, ia, ib, true) {
            return Some(true);
        }
        if flood_connects(&cls, w, oa, ob, false) {
            return Some(false);
        }
    }
    None
}

/// 4-connected flood fill over cells of class `class`.
fn flood_connects(cls: &[bool], w: usize, from: (usize, usize), to: (usize, usize), class: bool) -> bool {
    let mut seen = vec![false; cls.len()];
    let mut stack = vec![from];
    seen[from.0 * w + from.1] = true;
    while let Some((s, t)) = stack.pop() {
        if (s, t) == to {
            return true;
        }
        let mut visit = |s2: usize, t2: usize| {
            let k = s2 * w + t2;
            if !seen[k] && cls[k] == class {
                seen[k] = true;
                stack.push((s2, t2));
            }
        };
        if s > 0 {
            visit(s - 1, t);
        }
        if s + 1 < w {
            visit(s + 1, t);
        }
        if t > 0 {
            visit(s, t - 1);
        }
        if t + 1 < w {
            visit(s, t + 1);
        }
    }
    false
}

struct CellOut {
    segs: FaceSegments,
    counts: FaceCounts,
}

/// Marching squares over the whole chart; on the sphere the caps beyond the
/// first and last Gauss rings are covered by triangle fans through the poles.
pub(super) fn extract<F: Field + ?Sized>(
    ex: &Extractor<'_, F>,
    c: f64,
) -> (Vec<Point>, Vec<[usize; 2]>, ExtractionStats) {
    let edges = ex.crossing_edges(c);
    let (vertices, edge_solves) = ex.edge_vertices(&edges, c);
    let grid = &ex.grid;
    let shape = grid.shape();
    let (rows, cols) = (shape[0], shape[1]);
    let cell_rows = if grid.axes()[0].is_periodic() { rows } else { rows - 1 };

    let mut segments: Vec<[usize; 2]> = Vec::new();
    let mut counts = FaceCounts::default();
    let map = |s: [usize; 2]| [vertex_index(&edges, s[0]), vertex_index(&edges, s[1])];

    if ex.is_sphere() {
        segments.extend(pole_fan(ex, 0, c).into_iter().map(map));
    }
    let cells: Vec<CellOut> = (0..cell_rows * cols)
        .into_par_iter()
        .filter_map(|cell| {
            let m = [cell / cols, cell % cols, 0];
            let mut counts = FaceCounts::default();
            let segs = face_segments(ex, &m, 0, 1, c, &mut counts)?;
            (segs.len > 0).then_some(CellOut { segs, counts })
        })
        .collect();
    for cell in &cells {
        segments.extend(cell.segs.iter().map(map));
        counts.ambiguous += cell.counts.ambiguous;
        counts.fallbacks += cell.counts.fallbacks;
    }
    if ex.is_sphere() {
        segments.extend(pole_fan(ex, rows - 1, c).into_iter().map(map));
    }

    let stats = ExtractionStats {
        crossing_edges: edges.len(),
        ambiguous_cells: counts.ambiguous,
        decider_fallbacks: counts.fallbacks,
        edge_solves,
        pole_ring_colatitude: ex.pole_ring(),
    };
    (vertices, segments, stats)
}

/// Marching triangles on the fan joining a pole to its nearest Gauss ring.
fn pole_fan<F: Field + ?Sized>(ex: &Extractor<'_, F>, row: usize, c: f64) -> Vec<[usize; 2]> {
    let grid = &ex.grid;
    let cols = grid.shape()[1];
    let pole = if row == 0 { ex.poles[0] } else { ex.poles[1] };
    let ip = ex.inside(pole, c);
    let mut out = Vec::new();
    for j in 0..cols {
        let ia = grid.ravel(&[row, j, 0]);
        let ib = grid.ravel(&[row, (j + 1) % cols, 0]);
        let cls = [ip, ex.inside(ex.samples[ia], c), ex.inside(ex.samples[ib], c)];
        // pole–a, a–b, b–pole
        let e = [3 * ia + 2, 3 * ia + 1, 3 * ib + 2];
        let crossing: Vec<usize> = (0..3).filter(|&k| cls[k] != cls[(k + 1) % 3]).map(|k| e[k]).collect();
        if crossing.len() == 2 {
            out.push([crossing[0], crossing[1]]);
        }
    }
    out
}
