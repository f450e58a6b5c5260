//! Mesh serialization.
//!
//! Text format, one element per line, chart coordinates with the analytic
//! `|∇φ|` per vertex trailing:
//!
//! ```text
//! # level-set dim=<d> c=<c>
//! P x gn                                  (circle)
//! S x1 y1 x2 y2 gn1 gn2                   (2-manifolds)
//! T x1 y1 z1 x2 y2 z2 x3 y3 z3 gn1 gn2 gn3 (T³)
//! ```
//!
//! Numbers are written with 17 significant digits. Later vertices of an
//! element are unwrapped next to its first vertex so elements stay local.

use std::fmt::Write as _;

use serde::Serialize;

use super::{hausdorff_measure, Elements, ExtractionStats, LevelSetMesh};
use crate::geometry::Point;

fn num(out: &mut String, x: f64) {
    let _ = write!(out, " {x:.16e}");
}

pub fn to_text(mesh: &LevelSetMesh) -> String {
    let d = mesh.dim();
    let mut out = format!("# level-set dim={d} c={:.16e}\n", mesh.level);
    let local = |first: &Point, v: &Point| mesh.manifold.unwrap_near(first, v);
    match &mesh.elements {
        Elements::Points => {
            for (v, g) in mesh.vertices.iter().zip(&mesh.grad_norms) {
                out.push('P');
                num(&mut out, v[0]);
                num(&mut out, *g);
                out.push('\n');
            }
        }
        Elements::Segments(segs) => {
            for s in segs {
                let a = mesh.vertices[s[0]];
                let b = local(&a, &mesh.vertices[s[1]]);
                out.push('S');
                for x in [a[0], a[1], b[0], b[1], mesh.grad_norms[s[0]], mesh.grad_norms[s[1]]] {
                    num(&mut out, x);
                }
                out.push('\n');
            }
        }
        Elements::Triangles(tris) => {
            for t in tris {
                let a = mesh.vertices[t[0]];
                out.push('T');
                for &i in t {
                    let v = local(&a, &mesh.vertices[i]);
                    for x in &v[..3] {
                        num(&mut out, *x);
                    }
                }
                for &i in t {
                    num(&mut out, mesh.grad_norms[i]);
                }
                out.push('\n');
            }
        }
    }
    out
}

#[derive(Serialize)]
struct MeshDocument<'a> {
    manifold: &'a str,
    dim: usize,
    level: f64,
    resolution: usize,
    measure: f64,
    vertices: Vec<&'a [f64]>,
    grad_norms: &'a [f64],
    elements: &'a Elements,
    stats: &'a ExtractionStats,
}

pub fn to_json(mesh: &LevelSetMesh) -> serde_json::Value {
    let d = mesh.dim();
    let doc = MeshDocument {
        manifold: mesh.manifold.name(),
        dim: d,
        level: mesh.level,
        resolution: mesh.resolution,
        measure: hausdorff_measure(mesh),
        vertices: mesh.vertices.iter().map(|v| &v[..d]).collect(),
        grad_norms: &mesh.grad_norms,
        elements: &mesh.elements,
        stats: &mesh.stats,
    };
    serde_json::to_value(doc).expect("mesh serializes")
}
