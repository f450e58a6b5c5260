//! Level sets on the circle: isolated points.

use rayon::prelude::*;

use super::{ExtractionStats, Extractor};
use crate::geometry::{Field, Point};
use crate::roots::bracketed_newton;

/// Brackets sign changes between consecutive nodes and refines each root.
pub(super) fn extract<F: Field + ?Sized>(ex: &Extractor<'_, F>, c: f64) -> (Vec<Point>, ExtractionStats) {
    let edges = ex.crossing_edges(c);
    let field = ex.field;
    let pts: Vec<Point> = edges
        .par_iter()
        .map(|&id| {
            let (p, q, a, b) = ex.edge(id).expect("crossing edge exists");
            let x = bracketed_newton(
                |x| {
                    let z = [x, 0.0, 0.0];
                    (field.value(&z) - c, field.partials(&z)[0])
                },
                p[0],
                q[0],
                a - c,
                b - c,
                1e-15,
            );
            ex.clamp(&[x, 0.0, 0.0])
        })
        .collect();
    let stats = ExtractionStats { crossing_edges: edges.len(), ..Default::default() };
    (pts, stats)
}
