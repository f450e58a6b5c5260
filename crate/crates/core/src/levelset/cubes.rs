//! Marching cubes on T³, built procedurally from the face rule.
//!
//! Each cube's six faces contribute segments between crossing edges; every
//! crossing edge lies on exactly two faces, so the segments close into loops.
//! Each loop is fan-triangulated from its lowest edge id. Because faces are
//! resolved independently of the cube they belong to, neighbouring cubes
//! produce matching boundaries and the surface is closed.

use rayon::prelude::*;

use super::squares::{face_segments, FaceCounts};
use super::{vertex_index, ExtractionStats, Extractor};
use crate::geometry::{Field, Point};

pub(super) fn extract<F: Field + ?Sized>(
    ex: &Extractor<'_, F>,
    c: f64,
) -> (Vec<Point>, Vec<[usize; 3]>, ExtractionStats) {
    let edges = ex.crossing_edges(c);
    let (vertices, edge_solves) = ex.edge_vertices(&edges, c);
    let grid = &ex.grid;

    let cells: Vec<(Vec<[usize; 3]>, FaceCounts)> = (0..grid.len())
        .into_par_iter()
        .filter_map(|idx| {
            let m = grid.unravel(idx);
            if !mixed(ex, &m, c) {
                return None;
            }
            let mut counts = FaceCounts::default();
            let mut ignored = FaceCounts::default();
            let mut segs: Vec<[usize; 2]> = Vec::with_capacity(12);
            for (a, b, normal) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
                let lower = face_segments(ex, &m, a, b, c, &mut counts).expect("periodic face");
                segs.extend(lower.iter());
                let top = ex.step(&m, normal).expect("periodic axis");
                let upper = face_segments(ex, &top, a, b, c, &mut ignored).expect("periodic face");
                segs.extend(upper.iter());
            }
            let tris = triangulate_loops(&segs);
            Some((tris, counts))
        })
        .collect();

    let mut triangles = Vec::new();
    let mut counts = FaceCounts::default();
    for (tris, cc) in &cells {
        for t in tris {
            triangles.push(t.map(|id| vertex_index(&edges, id)));
        }
        counts.ambiguous += cc.ambiguous;
        counts.fallbacks += cc.fallbacks;
    }
    let stats = ExtractionStats {
        crossing_edges: edges.len(),
        ambiguous_cells: counts.ambiguous,
        decider_fallbacks: counts.fallbacks,
        edge_solves,
        pole_ring_colatitude: None,
    };
    (vertices, triangles, stats)
}

fn mixed<F: Field + ?Sized>(ex: &Extractor<'_, F>, m: &[usize; 3], c: f64) -> bool {
    let mut seen = [false; 2];
    for corner in 0..8 {
        let mut n = *m;
        for axis in 0..3 {
            if corner >> axis & 1 == 1 {
                n = ex.step(&n, axis).expect("periodic axis");
            }
        }
        seen[ex.inside(ex.samples[ex.grid.ravel(&n)], c) as usize] = true;
    }
    seen[0] && seen[1]
}

/// Chains edge-id segments into closed loops and fans each loop from its
/// lowest id.
pub(super) fn triangulate_loops(segs: &[[usize; 2]]) -> Vec<[usize; 3]> {
    let mut ids: Vec<usize> = segs.iter().flat_map(|s| s.iter().copied()).collect();
    ids.sort_unstable();
    ids.dedup();
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::with_capacity(2); ids.len()];
    let pos = |id: usize| ids.binary_search(&id).expect("known id");
    for s in segs {
        let (a, b) = (pos(s[0]), pos(s[1]));
        nbrs[a].push(b);
        nbrs[b].push(a);
    }
    let mut visited = vec![false; ids.len()];
    let mut out = Vec::new();
    for start in 0..ids.len() {
        if visited[start] {
            continue;
        }
        let mut cycle = vec![start];
        visited[start] = true;
        let mut prev = start;
        let mut cur = *nbrs[start].iter().min().expect("loop vertex has neighbours");
        while !visited[cur] {
            visited[cur] = true;
            cycle.push(cur);
            let next = nbrs[cur].iter().copied().find(|&n| n != prev).unwrap_or(prev);
            prev = cur;
            cur = next;
        }
        for k in 1..cycle.len().saturating_sub(1) {
            out.push([ids[cycle[0]], ids[cycle[k]], ids[cycle[k + 1]]]);
        }
    }
    out
}
