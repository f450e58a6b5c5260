//! Line quadrature for integrands with kinks or jumps on a level set.
//!
//! The volume is swept by lines parallel to one chart axis. Along each line
//! the crossings of `{φ = c}` (plus any caller-supplied break points) are
//! located by sign-change bracketing on the grid nodes and refined by
//! bracketed Newton. Between consecutive breaks the integrand is smooth and is
//! integrated with composite Gauss–Legendre; across lines the grid's own
//! transverse weights are used. Integrands like `|φ − c|` or `sgn(φ − c)` are
//! thus integrated to near round-off whenever the transverse dependence is
//! smooth.

use rayon::prelude::*;

use super::quadrature::{gauss_legendre, pairwise_sum_by, AxisKind};
use super::{Field, Point, QuadratureGrid};
use crate::roots::bracketed_newton;

/// Piecewise rule used between break points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitRule {
    /// Gauss–Legendre nodes per sub-piece.
    pub order: usize,
    /// Sub-pieces are at most `refine × (largest node gap)` long.
    pub refine: f64,
}

impl Default for SplitRule {
    fn default() -> Self {
        Self { order: 8, refine: 1.0 }
    }
}

/// Additional break points along a grid line (coordinates along the axis).
pub trait LineBreaks: Sync {
    fn breaks(&self, axis: usize, base: &Point) -> Vec<f64>;
}

impl LineBreaks for () {
    fn breaks(&self, _axis: usize, _base: &Point) -> Vec<f64> {
        Vec::new()
    }
}

/// Integrates a `width`-component integrand over the manifold, splitting every
/// line along `axis` at the crossings of `{field = level}`.
///
/// `integrand(p, out)` must overwrite `out` with the integrand values at `p`.
#[allow(clippy::too_many_arguments)]
pub fn integrate_split<F, I>(
    grid: &QuadratureGrid,
    axis: usize,
    field: &F,
    level: f64,
    breaks: &dyn LineBreaks,
    rule: &SplitRule,
    width: usize,
    integrand: I,
) -> Vec<f64>
where
    F: Field + ?Sized,
    I: Fn(&Point, &mut [f64]) + Sync,
{
    let axes = grid.axes();
    assert!(axis < axes.len(), "split axis out of range");
    let along = &axes[axis];
    let others: Vec<usize> = (0..axes.len()).filter(|&a| a != axis).collect();
    let n_lines: usize = others.iter().map(|&a| axes[a].len()).product();
    let (gl_x, gl_w) = gauss_legendre(rule.order);
    let (lo, hi) = along.domain();
    let max_piece = rule.refine * along.max_spacing();

    // bracketing positions along the line
    let mut stations: Vec<f64> = Vec::with_capacity(along.len() + 2);
    if along.kind == AxisKind::Colatitude {
        stations.push(lo);
    }
    stations.extend_from_slice(&along.nodes);
    if along.kind == AxisKind::Colatitude {
        stations.push(hi);
    }

    let per_line: Vec<Vec<f64>> = (0..n_lines)
        .into_par_iter()
        .map(|line| {
            let mut base = [0.0; 3];
            let mut tw = 1.0;
            let mut rem = line;
            for &a in others.iter().rev() {
                let i = rem % axes[a].len();
                rem /= axes[a].len();
                base[a] = axes[a].nodes[i];
                tw *= axes[a].weights[i];
            }
            let at = |t: f64| {
                let mut p = base;
                p[axis] = t;
                p
            };
            let s: Vec<f64> = stations.iter().map(|&t| field.value(&at(t)) - level).collect();

            let mut cuts: Vec<f64> = Vec::new();
            let n = stations.len();
            let pairs = if along.is_periodic() { n } else { n - 1 };
            for j in 0..pairs {
                let k = (j + 1) % n;
                let (a, b) = (stations[j], if k == 0 { stations[0] + hi } else { stations[k] });
                let (sa, sb) = (s[j], s[k]);
                if (sa >= 0.0) != (sb >= 0.0) {
                    let r = bracketed_newton(
                        |t| {
                            let p = at(t);
                            (field.value(&p) - level, field.partials(&p)[axis])
                        },
                        a,
                        b,
                        sa,
                        sb,
                        1e-15,
                    );
                    cuts.push(r);
                }
            }
            for b in breaks.breaks(axis, &base) {
                if along.is_periodic() {
                    cuts.push(b.rem_euclid(hi));
                } else if b > lo && b < hi {
                    cuts.push(b);
                }
            }
            if along.is_periodic() {
                for c in cuts.iter_mut() {
                    *c = c.rem_euclid(hi);
                }
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

            let mut pieces: Vec<(f64, f64)> = Vec::with_capacity(cuts.len() + 1);
            if along.is_periodic() {
                if cuts.is_empty() {
                    pieces.push((lo, hi));
                } else {
                    for w in cuts.windows(2) {
                        pieces.push((w[0], w[1]));
                    }
                    pieces.push((cuts[cuts.len() - 1], cuts[0] + hi));
                }
            } else {
                let mut prev = lo;
                for &c in &cuts {
                    pieces.push((prev, c));
                    prev = c;
                }
                pieces.push((prev, hi));
            }

            let mut acc = vec![0.0; width];
            let mut out = vec![0.0; width];
            for (a, b) in pieces {
                let len = b - a;
                if len <= 0.0 {
                    continue;
                }
                let m = ((len / max_piece).ceil() as usize).max(1);
                let h = len / m as f64;
                for sub in 0..m {
                    let x0 = a + sub as f64 * h;
                    for (x, w) in gl_x.iter().zip(&gl_w) {
                        let mut t = x0 + 0.5 * h * (x + 1.0);
                        if along.is_periodic() && t >= hi {
                            t -= hi;
                        }
                        let mut wt = 0.5 * h * w;
                        if along.kind == AxisKind::Colatitude {
                            wt *= t.sin();
                        }
                        integrand(&at(t), &mut out);
                        for (acc, o) in acc.iter_mut().zip(&out) {
                            *acc += wt * o;
                        }
                    }
                }
            }
            acc.iter_mut().for_each(|v| *v *= tw);
            acc
        })
        .collect();

    (0..width)
        .map(|c| pairwise_sum_by(per_line.len(), &|i| per_line[i][c]))
        .collect()
}
