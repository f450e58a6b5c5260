//! Newton projection of a point onto `{φ = c}` along the gradient flow.

use crate::geometry::{Field, Point};

/// Moves `x` towards `{φ = c}` with at most `steps` Newton steps
/// `x ← x − (φ(x) − c)·∇φ/|∇φ|²`.
///
/// A step is accepted only if it strictly reduces `|φ − c|` and its metric
/// length stays below `max_step`, so the returned residual never exceeds the
/// starting one. Returns the point (unwrapped chart coordinates) and its
/// residual `|φ − c|`.
pub fn newton_project<F: Field + ?Sized>(
    field: &F,
    x: &Point,
    c: f64,
    steps: usize,
    tol: f64,
    max_step: f64,
) -> (Point, f64) {
    let m = field.manifold();
    let sphere = !m.is_flat();
    let mut p = *x;
    let mut r = field.value(&p) - c;
    for _ in 0..steps {
        if r.abs() <= tol * (1.0 + c.abs()) {
            break;
        }
        let partials = field.partials(&p);
        let g2 = m.metric_norm(&p, &partials).powi(2);
        if !(g2 > 0.0) || !g2.is_finite() {
            break;
        }
        if r.abs() / g2.sqrt() > max_step {
            break;
        }
        let v = m.raise(&p, &partials);
        let s = r / g2;
        let mut q = p;
        for i in 0..m.dim() {
            q[i] -= s * v[i];
        }
        if sphere && !(0.0..=std::f64::consts::PI).contains(&q[0]) {
            break;
        }
        let rq = field.value(&q) - c;
        if !(rq.abs() < r.abs()) {
            break;
        }
        p = q;
        r = rq;
    }
    (p, r.abs())
}
