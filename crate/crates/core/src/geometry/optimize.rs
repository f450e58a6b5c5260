//! Local refinement of grid extrema.

use super::{Manifold, Point};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximisation of a unimodal `g` on `[a, b]`.
pub fn golden_max<G: Fn(f64) -> f64>(g: G, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..iters {
        if g1 < g2 {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + INV_PHI * (b - a);
            g2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - INV_PHI * (b - a);
            g1 = g(x1);
        }
    }
    if g1 >= g2 {
        (x1, g1)
    } else {
        (x2, g2)
    }
}

/// Coordinate-wise golden-section polish of a maximum of `g` near `p0`,
/// searching `±h` along each chart axis. Colatitude stays inside `[0, π]`.
/// Never returns a value below `g(p0)`.
pub fn polish_max<G: Fn(&Point) -> f64>(m: Manifold, g: G, p0: &Point, h: f64, sweeps: usize) -> (Point, f64) {
    let mut best = *p0;
    let mut val = g(p0);
    for _ in 0..sweeps {
        for axis in 0..m.dim() {
            let (mut lo, mut hi) = (best[axis] - h, best[axis] + h);
            if !m.is_flat() && axis == 0 {
                lo = lo.max(0.0);
                hi = hi.min(std::f64::consts::PI);
            }
            let base = best;
            let (x, v) = golden_max(
                |t| {
                    let mut p = base;
                    p[axis] = t;
                    g(&p)
                },
                lo,
                hi,
                80,
            );
            if v > val {
                val = v;
                best[axis] = x;
            }
        }
    }
    (m.wrap(&best), val)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_peak() {
        let (x, v) = golden_max(|x| -(x - 0.3).powi(2), -1.0, 2.0, 100);
        assert!((x - 0.3).abs() < 1e-7);
        assert!(v <= 0.0);
    }

    #[test]
    fn polishes_off_grid_maximum() {
        let m = Manifold::torus(2).unwrap();
        let g = |p: &Point| (p[0] - 1.234).cos() * (p[1] - 2.5).cos();
        let (p, v) = polish_max(m, g, &[1.2, 2.45, 0.0], 0.1, 3);
        assert!((v - 1.0).abs() < 1e-12);
        assert!((p[0] - 1.234).abs() < 1e-6 && (p[1] - 2.5).abs() < 1e-6);
    }

    #[test]
    fn colatitude_is_clamped() {
        let m = Manifold::sphere();
        let (p, _) = polish_max(m, |p: &Point| -p[0], &[0.01, 1.0, 0.0], 0.1, 2);
        assert!(p[0] >= 0.0 && p[0] < 1e-6);
    }
}
