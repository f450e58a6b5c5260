//! One-dimensional bracketed root refinement shared by the extractors and the
//! line quadrature.

/// Refines a root of `f` inside `[a, b]`, where `fa = f(a)` and `fb = f(b)`
/// have opposite signs (or one of them is zero).
///
/// `f` returns the value and the derivative. Newton steps are taken while they
/// stay inside the current bracket; otherwise the bracket is bisected. The
/// initial guess is the secant point.
pub fn bracketed_newton<F>(mut f: F, a: f64, b: f64, fa: f64, fb: f64, tol: f64) -> f64
where
    F: FnMut(f64) -> (f64, f64),
{
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    debug_assert!(fa.signum() != fb.signum(), "no sign change in bracket");
    // keep f(lo) < 0 < f(hi)
    let (mut lo, mut hi) = if fa < 0.0 { (a, b) } else { (b, a) };
    let mut x = a + (b - a) * fa / (fa - fb);
    if !x.is_finite() {
        x = 0.5 * (a + b);
    }
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - fx / dfx;
        if next == x {
            // converged to round-off; x is also a bracket end
            return x;
        }
        let (l, h) = if lo < hi { (lo, hi) } else { (hi, lo) };
        if !next.is_finite() || next <= l || next >= h {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step <= tol * (1.0 + x.abs()) || (h - l) <= tol * (1.0 + x.abs()) {
            break;
        }
    }
    x
}
