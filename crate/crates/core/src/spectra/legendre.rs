//! Legendre polynomials by the three-term recurrence.

/// `(P_n(x), P_{n−1}(x))`; for `n = 0` the second entry is 0.
pub fn legendre_pair(n: u32, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut prev = 1.0;
    let mut cur = x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

pub fn legendre(n: u32, x: f64) -> f64 {
    legendre_pair(n, x).0
}

/// `P_n'(x)` from the derivative recurrence `P'_{k+1} = P'_{k−1} + (2k+1) P_k`.
/// Stable up to and including `x = ±1`.
pub fn legendre_derivative(n: u32, x: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    // (P_{k-1}, P_k) and (P'_{k-1}, P'_k)
    let (mut p_prev, mut p) = (1.0, x);
    let (mut d_prev, mut d) = (0.0, 1.0);
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        let d_next = d_prev + (2.0 * kf + 1.0) * p;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    d
}

/// `P_n(cos θ)` and `d/dθ P_n(cos θ)`.
///
/// Away from the poles the derivative comes from
/// `(1 − x²) P_n'(x) = n (P_{n−1}(x) − x P_n(x))`; within `sin θ < 0.1` that
/// form cancels badly and the derivative recurrence is used instead.
pub fn legendre_theta(n: u32, theta: f64) -> (f64, f64) {
    let (s, x) = theta.sin_cos();
    let (p, pm1) = legendre_pair(n, x);
    if s.abs() >= 0.1 {
        (p, -(n as f64) * (pm1 - x * p) / s)
    } else {
        (p, -s * legendre_derivative(n, x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_degrees() {
        let x: f64 = 0.3;
        assert!((legendre(2, x) - 0.5 * (3.0 * x * x - 1.0)).abs() < 1e-15);
        assert!((legendre(3, x) - 0.5 * (5.0 * x.powi(3) - 3.0 * x)).abs() < 1e-15);
        assert!((legendre_derivative(3, x) - 0.5 * (15.0 * x * x - 3.0)).abs() < 1e-14);
    }

    #[test]
    fn endpoint_values() {
        for n in 0..=200 {
            assert!((legendre(n, 1.0) - 1.0).abs() < 1e-12, "n = {n}");
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((legendre(n, -1.0) - sign).abs() < 1e-12);
            let nf = n as f64;
            assert!((legendre_derivative(n, 1.0) - nf * (nf + 1.0) / 2.0).abs() < 1e-9 * (1.0 + nf * nf));
        }
    }

    #[test]
    fn bounded_on_interval() {
        for n in 1..=200 {
            for i in 0..=10_000 {
                let x = -1.0 + 2.0 * i as f64 / 10_000.0;
                assert!(legendre(n, x).abs() <= 1.0 + 1e-12, "n = {n}, x = {x}");
            }
        }
    }

    #[test]
    fn both_derivative_routes_agree() {
        for n in [1, 2, 5, 17, 80] {
            for theta in [0.2, 0.7, 1.3, 2.0, 2.9] {
                let (_, a) = legendre_theta(n, theta);
                let b = -theta.sin() * legendre_derivative(n, theta.cos());
                assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()), "n={n} θ={theta}: {a} vs {b}");
            }
        }
    }
}
