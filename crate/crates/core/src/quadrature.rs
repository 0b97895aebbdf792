//! One-dimensional quadrature rules.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[a, b]`.
///
/// Nodes are Newton-refined roots of the Legendre polynomial `P_n`, returned in
/// increasing order; all lie strictly inside the interval.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((mid - half * x, half * w));
    }
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    out
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Uniform periodic (trapezoid) nodes on `[0, 2π)` with equal weights.
pub fn periodic_trapezoid(n: usize) -> Vec<(f64, f64)> {
    let h = 2.0 * PI / n as f64;
    (0..n).map(|k| (k as f64 * h, h)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        let rule = gauss_legendre(8, 0.0, 2.0);
        for deg in 0..16 {
            let approx: f64 = rule.iter().map(|(x, w)| w * x.powi(deg)).sum();
            let exact = 2f64.powi(deg + 1) / (deg + 1) as f64;
            assert!((approx - exact).abs() < 1e-12 * exact, "degree {deg}");
        }
        assert!(rule.iter().all(|(x, w)| *x > 0.0 && *x < 2.0 && *w > 0.0));
    }

    #[test]
    fn trapezoid_is_spectral_for_periodic() {
        let rule = periodic_trapezoid(16);
        let approx: f64 = rule.iter().map(|(t, w)| w * (t.cos()).exp()).sum();
        // ∫₀^{2π} e^{cos t} dt = 2π I₀(1)
        let exact = 2.0 * PI * 1.266_065_877_752_008_4;
        assert!((approx - exact).abs() < 1e-13);
    }
}
