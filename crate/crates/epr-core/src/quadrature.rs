//! Numerical integration over measurement-angle ranges.
//!
//! Gauss-Legendre rules (nodes from Newton's method on the Legendre
//! three-term recurrence) for smooth integrands like the correlation
//! function, plus a composite trapezoid rule as a cross-check of the
//! Gauss results.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// sorted by node. Exact (to rounding) for polynomials of degree
/// `2n - 1`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "a quadrature rule needs at least one node");
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        // Tricomi-style initial guess, then Newton.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((x, w));
    }
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule
}

/// `P_n(x)` and `P_n'(x)` via the standard recurrences.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut prev = 1.0f64;
    let mut cur = x;
    for k in 2..=n {
        let next = ((2 * k - 1) as f64 * x * cur - (k - 1) as f64 * prev) / k as f64;
        prev = cur;
        cur = next;
    }
    // Valid away from x = +-1; Gauss nodes are interior.
    let dp = n as f64 * (x * cur - prev) / (x * x - 1.0);
    (cur, dp)
}

/// `n`-point Gauss-Legendre integral of `f` over `[a, b]`.
pub fn integrate_gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    gauss_legendre(n)
        .iter()
        .map(|&(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Composite trapezoid integral of `f` over `[a, b]` with `intervals`
/// equal subintervals.
pub fn integrate_trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    assert!(intervals >= 1, "trapezoid rule needs at least one interval");
    let h = (b - a) / intervals as f64;
    let mut acc = 0.5 * (f(a) + f(b));
    for k in 1..intervals {
        acc += f(a + h * k as f64);
    }
    acc * h
}
