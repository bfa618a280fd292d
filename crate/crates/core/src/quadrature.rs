//! Gauss-Legendre rules and an adaptive bisection integrator built on them.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{cos, sqrt, PI};

/// Gauss-Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a Gauss-Legendre rule needs at least one node");
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Applies the rule on [a, b].
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(mid + half * x);
        }
        s * half
    }
}

/// Returns (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const MAX_DEPTH: usize = 60;

/// Adaptive bisection with a 10-point Gauss-Legendre rule, to relative
/// tolerance `rel_tol` of the integral.
pub fn adaptive_gauss_legendre<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<f64> {
    let rule = GaussLegendre::new(10);
    // coarse estimate fixes the absolute target
    let mut estimate = 0.0;
    let pieces = 16;
    let h = (b - a) / pieces as f64;
    for k in 0..pieces {
        estimate += rule.integrate(&f, a + k as f64 * h, a + (k + 1) as f64 * h);
    }
    let abs_tol = (rel_tol * estimate.abs()).max(f64::MIN_POSITIVE);
    let mut total = 0.0;
    let mut worst: f64 = 0.0;
    // explicit stack: (a, b, whole, depth, tolerance share)
    let mut stack: Vec<(f64, f64, f64, usize, f64)> = Vec::new();
    stack.push((a, b, rule.integrate(&f, a, b), 0, abs_tol));
    while let Some((lo, hi, whole, depth, tol)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(&f, lo, mid);
        let right = rule.integrate(&f, mid, hi);
        let err = (left + right - whole).abs();
        if err <= tol || hi - lo <= 1e-14 * (b - a).abs() {
            total += left + right;
        } else if depth >= MAX_DEPTH {
            worst = worst.max(err);
            total += left + right;
        } else {
            stack.push((lo, mid, left, depth + 1, 0.5 * tol));
            stack.push((mid, hi, right, depth + 1, 0.5 * tol));
        }
    }
    if worst > abs_tol {
        return Err(Error::QuadratureNotConverged {
            defect: worst / estimate.abs().max(f64::MIN_POSITIVE),
        });
    }
    Ok(total)
}

/// Composite rule over a fixed partition; used where the integrand is smooth
/// on each piece and adaptivity is unnecessary.
pub fn composite<F: Fn(f64) -> f64>(rule: &GaussLegendre, f: F, a: f64, b: f64, pieces: usize) -> f64 {
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| rule.integrate(&f, a + k as f64 * h, a + (k + 1) as f64 * h))
        .sum()
}

#[allow(dead_code)]
pub(crate) fn rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    sqrt(v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64)
}
