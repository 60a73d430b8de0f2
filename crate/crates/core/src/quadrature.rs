//! Quadrature rules: composite Simpson on uniform samples, Gauss–Legendre panels for
//! smooth integrands given as closures, and adaptive Simpson for long oscillatory ranges.

use serde::Serialize;

/// Tag recording which rule produced an integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    CompositeSimpson,
    GaussLegendre,
    AdaptiveSimpson,
    Trapezoid,
}

/// Composite Simpson over uniformly spaced samples.
///
/// An odd number of intervals is closed with Simpson's 3/8 rule on the last three.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (values[0] + values[1]),
        3 => h / 3.0 * (values[0] + 4.0 * values[1] + values[2]),
        _ => {
            let intervals = n - 1;
            if intervals.is_multiple_of(2) {
                simpson_even(values, h)
            } else {
                let split = n - 4;
                let head = if split > 0 { simpson_even(&values[..=split], h) } else { 0.0 };
                let t = &values[split..];
                head + 3.0 * h / 8.0 * (t[0] + 3.0 * t[1] + 3.0 * t[2] + t[3])
            }
        }
    }
}

fn simpson_even(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    debug_assert!(n % 2 == 1);
    let mut odd = 0.0;
    let mut even = 0.0;
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (values[0] + values[n - 1] + 4.0 * odd + 2.0 * even)
}

pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1])),
    }
}

/// Nodes and weights of the `order`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over `[a, b]` split into `panels` equal panels.
    pub fn integrate<T, F>(&self, a: f64, b: f64, panels: usize, mut f: F) -> T
    where
        T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
        F: FnMut(f64) -> T,
    {
        let panels = panels.max(1);
        let width = (b - a) / panels as f64;
        let half = 0.5 * width;
        let mut total = T::default();
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * width;
            let mut acc = T::default();
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                acc = acc + f(mid + half * x) * *w;
            }
            total = total + acc * half;
        }
        total
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = if n == 0 { 0.0 } else { n as f64 * (x * p1 - p0) / (x * x - 1.0) };
    (p, dp)
}

/// Adaptive Simpson with Richardson correction; `tol` is an absolute tolerance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_step(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn simpson_is_exact_for_cubics_with_either_parity() {
        for n in [5usize, 6, 7, 10, 11] {
            let h = 2.0 / (n - 1) as f64;
            let v: Vec<f64> = (0..n).map(|i| {
                let x = -1.0 + i as f64 * h;
                x * x * x - 2.0 * x * x + 1.0
            }).collect();
            // ∫_{-1}^{1} (x³ − 2x² + 1) dx = 2 − 4/3
            assert!((simpson(&v, h) - (2.0 - 4.0 / 3.0)).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn gauss_legendre_integrates_high_degree_polynomials() {
        let gl = GaussLegendre::new(10);
        // exact for degree 19
        let got: f64 = gl.integrate(0.0, 1.0, 1, |x| x.powi(19));
        assert!((got - 0.05).abs() < 1e-15);
        let got: f64 = gl.integrate(0.0, PI, 7, f64::sin);
        assert!((got - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_simpson_handles_peaked_integrands() {
        let f = |x: f64| 1.0 / (1.0 + 100.0 * x * x);
        let got = adaptive_simpson(&f, -1.0, 1.0, 1e-12, 40);
        let exact = 2.0 * (10.0f64).atan() / 10.0;
        assert!((got - exact).abs() < 1e-10);
    }
}
