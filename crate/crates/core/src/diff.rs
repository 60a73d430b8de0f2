//! Central finite-difference stencils on uniform grids.
//!
//! Points closer than the stencil radius to either end have no central estimate;
//! the returned vectors hold zero there and callers mask them out.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// Accuracy order of a central stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Stencil {
    #[default]
    Second,
    Fourth,
    Sixth,
    Eighth,
}

impl Stencil {
    pub fn radius(self) -> usize {
        match self {
            Stencil::Second => 1,
            Stencil::Fourth => 2,
            Stencil::Sixth => 3,
            Stencil::Eighth => 4,
        }
    }

    pub fn order(self) -> u32 {
        2 * self.radius() as u32
    }

    /// Antisymmetric weights `c_j`, `f′ ≈ Σ c_j (f_{+j} − f_{−j}) / h`.
    fn first_weights(self) -> &'static [f64] {
        match self {
            Stencil::Second => &[0.5],
            Stencil::Fourth => &[2.0 / 3.0, -1.0 / 12.0],
            Stencil::Sixth => &[3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0],
            Stencil::Eighth => &[4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0],
        }
    }

    /// Centre weight and symmetric weights, `f″ ≈ (c_0 f + Σ c_j (f_{+j} + f_{−j})) / h²`.
    fn second_weights(self) -> (f64, &'static [f64]) {
        match self {
            Stencil::Second => (-2.0, &[1.0]),
            Stencil::Fourth => (-5.0 / 2.0, &[4.0 / 3.0, -1.0 / 12.0]),
            Stencil::Sixth => (-49.0 / 18.0, &[3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0]),
            Stencil::Eighth => (
                -205.0 / 72.0,
                &[8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0],
            ),
        }
    }

    pub fn first<T>(self, values: &[T], h: f64) -> Vec<T>
    where
        T: Copy + Default + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    {
        let r = self.radius();
        let w = self.first_weights();
        let n = values.len();
        let mut out = vec![T::default(); n];
        if n <= 2 * r {
            return out;
        }
        for i in r..n - r {
            let mut acc = T::default();
            for (j, c) in w.iter().enumerate() {
                let j = j + 1;
                acc = acc + (values[i + j] - values[i - j]) * *c;
            }
            out[i] = acc * (1.0 / h);
        }
        out
    }

    pub fn second<T>(self, values: &[T], h: f64) -> Vec<T>
    where
        T: Copy + Default + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    {
        let r = self.radius();
        let (c0, w) = self.second_weights();
        let n = values.len();
        let mut out = vec![T::default(); n];
        if n <= 2 * r {
            return out;
        }
        let inv_h2 = 1.0 / (h * h);
        for i in r..n - r {
            let mut acc = values[i] * c0;
            for (j, c) in w.iter().enumerate() {
                let j = j + 1;
                acc = acc + (values[i + j] + values[i - j]) * *c;
            }
            out[i] = acc * inv_h2;
        }
        out
    }
}

/// Central difference of `ln f`; entries where a stencil point is non-positive are `None`.
pub fn log_derivative(values: &[f64], h: f64, stencil: Stencil) -> Vec<Option<f64>> {
    let logs: Vec<f64> = values.iter().map(|&v| if v > 0.0 { v.ln() } else { f64::NAN }).collect();
    let d = stencil.first(&logs, h);
    let r = stencil.radius();
    (0..values.len())
        .map(|i| {
            if i < r || i + r >= values.len() {
                None
            } else {
                Some(d[i]).filter(|v| v.is_finite())
            }
        })
        .collect()
}

/// Three-point derivative at the middle of three (possibly unequally spaced) samples.
pub fn middle_time_derivative<T>(samples: [T; 3], times: [f64; 3]) -> T
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    let [t0, t1, t2] = times;
    let (a, b) = (t1 - t0, t2 - t1);
    let w0 = -b / (a * (a + b));
    let w1 = (b - a) / (a * b);
    let w2 = a / (b * (a + b));
    samples[0] * w0 + samples[1] * w1 + samples[2] * w2
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    /// `sin` sampled at `x_c + (i − centre)·h`.
    fn sin_samples(n: usize, centre: usize, x_c: f64, h: f64) -> Vec<f64> {
        (0..n).map(|i| (x_c + (i as f64 - centre as f64) * h).sin()).collect()
    }

    #[test]
    fn observed_orders_match_nominal() {
        let x0 = 20usize;
        for stencil in [Stencil::Second, Stencil::Fourth, Stencil::Sixth, Stencil::Eighth] {
            let err = |h: f64| {
                let x = 0.7;
                let v = sin_samples(41, x0, x, h);
                let d1 = stencil.first(&v, h)[x0];
                let d2 = stencil.second(&v, h)[x0];
                ((d1 - x.cos()).abs(), (d2 + x.sin()).abs())
            };
            let (a1, a2) = err(0.2);
            let (b1, b2) = err(0.1);
            let p = stencil.order() as f64;
            let o1 = (a1 / b1).log2();
            let o2 = (a2 / b2).log2();
            assert!((o1 - p).abs() < 0.2, "{stencil:?} first order {o1}");
            assert!((o2 - p).abs() < 0.2, "{stencil:?} second order {o2}");
        }
    }

    #[test]
    fn works_on_complex_samples() {
        let h = 1e-3;
        let v: Vec<Complex64> = (0..11).map(|i| Complex64::from_polar(1.0, 3.0 * i as f64 * h)).collect();
        let d = Stencil::Second.first(&v, h);
        let exact = Complex64::i() * 3.0 * v[5];
        assert!((d[5] - exact).norm() < 1e-5);
        assert_eq!(d[0], Complex64::default());
    }

    #[test]
    fn middle_derivative_is_exact_for_quadratics() {
        let f = |t: f64| 2.0 * t * t - t + 3.0;
        let ts = [0.1, 0.25, 0.7];
        let d = middle_time_derivative([f(ts[0]), f(ts[1]), f(ts[2])], ts);
        assert!((d - (4.0 * 0.25 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn log_derivative_skips_non_positive() {
        let v = [1.0, 2.0, 0.0, 4.0, 5.0, 6.0];
        let d = log_derivative(&v, 1.0, Stencil::Second);
        assert_eq!(d[0], None);
        assert_eq!(d[1], None);
        assert_eq!(d[3], None);
        assert!(d[4].is_some());
    }
}
