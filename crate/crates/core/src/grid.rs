//! Uniform one-dimensional grids and the fields sampled on them.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Uniform sampling of `[x_min, x_max]` with `num_points` points, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    num_points: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, num_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) {
            return Err(invalid("grid", "bounds must be finite"));
        }
        if x_max <= x_min {
            return Err(invalid("grid", format!("x_max ({x_max}) must exceed x_min ({x_min})")));
        }
        if num_points < 3 {
            return Err(invalid("grid-points", format!("need at least 3 points, got {num_points}")));
        }
        Ok(Self { x_min, x_max, num_points })
    }

    /// Grid over `[x_min, x_max]` with spacing as close to `h` as an integer point count allows.
    pub fn with_spacing(x_min: f64, x_max: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(invalid("grid", "spacing must be positive"));
        }
        let intervals = ((x_max - x_min) / h).round().max(2.0) as usize;
        Self::new(x_min, x_max, intervals + 1)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.num_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.num_points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.num_points {
            self.x_max
        } else {
            self.x_min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.num_points).map(move |i| self.x(i))
    }

    /// True when the grid endpoints coincide with `a` and `b` up to a relative tolerance.
    pub fn spans(&self, a: f64, b: f64) -> bool {
        let scale = (b - a).abs().max(f64::MIN_POSITIVE);
        (self.x_min - a).abs() <= 1e-12 * scale && (self.x_max - b).abs() <= 1e-12 * scale
    }

    pub fn contains_interval(&self, a: f64, b: f64) -> bool {
        self.x_min <= a && b <= self.x_max
    }

    /// Index of the grid point nearest to `x` (clamped to the grid).
    pub fn nearest_index(&self, x: f64) -> usize {
        let t = ((x - self.x_min) / self.spacing()).round();
        t.clamp(0.0, (self.num_points - 1) as f64) as usize
    }
}

/// Complex samples on a grid at a fixed time: a wavefunction or a reduced heat field.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub time: f64,
}

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(
                "values",
                format!("length {} does not match grid size {}", values.len(), grid.len()),
            ));
        }
        Ok(Self { grid, values, time })
    }

    pub fn from_fn(grid: Grid, time: f64, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.points().map(f).collect();
        Self { grid, values, time }
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn amplitude(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    /// `∫|f|² dx` by composite Simpson.
    pub fn norm_sqr(&self) -> f64 {
        crate::quadrature::simpson(&self.density(), self.grid.spacing())
    }

    pub fn conj(&self) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|z| z.conj()).collect(),
            time: self.time,
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Interior node locations (zeros of the field).
    pub fn nodes(&self) -> Vec<f64> {
        find_nodes(&self.grid, &self.values)
    }
}

/// A real field where some points were excluded (near nodes, at stencil boundaries).
/// Excluded points carry the value 0 and `included[i] == false`; they never hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub included: Vec<bool>,
}

impl MaskedField {
    pub fn new(grid: Grid, values: Vec<f64>, included: Vec<bool>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        debug_assert_eq!(included.len(), grid.len());
        let values = values
            .into_iter()
            .zip(&included)
            .map(|(v, &keep)| if keep && v.is_finite() { v } else { 0.0 })
            .collect();
        Self { grid, values, included }
    }

    pub fn included_values(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .zip(&self.included)
            .enumerate()
            .filter(|(_, (_, &keep))| keep)
            .map(|(i, (&v, _))| (i, v))
    }

    pub fn included_count(&self) -> usize {
        self.included.iter().filter(|&&b| b).count()
    }

    pub fn excluded_indices(&self) -> Vec<usize> {
        (0..self.included.len()).filter(|&i| !self.included[i]).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.included_values().map(|(_, v)| v.abs()).fold(0.0, f64::max)
    }

    /// Largest `|value − target|` over included points.
    pub fn max_deviation_from(&self, target: f64) -> f64 {
        self.included_values().map(|(_, v)| (v - target).abs()).fold(0.0, f64::max)
    }

    pub fn value_at(&self, i: usize) -> Option<f64> {
        self.included[i].then_some(self.values[i])
    }
}

/// Complex counterpart of [`MaskedField`], used for residuals of complex equations.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedComplexField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub included: Vec<bool>,
}

impl MaskedComplexField {
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.included)
            .filter(|(_, &k)| k)
            .map(|(v, _)| v.norm())
            .fold(0.0, f64::max)
    }
}

/// Zeros of a sampled complex field.
///
/// A node is registered at a sample that is exactly zero, or between two neighbours
/// whose values point in opposing directions (`Re(a·b̄) < 0`); a resolved smooth
/// field never turns its phase by more than π/2 over one step away from a zero.
pub fn find_nodes(grid: &Grid, values: &[Complex64]) -> Vec<f64> {
    let mut nodes = Vec::new();
    for (i, v) in values.iter().enumerate() {
        if *v == Complex64::new(0.0, 0.0) {
            nodes.push(grid.x(i));
        }
    }
    for i in 0..values.len().saturating_sub(1) {
        let (a, b) = (values[i], values[i + 1]);
        if a.norm_sqr() == 0.0 || b.norm_sqr() == 0.0 {
            continue;
        }
        if (a * b.conj()).re < 0.0 {
            let (ra, rb) = (a.norm(), b.norm());
            let frac = ra / (ra + rb);
            nodes.push(grid.x(i) + frac * grid.spacing());
        }
    }
    nodes.sort_by(f64::total_cmp);
    nodes
}

/// Mask keeping points farther than `guard` from every node and at least `radius`
/// samples away from either grid end.
pub fn node_guard_mask(grid: &Grid, nodes: &[f64], guard: f64, radius: usize) -> Vec<bool> {
    let n = grid.len();
    (0..n)
        .map(|i| {
            if i < radius || i + radius >= n {
                return false;
            }
            let x = grid.x(i);
            // nodes are sorted, so a binary search finds the closest one
            let pos = nodes.partition_point(|&z| z < x);
            let near_right = nodes.get(pos).map_or(f64::INFINITY, |z| z - x);
            let near_left = if pos > 0 { x - nodes[pos - 1] } else { f64::INFINITY };
            near_left.min(near_right) > guard
        })
        .collect()
}

/// Default node guard: ten grid spacings.
pub fn default_node_guard(grid: &Grid) -> f64 {
    10.0 * grid.spacing()
}
