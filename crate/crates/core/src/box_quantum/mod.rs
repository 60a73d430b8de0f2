//! Closed-form quantum mechanics of a particle between two impenetrable walls at
//! `x = 0` and `x = L`: stationary states, densities, the momentum spectrum and the
//! Bohmian velocity and quantum potential computed from sampled fields.

mod bohm;
mod momentum;

pub use bohm::{bohm_velocity, bohm_velocity_with, quantum_potential, quantum_potential_with};
pub use momentum::{
    classical_limit_metric, momentum_amplitude_closed_form, momentum_amplitude_numeric,
    momentum_density_closed_form, momentum_density_closed_form_guarded, momentum_density_numeric,
    momentum_normalization, MomentumNormalization, MomentumSpectrum, DEFAULT_SINGULARITY_GUARD,
};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{ComplexField, Grid};

/// Physical parameters of the box and the selected stationary state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxConfig {
    pub mass: f64,
    pub length: f64,
    pub hbar: f64,
    pub n: u32,
}

impl Default for BoxConfig {
    /// Natural units, ground state.
    fn default() -> Self {
        Self { mass: 1.0, length: 1.0, hbar: 1.0, n: 1 }
    }
}

impl BoxConfig {
    pub fn new(mass: f64, length: f64, hbar: f64, n: u32) -> Result<Self> {
        let cfg = Self { mass, length, hbar, n };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Natural units `ħ = m = L = 1` with quantum number `n`.
    pub fn natural(n: u32) -> Self {
        Self { n, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be positive and finite, got {v}")))
            }
        };
        positive("mass", self.mass)?;
        positive("L", self.length)?;
        positive("hbar", self.hbar)?;
        if self.n == 0 {
            return Err(invalid("n", "quantum number must be at least 1"));
        }
        Ok(())
    }

    pub fn with_mode(self, n: u32) -> Self {
        Self { n, ..self }
    }

    pub fn with_length(self, length: f64) -> Self {
        Self { length, ..self }
    }

    /// `k_n = nπ/L`.
    pub fn wavenumber(&self) -> f64 {
        self.n as f64 * PI / self.length
    }

    /// Classical momentum `p_n = ħ k_n`.
    pub fn momentum(&self) -> f64 {
        self.hbar * self.wavenumber()
    }

    /// `E_n = ħ²k_n²/2m`.
    pub fn energy(&self) -> f64 {
        let k = self.wavenumber();
        self.hbar * self.hbar * k * k / (2.0 * self.mass)
    }

    /// `ω_n = E_n/ħ`.
    pub fn omega(&self) -> f64 {
        self.energy() / self.hbar
    }

    /// `D = ħ/2m`.
    pub fn diffusivity(&self) -> f64 {
        self.hbar / (2.0 * self.mass)
    }

    /// Normalization `√(2/L)` of the box modes.
    pub fn normalization(&self) -> f64 {
        (2.0 / self.length).sqrt()
    }

    /// Velocity of the classical to-and-fro motion, `p_n/m`.
    pub fn classical_speed(&self) -> f64 {
        self.momentum() / self.mass
    }

    /// Uniform grid spanning exactly `[0, L]`.
    pub fn box_grid(&self, num_points: usize) -> Result<Grid> {
        Grid::new(0.0, self.length, num_points)
    }

    pub(crate) fn require_box_grid(&self, grid: &Grid) -> Result<()> {
        if grid.spans(0.0, self.length) {
            Ok(())
        } else {
            Err(Error::DomainMismatch { x_min: grid.x_min(), x_max: grid.x_max(), length: self.length })
        }
    }
}

/// Value of the normalized stationary state at `x` inside the box (zero outside).
pub fn mode_value(cfg: &BoxConfig, x: f64, t: f64) -> Complex64 {
    if x <= 0.0 || x >= cfg.length {
        return Complex64::new(0.0, 0.0);
    }
    let spatial = cfg.normalization() * (cfg.wavenumber() * x).sin();
    Complex64::from_polar(1.0, -cfg.omega() * t) * spatial
}

/// `sin(π·num/den)` with the argument reduced in integer arithmetic, so that samples
/// next to a zero keep full relative precision.
fn sin_pi_ratio(num: u64, den: u64) -> f64 {
    let mut m = num % (2 * den);
    let sign = if m >= den {
        m -= den;
        -1.0
    } else {
        1.0
    };
    if 2 * m > den {
        m = den - m;
    }
    sign * (PI * m as f64 / den as f64).sin()
}

/// Real spatial profile `√(2/L) sin(k_n x)` on a grid spanning `[0, L]`.
///
/// The phase `k_n x_i = nπ·i/(N−1)` is formed from the sample index rather than from the
/// rounded coordinate; the wall samples are exactly zero.
pub fn mode_profile(cfg: &BoxConfig, grid: &Grid) -> Result<Vec<f64>> {
    cfg.validate()?;
    cfg.require_box_grid(grid)?;
    let den = (grid.len() - 1) as u64;
    let a = cfg.normalization();
    Ok((0..grid.len() as u64).map(|i| a * sin_pi_ratio(cfg.n as u64 * i, den)).collect())
}

/// Stationary state `√(2/L) sin(k_n x) e^{−iE_n t/ħ}` sampled on a grid spanning `[0, L]`.
/// The wall samples are exactly zero.
pub fn eigenstate(cfg: &BoxConfig, grid: &Grid, t: f64) -> Result<ComplexField> {
    let phase = Complex64::from_polar(1.0, -cfg.omega() * t);
    let values = mode_profile(cfg, grid)?.into_iter().map(|r| phase * r).collect();
    ComplexField::new(*grid, values, t)
}

/// `|ψ|²` on the field's grid.
pub fn position_density(field: &ComplexField) -> Vec<f64> {
    field.density()
}

/// Zeros strictly inside the sampled interval (walls excluded).
pub fn interior_nodes(field: &ComplexField) -> Vec<f64> {
    let h = field.grid.spacing();
    let (a, b) = (field.grid.x_min(), field.grid.x_max());
    field.nodes().into_iter().filter(|&z| z > a + 0.5 * h && z < b - 0.5 * h).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::simpson;

    #[test]
    fn derived_quantities_are_consistent() {
        let cfg = BoxConfig::new(1.7, 2.3, 0.9, 4).unwrap();
        assert!((cfg.energy() - cfg.hbar * cfg.omega()).abs() <= 1e-14 * cfg.energy());
        let k = cfg.wavenumber();
        assert!((cfg.omega() - cfg.diffusivity() * k * k).abs() <= 1e-14 * cfg.omega());
    }

    #[test]
    fn validation_names_the_field() {
        let err = BoxConfig::new(1.0, -1.0, 1.0, 1).unwrap_err();
        assert!(err.to_string().contains("`L`"));
        assert!(BoxConfig::new(1.0, 1.0, 1.0, 0).is_err());
        assert!(BoxConfig::new(0.0, 1.0, 1.0, 1).is_err());
    }

    #[test]
    fn ground_state_peak_value() {
        let cfg = BoxConfig::new(1.0, PI, 1.0, 1).unwrap();
        let grid = cfg.box_grid(1001).unwrap();
        let psi = eigenstate(&cfg, &grid, 0.0).unwrap();
        let mid = psi.values[500];
        assert!((mid.re - (2.0 / PI).sqrt()).abs() < 1e-15);
        assert!((mid.re - 0.7979).abs() < 1e-4);
    }

    #[test]
    fn second_mode_vanishes_at_centre_and_walls() {
        let cfg = BoxConfig::new(2.0, 3.0, 0.5, 2).unwrap();
        let grid = cfg.box_grid(301).unwrap();
        let psi = eigenstate(&cfg, &grid, 0.0).unwrap();
        assert!(psi.values[150].norm() < 1e-15);
        assert_eq!(psi.values[0], Complex64::new(0.0, 0.0));
        assert_eq!(psi.values[300], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn grid_must_span_the_box() {
        let cfg = BoxConfig::natural(1);
        let grid = Grid::new(0.0, 0.9, 11).unwrap();
        assert!(matches!(eigenstate(&cfg, &grid, 0.0), Err(Error::DomainMismatch { .. })));
    }

    #[test]
    fn normalization_against_fine_simpson() {
        let cfg = BoxConfig::natural(3);
        let grid = cfg.box_grid(20_001).unwrap();
        let psi = eigenstate(&cfg, &grid, 0.37).unwrap();
        let norm = simpson(&position_density(&psi), grid.spacing());
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn density_example_values() {
        let cfg = BoxConfig { length: 2.0, ..BoxConfig::natural(1) };
        let grid = cfg.box_grid(201).unwrap();
        let p = position_density(&eigenstate(&cfg, &grid, 0.0).unwrap());
        assert!((p[100] - 1.0).abs() < 1e-15);

        let cfg = BoxConfig::natural(10);
        let grid = cfg.box_grid(10_001).unwrap();
        let p = position_density(&eigenstate(&cfg, &grid, 0.0).unwrap());
        assert!((simpson(&p, grid.spacing()) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn density_is_stationary() {
        let cfg = BoxConfig::natural(6);
        let grid = cfg.box_grid(513).unwrap();
        let a = position_density(&eigenstate(&cfg, &grid, 0.0).unwrap());
        let b = position_density(&eigenstate(&cfg, &grid, 1.234).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn index_phase_reduction() {
        assert_eq!(sin_pi_ratio(0, 7), 0.0);
        assert_eq!(sin_pi_ratio(7, 7), 0.0);
        assert_eq!(sin_pi_ratio(14, 7), 0.0);
        for (num, den) in [(1u64, 6u64), (5, 6), (7, 6), (13, 6), (3, 1000), (997, 1000)] {
            let exact = (PI * num as f64 / den as f64).sin();
            assert!((sin_pi_ratio(num, den) - exact).abs() < 1e-15);
        }
        // next to a wall the sample keeps relative accuracy
        let near = sin_pi_ratio(999_999, 1_000_000);
        assert!((near / (PI * 1e-6) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn fifth_mode_nodes() {
        let cfg = BoxConfig::natural(5);
        let grid = cfg.box_grid(1001).unwrap();
        let nodes = interior_nodes(&eigenstate(&cfg, &grid, 0.2).unwrap());
        assert_eq!(nodes.len(), 4);
        for (j, z) in nodes.iter().enumerate() {
            assert!((z - (j + 1) as f64 / 5.0).abs() < 1e-6);
        }
    }
}
