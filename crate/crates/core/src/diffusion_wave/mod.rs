//! The classical side of the correspondence: a heat equation driven by an oscillating
//! source, whose boxed separable solution reproduces the stationary quantum state.
//!
//! Thermal fields carry the time factor `e^{+iωt}`, quantum fields `e^{−iEt/ħ}`; the two are
//! complex conjugates of each other and share the same density.

mod parabolic;

pub use parabolic::{solve_parabolic, DirichletValues, ParabolicRun, SolverOptions};

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::box_quantum::{mode_profile, quantum_potential, BoxConfig};
use crate::diff::Stencil;
use crate::error::{invalid, Error, Result};
use crate::grid::{ComplexField, Grid, MaskedComplexField};
use crate::quadrature::simpson;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Source `q(x)` of `∂Q̃/∂t = D·Q̃″ − D·q(x)·e^{iωt}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    pub grid: Grid,
    pub omega: f64,
    pub diffusivity: f64,
    /// Wavenumber of the plane-wave pair.
    pub wavenumber: f64,
    /// Assembled profile `q = q₁ + q₂`.
    pub profile: Vec<Complex64>,
    /// Helmholtz part `q₁`, defined as the remainder `q − q₂`.
    pub helmholtz_part: Vec<Complex64>,
    /// Plane-wave part `q₂`.
    pub plane_wave_part: Vec<Complex64>,
}

impl SourceSpec {
    fn from_parts(grid: Grid, cfg: &BoxConfig, omega: f64, k: f64, profile: Vec<Complex64>, q2: Vec<Complex64>) -> Self {
        let q1 = profile.iter().zip(&q2).map(|(q, b)| q - b).collect();
        Self {
            grid,
            omega,
            diffusivity: cfg.diffusivity(),
            wavenumber: k,
            profile,
            helmholtz_part: q1,
            plane_wave_part: q2,
        }
    }

    /// `q(x)·e^{iωt}`.
    pub fn at_time(&self, t: f64) -> Vec<Complex64> {
        let phase = Complex64::from_polar(1.0, self.omega * t);
        self.profile.iter().map(|q| q * phase).collect()
    }
}

/// Source sustaining the free thermal wave `cos(k₀x)·e^{iωt}` with `ω = D·k₀²`:
/// `q₂ = k₀²·cos(k₀x)` and `q = −(k₀² + iω/D)·cos(k₀x)`.
pub fn free_source(cfg: &BoxConfig, k0: f64, grid: &Grid) -> Result<SourceSpec> {
    cfg.validate()?;
    if !k0.is_finite() {
        return Err(invalid("k0", "must be finite"));
    }
    let d = cfg.diffusivity();
    let omega = d * k0 * k0;
    let c = -(Complex64::new(k0 * k0, 0.0) + I * omega / d);
    let profile = grid.points().map(|x| c * (k0 * x).cos()).collect();
    let q2 = grid.points().map(|x| Complex64::new(k0 * k0 * (k0 * x).cos(), 0.0)).collect();
    Ok(SourceSpec::from_parts(*grid, cfg, omega, k0, profile, q2))
}

/// Source sustaining the boxed mode: `q₂ = −i·k_n²·sin(k_n x)` and
/// `q = −(1+i)·k_n²·𝒩·sin(k_n x)` with `𝒩 = √(2/L)`.
pub fn boxed_source(cfg: &BoxConfig, grid: &Grid) -> Result<SourceSpec> {
    let shape = mode_profile(cfg, grid)?;
    let k = cfg.wavenumber();
    let a = cfg.normalization();
    let c = -Complex64::new(1.0, 1.0) * k * k;
    let profile = shape.iter().map(|s| c * s).collect();
    let q2 = shape.iter().map(|s| -I * k * k * (s / a)).collect();
    Ok(SourceSpec::from_parts(*grid, cfg, cfg.omega(), k, profile, q2))
}

/// Fraction of DFT power in the bins at `±k` on a periodic window (last sample dropped as
/// the image of the first), with the power in each of the two bins.
pub fn spectral_concentration(values: &[Complex64], grid: &Grid, k: f64) -> Result<(f64, f64, f64)> {
    let n = values.len() - 1;
    let period = grid.x_max() - grid.x_min();
    let bin = k * period / (2.0 * PI);
    let j = bin.round();
    if (bin - j).abs() > 1e-9 || j as usize >= n / 2 {
        return Err(invalid("k", format!("{k} is not a resolved harmonic of the window")));
    }
    let j = j as usize;
    let mut buf = values[..n].to_vec();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    let total: f64 = buf.iter().map(|c| c.norm_sqr()).sum();
    let plus = buf[j].norm_sqr();
    let minus = buf[(n - j) % n].norm_sqr();
    let captured = if j == 0 { plus } else { plus + minus };
    Ok((captured / total, plus, minus))
}

/// Coefficients of `e^{+ikx}` and `e^{−ikx}` in `values` on `[0, L]`, by projection
/// `(1/L)∫ f·e^{∓ikx} dx` (the two exponentials are orthogonal there when `kL = nπ`).
pub fn plane_wave_coefficients(values: &[Complex64], grid: &Grid, k: f64) -> (Complex64, Complex64) {
    let h = grid.spacing();
    let length = grid.x_max() - grid.x_min();
    let project = |sign: f64| {
        let (re, im): (Vec<f64>, Vec<f64>) = grid
            .points()
            .zip(values)
            .map(|(x, v)| {
                let z = v * Complex64::from_polar(1.0, -sign * k * x);
                (z.re, z.im)
            })
            .unzip();
        Complex64::new(simpson(&re, h), simpson(&im, h)) / length
    };
    (project(1.0), project(-1.0))
}

/// Reduced heat field with its harmonic time dependence.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalWaveState {
    pub field: ComplexField,
    pub cfg: BoxConfig,
    pub omega: f64,
    pub normalization: f64,
    /// Mode number for separated box solutions.
    pub mode: Option<u32>,
    /// `κ = √(iω/D)`, principal root.
    pub kappa: Complex64,
}

impl ThermalWaveState {
    /// Wraps a field oscillating as `e^{iωt}`.
    pub fn harmonic(field: ComplexField, cfg: BoxConfig, omega: f64) -> Self {
        Self { field, cfg, omega, normalization: 1.0, mode: None, kappa: kappa(omega, cfg.diffusivity()) }
    }

    pub fn diffusivity(&self) -> f64 {
        self.cfg.diffusivity()
    }

    /// `∂Q̃/∂t = iω·Q̃`.
    pub fn time_derivative(&self) -> Vec<Complex64> {
        self.field.values.iter().map(|q| I * self.omega * q).collect()
    }
}

/// Principal root of `iω/D`.
pub fn kappa(omega: f64, diffusivity: f64) -> Complex64 {
    (I * omega / diffusivity).sqrt()
}

/// `α = −(1+i)·k_n²`, the constant with `iω_n/D + α = −k_n²`.
pub fn separation_constant(cfg: &BoxConfig) -> Complex64 {
    let k = cfg.wavenumber();
    -Complex64::new(1.0, 1.0) * k * k
}

/// `Q̃ = √(2/L)·sin(k_n x)·e^{iω_n t}` on a grid spanning `[0, L]`.
pub fn separated_solution(cfg: &BoxConfig, grid: &Grid, t: f64) -> Result<ThermalWaveState> {
    let phase = Complex64::from_polar(1.0, cfg.omega() * t);
    let values = mode_profile(cfg, grid)?.into_iter().map(|s| phase * s).collect();
    Ok(ThermalWaveState {
        field: ComplexField::new(*grid, values, t)?,
        cfg: *cfg,
        omega: cfg.omega(),
        normalization: cfg.normalization(),
        mode: Some(cfg.n),
        kappa: kappa(cfg.omega(), cfg.diffusivity()),
    })
}

/// Simpson inner products `⟨e_n, e_m⟩` of the box modes `1..=n_max`.
pub fn mode_overlap_matrix(cfg: &BoxConfig, grid: &Grid, n_max: u32) -> Result<Vec<Vec<f64>>> {
    let modes: Vec<Vec<f64>> = (1..=n_max).map(|n| mode_profile(&cfg.with_mode(n), grid)).collect::<Result<_>>()?;
    let h = grid.spacing();
    Ok(modes
        .iter()
        .map(|a| {
            modes
                .iter()
                .map(|b| simpson(&a.iter().zip(b).map(|(x, y)| x * y).collect::<Vec<_>>(), h))
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceReport {
    /// `max | |Q̃|² − |ψ|² |`.
    pub max_density_difference: f64,
    /// `max |Q̃ − conj(ψ)|`.
    pub max_conjugate_difference: f64,
    /// Largest deviation of the quantum potential of `|Q̃|` from `E_n` (node-guarded).
    pub max_potential_deviation: f64,
}

/// Compares a thermal state with a quantum field on the same grid and at the same time.
pub fn equivalence_check(thermal: &ThermalWaveState, quantum: &ComplexField) -> Result<EquivalenceReport> {
    let f = &thermal.field;
    if f.grid != quantum.grid {
        return Err(Error::ConfigMismatch("fields are sampled on different grids".into()));
    }
    if f.time != quantum.time {
        return Err(Error::ConfigMismatch(format!("times differ: {} vs {}", f.time, quantum.time)));
    }
    let max_density_difference = f
        .values
        .iter()
        .zip(&quantum.values)
        .map(|(a, b)| (a.norm_sqr() - b.norm_sqr()).abs())
        .fold(0.0, f64::max);
    let max_conjugate_difference = f.max_abs_diff(&quantum.conj())?;
    let u = quantum_potential(f, &thermal.cfg)?;
    Ok(EquivalenceReport {
        max_density_difference,
        max_conjugate_difference,
        max_potential_deviation: u.max_deviation_from(thermal.cfg.energy()),
    })
}

/// `Q̃″ − (1/D)·∂Q̃/∂t − c·Q̃` with the analytic harmonic time derivative.
pub fn pseudo_helmholtz_residual_with(state: &ThermalWaveState, coefficient: Complex64, stencil: Stencil) -> MaskedComplexField {
    let f = &state.field;
    let d2 = stencil.second(&f.values, f.grid.spacing());
    let inv_d = 1.0 / state.diffusivity();
    let dt = state.time_derivative();
    let values = (0..f.values.len()).map(|i| d2[i] - dt[i] * inv_d - coefficient * f.values[i]).collect();
    MaskedComplexField { grid: f.grid, values, included: interior(&f.grid, stencil.radius()) }
}

/// Boxed residual `Q̃″ − (1/D)·∂Q̃/∂t + (1+i)·k_n²·Q̃` with second-order differences.
pub fn pseudo_helmholtz_residual(state: &ThermalWaveState) -> MaskedComplexField {
    let k = state.cfg.wavenumber();
    pseudo_helmholtz_residual_with(state, -Complex64::new(1.0, 1.0) * k * k, Stencil::Second)
}

/// Frequency-domain form `Q̃″ − κ²·Q̃ − q(x)·e^{iωt}` for a state driven by `source`.
pub fn kappa_form_residual(state: &ThermalWaveState, source: &SourceSpec) -> Result<MaskedComplexField> {
    let f = &state.field;
    if source.grid != f.grid {
        return Err(Error::GridMismatch);
    }
    let stencil = Stencil::Second;
    let d2 = stencil.second(&f.values, f.grid.spacing());
    let k2 = state.kappa * state.kappa;
    let drive = source.at_time(f.time);
    let values = (0..f.values.len()).map(|i| d2[i] - k2 * f.values[i] - drive[i]).collect();
    Ok(MaskedComplexField { grid: f.grid, values, included: interior(&f.grid, stencil.radius()) })
}

fn interior(grid: &Grid, radius: usize) -> Vec<bool> {
    (0..grid.len()).map(|i| i >= radius && i + radius < grid.len()).collect()
}

/// Outgoing free-space Green's function `e^{ikr}/(4πr)` of the Helmholtz operator.
pub fn greens_function_3d(k: f64, r: f64) -> Result<Complex64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(invalid("r", format!("radius must be positive, got {r}")));
    }
    Ok(Complex64::from_polar(1.0 / (4.0 * PI * r), k * r))
}

/// Radial Helmholtz residual `(1/r)·[(rG)″ + k²·rG]` by central differences of step `h`.
pub fn greens_radial_residual(k: f64, r: f64, h: f64) -> Result<Complex64> {
    if !(h > 0.0 && h < r) {
        return Err(invalid("h", "step must be positive and smaller than r"));
    }
    let rg = |s: f64| greens_function_3d(k, s).map(|g| g * s);
    let (a, b, c) = (rg(r - h)?, rg(r)?, rg(r + h)?);
    Ok(((a - b * 2.0 + c) / (h * h) + b * k * k) / r)
}
