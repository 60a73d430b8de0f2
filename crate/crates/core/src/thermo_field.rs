//! Thermodynamic reading of a wavefunction: heat fields tied to the probability density,
//! osmotic velocities and Fick currents, and residuals of the heat and Hamilton–Jacobi
//! equations.
//!
//! Sign convention: `ΔQ = −ħω·ln(P/P₀)`, so a density deficit relative to the reference
//! corresponds to heat dissipated (positive).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::box_quantum::BoxConfig;
use crate::diff::{log_derivative, middle_time_derivative, Stencil};
use crate::error::{Error, Result};
use crate::grid::{default_node_guard, node_guard_mask, ComplexField, Grid, MaskedComplexField, MaskedField};

/// Amplitude/action split `ψ = R·e^{iS/ħ}` of a sampled field.
#[derive(Debug, Clone, PartialEq)]
pub struct MadelungPair {
    pub grid: Grid,
    pub time: f64,
    pub hbar: f64,
    pub amplitude: Vec<f64>,
    /// `S = ħ·arg ψ`, unwrapped along the grid within each node-free segment.
    pub action: Vec<f64>,
    /// False where `R = 0` and the action is undefined.
    pub defined: Vec<bool>,
    /// Node locations of the underlying field.
    pub nodes: Vec<f64>,
    /// Number of independently unwrapped segments.
    pub segments: usize,
}

impl MadelungPair {
    pub fn density(&self) -> Vec<f64> {
        self.amplitude.iter().map(|r| r * r).collect()
    }

    /// True when nodes split the phase into independently unwrapped segments.
    pub fn split_at_nodes(&self) -> bool {
        self.segments > 1
    }

    pub fn reconstruct(&self) -> ComplexField {
        let values = self
            .amplitude
            .iter()
            .zip(&self.action)
            .map(|(r, s)| Complex64::from_polar(*r, s / self.hbar))
            .collect();
        ComplexField { grid: self.grid, values, time: self.time }
    }

    /// Points away from nodes (default guard of ten spacings) and from the grid ends.
    pub fn guard_mask(&self, radius: usize) -> Vec<bool> {
        let mut mask = node_guard_mask(&self.grid, &self.nodes, default_node_guard(&self.grid), radius);
        for (m, d) in mask.iter_mut().zip(&self.defined) {
            *m &= *d;
        }
        mask
    }
}

fn wrap_phase(d: f64) -> f64 {
    d - 2.0 * PI * (d / (2.0 * PI)).round()
}

pub fn madelung_decompose(field: &ComplexField, cfg: &BoxConfig) -> Result<MadelungPair> {
    cfg.validate()?;
    let n = field.values.len();
    let amplitude = field.amplitude();
    let defined: Vec<bool> = amplitude.iter().map(|&r| r > 0.0).collect();
    let mut phase = vec![0.0; n];
    let mut segments = 0;
    let mut prev: Option<Complex64> = None;
    for i in 0..n {
        let z = field.values[i];
        if !defined[i] {
            prev = None;
            continue;
        }
        phase[i] = match prev {
            // a sign reversal between neighbours is a node: restart unwrapping there
            Some(p) if (p * z.conj()).re >= 0.0 => phase[i - 1] + wrap_phase(z.arg() - p.arg()),
            _ => {
                segments += 1;
                z.arg()
            }
        };
        prev = Some(z);
    }
    Ok(MadelungPair {
        grid: field.grid,
        time: field.time,
        hbar: cfg.hbar,
        action: phase.iter().map(|p| cfg.hbar * p).collect(),
        amplitude,
        defined,
        nodes: field.nodes(),
        segments,
    })
}

/// Velocity and current fields derived from one density.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermoFields {
    pub density: Vec<f64>,
    /// `ΔQ = −ħω·ln(P/P₀)`.
    pub heat: Vec<f64>,
    /// `ΔQ/ħω`.
    pub reduced_heat: Vec<f64>,
    /// Forward velocity `u = −(ħ/2m)·P′/P`.
    pub u: MaskedField,
    /// Osmotic velocity `ū = −u`.
    pub u_bar: MaskedField,
    /// `k_u = −R′/R`.
    pub k_u: MaskedField,
    /// Diffusion current `J = P·u`.
    pub current: MaskedField,
    /// Osmotic current `J̄ = P·ū`.
    pub osmotic_current: MaskedField,
}

/// Thermodynamic fields of `pair` relative to `reference` (uniform over the grid if `None`).
///
/// Logarithmic derivatives are taken of `ln P` directly, so `u·m/ħ` and `k_u` coincide to
/// rounding.
pub fn thermo_fields(pair: &MadelungPair, reference: Option<&[f64]>, cfg: &BoxConfig) -> Result<ThermoFields> {
    let grid = pair.grid;
    let density = pair.density();
    let uniform;
    let p0 = match reference {
        Some(p0) => p0,
        None => {
            uniform = vec![1.0 / (grid.x_max() - grid.x_min()); grid.len()];
            &uniform
        }
    };
    let positive: Vec<f64> = density.iter().map(|&p| if p > 0.0 { p } else { f64::MIN_POSITIVE }).collect();
    let heat = heat_from_probability(&positive, p0, cfg)?;
    let hw = cfg.hbar * cfg.omega();
    let reduced_heat = heat.iter().map(|q| q / hw).collect();

    let stencil = Stencil::Second;
    let mask = pair.guard_mask(stencil.radius());
    let dlog = log_derivative(&density, grid.spacing(), stencil);
    let k_u: Vec<f64> = dlog.iter().map(|d| -0.5 * d.unwrap_or(0.0)).collect();
    let mask: Vec<bool> = mask.iter().zip(&dlog).map(|(m, d)| *m && d.is_some()).collect();
    let u: Vec<f64> = k_u.iter().map(|k| cfg.hbar / cfg.mass * k).collect();
    let u_bar: Vec<f64> = u.iter().map(|v| -v).collect();
    let current: Vec<f64> = density.iter().zip(&u).map(|(p, v)| p * v).collect();
    let osmotic: Vec<f64> = density.iter().zip(&u_bar).map(|(p, v)| p * v).collect();
    let masked = |v: Vec<f64>| MaskedField::new(grid, v, mask.clone());
    Ok(ThermoFields {
        density,
        heat,
        reduced_heat,
        u: masked(u),
        u_bar: masked(u_bar),
        k_u: masked(k_u),
        current: masked(current),
        osmotic_current: masked(osmotic),
    })
}

/// Momentum fluctuation `δp = −(ħ/2)·P′/P`.
pub fn fluctuation_momentum(pair: &MadelungPair, cfg: &BoxConfig) -> Result<MaskedField> {
    cfg.validate()?;
    let stencil = Stencil::Second;
    let dlog = log_derivative(&pair.density(), pair.grid.spacing(), stencil);
    let mask: Vec<bool> = pair
        .guard_mask(stencil.radius())
        .into_iter()
        .zip(&dlog)
        .map(|(m, d)| m && d.is_some())
        .collect();
    let dp = dlog.iter().map(|d| -0.5 * cfg.hbar * d.unwrap_or(0.0)).collect();
    Ok(MaskedField::new(pair.grid, dp, mask))
}

fn check_positive(values: &[f64]) -> Result<()> {
    match values.iter().position(|&v| !(v > 0.0)) {
        Some(index) => Err(Error::NonPositiveDensity { index, value: values[index] }),
        None => Ok(()),
    }
}

/// `ΔQ = −ħω·ln(P/P₀)`.
pub fn heat_from_probability(p: &[f64], p0: &[f64], cfg: &BoxConfig) -> Result<Vec<f64>> {
    if p.len() != p0.len() {
        return Err(Error::GridMismatch);
    }
    check_positive(p)?;
    check_positive(p0)?;
    let hw = cfg.hbar * cfg.omega();
    Ok(p.iter().zip(p0).map(|(p, p0)| -hw * (p / p0).ln()).collect())
}

/// Inverse of [`heat_from_probability`]: `P = P₀·e^{−ΔQ/ħω}`.
pub fn probability_from_heat(heat: &[f64], p0: &[f64], cfg: &BoxConfig) -> Result<Vec<f64>> {
    if heat.len() != p0.len() {
        return Err(Error::GridMismatch);
    }
    check_positive(p0)?;
    let hw = cfg.hbar * cfg.omega();
    Ok(heat.iter().zip(p0).map(|(q, p0)| p0 * (-q / hw).exp()).collect())
}

fn all_interior(grid: &Grid, radius: usize) -> Vec<bool> {
    (0..grid.len()).map(|i| i >= radius && i + radius < grid.len()).collect()
}

/// Shrinks a mask so that every kept point has all stencil neighbours kept as well.
fn erode(mask: &[bool], radius: usize) -> Vec<bool> {
    let n = mask.len();
    (0..n)
        .map(|i| i >= radius && i + radius < n && mask[i - radius..=i + radius].iter().all(|&m| m))
        .collect()
}

/// `u = Q′/(2ωm)` with second-order differences.
pub fn u_from_heat(q: &[f64], grid: &Grid, cfg: &BoxConfig) -> Result<MaskedField> {
    u_from_heat_with(q, grid, cfg, Stencil::Second)
}

pub fn u_from_heat_with(q: &[f64], grid: &Grid, cfg: &BoxConfig, stencil: Stencil) -> Result<MaskedField> {
    cfg.validate()?;
    if q.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    let d = stencil.first(q, grid.spacing());
    let scale = 1.0 / (2.0 * cfg.omega() * cfg.mass);
    Ok(MaskedField::new(*grid, d.iter().map(|v| scale * v).collect(), all_interior(grid, stencil.radius())))
}

/// Quantum potential from the forward velocity, `U = (ħ/2)·u′ − m·u²/2`.
///
/// This follows from `u = −(ħ/m)·R′/R` and `R″/R = (R′/R)′ + (R′/R)²`.
pub fn quantum_potential_from_u(u: &MaskedField, cfg: &BoxConfig) -> Result<MaskedField> {
    cfg.validate()?;
    let stencil = Stencil::Second;
    let du = stencil.first(&u.values, u.grid.spacing());
    let values = u
        .values
        .iter()
        .zip(&du)
        .map(|(v, dv)| 0.5 * cfg.hbar * dv - 0.5 * cfg.mass * v * v)
        .collect();
    Ok(MaskedField::new(u.grid, values, erode(&u.included, stencil.radius())))
}

/// `Q″ − (Q′)²/(2ħω)`, which vanishes exactly when the heat field carries no quantum potential.
pub fn vanishing_u_residual(q: &[f64], grid: &Grid, cfg: &BoxConfig) -> Result<MaskedField> {
    cfg.validate()?;
    if q.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    let stencil = Stencil::Second;
    let h = grid.spacing();
    let (d1, d2) = (stencil.first(q, h), stencil.second(q, h));
    let hw = cfg.hbar * cfg.omega();
    let values = d1.iter().zip(&d2).map(|(a, b)| b - a * a / (2.0 * hw)).collect();
    Ok(MaskedField::new(*grid, values, all_interior(grid, stencil.radius())))
}

/// `(P/2ωm)·[Q″ − (Q′)²/ħω]`, the density rate driven by the heat field.
pub fn density_rate_from_heat(p: &[f64], q: &[f64], grid: &Grid, cfg: &BoxConfig) -> Result<MaskedField> {
    let stencil = Stencil::Second;
    let h = grid.spacing();
    let (d1, d2) = (stencil.first(q, h), stencil.second(q, h));
    let hw = cfg.hbar * cfg.omega();
    let scale = 1.0 / (2.0 * cfg.omega() * cfg.mass);
    let values = p
        .iter()
        .zip(d1.iter().zip(&d2))
        .map(|(p, (a, b))| scale * p * (b - a * a / hw))
        .collect();
    Ok(MaskedField::new(*grid, values, all_interior(grid, stencil.radius())))
}

/// `−(P/2ωm)·Q″`, the reduced rate valid when [`vanishing_u_residual`] is zero.
pub fn density_rate_reduced(p: &[f64], q: &[f64], grid: &Grid, cfg: &BoxConfig) -> Result<MaskedField> {
    let stencil = Stencil::Second;
    let d2 = stencil.second(q, grid.spacing());
    let scale = 1.0 / (2.0 * cfg.omega() * cfg.mass);
    let values = p.iter().zip(&d2).map(|(p, b)| -scale * p * b).collect();
    Ok(MaskedField::new(*grid, values, all_interior(grid, stencil.radius())))
}

/// Fick current `J = −D·P′`.
pub fn fick_current(p: &[f64], grid: &Grid, cfg: &BoxConfig) -> MaskedField {
    let stencil = Stencil::Second;
    let d = stencil.first(p, grid.spacing());
    let dc = cfg.diffusivity();
    MaskedField::new(*grid, d.iter().map(|v| -dc * v).collect(), all_interior(grid, stencil.radius()))
}

/// Osmotic current `J̄ = +D·P′`, the exact negative of [`fick_current`].
pub fn osmotic_current(p: &[f64], grid: &Grid, cfg: &BoxConfig) -> MaskedField {
    let j = fick_current(p, grid, cfg);
    MaskedField::new(j.grid, j.values.iter().map(|v| -v).collect(), j.included)
}

fn require_three<T>(series: &[T]) -> Result<()> {
    if series.len() < 3 {
        Err(Error::Arity { needed: 3, got: series.len() })
    } else {
        Ok(())
    }
}

/// Continuity residual `∂P/∂t + J′` with `J = −D·P′`, at the middle of three densities.
pub fn continuity_residual(p_series: &[Vec<f64>], times: &[f64], grid: &Grid, cfg: &BoxConfig) -> Result<MaskedField> {
    require_three(p_series)?;
    let stencil = Stencil::Second;
    let h = grid.spacing();
    let ts = [times[0], times[1], times[2]];
    let d2 = stencil.second(&p_series[1], h);
    let dc = cfg.diffusivity();
    let values = (0..grid.len())
        .map(|i| middle_time_derivative([p_series[0][i], p_series[1][i], p_series[2][i]], ts) - dc * d2[i])
        .collect();
    Ok(MaskedField::new(*grid, values, all_interior(grid, stencil.radius())))
}

/// Heat-equation residual `Q″ − (1/D)·∂Q/∂t` at the middle of three samples.
pub fn heat_equation_residual(series: &[ComplexField], cfg: &BoxConfig, stencil: Stencil) -> Result<MaskedComplexField> {
    cfg.validate()?;
    require_three(series)?;
    let grid = series[1].grid;
    if series.iter().any(|f| f.grid != grid) {
        return Err(Error::GridMismatch);
    }
    let ts = [series[0].time, series[1].time, series[2].time];
    let d2 = stencil.second(&series[1].values, grid.spacing());
    let inv_d = 1.0 / cfg.diffusivity();
    let values = (0..grid.len())
        .map(|i| {
            let dt = middle_time_derivative([series[0].values[i], series[1].values[i], series[2].values[i]], ts);
            d2[i] - dt * inv_d
        })
        .collect();
    Ok(MaskedComplexField { grid, values, included: all_interior(&grid, stencil.radius()) })
}

/// Actions of three pairs with each point unwrapped in time about the middle sample.
fn time_unwrapped_actions(pairs: &[MadelungPair]) -> [Vec<f64>; 3] {
    let hbar = pairs[1].hbar;
    let mid = &pairs[1].action;
    let align = |other: &[f64]| -> Vec<f64> {
        other
            .iter()
            .zip(mid)
            .map(|(s, m)| m + hbar * wrap_phase((s - m) / hbar))
            .collect()
    };
    [align(&pairs[0].action), mid.clone(), align(&pairs[2].action)]
}

fn check_series(pairs: &[MadelungPair], potential: &[f64]) -> Result<Grid> {
    require_three(pairs)?;
    let grid = pairs[1].grid;
    if pairs.iter().any(|p| p.grid != grid) || potential.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    Ok(grid)
}

/// Hamilton–Jacobi residual `∂S/∂t + (S′)²/2m + V + U` at the middle of three pairs,
/// with `U = −(ħ²/2m)·R″/R` from `stencil`.
pub fn hamilton_jacobi_residual(
    pairs: &[MadelungPair],
    potential: &[f64],
    cfg: &BoxConfig,
    stencil: Stencil,
) -> Result<MaskedField> {
    cfg.validate()?;
    let grid = check_series(pairs, potential)?;
    let h = grid.spacing();
    let ts = [pairs[0].time, pairs[1].time, pairs[2].time];
    let s = time_unwrapped_actions(pairs);
    let ds = stencil.first(&s[1], h);
    let r = &pairs[1].amplitude;
    let d2r = stencil.second(r, h);
    let m = cfg.mass;
    let values = (0..grid.len())
        .map(|i| {
            let st = middle_time_derivative([s[0][i], s[1][i], s[2][i]], ts);
            let u = -cfg.hbar * cfg.hbar / (2.0 * m) * d2r[i] / r[i];
            st + ds[i] * ds[i] / (2.0 * m) + potential[i] + u
        })
        .collect();
    Ok(MaskedField::new(grid, values, hj_mask(pairs, stencil)))
}

fn hj_mask(pairs: &[MadelungPair], stencil: Stencil) -> Vec<bool> {
    let masks: Vec<Vec<bool>> = pairs[..3].iter().map(|p| p.guard_mask(stencil.radius())).collect();
    (0..pairs[1].grid.len()).map(|i| masks.iter().all(|m| m[i])).collect()
}

/// Reduced heat field carried by the action, `Q̃ = −2S/ħ`, for each of three pairs
/// (time-unwrapped about the middle one).
pub fn heat_field_from_action(pairs: &[MadelungPair]) -> Result<Vec<Vec<f64>>> {
    require_three(pairs)?;
    let hbar = pairs[1].hbar;
    Ok(time_unwrapped_actions(pairs)
        .into_iter()
        .map(|s| s.iter().map(|v| -2.0 * v / hbar).collect())
        .collect())
}

/// Hamilton–Jacobi residual with the quantum potential written through a reduced heat field,
/// `U = −(ħ²/4m)·{Q̃″ − (1/D)·∂Q̃/∂t}`; `heat` holds `Q̃` at the times of `pairs`.
pub fn hamilton_jacobi_residual_heat_form(
    pairs: &[MadelungPair],
    heat: &[Vec<f64>],
    potential: &[f64],
    cfg: &BoxConfig,
    stencil: Stencil,
) -> Result<MaskedField> {
    cfg.validate()?;
    let grid = check_series(pairs, potential)?;
    require_three(heat)?;
    if heat.iter().any(|q| q.len() != grid.len()) {
        return Err(Error::GridMismatch);
    }
    let h = grid.spacing();
    let ts = [pairs[0].time, pairs[1].time, pairs[2].time];
    let s = time_unwrapped_actions(pairs);
    let ds = stencil.first(&s[1], h);
    let d2q = stencil.second(&heat[1], h);
    let m = cfg.mass;
    let inv_d = 1.0 / cfg.diffusivity();
    let values = (0..grid.len())
        .map(|i| {
            let st = middle_time_derivative([s[0][i], s[1][i], s[2][i]], ts);
            let qt = middle_time_derivative([heat[0][i], heat[1][i], heat[2][i]], ts);
            let u = -cfg.hbar * cfg.hbar / (4.0 * m) * (d2q[i] - inv_d * qt);
            st + ds[i] * ds[i] / (2.0 * m) + potential[i] + u
        })
        .collect();
    Ok(MaskedField::new(grid, values, hj_mask(pairs, stencil)))
}

/// Both sides of the averaged identity `⟨|ψ′/ψ|²⟩ = ⟨(P′/2P)² + (S′/ħ)²⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AverageIdentity {
    pub lhs: f64,
    pub rhs: f64,
    /// Probability mass at excluded points.
    pub excluded_mass: f64,
    /// Set when more than 10% of the mass was excluded.
    pub node_dominated: bool,
}

impl AverageIdentity {
    pub fn relative_gap(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.lhs.abs().max(self.rhs.abs()).max(f64::MIN_POSITIVE)
    }
}

/// Density-weighted averages of both sides, normalized by the included probability mass.
///
/// `periodic` treats the grid as one period of a periodic field (last point excluded as
/// the image of the first), so plane waves have no boundary.
pub fn average_identity_check(pair: &MadelungPair, cfg: &BoxConfig, periodic: bool) -> Result<AverageIdentity> {
    cfg.validate()?;
    let stencil = Stencil::Eighth;
    let h = pair.grid.spacing();
    let n = pair.grid.len();
    let psi = pair.reconstruct().values;
    let r = &pair.amplitude;
    let s = &pair.action;
    let count = if periodic { n - 1 } else { n };
    let (dpsi, dr, ds) = if periodic {
        (
            periodic_first(&psi[..count], h, stencil),
            periodic_first(&r[..count], h, stencil),
            periodic_first_unwrapped(&s[..count], h, stencil, pair.hbar),
        )
    } else {
        (stencil.first(&psi, h), stencil.first(r, h), stencil.first(s, h))
    };
    let mask = if periodic {
        pair.defined[..count].to_vec()
    } else {
        pair.guard_mask(stencil.radius())
    };
    let (mut lhs, mut rhs, mut mass, mut excluded) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..count {
        let p = r[i] * r[i];
        if !mask[i] {
            excluded += p;
            continue;
        }
        mass += p;
        lhs += (dpsi[i] / psi[i]).norm_sqr() * p;
        let k = ds[i] / pair.hbar;
        rhs += (dr[i] * dr[i] / p + k * k) * p;
    }
    let total = mass + excluded;
    let excluded_mass = if total > 0.0 { excluded / total } else { 0.0 };
    Ok(AverageIdentity { lhs: lhs / mass, rhs: rhs / mass, excluded_mass, node_dominated: excluded_mass > 0.1 })
}

fn periodic_first<T>(values: &[T], h: f64, stencil: Stencil) -> Vec<T>
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let r = stencil.radius();
    let n = values.len();
    let mut padded = Vec::with_capacity(n + 2 * r);
    padded.extend((0..r).map(|j| values[(n - r + j) % n]));
    padded.extend_from_slice(values);
    padded.extend((0..r).map(|j| values[j % n]));
    stencil.first(&padded, h)[r..r + n].to_vec()
}

/// Periodic derivative of an action whose total winding across the period is removed first.
fn periodic_first_unwrapped(s: &[f64], h: f64, stencil: Stencil, hbar: f64) -> Vec<f64> {
    let n = s.len();
    // winding chosen so that the step across the seam matches a neighbouring step
    let seam = s[0] - s[n - 1];
    let step = s[1] - s[0];
    let winding = hbar * 2.0 * PI * ((step - seam) / (2.0 * PI * hbar)).round();
    let slope = winding / (n as f64 * h);
    let detrended: Vec<f64> = s.iter().enumerate().map(|(i, v)| v - slope * i as f64 * h).collect();
    periodic_first(&detrended, h, stencil).into_iter().map(|d| d + slope).collect()
}
