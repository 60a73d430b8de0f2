use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::{mode_value, BoxConfig};
use crate::error::{invalid, Result};
use crate::grid::Grid;
use crate::quadrature::{adaptive_simpson, simpson, GaussLegendre, QuadratureRule};

/// Below this value of `|p ∓ p_n|·L/ħ` the closed form is evaluated through its finite limit.
pub const DEFAULT_SINGULARITY_GUARD: f64 = 1e-4;

/// Flag a momentum grid as under-resolved when `Δp` exceeds this fraction of `πħ/L`.
const RESOLUTION_FRACTION: f64 = 0.1;

/// Momentum cutoff, in units of `p_n`, for the normalization integral.
const NORMALIZATION_CUTOFF: f64 = 40.0;

/// `(e^{iθ} − 1)/(iθ)`, with its Taylor series near `θ = 0`.
fn phase_quotient(theta: f64) -> Complex64 {
    if theta.abs() < 1e-3 {
        let t2 = theta * theta;
        Complex64::new(1.0 - t2 / 6.0 + t2 * t2 / 120.0, theta / 2.0 - theta * t2 / 24.0)
    } else {
        (Complex64::from_polar(1.0, theta) - 1.0) / Complex64::new(0.0, theta)
    }
}

/// Momentum-space amplitude `φ_n(p)` of the stationary state, unitary convention
/// `φ(p) = (2πħ)^{-1/2} ∫ ψ(x) e^{−ipx/ħ} dx`.
///
/// Away from `p = ±p_n` the three-term bracket
/// `−e^{−i(p_n+p)L/ħ}/(p_n+p) − e^{i(p_n−p)L/ħ}/(p_n−p) + 2p_n/(p_n²−p²)` is evaluated
/// directly; within `guard` (in units of `ħ/L`) of either pole it is rewritten through
/// `(e^{iθ} − 1)/(iθ)`, whose limit is finite.
pub fn momentum_amplitude_closed_form(cfg: &BoxConfig, p: f64, guard: f64) -> Complex64 {
    let (hbar, l) = (cfg.hbar, cfg.length);
    let pn = cfg.momentum();
    let prefactor = (hbar / (4.0 * PI * l)).sqrt();
    let theta_minus = (pn - p) * l / hbar;
    let theta_plus = -(pn + p) * l / hbar;
    let bracket = if theta_minus.abs() < guard || theta_plus.abs() < guard {
        -Complex64::new(0.0, l / hbar) * (phase_quotient(theta_minus) - phase_quotient(theta_plus))
    } else {
        -Complex64::from_polar(1.0, theta_plus) / (pn + p)
            - Complex64::from_polar(1.0, theta_minus) / (pn - p)
            + 2.0 * pn / (pn * pn - p * p)
    };
    prefactor * bracket
}

/// `|φ_n(p)|²` from the closed form with the default singularity guard.
pub fn momentum_density_closed_form(cfg: &BoxConfig, p: f64) -> f64 {
    momentum_density_closed_form_guarded(cfg, p, DEFAULT_SINGULARITY_GUARD)
}

pub fn momentum_density_closed_form_guarded(cfg: &BoxConfig, p: f64, guard: f64) -> f64 {
    momentum_amplitude_closed_form(cfg, p, guard).norm_sqr()
}

/// `φ_n(p)` by direct quadrature of the position-space state over `[0, L]`.
///
/// Gauss–Legendre panels are sized so that each covers at most half an oscillation
/// of the integrand.
pub fn momentum_amplitude_numeric(cfg: &BoxConfig, p: f64, rule: &GaussLegendre) -> Complex64 {
    let hbar = cfg.hbar;
    let fastest = cfg.wavenumber() + p.abs() / hbar;
    let panels = (fastest * cfg.length / PI).ceil() as usize + 2;
    let integral: Complex64 = rule.integrate(0.0, cfg.length, panels, |x| {
        mode_value(cfg, x, 0.0) * Complex64::from_polar(1.0, -p * x / hbar)
    });
    integral / (2.0 * PI * hbar).sqrt()
}

/// Sampled momentum density `|φ(p)|²` on a uniform grid symmetric about zero.
#[derive(Debug, Clone, Serialize)]
pub struct MomentumSpectrum {
    pub p_grid: Grid,
    pub density: Vec<f64>,
    pub rule: QuadratureRule,
    /// Set when `Δp` is too coarse to follow the `cos(pL/ħ)` oscillation.
    pub under_resolved: bool,
}

impl MomentumSpectrum {
    /// Spectrum sampled from the closed form.
    pub fn closed_form(cfg: &BoxConfig, p_grid: &Grid) -> Result<Self> {
        check_momentum_grid(p_grid)?;
        let density = p_grid.points().map(|p| momentum_density_closed_form(cfg, p)).collect();
        Ok(Self {
            p_grid: *p_grid,
            density,
            rule: QuadratureRule::CompositeSimpson,
            under_resolved: is_under_resolved(cfg, p_grid),
        })
    }

    /// `∫|φ|² dp` over the sampled range (composite Simpson).
    pub fn total_probability(&self) -> f64 {
        simpson(&self.density, self.p_grid.spacing())
    }

    /// Mass in `[a, b]` from the piecewise-linear interpolant of the samples.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        let g = &self.p_grid;
        let (a, b) = (a.max(g.x_min()), b.min(g.x_max()));
        if b <= a {
            return 0.0;
        }
        let h = g.spacing();
        let first = (((a - g.x_min()) / h).floor() as usize).min(g.len() - 2);
        let mut mass = 0.0;
        for i in first..g.len() - 1 {
            let (x0, x1) = (g.x(i), g.x(i + 1));
            if x0 >= b {
                break;
            }
            let lo = a.max(x0);
            let hi = b.min(x1);
            if hi <= lo {
                continue;
            }
            let (f0, f1) = (self.density[i], self.density[i + 1]);
            let interp = |x: f64| f0 + (f1 - f0) * (x - x0) / (x1 - x0);
            mass += 0.5 * (hi - lo) * (interp(lo) + interp(hi));
        }
        mass
    }
}

fn check_momentum_grid(p_grid: &Grid) -> Result<()> {
    let scale = p_grid.x_max().abs().max(p_grid.x_min().abs());
    if (p_grid.x_min() + p_grid.x_max()).abs() > 1e-12 * scale {
        return Err(invalid(
            "p_grid",
            format!("must be symmetric about 0, got [{}, {}]", p_grid.x_min(), p_grid.x_max()),
        ));
    }
    Ok(())
}

fn is_under_resolved(cfg: &BoxConfig, p_grid: &Grid) -> bool {
    p_grid.spacing() > RESOLUTION_FRACTION * PI * cfg.hbar / cfg.length
}

/// `|φ_n(p)|²` on `p_grid` by numerical Fourier transform of the position-space state;
/// independent of the closed form.
pub fn momentum_density_numeric(cfg: &BoxConfig, p_grid: &Grid) -> Result<MomentumSpectrum> {
    cfg.validate()?;
    check_momentum_grid(p_grid)?;
    let rule = GaussLegendre::new(20);
    let density = p_grid.points().map(|p| momentum_amplitude_numeric(cfg, p, &rule).norm_sqr()).collect();
    Ok(MomentumSpectrum {
        p_grid: *p_grid,
        density,
        rule: QuadratureRule::GaussLegendre,
        under_resolved: is_under_resolved(cfg, p_grid),
    })
}

/// Probability mass within `±window·p_n` of the classical momenta `±p_n`.
///
/// When the two windows overlap (`window ≥ 1`) their union is counted once.
pub fn classical_limit_metric(spectrum: &MomentumSpectrum, cfg: &BoxConfig, window: f64) -> f64 {
    let pn = cfg.momentum();
    let w = window.max(0.0) * pn;
    let mass = if w >= pn {
        spectrum.mass_between(-pn - w, pn + w)
    } else {
        spectrum.mass_between(-pn - w, -pn + w) + spectrum.mass_between(pn - w, pn + w)
    };
    mass.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentumNormalization {
    /// `∫|φ|² dp` over `|p| ≤ cutoff`.
    pub truncated: f64,
    pub cutoff: f64,
    /// Expected mass beyond the cutoff from the `p⁻⁴` envelope, averaged over its oscillation.
    pub tail_estimate: f64,
    /// Upper bound on that mass (envelope maximum).
    pub tail_bound: f64,
}

impl MomentumNormalization {
    pub fn total(&self) -> f64 {
        self.truncated + self.tail_estimate
    }
}

/// Normalization of the closed-form momentum density.
///
/// The integral over `|p| ≤ 40 p_n` is split into panels of width `πħ/2L` (a quarter
/// oscillation) and each panel is integrated by adaptive Simpson. Beyond the cutoff the
/// density is `ħ/(4πL)·4p_n²(2 − 2(−1)ⁿcos(pL/ħ))/(p² − p_n²)²`, whose mass is
/// accounted for analytically.
pub fn momentum_normalization(cfg: &BoxConfig) -> MomentumNormalization {
    let pn = cfg.momentum();
    let cutoff = NORMALIZATION_CUTOFF * pn;
    let panel = 0.5 * PI * cfg.hbar / cfg.length;
    let panels = (2.0 * cutoff / panel).ceil() as usize;
    let width = 2.0 * cutoff / panels as f64;
    let f = |p: f64| momentum_density_closed_form(cfg, p);
    let tol = 1e-13 / panels as f64;
    let truncated: f64 = (0..panels)
        .map(|i| {
            let a = -cutoff + i as f64 * width;
            adaptive_simpson(&f, a, a + width, tol, 30)
        })
        .sum();
    // ∫_P^∞ dp/(p² − p_n²)² ≤ (1/3P³)·(P²/(P² − p_n²))²
    let envelope = (cutoff * cutoff / (cutoff * cutoff - pn * pn)).powi(2) / (3.0 * cutoff.powi(3));
    let scale = cfg.hbar / (4.0 * PI * cfg.length) * 4.0 * pn * pn;
    let tail_estimate = 2.0 * scale * 2.0 * envelope;
    MomentumNormalization { truncated, cutoff, tail_estimate, tail_bound: 2.0 * tail_estimate }
}
