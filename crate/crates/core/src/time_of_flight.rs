//! Free evolution of a box eigenstate after the walls are removed, and the recovery of the
//! classical momenta `±p_n` from the asymptotic packet positions.
//!
//! The initial state is the eigenstate zero-extended onto an open grid. It is propagated with
//! the exact free-particle phase `e^{−iħk²t/2m}` applied to its discrete Fourier transform, so
//! the discrete norm is conserved to rounding at every time.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::box_quantum::BoxConfig;
use crate::error::{invalid, Error, Result};
use crate::grid::{ComplexField, Grid};

/// Minimum number of samples per wavelength `2π/k_n` of the initial state; the resolved
/// wavenumbers then reach `8k_n`.
const MIN_POINTS_PER_WAVELENGTH: f64 = 16.0;

/// Largest tolerated drift of the discrete norm.
const NORM_DRIFT_LIMIT: f64 = 1e-4;

/// Fraction of the kinetic energy allowed in excluded (zero-density) points.
const EXCLUDED_ENERGY_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropagationRequest {
    pub cfg: BoxConfig,
    /// Open grid containing `[0, L]`, with `0` and `L` on grid points.
    pub open_grid: Grid,
    /// Output times, strictly increasing and starting at 0.
    pub times: Vec<f64>,
}

impl PropagationRequest {
    pub fn new(cfg: BoxConfig, open_grid: Grid, times: Vec<f64>) -> Result<Self> {
        cfg.validate()?;
        if times.first() != Some(&0.0) {
            return Err(invalid("times", "must start at 0"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(invalid("times", "must be finite and strictly increasing"));
        }
        box_indices(&cfg, &open_grid)?;
        if PI / open_grid.spacing() < 0.5 * MIN_POINTS_PER_WAVELENGTH * cfg.wavenumber() {
            return Err(invalid(
                "grid-points",
                format!(
                    "spacing {} resolves fewer than {MIN_POINTS_PER_WAVELENGTH} points per wavelength",
                    open_grid.spacing()
                ),
            ));
        }
        Ok(Self { cfg, open_grid, times })
    }

    /// Request with an automatically sized grid of `points_per_length` samples per box length
    /// (raised to the wavelength minimum if needed).
    ///
    /// The margin on each side is `X = max(1.5·p_n/m, v_max)·t_max`, where `v_max = πħ/(mh)`
    /// is the speed of the fastest resolved Fourier component, so that nothing wraps around
    /// the periodic domain before `t_max`.
    pub fn with_auto_grid(cfg: BoxConfig, times: Vec<f64>, points_per_length: usize) -> Result<Self> {
        cfg.validate()?;
        let wavelength_min = (MIN_POINTS_PER_WAVELENGTH * cfg.n as f64 / 2.0).ceil() as usize;
        // even, so that L/2 is a grid point
        let per_length = points_per_length.max(wavelength_min).max(8).next_multiple_of(2);
        let h = cfg.length / per_length as f64;
        let t_max = times.iter().copied().fold(0.0, f64::max);
        let v_max = PI * cfg.hbar / (cfg.mass * h);
        let margin = ((1.5 * cfg.classical_speed()).max(v_max) * t_max).max(cfg.length);
        let margin_cells = (margin / h).ceil() as usize;
        let x_min = -(margin_cells as f64) * h;
        let x_max = cfg.length + margin_cells as f64 * h;
        let grid = Grid::new(x_min, x_max, 2 * margin_cells + per_length + 1)?;
        Self::new(cfg, grid, times)
    }

    /// Angular wavenumbers of the discrete Fourier modes, in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        fft_wavenumbers(self.open_grid.len(), self.open_grid.spacing())
    }
}

fn fft_wavenumbers(n: usize, h: f64) -> Vec<f64> {
    let dk = 2.0 * PI / (n as f64 * h);
    (0..n)
        .map(|j| if j <= n / 2 { j as f64 * dk } else { (j as f64 - n as f64) * dk })
        .collect()
}

/// Indices of the grid points at `x = 0` and `x = L`.
fn box_indices(cfg: &BoxConfig, grid: &Grid) -> Result<(usize, usize)> {
    let h = grid.spacing();
    let locate = |x: f64| {
        let t = (x - grid.x_min()) / h;
        let i = t.round();
        ((t - i).abs() < 1e-6 && i >= 0.0 && (i as usize) < grid.len()).then_some(i as usize)
    };
    match (locate(0.0), locate(cfg.length)) {
        (Some(a), Some(b)) if a > 0 && b + 1 < grid.len() => Ok((a, b)),
        _ => Err(invalid(
            "open_grid",
            format!(
                "must contain [0, {}] strictly inside with both walls on grid points",
                cfg.length
            ),
        )),
    }
}

/// The eigenstate at `t = 0` on the open grid, zero outside `[0, L]`.
pub fn initial_state(cfg: &BoxConfig, grid: &Grid) -> Result<ComplexField> {
    let (a, b) = box_indices(cfg, grid)?;
    let inner = cfg.box_grid(b - a + 1)?;
    let profile = crate::box_quantum::mode_profile(cfg, &inner)?;
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (v, r) in values[a..=b].iter_mut().zip(profile) {
        *v = Complex64::new(r, 0.0);
    }
    ComplexField::new(*grid, values, 0.0)
}

/// Rectangle-rule norm `h·Σ|ψ|²`, the quantity conserved by the discrete propagator.
pub fn discrete_norm(field: &ComplexField) -> f64 {
    field.grid.spacing() * field.values.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// Fields at each requested time.
pub fn propagate_free(req: &PropagationRequest) -> Result<Vec<ComplexField>> {
    let grid = req.open_grid;
    let n = grid.len();
    let initial = initial_state(&req.cfg, &grid)?;
    let norm0 = discrete_norm(&initial);

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut spectrum = initial.values.clone();
    forward.process(&mut spectrum);

    let k = req.wavenumbers();
    let rate = req.cfg.hbar / (2.0 * req.cfg.mass);
    let mut out = Vec::with_capacity(req.times.len());
    for &t in &req.times {
        let values = if t == 0.0 {
            initial.values.clone()
        } else {
            let mut buf: Vec<Complex64> = spectrum
                .iter()
                .zip(&k)
                .map(|(c, k)| c * Complex64::from_polar(1.0 / n as f64, -rate * k * k * t))
                .collect();
            inverse.process(&mut buf);
            buf
        };
        let field = ComplexField::new(grid, values, t)?;
        let drift = (discrete_norm(&field) - norm0).abs();
        if !(drift <= NORM_DRIFT_LIMIT) {
            return Err(Error::SpectralResolution { drift });
        }
        out.push(field);
    }
    Ok(out)
}

/// `⟨p²⟩/2m` evaluated from the discrete Fourier coefficients.
pub fn momentum_space_energy(field: &ComplexField, cfg: &BoxConfig) -> f64 {
    let n = field.grid.len();
    let mut buf = field.values.clone();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    let k = fft_wavenumbers(n, field.grid.spacing());
    let (num, den) = buf.iter().zip(&k).fold((0.0, 0.0), |(a, b), (c, k)| {
        let w = c.norm_sqr();
        (a + k * k * w, b + w)
    });
    cfg.hbar * cfg.hbar / (2.0 * cfg.mass) * num / den
}

/// Largest `| |ψ(c+s)|² − |ψ(c−s)|² |` over grid points symmetric about `centre`.
pub fn max_asymmetry(field: &ComplexField, centre: f64) -> f64 {
    let g = &field.grid;
    let c = g.nearest_index(centre);
    let reach = c.min(g.len() - 1 - c);
    (1..=reach)
        .map(|s| (field.values[c + s].norm_sqr() - field.values[c - s].norm_sqr()).abs())
        .fold(0.0, f64::max)
}

/// Parabolic refinement of a discrete maximum at index `i`.
fn refine_peak(grid: &Grid, density: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= density.len() {
        return grid.x(i);
    }
    let (a, b, c) = (density[i - 1], density[i], density[i + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom < 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    grid.x(i) + shift.clamp(-0.5, 0.5) * grid.spacing()
}

/// Positions of the density maxima left and right of `centre`.
pub fn packet_peaks(field: &ComplexField, centre: f64) -> (f64, f64) {
    let density = field.density();
    let c = field.grid.nearest_index(centre);
    let argmax = |range: std::ops::Range<usize>| {
        range.max_by(|&i, &j| density[i].total_cmp(&density[j])).unwrap_or(c)
    };
    let left = argmax(0..c);
    let right = argmax(c + 1..density.len());
    (refine_peak(&field.grid, &density, left), refine_peak(&field.grid, &density, right))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PacketMomenta {
    pub time: f64,
    pub left_peak: f64,
    pub right_peak: f64,
    /// `m·(x_peak − L/2)/t` of the left packet (negative).
    pub left: f64,
    pub right: f64,
}

/// Time-of-flight momenta from the latest field.
///
/// Flight distances are measured from the box centre, where both packets start.
pub fn time_of_flight_momenta(fields: &[ComplexField], cfg: &BoxConfig) -> Result<PacketMomenta> {
    let last = fields.last().ok_or(Error::Arity { needed: 1, got: 0 })?;
    let t = last.time;
    if t <= 0.0 {
        return Err(Error::NotAsymptotic(format!("latest time is {t}")));
    }
    let centre = 0.5 * cfg.length;
    let (left_peak, right_peak) = packet_peaks(last, centre);
    if right_peak - left_peak <= cfg.length {
        return Err(Error::NotAsymptotic(format!(
            "peak separation {} does not exceed the box length at t = {t}",
            right_peak - left_peak
        )));
    }
    Ok(PacketMomenta {
        time: t,
        left_peak,
        right_peak,
        left: cfg.mass * (left_peak - centre) / t,
        right: cfg.mass * (right_peak - centre) / t,
    })
}

/// Largest residual of a least-squares line through `(t, x)` points, relative to the span of `x`.
pub fn linear_fit_residual(times: &[f64], positions: &[f64]) -> f64 {
    let n = times.len() as f64;
    let tm = times.iter().sum::<f64>() / n;
    let xm = positions.iter().sum::<f64>() / n;
    let (sxy, sxx) = times.iter().zip(positions).fold((0.0, 0.0), |(a, b), (t, x)| {
        (a + (t - tm) * (x - xm), b + (t - tm) * (t - tm))
    });
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let span = positions.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - positions.iter().copied().fold(f64::INFINITY, f64::min);
    let worst = times
        .iter()
        .zip(positions)
        .map(|(t, x)| (x - (xm + slope * (t - tm))).abs())
        .fold(0.0, f64::max);
    if span > 0.0 { worst / span } else { 0.0 }
}

/// Eighth-order central weights for the first derivative.
const PERIODIC_FIRST: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];

/// Kinetic/quantum-potential split of the energy at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySplit {
    pub time: f64,
    /// `⟨(S′)²/2m⟩`.
    pub kinetic: f64,
    /// `⟨U⟩ = (ħ²/2m)∫(R′)² dx`, the density-weighted quantum potential after integration by parts.
    pub quantum: f64,
    pub total: f64,
    /// `⟨U⟩/E_n`.
    pub quantum_share: f64,
    /// Fraction of the total carried by points where the density vanishes; these are
    /// attributed to `quantum` through the limit at a simple node.
    pub excluded_fraction: f64,
    pub reliable: bool,
}

/// Energy split per field.
///
/// With `ψ′ = (R′ + iRS′/ħ)e^{iS/ħ}`, the pointwise identity
/// `|ψ′|² = (Re ψ̄ψ′)²/|ψ|² + (Im ψ̄ψ′)²/|ψ|²` separates `(R′)²` from `R²(S′/ħ)²`.
/// Derivatives are eighth-order periodic central differences, which commute with the
/// propagator, so the total is conserved to rounding.
pub fn energy_bookkeeping(fields: &[ComplexField], cfg: &BoxConfig) -> Result<Vec<EnergySplit>> {
    cfg.validate()?;
    let scale = cfg.hbar * cfg.hbar / (2.0 * cfg.mass);
    fields
        .iter()
        .map(|f| {
            let n = f.values.len();
            let h = f.grid.spacing();
            let peak = f.values.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
            let floor = 1e-28 * peak;
            let (mut kin, mut pot, mut excl) = (0.0, 0.0, 0.0);
            for i in 0..n {
                let d = PERIODIC_FIRST
                    .iter()
                    .enumerate()
                    .map(|(j, c)| (f.values[(i + j + 1) % n] - f.values[(i + n - j - 1) % n]) * *c)
                    .sum::<Complex64>()
                    / h;
                let psi = f.values[i];
                let p = psi.norm_sqr();
                if p > floor {
                    let c = psi.conj() * d;
                    kin += c.im * c.im / p;
                    pot += c.re * c.re / p;
                } else {
                    // at a simple zero R²(S′)² → 0 and (R′)² → |ψ′|²
                    excl += d.norm_sqr();
                }
            }
            let kinetic = scale * h * kin;
            let quantum = scale * h * (pot + excl);
            let total = kinetic + quantum;
            let excluded_fraction = if total > 0.0 { scale * h * excl / total } else { 0.0 };
            Ok(EnergySplit {
                time: f.time,
                kinetic,
                quantum,
                total,
                quantum_share: quantum / cfg.energy(),
                excluded_fraction,
                reliable: excluded_fraction <= EXCLUDED_ENERGY_LIMIT,
            })
        })
        .collect()
}
