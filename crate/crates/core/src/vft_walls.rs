//! Work done on a boxed particle by a slowly moving wall, and the dissipation/absorption
//! probability ratio `e^{−2δL/L}`.

use serde::Serialize;

use crate::box_quantum::BoxConfig;
use crate::error::{invalid, Result};

/// Default bound on `|δL|/L` for the slow-wall (quasi-stationary) regime.
pub const DEFAULT_ADIABATIC_THRESHOLD: f64 = 0.1;

/// Displacement `δL` of the wall of the box described by `cfg` (length `L`, mode `n`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WallMove {
    pub cfg: BoxConfig,
    pub delta: f64,
}

impl WallMove {
    pub fn new(cfg: BoxConfig, delta: f64) -> Result<Self> {
        cfg.validate()?;
        if !delta.is_finite() || cfg.length + delta <= 0.0 {
            return Err(invalid("dL", format!("L + dL must stay positive (L = {}, dL = {delta})", cfg.length)));
        }
        Ok(Self { cfg, delta })
    }

    pub fn length(&self) -> f64 {
        self.cfg.length
    }

    pub fn final_length(&self) -> f64 {
        self.cfg.length + self.delta
    }

    /// `δL/L`.
    pub fn relative(&self) -> f64 {
        self.delta / self.cfg.length
    }
}

/// `E_n` of the box at length `length`.
pub fn level_energy(cfg: &BoxConfig, length: f64) -> f64 {
    cfg.with_length(length).energy()
}

/// `∂E_n/∂L = −n²π²ħ²/(mL³)`.
pub fn level_slope(cfg: &BoxConfig) -> f64 {
    let n = cfg.n as f64;
    let l = cfg.length;
    -(n * n) * std::f64::consts::PI.powi(2) * cfg.hbar * cfg.hbar / (cfg.mass * l * l * l)
}

/// Work on the particle from the kinetic-energy argument, `ΔW = −2·E_kin·δL/L`.
/// Compression (`δL < 0`) does positive work.
pub fn work_classical(m: &WallMove) -> f64 {
    -2.0 * m.cfg.energy() * m.delta / m.cfg.length
}

/// Work as the first-order shift of the level, `ΔW = (∂E_n/∂L)·δL`.
pub fn work_quantum(m: &WallMove) -> f64 {
    level_slope(&m.cfg) * m.delta
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelShift {
    /// `E_n(L + δL) − E_n(L)`.
    pub exact: f64,
    /// `(∂E_n/∂L)·δL`.
    pub first_order: f64,
    /// `|δL|/L` exceeded the slow-wall threshold.
    pub exceeds_threshold: bool,
}

impl LevelShift {
    /// `|first_order − exact| / E_n(L)`.
    pub fn relative_error(&self, initial_energy: f64) -> f64 {
        (self.first_order - self.exact).abs() / initial_energy
    }
}

/// Shift of level `n` for the move, assuming the particle stays in the same level
/// (transitions to other levels are neglected).
pub fn adiabatic_level_shift(m: &WallMove) -> LevelShift {
    adiabatic_level_shift_with(m, DEFAULT_ADIABATIC_THRESHOLD)
}

pub fn adiabatic_level_shift_with(m: &WallMove, threshold: f64) -> LevelShift {
    LevelShift {
        exact: level_energy(&m.cfg, m.final_length()) - m.cfg.energy(),
        first_order: work_quantum(m),
        exceeds_threshold: m.relative().abs() > threshold,
    }
}

/// `p(A)/p(−A) = e^{−2δL/L}` for dissipated versus absorbed heat; above 1 under compression.
pub fn vft_ratio(m: &WallMove) -> f64 {
    (-2.0 * m.relative()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorkReport {
    pub length: f64,
    pub delta: f64,
    pub work_classical: f64,
    pub work_quantum: f64,
    /// `E_n(L + δL) − E_n(L)`.
    pub work_numeric: f64,
    pub level_shift: f64,
    pub dissipation_ratio: f64,
    pub exceeds_threshold: bool,
}

pub fn work_report(m: &WallMove) -> WorkReport {
    let shift = adiabatic_level_shift(m);
    WorkReport {
        length: m.length(),
        delta: m.delta,
        work_classical: work_classical(m),
        work_quantum: work_quantum(m),
        work_numeric: shift.exact,
        level_shift: shift.first_order,
        dissipation_ratio: vft_ratio(m),
        exceeds_threshold: shift.exceeds_threshold,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleReport {
    pub steps: Vec<WorkReport>,
    /// Sum of exact level shifts.
    pub cumulative_exact: f64,
    /// Sum of first-order shifts.
    pub cumulative_first_order: f64,
    /// Number of steps above the slow-wall threshold.
    pub threshold_violations: usize,
}

/// Applies `moves` in order; each move must start where the previous one ended.
pub fn wall_schedule_energy(moves: &[WallMove]) -> Result<ScheduleReport> {
    for pair in moves.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let expected = a.final_length();
        if (b.length() - expected).abs() > 1e-12 * expected || b.cfg.with_length(expected) != a.cfg.with_length(expected) {
            return Err(invalid("moves", format!("step starts at L = {} but the previous ended at {expected}", b.length())));
        }
    }
    let steps: Vec<WorkReport> = moves.iter().map(work_report).collect();
    Ok(ScheduleReport {
        cumulative_exact: steps.iter().map(|s| s.work_numeric).sum(),
        cumulative_first_order: steps.iter().map(|s| s.level_shift).sum(),
        threshold_violations: steps.iter().filter(|s| s.exceeds_threshold).count(),
        steps,
    })
}

/// `steps` equal moves taking the box from `cfg.length` to `final_length`.
pub fn uniform_schedule(cfg: &BoxConfig, final_length: f64, steps: usize) -> Result<Vec<WallMove>> {
    if steps == 0 {
        return Err(invalid("steps", "need at least one step"));
    }
    let l0 = cfg.length;
    let step = (final_length - l0) / steps as f64;
    (0..steps)
        .map(|i| {
            let start = if i == 0 { l0 } else { l0 + i as f64 * step };
            let end = if i + 1 == steps { final_length } else { l0 + (i + 1) as f64 * step };
            WallMove::new(cfg.with_length(start), end - start)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mv(l: f64, d: f64, n: u32) -> WallMove {
        WallMove::new(BoxConfig { length: l, ..BoxConfig::natural(n) }, d).unwrap()
    }

    #[test]
    fn compression_work_example() {
        let m = mv(1.0, -0.01, 1);
        assert!((work_classical(&m) - PI * PI * 0.01).abs() < 1e-15);
        assert!((work_classical(&mv(1.0, 0.01, 1)) + work_classical(&m)).abs() < 1e-15);
        assert_eq!(work_classical(&mv(1.0, 0.0, 1)), 0.0);
    }

    #[test]
    fn work_scales_with_mode_squared() {
        let a = work_quantum(&mv(1.3, 0.02, 2));
        let b = work_quantum(&mv(1.3, 0.02, 4));
        assert!((b / a - 4.0).abs() < 1e-14);
    }

    #[test]
    fn invalid_moves() {
        assert!(WallMove::new(BoxConfig::natural(1), -1.0).is_err());
        assert!(WallMove::new(BoxConfig::natural(1), f64::NAN).is_err());
    }

    #[test]
    fn level_shift_examples() {
        let half = adiabatic_level_shift(&mv(1.0, -0.5, 1));
        let e = BoxConfig::natural(1).energy();
        assert!((half.exact - 3.0 * e).abs() < 1e-12);
        assert!(half.exceeds_threshold);
        let small = adiabatic_level_shift(&mv(1.0, 0.01, 3));
        assert!(small.relative_error(BoxConfig::natural(3).energy()) < 4e-4);
        assert!(!small.exceeds_threshold);
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(vft_ratio(&mv(1.0, 0.0, 1)), 1.0);
        assert!((vft_ratio(&mv(1.0, -0.1, 1)) - 0.2f64.exp()).abs() < 1e-15);
        assert!(vft_ratio(&mv(2.0, 0.1, 1)) < 1.0);
    }

    #[test]
    fn schedule_telescopes() {
        let cfg = BoxConfig::natural(1);
        let moves = uniform_schedule(&cfg, 0.5, 100).unwrap();
        let rep = wall_schedule_energy(&moves).unwrap();
        assert!((rep.cumulative_exact - 1.5 * PI * PI).abs() < 1e-11);
        assert_eq!(rep.threshold_violations, 0);

        let mut there_and_back = uniform_schedule(&cfg, 1.7, 7).unwrap();
        there_and_back.extend(uniform_schedule(&cfg.with_length(1.7), 1.0, 5).unwrap());
        let rep = wall_schedule_energy(&there_and_back).unwrap();
        assert!(rep.cumulative_exact.abs() < 1e-13);
    }

    #[test]
    fn discontinuous_schedule_is_rejected() {
        let moves = [mv(1.0, 0.1, 1), mv(1.2, 0.1, 1)];
        assert!(wall_schedule_energy(&moves).is_err());
    }
}
