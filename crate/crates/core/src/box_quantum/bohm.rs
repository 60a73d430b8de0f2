use super::BoxConfig;
use crate::diff::Stencil;
use crate::error::Result;
use crate::grid::{default_node_guard, node_guard_mask, ComplexField, MaskedField};

fn guard_mask(field: &ComplexField, guard: f64, stencil: Stencil) -> Vec<bool> {
    let nodes = field.nodes();
    let mut mask = node_guard_mask(&field.grid, &nodes, guard, stencil.radius());
    for (keep, v) in mask.iter_mut().zip(&field.values) {
        if v.norm_sqr() == 0.0 {
            *keep = false;
        }
    }
    mask
}

/// Bohmian velocity `v = (ħ/m)·Im(ψ′/ψ)` with second-order differences and a node guard of
/// ten grid spacings.
pub fn bohm_velocity(field: &ComplexField, cfg: &BoxConfig) -> Result<MaskedField> {
    bohm_velocity_with(field, cfg, Stencil::Second, default_node_guard(&field.grid))
}

pub fn bohm_velocity_with(
    field: &ComplexField,
    cfg: &BoxConfig,
    stencil: Stencil,
    guard: f64,
) -> Result<MaskedField> {
    cfg.validate()?;
    let h = field.grid.spacing();
    let d = stencil.first(&field.values, h);
    let scale = cfg.hbar / cfg.mass;
    let v = field
        .values
        .iter()
        .zip(&d)
        .map(|(psi, dpsi)| scale * (psi.conj() * dpsi).im / psi.norm_sqr())
        .collect();
    Ok(MaskedField::new(field.grid, v, guard_mask(field, guard, stencil)))
}

/// Quantum potential `U = −(ħ²/2m)·R″/R` of the amplitude `R = |ψ|`.
pub fn quantum_potential(field: &ComplexField, cfg: &BoxConfig) -> Result<MaskedField> {
    quantum_potential_with(field, cfg, Stencil::Second, default_node_guard(&field.grid))
}

pub fn quantum_potential_with(
    field: &ComplexField,
    cfg: &BoxConfig,
    stencil: Stencil,
    guard: f64,
) -> Result<MaskedField> {
    cfg.validate()?;
    let r = field.amplitude();
    let d2 = stencil.second(&r, field.grid.spacing());
    let scale = -cfg.hbar * cfg.hbar / (2.0 * cfg.mass);
    let u = r.iter().zip(&d2).map(|(r, d2)| scale * d2 / r).collect();
    Ok(MaskedField::new(field.grid, u, guard_mask(field, guard, stencil)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::box_quantum::{eigenstate, mode_value};
    use crate::grid::Grid;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn eigenstate_velocity_vanishes() {
        let cfg = BoxConfig::natural(3);
        let grid = cfg.box_grid(4001).unwrap();
        let psi = eigenstate(&cfg, &grid, 0.83).unwrap();
        let v = bohm_velocity(&psi, &cfg).unwrap();
        assert!(v.included_count() > 3000);
        assert!(v.max_abs() < 1e-10);
        assert!(v.values.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn plane_wave_velocity() {
        let cfg = BoxConfig::new(2.0, 1.0, 1.5, 1).unwrap();
        let k = 3.0;
        let grid = Grid::new(-2.0, 2.0, 4001).unwrap();
        let psi = ComplexField::from_fn(grid, 0.0, |x| Complex64::from_polar(1.0, k * x));
        let v = bohm_velocity(&psi, &cfg).unwrap();
        // second-order stencil on e^{ikx}: sin(kh)/h
        let h = grid.spacing();
        let expected = cfg.hbar / cfg.mass * (k * h).sin() / h;
        assert!(v.max_deviation_from(expected) < 1e-12);
        assert!((expected - cfg.hbar * k / cfg.mass).abs() < 1e-5);
    }

    #[test]
    fn superposition_velocity_matches_phase_gradient() {
        let cfg = BoxConfig::natural(1);
        let grid = cfg.box_grid(20_001).unwrap();
        let t = 0.05;
        let psi_at = |x: f64| mode_value(&cfg, x, t) + mode_value(&cfg.with_mode(2), x, t);
        let psi = ComplexField::from_fn(grid, t, psi_at);
        let v = bohm_velocity(&psi, &cfg).unwrap();
        // analytic: Im(ψ̄ψ′)/|ψ|² with ψ′ from the modes' derivatives
        let dpsi = |x: f64| {
            let a = cfg.normalization();
            let (k1, k2) = (PI, 2.0 * PI);
            Complex64::from_polar(a * k1 * (k1 * x).cos(), -cfg.omega() * t)
                + Complex64::from_polar(a * k2 * (k2 * x).cos(), -cfg.with_mode(2).omega() * t)
        };
        let mut peak: f64 = 0.0;
        for (i, val) in v.included_values() {
            let x = grid.x(i);
            let p = psi_at(x);
            let exact = (p.conj() * dpsi(x)).im / p.norm_sqr();
            // ψ‴/ψ grows like 1/x at the walls, so the truncation error is tested away from them
            let tol = if (0.1..0.9).contains(&x) { 1e-6 * (1.0 + exact.abs()) } else { 1e-4 };
            assert!((val - exact).abs() < tol, "x = {x}: {val} vs {exact}");
            peak = peak.max(val.abs());
        }
        assert!(peak > 0.1);
    }

    #[test]
    fn ground_state_potential_in_wide_box() {
        let cfg = BoxConfig::new(1.0, PI, 1.0, 1).unwrap();
        let grid = Grid::with_spacing(0.0, PI, 1e-4).unwrap();
        let psi = eigenstate(&cfg, &grid, 0.0).unwrap();
        let u = quantum_potential(&psi, &cfg).unwrap();
        assert!(u.max_deviation_from(0.5) < 1e-6);
    }

    #[test]
    fn gaussian_amplitude_potential() {
        let cfg = BoxConfig::natural(1);
        let grid = Grid::new(-4.0, 4.0, 8001).unwrap();
        let psi = ComplexField::from_fn(grid, 0.0, |x| Complex64::new((-x * x / 2.0).exp(), 0.0));
        let u = quantum_potential(&psi, &cfg).unwrap();
        for (i, val) in u.included_values() {
            let x = grid.x(i);
            assert!((val - (1.0 - x * x) / 2.0).abs() < 1e-5, "x = {x}");
        }
    }

    #[test]
    fn constant_amplitude_has_no_potential() {
        let cfg = BoxConfig::natural(1);
        let grid = Grid::new(0.0, 1.0, 101).unwrap();
        let psi = ComplexField::from_fn(grid, 0.0, |x| Complex64::from_polar(0.7, 5.0 * x));
        assert!(quantum_potential(&psi, &cfg).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn potential_error_is_second_order() {
        let cfg = BoxConfig::natural(2);
        let x0 = 0.15;
        let err = |n: usize| {
            let grid = cfg.box_grid(n).unwrap();
            let psi = eigenstate(&cfg, &grid, 0.0).unwrap();
            let u = quantum_potential(&psi, &cfg).unwrap();
            (u.value_at(grid.nearest_index(x0)).unwrap() - cfg.energy()).abs()
        };
        let ratio = err(201) / err(401);
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }
}
