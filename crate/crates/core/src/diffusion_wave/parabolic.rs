//! Crank–Nicolson integration of `∂Q̃/∂t = D·Q̃″ − D·q(x)·e^{iωt}` with Dirichlet ends.

use num_complex::Complex64;
use serde::Serialize;

use super::SourceSpec;
use crate::error::{invalid, Error, Result};
use crate::grid::ComplexField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirichletValues {
    pub left: Complex64,
    pub right: Complex64,
}

impl DirichletValues {
    pub const ZERO: Self = Self { left: Complex64::new(0.0, 0.0), right: Complex64::new(0.0, 0.0) };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Largest time step; each output interval is split into equal steps no longer than this.
    pub max_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicRun {
    pub fields: Vec<ComplexField>,
    pub steps: usize,
    /// Largest `| ‖Q̃ⁿ⁺¹‖/‖Q̃ⁿ‖ − 1 |` over all steps (discrete 2-norm).
    pub max_step_norm_change: f64,
}

/// Solves the tridiagonal system `sub·x_{i−1} + diag·x_i + sup·x_{i+1} = rhs_i` in place
/// (constant coefficients).
fn thomas(sub: Complex64, diag: Complex64, sup: Complex64, rhs: &mut [Complex64], scratch: &mut [Complex64]) {
    let n = rhs.len();
    if n == 0 {
        return;
    }
    scratch[0] = sup / diag;
    rhs[0] /= diag;
    for i in 1..n {
        let denom = diag - sub * scratch[i - 1];
        scratch[i] = sup / denom;
        rhs[i] = (rhs[i] - sub * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= scratch[i] * next;
    }
}

fn l2(values: &[Complex64]) -> f64 {
    values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Integrates from `initial` (at `times[0]`) and returns the field at every requested time.
///
/// The source is averaged over the two ends of each step (trapezoidal), which keeps the
/// scheme second order in time.
pub fn solve_parabolic(
    source: &SourceSpec,
    bc: DirichletValues,
    initial: &ComplexField,
    times: &[f64],
    options: SolverOptions,
) -> Result<ParabolicRun> {
    let grid = initial.grid;
    if source.grid != grid {
        return Err(Error::GridMismatch);
    }
    if times.first() != Some(&initial.time) {
        return Err(invalid("times", "must start at the initial field's time"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("times", "must be strictly increasing"));
    }
    if !(options.max_step > 0.0) {
        return Err(invalid("max_step", "must be positive"));
    }
    let n = grid.len();
    let h = grid.spacing();
    let d = source.diffusivity;
    let mut q = initial.values.clone();
    q[0] = bc.left;
    q[n - 1] = bc.right;

    let interior = n - 2;
    let mut rhs = vec![Complex64::default(); interior];
    let mut scratch = vec![Complex64::default(); interior];
    let mut fields = vec![ComplexField::new(grid, q.clone(), times[0])?];
    let mut steps = 0;
    let mut max_change: f64 = 0.0;
    let mut t = times[0];
    for &target in &times[1..] {
        let count = ((target - t) / options.max_step).ceil().max(1.0) as usize;
        let dt = (target - t) / count as f64;
        let r = Complex64::new(0.5 * d * dt / (h * h), 0.0);
        let (sub, diag) = (-r, Complex64::new(1.0, 0.0) + r * 2.0);
        for _ in 0..count {
            let before = l2(&q);
            let drive0 = Complex64::from_polar(1.0, source.omega * t);
            let drive1 = Complex64::from_polar(1.0, source.omega * (t + dt));
            let avg = (drive0 + drive1) * 0.5;
            for i in 1..n - 1 {
                let lap = q[i - 1] - q[i] * 2.0 + q[i + 1];
                rhs[i - 1] = q[i] + r * lap - source.profile[i] * avg * (d * dt);
            }
            // boundary values are constant, so they enter both time levels equally
            rhs[0] += r * bc.left;
            rhs[interior - 1] += r * bc.right;
            thomas(sub, diag, sub, &mut rhs, &mut scratch);
            q[1..n - 1].copy_from_slice(&rhs);
            t += dt;
            steps += 1;
            let after = l2(&q);
            if before > 0.0 {
                max_change = max_change.max((after / before - 1.0).abs());
            }
        }
        t = target;
        fields.push(ComplexField::new(grid, q.clone(), target)?);
    }
    Ok(ParabolicRun { fields, steps, max_step_norm_change: max_change })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::box_quantum::BoxConfig;
    use crate::diffusion_wave::{boxed_source, separated_solution};
    use crate::grid::Grid;
    use std::f64::consts::PI;

    #[test]
    fn thomas_solves_a_small_system() {
        let (a, b, c) = (Complex64::new(1.0, 0.5), Complex64::new(4.0, -1.0), Complex64::new(0.5, 0.0));
        let x = [Complex64::new(1.0, 2.0), Complex64::new(-1.0, 0.0), Complex64::new(0.5, 0.5)];
        let mut rhs = vec![b * x[0] + c * x[1], a * x[0] + b * x[1] + c * x[2], a * x[1] + b * x[2]];
        let mut scratch = vec![Complex64::default(); 3];
        thomas(a, b, c, &mut rhs, &mut scratch);
        for (got, want) in rhs.iter().zip(&x) {
            assert!((got - want).norm() < 1e-14);
        }
    }

    #[test]
    fn undriven_mode_decays() {
        let cfg = BoxConfig::natural(1);
        let grid = cfg.box_grid(501).unwrap();
        let mut src = boxed_source(&cfg, &grid).unwrap();
        src.profile.iter_mut().for_each(|q| *q = Complex64::default());
        let init = ComplexField::from_fn(grid, 0.0, |x| Complex64::new((PI * x).sin(), 0.0));
        let t_end = 1.0 / (cfg.diffusivity() * PI * PI);
        let run = solve_parabolic(&src, DirichletValues::ZERO, &init, &[0.0, t_end], SolverOptions { max_step: t_end / 500.0 }).unwrap();
        let mid = run.fields[1].values[250];
        assert!((mid.re - (-1.0f64).exp()).abs() < 1e-4);
        assert!(run.max_step_norm_change > 0.0);
    }

    #[test]
    fn driven_mode_is_sustained() {
        let cfg = BoxConfig::natural(2);
        let grid = cfg.box_grid(401).unwrap();
        let src = boxed_source(&cfg, &grid).unwrap();
        let init = separated_solution(&cfg, &grid, 0.0).unwrap().field;
        let period = 2.0 * PI / cfg.omega();
        let run = solve_parabolic(&src, DirichletValues::ZERO, &init, &[0.0, 0.5 * period], SolverOptions { max_step: period / 400.0 }).unwrap();
        let exact = separated_solution(&cfg, &grid, 0.5 * period).unwrap().field;
        assert!(run.fields[1].max_abs_diff(&exact).unwrap() < 1e-3);
    }

    #[test]
    fn rejects_inconsistent_input() {
        let cfg = BoxConfig::natural(1);
        let grid = cfg.box_grid(11).unwrap();
        let src = boxed_source(&cfg, &grid).unwrap();
        let other = Grid::new(0.0, 1.0, 21).unwrap();
        let init = ComplexField::from_fn(other, 0.0, |_| Complex64::default());
        assert!(solve_parabolic(&src, DirichletValues::ZERO, &init, &[0.0, 1.0], SolverOptions { max_step: 0.1 }).is_err());
    }
}
