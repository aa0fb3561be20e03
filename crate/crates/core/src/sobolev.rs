//! Best constants Λ(𝔻_N, t) = inf ∫|∇w|² / (∫|w|^t)^{2/t} and the
//! thresholds built from them.
//!
//! Trial functions are radial and nonnegative (symmetric decreasing
//! rearrangement does not increase the quotient on a ball). The quotient is
//! minimized by descent along its H¹₀ gradient, with `∫ w^t = 1` restored
//! after every step, and compared against the Lane–Emden shot with exponent
//! t − 1, whose rescaled first bump is the minimizer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{torsion_profile, GridFunction, RadialGrid, SectorOperator, SectorSolver};
use crate::linalg::dot;
use crate::ode::LaneEmden;

pub const MISMATCH_TOL: f64 = 1e-3;
const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
const MAX_ITERS: usize = 20_000;
// ‖∇R‖ at this level means the quotient itself is converged to ~1e-12
// relative; smaller values are below what its rounding can resolve.
const STATIONARITY_TOL: f64 = 1e-6;
const SHOOT_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    RayleighDescent,
    ShootingOracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestConstantResult {
    pub dim: usize,
    pub t: f64,
    /// Λ from the descent on the grid.
    pub value: f64,
    /// Normalized so that ∫ w^t = 1.
    pub minimizer: GridFunction,
    pub method: Method,
    /// Λ from the shooting oracle.
    pub oracle_value: f64,
    pub iterations: usize,
    /// ‖−Δw − Λ w^{t−1}‖_{H⁻¹}.
    pub euler_lagrange_residual: f64,
    /// Rayleigh quotient after each accepted step.
    pub history: Vec<f64>,
}

struct Quotient<'a> {
    grid: &'a RadialGrid,
    op: SectorOperator,
    solver: SectorSolver,
    t: f64,
}

impl Quotient<'_> {
    fn lt_integral(&self, u: &[f64]) -> f64 {
        u.iter()
            .zip(self.grid.weights())
            .map(|(x, w)| w * x.abs().powf(self.t))
            .sum()
    }

    fn normalize(&self, u: &mut [f64]) {
        for x in u.iter_mut() {
            *x = x.abs();
        }
        let s = self.lt_integral(u).powf(-1.0 / self.t);
        for x in u.iter_mut() {
            *x *= s;
        }
    }

    fn dirichlet(&self, u: &[f64]) -> f64 {
        self.op.energy_inner(u, u)
    }

    /// G(W u^{t−1}) on the unknowns.
    fn green_of_power(&self, u: &[f64]) -> Vec<f64> {
        let e = self.t - 1.0;
        let mut rhs: Vec<f64> = u
            .iter()
            .zip(self.grid.weights())
            .map(|(x, w)| if *x > 0.0 { w * x.powf(e) } else { 0.0 })
            .collect();
        self.solver.solve_weighted_in_place(&mut rhs);
        rhs
    }

    /// H¹₀ gradient of the quotient at a normalized `u`: 2(u − Λ G u^{t−1}).
    fn gradient(&self, u: &[f64], value: f64) -> Vec<f64> {
        let g = self.green_of_power(u);
        u.iter().zip(&g).map(|(a, b)| 2.0 * (a - value * b)).collect()
    }
}

/// Λ(𝔻_N, t) by Rayleigh descent, cross-checked against the shooting oracle.
pub fn best_constant(grid: &RadialGrid, t: f64) -> Result<BestConstantResult> {
    let dim = grid.dim();
    let upper = if dim == 2 { f64::INFINITY } else { 2.0 * dim as f64 / (dim as f64 - 2.0) };
    if !(t >= 1.0 && t < upper) {
        return Err(Error::InvalidParameter(format!(
            "exponent t = {t} outside [1, {upper}) for N = {dim}"
        )));
    }
    let op = grid.sector(0);
    let solver = op.factor()?;
    let q = Quotient { grid, op, solver, t };
    let n = q.op.size();
    let mut u = torsion_profile(grid)[..n].to_vec();
    q.normalize(&mut u);
    let mut value = q.dirichlet(&u);
    let mut history = vec![value];
    let mut iterations = 0;
    loop {
        let g = q.gradient(&u, value);
        let slope = q.op.energy_inner(&g, &g);
        let stationarity = slope.sqrt() / q.dirichlet(&u).sqrt();
        if stationarity <= STATIONARITY_TOL {
            break;
        }
        if iterations >= MAX_ITERS {
            return Err(Error::NotConverged(format!(
                "Rayleigh descent for t = {t}: stationarity {stationarity:.3e} after {iterations} iterations"
            )));
        }
        iterations += 1;
        // Step 1/2 is the nonlinear inverse iteration u ← Λ G u^{t−1}.
        let mut step = 0.5;
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            let mut trial: Vec<f64> = u.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            q.normalize(&mut trial);
            let tv = q.dirichlet(&trial);
            if tv <= value - ARMIJO_C * step * slope {
                u = trial;
                value = tv;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No decrease left at rounding level.
            if stationarity <= 10.0 * STATIONARITY_TOL {
                break;
            }
            return Err(Error::NotConverged(format!(
                "Rayleigh descent for t = {t}: line search stalled at stationarity {stationarity:.3e}"
            )));
        }
        history.push(value);
    }
    let mut el: Vec<f64> = q.op.stiffness_apply(&u);
    let e = t - 1.0;
    for (i, x) in el.iter_mut().enumerate() {
        if u[i] > 0.0 {
            *x -= value * grid.weights()[i] * u[i].powf(e);
        }
    }
    let mut gel = el.clone();
    q.solver.solve_weighted_in_place(&mut gel);
    let euler_lagrange_residual = dot(&gel, &el).max(0.0).sqrt();

    let oracle_value = shooting_constant(dim, t, grid.radius())?;
    if (value - oracle_value).abs() > MISMATCH_TOL * oracle_value {
        return Err(Error::Mismatch(format!(
            "best constant N = {dim}, t = {t}: descent {value} vs shooting {oracle_value}"
        )));
    }
    Ok(BestConstantResult {
        dim,
        t,
        value,
        minimizer: q.op.extend(grid, &u),
        method: Method::RayleighDescent,
        oracle_value,
        iterations,
        euler_lagrange_residual,
        history,
    })
}

/// Λ(B_R, t) from the first bump of u″ + (N−1)/r u′ + u^{t−1} = 0.
///
/// On B_{r₀} the bump u satisfies ∫|∇u|² = ∫u^t, so Λ(B_{r₀}) = (∫u^t)^{1−2/t};
/// dilation gives Λ(B_R) = (R/r₀)^{N−2−2N/t} Λ(B_{r₀}).
pub fn shooting_constant(dim: usize, t: f64, radius: f64) -> Result<f64> {
    let shot = LaneEmden::new(dim, t - 1.0, 1.0, SHOOT_TOL).first_zero(2)?;
    let n = dim as f64;
    let on_shot = shot.mass_next.powf(1.0 - 2.0 / t);
    Ok((radius / shot.radius).powf(n - 2.0 - 2.0 * n / t) * on_shot)
}

/// λ₀(𝔻_N, p) = Λ(𝔻_N, 2p)/p.
pub fn lambda0(grid: &RadialGrid, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    Ok(best_constant(grid, 2.0 * p)?.value / p)
}

/// λ₁(𝔻₂, p) = (8π/(p+1))^{(p−1)/(2p)} Λ(𝔻₂, p+1)^{(p+1)/(2p)}; planar only.
pub fn lambda1(grid: &RadialGrid, p: f64) -> Result<f64> {
    if grid.dim() != 2 {
        return Err(Error::InvalidParameter(format!(
            "lambda1 is defined for N = 2 only, got N = {}",
            grid.dim()
        )));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    let big = best_constant(grid, p + 1.0)?.value;
    Ok(lambda1_formula(p, big))
}

pub fn lambda1_formula(p: f64, best: f64) -> f64 {
    let pi = std::f64::consts::PI;
    (8.0 * pi / (p + 1.0)).powf((p - 1.0) / (2.0 * p)) * best.powf((p + 1.0) / (2.0 * p))
}
