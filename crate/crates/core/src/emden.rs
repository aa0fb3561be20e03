//! The Emden problem −Δu₀ = u₀^p on the unit ball B₁, its integral
//! `I_p = ∫ u₀^p`, the closed-form threshold λ₊(𝔻_N, p), and the map from
//! Emden solutions to points of the constrained branch with α = 0.

use serde::{Deserialize, Serialize};

use crate::branch::{self, BranchPoint};
use crate::error::{Error, Result};
use crate::grid::{interpolate_uniform, GridFunction, RadialGrid};
use crate::ode::LaneEmden;

/// Dimension and exponent of the problem, with the subcritical range checked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    dim: usize,
    p: f64,
}

impl ProblemParams {
    pub fn new(dim: usize, p: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "dimension must be >= 2, got {dim}"
            )));
        }
        let critical = Self::critical_exponent(dim);
        if !(p > 1.0 && p < critical) {
            return Err(Error::InvalidParameter(format!(
                "exponent {p} outside (1, {critical}) for N = {dim}"
            )));
        }
        Ok(Self { dim, p })
    }

    /// p_N: +∞ in the plane, N/(N−2) otherwise.
    pub fn critical_exponent(dim: usize) -> f64 {
        if dim <= 2 {
            f64::INFINITY
        } else {
            dim as f64 / (dim as f64 - 2.0)
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Hölder conjugate p/(p−1).
    pub fn q(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn p_critical(&self) -> f64 {
        Self::critical_exponent(self.dim)
    }
}

/// Radial Emden solution u₀ on B₁, sampled uniformly on `[0, 1]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmdenProfile {
    pub params: ProblemParams,
    pub profile: Vec<f64>,
    /// ∫_{B₁} u₀^p.
    pub i_p: f64,
    /// u₀(0).
    pub center: f64,
    /// u₀′(1).
    pub boundary_slope: f64,
    /// First zero of the normalized shot u(0) = 1 before rescaling.
    pub unit_shot_zero: f64,
}

impl EmdenProfile {
    pub const DEFAULT_SAMPLES: usize = 16384;

    /// u₀(r) for r ∈ [0, 1] by linear interpolation.
    pub fn eval(&self, r: f64) -> f64 {
        interpolate_uniform(&self.profile, 1.0, r)
    }

    /// I_p from the boundary flux, −|S^{N−1}| u₀′(1); an independent route to
    /// the value accumulated along the shot.
    pub fn i_p_from_flux(&self) -> f64 {
        let dim = self.params.dim();
        -(dim as f64) * crate::grid::unit_ball_volume(dim) * self.boundary_slope
    }
}

/// Shoot from u(0) = 1 to the first zero and rescale onto B₁ with
/// u₀(r) = a·u₁(a^{(p−1)/2} r).
pub fn solve_emden(params: ProblemParams, tol: f64) -> Result<EmdenProfile> {
    solve_emden_from(params, 1.0, tol, EmdenProfile::DEFAULT_SAMPLES)
}

/// As [`solve_emden`], shooting from an arbitrary central value.
pub fn solve_emden_from(
    params: ProblemParams,
    center: f64,
    tol: f64,
    samples: usize,
) -> Result<EmdenProfile> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let p = params.p();
    let dim = params.dim();
    let shot = LaneEmden::new(dim, p, center, tol).first_zero(samples.max(2))?;
    let r0 = shot.radius;
    // u_a(r) = a u_c(a^{(p−1)/2} r) with a^{(p−1)/2} = r0.
    let a = r0.powf(2.0 / (p - 1.0));
    let profile: Vec<f64> = shot.samples.iter().map(|v| a * v).collect();
    let i_p = a.powf(p) * r0.powi(-(dim as i32)) * shot.mass;
    Ok(EmdenProfile {
        params,
        profile,
        i_p,
        center: a * center,
        boundary_slope: a * r0 * shot.slope,
        unit_shot_zero: r0,
    })
}

/// λ₊(𝔻_N, p) = I_p^{1−1/p} · R^{−(N/p)(1 − p/p_N)}.
pub fn lambda_plus_formula(params: ProblemParams, i_p: f64, radius: f64) -> f64 {
    let p = params.p();
    let n = params.dim() as f64;
    let ratio = p / params.p_critical(); // zero when p_N = ∞
    i_p.powf(1.0 - 1.0 / p) * radius.powf(-(n / p) * (1.0 - ratio))
}

/// The α = 0 solution built from an Emden profile: u(x) = R^{−2/(p−1)} u₀(x/R)
/// solves −Δu = u^p on 𝔻_N, λ_v^{p/(p−1)} = ∫ u^p, ψ = λ_v^{−p/(p−1)} u.
pub fn emden_to_branch_point(profile: &EmdenProfile, grid: &RadialGrid) -> Result<BranchPoint> {
    let params = profile.params;
    if grid.dim() != params.dim() {
        return Err(Error::InvalidParameter(format!(
            "grid dimension {} does not match profile dimension {}",
            grid.dim(),
            params.dim()
        )));
    }
    let p = params.p();
    let radius = grid.radius();
    let amp = radius.powf(-2.0 / (p - 1.0));
    let u = GridFunction::from_fn(grid, |r| amp * profile.eval(r / radius));
    let mass: f64 = grid.integrate(&u.iter().map(|v| v.max(0.0).powf(p)).collect::<Vec<_>>());
    let lambda_v = mass.powf((p - 1.0) / p);
    let scale = lambda_v.powf(-p / (p - 1.0));
    let mut psi = u;
    for v in psi.iter_mut() {
        *v *= scale;
    }
    let n = grid.cells();
    psi[n] = 0.0;
    Ok(branch::assemble_point(grid, params, lambda_v, 0.0, psi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn params_reject_out_of_range() {
        assert!(ProblemParams::new(2, 1.0).is_err());
        assert!(ProblemParams::new(3, 3.0).is_err());
        assert!(ProblemParams::new(1, 2.0).is_err());
        assert!(ProblemParams::new(2, 50.0).is_ok());
        let pr = ProblemParams::new(3, 2.0).unwrap();
        assert_eq!(pr.p_critical(), 3.0);
        assert_eq!(pr.q(), 2.0);
    }

    #[test]
    fn planar_formula_reduces() {
        let pr = ProblemParams::new(2, 2.5).unwrap();
        let i_p: f64 = 7.3;
        let r = PI.powf(-0.5);
        let expected = i_p.powf(1.0 - 1.0 / 2.5) * PI.powf(1.0 / 2.5);
        assert!((lambda_plus_formula(pr, i_p, r) - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn unit_integral_leaves_radius_factor() {
        for (dim, p) in [(2, 2.0), (3, 2.0), (3, 1.5), (4, 1.5)] {
            let pr = ProblemParams::new(dim, p).unwrap();
            let r = crate::grid::unit_volume_radius(dim);
            let pn = pr.p_critical();
            let expected = r.powf(-(dim as f64 / p) * (1.0 - p / pn));
            assert!((lambda_plus_formula(pr, 1.0, r) - expected).abs() < 1e-13 * expected);
        }
        // (3/2)(1 − 2/3) = 1/2.
        let pr = ProblemParams::new(3, 2.0).unwrap();
        let r = crate::grid::unit_volume_radius(3);
        assert!((lambda_plus_formula(pr, 4.0, r) - 2.0 * r.powf(-0.5)).abs() < 1e-13);
    }

    #[test]
    fn profile_is_positive_decreasing_and_vanishes() {
        let pr = ProblemParams::new(3, 2.0).unwrap();
        let e = solve_emden(pr, 1e-10).unwrap();
        assert_eq!(*e.profile.last().unwrap(), 0.0);
        assert!(e.profile.windows(2).all(|w| w[1] < w[0]));
        assert!(e.profile[..e.profile.len() - 1].iter().all(|v| *v > 0.0));
        assert!((e.i_p - e.i_p_from_flux()).abs() < 1e-8 * e.i_p);
    }

    #[test]
    fn scaling_invariance() {
        let tol = 1e-10;
        for (dim, p) in [(2, 2.0), (2, 3.0), (3, 1.5)] {
            let pr = ProblemParams::new(dim, p).unwrap();
            let a = solve_emden_from(pr, 1.0, tol, 2048).unwrap();
            let b = solve_emden_from(pr, 2.0, tol, 2048).unwrap();
            let diff = a
                .profile
                .iter()
                .zip(&b.profile)
                .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
            assert!(diff <= 10.0 * tol * a.center.max(1.0), "N={dim} p={p}: {diff}");
            assert!((a.i_p - b.i_p).abs() < 1e-8 * a.i_p);
        }
    }
}
