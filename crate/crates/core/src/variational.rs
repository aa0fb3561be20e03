//! Free-energy formulation: minimize
//!
//! ```text
//! 𝓕_λ(ρ) = p/(p+1) ∫ρ^{1+1/p} − (λ/2) ∫ρ G[ρ]
//! ```
//!
//! over densities ρ ≥ 0 with ∫ρ = 1. Stationary points satisfy
//! ρ^{1/p} = [α + λG[ρ]]₊ with α the multiplier of the mass constraint, which
//! is the constrained problem again with ψ = G[ρ].
//!
//! 𝓕 is a convex function minus a convex quadratic. The descent linearizes the
//! quadratic at the current density and minimizes the convex remainder on the
//! simplex exactly; that step is ρ ← [α + λG[ρ]]₊^p with α fixed by the mass,
//! and it never increases 𝓕.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::branch::BranchPoint;
use crate::emden::ProblemParams;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, RadialGrid};
use crate::linalg::{bisect_increasing, max_abs};
use crate::spectrum::{deflate, potential, EigenPair};

pub const STATIONARITY_TOL: f64 = 1e-8;
const MAX_ITERS: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityState {
    pub rho: GridFunction,
    pub free_energy: f64,
    pub alpha: Option<f64>,
    /// G[ρ].
    pub psi: GridFunction,
    /// max |ρ^{1/p} − [α + λG[ρ]]₊|.
    pub stationarity: f64,
    pub iterations: usize,
    /// 𝓕 after each step.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Start {
    Uniform,
    WarmStart,
    InteriorBump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiStart {
    pub best: DensityState,
    pub best_start: Start,
    /// (start, 𝓕, L¹ distance to the best minimizer).
    pub runs: Vec<(Start, f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multiplier {
    pub alpha: f64,
    /// Mass-weighted standard deviation of the pointwise multiplier.
    pub deviation: f64,
}

fn check_density(grid: &RadialGrid, rho: &[f64]) -> Result<()> {
    if rho.len() != grid.len() || rho.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidParameter("density must be finite and nonnegative".into()));
    }
    Ok(())
}

fn green(grid: &RadialGrid, rho: &[f64]) -> Result<GridFunction> {
    grid.green_solve(0, rho)
}

/// 𝓕_λ(ρ) by quadrature and a radial Green solve.
pub fn free_energy(grid: &RadialGrid, params: ProblemParams, lambda: f64, rho: &[f64]) -> Result<f64> {
    let g = green(grid, rho)?;
    Ok(free_energy_with(grid, params, lambda, rho, &g))
}

fn free_energy_with(grid: &RadialGrid, params: ProblemParams, lambda: f64, rho: &[f64], g: &[f64]) -> f64 {
    let p = params.p();
    let e = 1.0 + 1.0 / p;
    let entropy: f64 = rho.iter().zip(grid.weights()).map(|(r, w)| w * r.powf(e)).sum();
    p / (p + 1.0) * entropy - 0.5 * lambda * grid.weighted_dot(rho, g)
}

/// First variation ρ^{1/p} − λG[ρ] (the L² gradient of 𝓕).
pub fn free_energy_gradient(
    grid: &RadialGrid,
    params: ProblemParams,
    lambda: f64,
    rho: &[f64],
) -> Result<GridFunction> {
    let g = green(grid, rho)?;
    let e = 1.0 / params.p();
    Ok(rho
        .iter()
        .zip(g.iter())
        .map(|(r, gv)| r.powf(e) - lambda * gv)
        .collect::<Vec<_>>()
        .into())
}

/// Weighted Euclidean projection onto {ρ ≥ 0, ∫ρ = 1}: ρ ↦ [ρ − θ]₊.
pub fn project_simplex(grid: &RadialGrid, rho: &[f64]) -> GridFunction {
    let mass = |theta: f64| -> f64 {
        rho.iter()
            .zip(grid.weights())
            .map(|(r, w)| w * (r - theta).max(0.0))
            .sum()
    };
    let hi = rho.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // Σw = 1, so θ = min ρ − 1 leaves at least unit mass.
    let lo = rho.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let theta = bisect_increasing(|t| 1.0 - mass(t), lo, hi, 1e-16);
    rho.iter().map(|r| (r - theta).max(0.0)).collect::<Vec<_>>().into()
}

/// α with ∫[α + λg]₊^p = 1.
fn mass_multiplier(grid: &RadialGrid, params: ProblemParams, lambda: f64, g: &[f64]) -> f64 {
    let p = params.p();
    let mass = |a: f64| -> f64 {
        g.iter()
            .zip(grid.weights())
            .map(|(gv, w)| {
                let s = a + lambda * gv;
                if s > 0.0 {
                    w * s.powf(p)
                } else {
                    0.0
                }
            })
            .sum()
    };
    let top = g.iter().fold(0.0_f64, |m, x| m.max(lambda * x));
    let bottom = g.iter().fold(0.0_f64, |m, x| m.min(lambda * x));
    // At α = 1 − min λg every node has s ≥ 1, so the mass is ≥ 1.
    bisect_increasing(|a| mass(a) - 1.0, -top, 1.0 - bottom, 1e-16)
}

fn dca_step(grid: &RadialGrid, params: ProblemParams, lambda: f64, g: &[f64]) -> (f64, GridFunction) {
    let alpha = mass_multiplier(grid, params, lambda, g);
    let p = params.p();
    let rho = g
        .iter()
        .map(|gv| {
            let s = alpha + lambda * gv;
            if s > 0.0 {
                s.powf(p)
            } else {
                0.0
            }
        })
        .collect::<Vec<_>>()
        .into();
    (alpha, rho)
}

fn stationarity(params: ProblemParams, lambda: f64, alpha: f64, rho: &[f64], g: &[f64]) -> f64 {
    let e = 1.0 / params.p();
    rho.iter()
        .zip(g)
        .fold(0.0_f64, |m, (r, gv)| m.max((r.powf(e) - (alpha + lambda * gv).max(0.0)).abs()))
}

/// Monotone descent of 𝓕 on the simplex from `init` until the KKT residual
/// drops below 10⁻⁸.
pub fn minimize_free_energy(
    grid: &RadialGrid,
    params: ProblemParams,
    lambda: f64,
    init: &[f64],
) -> Result<DensityState> {
    check_density(grid, init)?;
    let mut rho: GridFunction = project_simplex(grid, init);
    let mut g = green(grid, &rho)?;
    let mut value = free_energy_with(grid, params, lambda, &rho, &g);
    let mut history = vec![value];
    for it in 1..=MAX_ITERS {
        let (_, next) = dca_step(grid, params, lambda, &g);
        let next_g = green(grid, &next)?;
        let next_value = free_energy_with(grid, params, lambda, &next, &next_g);
        rho = next;
        g = next_g;
        value = next_value;
        history.push(value);
        let a = mass_multiplier(grid, params, lambda, &g);
        let st = stationarity(params, lambda, a, &rho, &g);
        if st <= STATIONARITY_TOL {
            return Ok(DensityState {
                rho,
                free_energy: value,
                alpha: Some(a),
                psi: g,
                stationarity: st,
                iterations: it,
                history,
            });
        }
    }
    Err(Error::NotConverged(format!(
        "free-energy descent at lambda = {lambda}: {MAX_ITERS} iterations"
    )))
}

/// Uniform density on the unit-volume ball.
pub fn uniform_density(grid: &RadialGrid) -> GridFunction {
    vec![1.0; grid.len()].into()
}

/// Normalized bump supported in r < R/2.
pub fn interior_bump(grid: &RadialGrid) -> GridFunction {
    let a = 0.5 * grid.radius();
    let raw = GridFunction::from_fn(grid, |r| (1.0 - (r / a).powi(2)).max(0.0));
    let mass = grid.integrate(&raw);
    raw.iter().map(|x| x / mass).collect::<Vec<_>>().into()
}

/// Runs from the uniform density, an optional warm start and an interior bump
/// in parallel; keeps the lowest 𝓕.
pub fn multistart(
    grid: &RadialGrid,
    params: ProblemParams,
    lambda: f64,
    warm: Option<&[f64]>,
) -> Result<MultiStart> {
    let mut starts = vec![(Start::Uniform, uniform_density(grid))];
    if let Some(w) = warm {
        starts.push((Start::WarmStart, w.to_vec().into()));
    }
    starts.push((Start::InteriorBump, interior_bump(grid)));
    let results: Vec<(Start, DensityState)> = starts
        .into_par_iter()
        .map(|(s, init)| minimize_free_energy(grid, params, lambda, &init).map(|d| (s, d)))
        .collect::<Result<_>>()?;
    let best_idx = results
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.free_energy.total_cmp(&b.1 .1.free_energy))
        .map(|(i, _)| i)
        .unwrap();
    let best = results[best_idx].1.clone();
    let runs = results
        .iter()
        .map(|(s, d)| (*s, d.free_energy, l1_distance(grid, &d.rho, &best.rho)))
        .collect();
    Ok(MultiStart {
        best_start: results[best_idx].0,
        best,
        runs,
    })
}

pub fn l1_distance(grid: &RadialGrid, a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(grid.weights())
        .map(|((x, y), w)| w * (x - y).abs())
        .sum()
}

/// α as the ρ-weighted mean of ρ^{1/p} − λG[ρ] over {ρ > 10⁻¹⁰ max ρ}.
pub fn recover_alpha(grid: &RadialGrid, params: ProblemParams, lambda: f64, rho: &[f64]) -> Result<Multiplier> {
    check_density(grid, rho)?;
    let grad = free_energy_gradient(grid, params, lambda, rho)?;
    let threshold = 1e-10 * max_abs(rho);
    let mut mass = 0.0;
    let mut mean = 0.0;
    for ((r, gv), w) in rho.iter().zip(grad.iter()).zip(grid.weights()) {
        if *r > threshold {
            mass += w * r;
            mean += w * r * gv;
        }
    }
    if !(mass > 0.0) {
        return Err(Error::DegenerateDeflation { mass });
    }
    let alpha = mean / mass;
    let mut var = 0.0;
    for ((r, gv), w) in rho.iter().zip(grad.iter()).zip(grid.weights()) {
        if *r > threshold {
            var += w * r * (gv - alpha).powi(2);
        }
    }
    Ok(Multiplier {
        alpha,
        deviation: (var / mass).sqrt(),
    })
}

/// 𝒜(φ) = ∫V[φ]² − τ∫V[φ] G_l[V[φ]] for φ in angular sector `l` (deflation
/// only for l = 0).
pub fn second_variation(
    grid: &RadialGrid,
    params: ProblemParams,
    point: &BranchPoint,
    l: usize,
    phi: &[f64],
) -> Result<f64> {
    let pot = potential(grid, params, point);
    let shifted = if l == 0 { deflate(grid, &pot, phi).1 } else { phi.to_vec().into() };
    let vphi: Vec<f64> = shifted.iter().zip(pot.v.iter()).map(|(a, v)| a * v).collect();
    let g = grid.green_solve(l, &vphi)?;
    Ok(grid.weighted_dot(&vphi, &shifted) - pot.tau * grid.weighted_dot(&vphi, &g))
}

/// (𝒜(φ), m⟨[φ]²⟩_λ σ/(τ+σ)) for a radial eigenpair; equal by the
/// eigen-equation.
pub fn closing_identity(
    grid: &RadialGrid,
    params: ProblemParams,
    point: &BranchPoint,
    pair: &EigenPair,
) -> Result<(f64, f64)> {
    let pot = potential(grid, params, point);
    let a = second_variation(grid, params, point, pair.sector, &pair.phi)?;
    let shifted = if pair.sector == 0 {
        deflate(grid, &pot, &pair.phi).1
    } else {
        pair.phi.clone()
    };
    let sq: Vec<f64> = shifted.iter().map(|x| x * x).collect();
    let m_mean_sq = grid.weighted_dot(&pot.v, &sq);
    Ok((a, m_mean_sq * pair.sigma / (pot.tau + pair.sigma)))
}

/// 2(𝓕(ρ + εpV[φ]) − 𝓕(ρ))/(pε²) for each ε; tends to 𝒜(φ) as ε → 0 when
/// ρ + εpV[φ] stays nonnegative (perturbations are clipped at zero otherwise).
pub fn taylor_remainders(
    grid: &RadialGrid,
    params: ProblemParams,
    point: &BranchPoint,
    phi: &[f64],
    eps: &[f64],
) -> Result<Vec<f64>> {
    let pot = potential(grid, params, point);
    let p = params.p();
    let (_, shifted) = deflate(grid, &pot, phi);
    let base = free_energy(grid, params, point.lambda, &point.rho)?;
    eps.iter()
        .map(|&e| {
            let rho: Vec<f64> = point
                .rho
                .iter()
                .zip(shifted.iter().zip(pot.v.iter()))
                .map(|(r, (s, v))| (r + e * p * v * s).max(0.0))
                .collect();
            let f = free_energy(grid, params, point.lambda, &rho)?;
            Ok(2.0 * (f - base) / (p * e * e))
        })
        .collect()
}

/// Random smooth test function in sector `l`: a few random Fourier modes with
/// the r^l factor at the origin, normalized in H¹₀.
pub fn random_test_function(grid: &RadialGrid, l: usize, rng: &mut ChaCha8Rng) -> GridFunction {
    let big_r = grid.radius();
    let modes = 6;
    let coef: Vec<f64> = (0..modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let shift = rng.gen_range(-1.0..1.0);
    let mut f = GridFunction::from_fn(grid, |r| {
        let x = r / big_r;
        let s: f64 = coef
            .iter()
            .enumerate()
            .map(|(k, c)| c * ((k as f64 + 0.5) * std::f64::consts::PI * x).cos())
            .sum();
        x.powi(l as i32) * (s + shift * (1.0 - x))
    });
    let last = grid.cells();
    f[last] = 0.0;
    if l > 0 {
        f[0] = 0.0;
    }
    let n = grid.h10_norm(&f).max(1e-300);
    for v in f.iter_mut() {
        *v /= n;
    }
    f
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
