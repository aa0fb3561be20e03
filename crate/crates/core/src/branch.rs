//! Solution branches of the constrained problem
//!
//! ```text
//! −Δψ = [α + λψ]₊^p in 𝔻_N,   ∫ [α + λψ]₊^p = 1,   ψ = 0 on ∂𝔻_N
//! ```
//!
//! for fixed λ by Newton's method on Φ = (Φ₁, Φ₂), and continuation in λ.
//!
//! The Jacobian couples the scalar α with the field ψ. Each linear solve
//! eliminates the field block `K − τ W V` (two tridiagonal solves) and then
//! solves the scalar Schur complement. The field block is indefinite past the
//! point where −Δ − τV loses positivity, so the tridiagonal factorization uses
//! partial pivoting and the bordered solve is polished by iterative refinement.

use serde::{Deserialize, Serialize};

use crate::emden::ProblemParams;
use crate::error::{Error, Result};
use crate::grid::{torsion_profile, GridFunction, RadialGrid, SectorOperator};
use crate::linalg::{dot, TridiagonalLu};

/// One solution (λ, α_λ, ψ_λ) with its density and energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub lambda: f64,
    pub alpha: f64,
    pub psi: GridFunction,
    /// ρ = [α + λψ]₊^p.
    pub rho: GridFunction,
    /// E = ½ ∫|∇ψ|².
    pub energy: f64,
    /// max(|Φ₁|, ‖Φ₂‖_{H⁻¹}).
    pub residual_norm: f64,
}

/// dα/dλ and dψ/dλ at a converged point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tangent {
    pub dalpha: f64,
    pub dpsi: GridFunction,
    /// dE/dλ = ⟨ψ, dψ/dλ⟩_{H¹₀}.
    pub denergy: f64,
    /// Right-hand side of dα/dλ = −(⟨ψ⟩_λ + λ⟨dψ/dλ⟩_λ), evaluated independently.
    pub dalpha_from_means: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTrace {
    pub points: Vec<BranchPoint>,
    pub tangents: Vec<Tangent>,
    /// Zero of α interpolated from the trace (cubic Hermite on α and dα/dλ).
    pub lambda_plus: Option<f64>,
    pub alpha_decreasing: bool,
    pub energy_increasing: bool,
    /// Filled by the spectrum module.
    pub sigma1: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
        }
    }
}

const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 10;

fn positive_part_pow(x: f64, e: f64) -> f64 {
    if x > 0.0 {
        x.powf(e)
    } else {
        0.0
    }
}

/// ρ = [α + λψ]₊^p on all nodes.
pub fn density(params: ProblemParams, lambda: f64, alpha: f64, psi: &[f64]) -> GridFunction {
    let p = params.p();
    psi.iter()
        .map(|v| positive_part_pow(alpha + lambda * v, p))
        .collect::<Vec<_>>()
        .into()
}

/// V = [α + λψ]₊^{p−1} on all nodes.
pub fn potential_values(params: ProblemParams, lambda: f64, alpha: f64, psi: &[f64]) -> GridFunction {
    let e = params.p() - 1.0;
    psi.iter()
        .map(|v| positive_part_pow(alpha + lambda * v, e))
        .collect::<Vec<_>>()
        .into()
}

struct Weighted {
    mass: f64,
    /// `K ψ − W ρ` on the unknown nodes.
    field: Vec<f64>,
}

fn weighted_residual(
    grid: &RadialGrid,
    op: &SectorOperator,
    params: ProblemParams,
    lambda: f64,
    alpha: f64,
    psi: &[f64],
) -> Weighted {
    let rho = density(params, lambda, alpha, psi);
    let mass = grid.integrate(&rho) - 1.0;
    let mut field = op.stiffness_apply(op.restrict(psi));
    for (i, f) in field.iter_mut().enumerate() {
        *f -= grid.weights()[i] * rho[i];
    }
    Weighted { mass, field }
}

/// ‖f‖_{H⁻¹} = ‖G f‖_{H¹₀} for a weighted right-hand side.
fn dual_norm(op: &SectorOperator, weighted: &[f64]) -> Result<f64> {
    let mut x = weighted.to_vec();
    op.factor()?.solve_weighted_in_place(&mut x);
    Ok(dot(&x, weighted).max(0.0).sqrt())
}

/// (Φ₁, Φ₂) at (λ, α, ψ); Φ₂ is returned nodally, zero at the boundary node.
pub fn residual(
    grid: &RadialGrid,
    params: ProblemParams,
    lambda: f64,
    alpha: f64,
    psi: &[f64],
) -> (f64, GridFunction) {
    let op = grid.sector(0);
    let w = weighted_residual(grid, &op, params, lambda, alpha, psi);
    let nodal: Vec<f64> = w
        .field
        .iter()
        .zip(grid.weights())
        .map(|(f, wt)| f / wt)
        .collect();
    (w.mass, op.extend(grid, &nodal))
}

/// max(|Φ₁|, ‖Φ₂‖_{H⁻¹}).
pub fn residual_norm(
    grid: &RadialGrid,
    params: ProblemParams,
    lambda: f64,
    alpha: f64,
    psi: &[f64],
) -> f64 {
    let op = grid.sector(0);
    let w = weighted_residual(grid, &op, params, lambda, alpha, psi);
    let dual = dual_norm(&op, &w.field).unwrap_or(f64::INFINITY);
    w.mass.abs().max(dual)
}

/// Fill ρ, E and the residual for a given (λ, α, ψ).
pub fn assemble_point(
    grid: &RadialGrid,
    params: ProblemParams,
    lambda: f64,
    alpha: f64,
    psi: GridFunction,
) -> BranchPoint {
    let rho = density(params, lambda, alpha, &psi);
    let residual_norm = residual_norm(grid, params, lambda, alpha, &psi);
    let energy = 0.5 * grid.h10_inner(&psi, &psi);
    BranchPoint {
        lambda,
        alpha,
        psi,
        rho,
        energy,
        residual_norm,
    }
}

/// Directional derivative D_{(α,ψ)}Φ[s, φ] =
/// (p∫V(s + λφ), −Δφ − pV(s + λφ)), field part returned nodally.
pub fn jacobian_apply(
    grid: &RadialGrid,
    params: ProblemParams,
    point: &BranchPoint,
    s: f64,
    phi: &[f64],
) -> (f64, GridFunction) {
    let p = params.p();
    let lambda = point.lambda;
    let v = potential_values(params, lambda, point.alpha, &point.psi);
    let comb: Vec<f64> = phi.iter().zip(v.iter()).map(|(f, vv)| vv * (s + lambda * f)).collect();
    let scalar = p * grid.integrate(&comb);
    let lap = grid.sector(0).apply(grid, phi);
    let mut field = lap;
    for i in 0..grid.cells() {
        field[i] -= p * comb[i];
    }
    (scalar, field)
}

/// Factored linearization of Φ at a state, in weighted form:
/// scalar row `p(m s + λ dᵀφ) = t`, field rows `(K − τD)φ − p d s = g`.
struct Linearization {
    p: f64,
    lambda: f64,
    tau: f64,
    /// d_i = w_i V_i on unknown nodes.
    d: Vec<f64>,
    /// m = ∫ V over all nodes.
    mass: f64,
    op: SectorOperator,
    lu: TridiagonalLu,
    /// (K − τD)⁻¹ p d.
    border: Vec<f64>,
    schur: f64,
}

impl Linearization {
    fn new(grid: &RadialGrid, params: ProblemParams, lambda: f64, alpha: f64, psi: &[f64]) -> Result<Self> {
        let p = params.p();
        let tau = p * lambda;
        let v = potential_values(params, lambda, alpha, psi);
        let op = grid.sector(0);
        let n = op.size();
        let d: Vec<f64> = (0..n).map(|i| grid.weights()[i] * v[i]).collect();
        let mass = grid.integrate(&v);
        let k = op.stiffness();
        let diag: Vec<f64> = (0..n).map(|i| k.diag[i] - tau * d[i]).collect();
        let lu = TridiagonalLu::factor(&k.off, &diag, &k.off)?;
        let mut border: Vec<f64> = d.iter().map(|x| p * x).collect();
        lu.solve_in_place(&mut border);
        let schur = p * mass + p * lambda * dot(&d, &border);
        if !(schur.abs() > 1e-14 * p * mass.abs().max(1e-300)) {
            return Err(Error::Singular(format!(
                "bordered Schur complement vanishes at lambda = {lambda}"
            )));
        }
        Ok(Self {
            p,
            lambda,
            tau,
            d,
            mass,
            op,
            lu,
            border,
            schur,
        })
    }

    fn apply(&self, s: f64, phi: &[f64]) -> (f64, Vec<f64>) {
        let t = self.p * (self.mass * s + self.lambda * dot(&self.d, phi));
        let mut g = self.op.stiffness_apply(phi);
        for i in 0..g.len() {
            g[i] -= self.tau * self.d[i] * phi[i] + self.p * self.d[i] * s;
        }
        (t, g)
    }

    fn solve_once(&self, t: f64, g: &[f64]) -> (f64, Vec<f64>) {
        let mut a = g.to_vec();
        self.lu.solve_in_place(&mut a);
        let s = (t - self.p * self.lambda * dot(&self.d, &a)) / self.schur;
        for (ai, bi) in a.iter_mut().zip(&self.border) {
            *ai += s * bi;
        }
        (s, a)
    }

    /// Block elimination followed by iterative refinement on the full
    /// bordered system.
    fn solve(&self, t: f64, g: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (mut s, mut phi) = self.solve_once(t, g);
        let scale = t.abs() + g.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        for _ in 0..4 {
            let (at, ag) = self.apply(s, &phi);
            let rt = t - at;
            let rg: Vec<f64> = g.iter().zip(&ag).map(|(a, b)| a - b).collect();
            let res = rt.abs() + rg.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            if res <= 1e-15 * scale {
                break;
            }
            let (ds, dphi) = self.solve_once(rt, &rg);
            s += ds;
            for (x, dx) in phi.iter_mut().zip(&dphi) {
                *x += dx;
            }
        }
        if !s.is_finite() || phi.iter().any(|x| !x.is_finite()) {
            return Err(Error::Singular(format!(
                "bordered solve produced non-finite values at lambda = {}",
                self.lambda
            )));
        }
        Ok((s, phi))
    }
}

/// Newton's method with Armijo damping on ‖Φ‖² (in the |·| × H⁻¹ norm).
pub fn newton_solve(
    grid: &RadialGrid,
    params: ProblemParams,
    lambda: f64,
    init: (f64, &[f64]),
) -> Result<BranchPoint> {
    newton_solve_with(grid, params, lambda, init, NewtonOptions::default())
}

pub fn newton_solve_with(
    grid: &RadialGrid,
    params: ProblemParams,
    lambda: f64,
    init: (f64, &[f64]),
    opts: NewtonOptions,
) -> Result<BranchPoint> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    let op = grid.sector(0);
    let k_solver = op.factor()?;
    let n = op.size();
    let mut alpha = init.0;
    let mut psi = init.1.to_vec();
    psi[n] = 0.0;

    let merit = |alpha: f64, psi: &[f64]| -> (f64, Weighted) {
        let w = weighted_residual(grid, &op, params, lambda, alpha, psi);
        let mut x = w.field.clone();
        k_solver.solve_weighted_in_place(&mut x);
        let dual2 = dot(&x, &w.field).max(0.0);
        (w.mass * w.mass + dual2, w)
    };

    // Polish below the acceptance tolerance while it still pays off.
    let polish = (opts.tol * 1e-3).max(1e-15);
    let (mut f0, mut w0) = merit(alpha, &psi);
    let mut iterations = 0;
    loop {
        let norm = f0.sqrt();
        if norm <= polish || (iterations >= opts.max_iter && norm <= opts.tol) {
            break;
        }
        if iterations >= opts.max_iter {
            return Err(Error::NewtonDiverged {
                lambda,
                residual: norm,
                iterations,
            });
        }
        iterations += 1;
        let lin = Linearization::new(grid, params, lambda, alpha, &psi)?;
        let g: Vec<f64> = w0.field.iter().map(|x| -x).collect();
        let (ds, dphi) = lin.solve(-w0.mass, &g)?;
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let a_try = alpha + step * ds;
            let mut p_try = psi.clone();
            for (x, dx) in p_try.iter_mut().zip(&dphi) {
                *x += step * dx;
            }
            let (f_try, w_try) = merit(a_try, &p_try);
            if f_try.is_finite() && f_try <= (1.0 - 2.0 * ARMIJO_C * step) * f0 {
                alpha = a_try;
                psi = p_try;
                f0 = f_try;
                w0 = w_try;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            if norm <= opts.tol {
                break;
            }
            return Err(Error::NewtonDiverged {
                lambda,
                residual: norm,
                iterations,
            });
        }
    }
    let point = assemble_point(grid, params, lambda, alpha, psi.into());
    if point.residual_norm > opts.tol {
        return Err(Error::NewtonDiverged {
            lambda,
            residual: point.residual_norm,
            iterations,
        });
    }
    Ok(point)
}

/// The exact λ = 0 solution: α = 1, ψ = discrete torsion function.
pub fn initial_point(grid: &RadialGrid, params: ProblemParams) -> Result<BranchPoint> {
    let psi = grid.green_solve(0, &vec![1.0; grid.len()])?;
    let guess = psi.clone();
    let torsion = torsion_profile(grid);
    debug_assert!(guess
        .iter()
        .zip(torsion.iter())
        .all(|(a, b)| (a - b).abs() < 1e-10));
    newton_solve(grid, params, 0.0, (1.0, &guess[..]))
}

/// Solve D_{(α,ψ)}Φ[(dα, dψ)] = −∂_λΦ at a converged point.
pub fn tangent(grid: &RadialGrid, params: ProblemParams, point: &BranchPoint) -> Result<Tangent> {
    let p = params.p();
    let lin = Linearization::new(grid, params, point.lambda, point.alpha, &point.psi)
        .map_err(|e| Error::Singular(format!("tangent system: {e}")))?;
    let n = lin.d.len();
    let dpsi_dot = dot(&lin.d, &point.psi[..n]);
    let t = -p * dpsi_dot;
    let g: Vec<f64> = (0..n).map(|i| p * lin.d[i] * point.psi[i]).collect();
    let (dalpha, dphi) = lin.solve(t, &g)?;
    let mut dpsi = grid.zeros();
    dpsi[..n].copy_from_slice(&dphi);
    let mean_psi = dpsi_dot / lin.mass;
    let mean_dpsi = dot(&lin.d, &dphi) / lin.mass;
    let denergy = grid.h10_inner(&point.psi, &dpsi);
    Ok(Tangent {
        dalpha,
        dpsi,
        denergy,
        dalpha_from_means: -(mean_psi + point.lambda * mean_dpsi),
    })
}

/// |(α + λ⟨ψ⟩_λ) m_λ − 1| with m_λ = ∫V.
pub fn multiplier_defect(grid: &RadialGrid, params: ProblemParams, point: &BranchPoint) -> f64 {
    let v = potential_values(params, point.lambda, point.alpha, &point.psi);
    let m = grid.integrate(&v);
    let mean = grid.weighted_dot(&v, &point.psi) / m;
    ((point.alpha + point.lambda * mean) * m - 1.0).abs()
}

/// E = ½∫|∇ψ|².
pub fn energy(grid: &RadialGrid, point: &BranchPoint) -> f64 {
    0.5 * grid.h10_inner(&point.psi, &point.psi)
}

/// Both energy forms, ½∫|∇ψ|² and ½∫ρψ.
pub fn energy_forms(grid: &RadialGrid, point: &BranchPoint) -> (f64, f64) {
    (energy(grid, point), 0.5 * grid.weighted_dot(&point.rho, &point.psi))
}

fn predict(point: &BranchPoint, tangent: &Tangent, dl: f64) -> (f64, Vec<f64>) {
    let alpha = point.alpha + dl * tangent.dalpha;
    let psi = point
        .psi
        .iter()
        .zip(tangent.dpsi.iter())
        .map(|(a, b)| a + dl * b)
        .collect();
    (alpha, psi)
}

/// Continue from `(point, tangent)` to `target`, halving the step on failure.
fn advance(
    grid: &RadialGrid,
    params: ProblemParams,
    point: &BranchPoint,
    tan: &Tangent,
    target: f64,
) -> Result<(BranchPoint, Tangent)> {
    let mut current = point.clone();
    let mut current_tan = tan.clone();
    let mut step = target - current.lambda;
    let mut halvings = 0;
    while current.lambda < target {
        let next = (current.lambda + step).min(target);
        let dl = next - current.lambda;
        let (a0, psi0) = predict(&current, &current_tan, dl);
        match newton_solve(grid, params, next, (a0, &psi0[..])) {
            Ok(pt) => {
                current_tan = tangent(grid, params, &pt)?;
                current = pt;
            }
            Err(_) if halvings < MAX_HALVINGS => {
                halvings += 1;
                step = 0.5 * dl;
            }
            Err(_) => {
                return Err(Error::ContinuationFailed {
                    lambda: next,
                    last_good: current.lambda,
                })
            }
        }
    }
    Ok((current, current_tan))
}

/// Zero of the cubic Hermite interpolant of α on `[a, b]`.
fn hermite_zero(a: (&BranchPoint, &Tangent), b: (&BranchPoint, &Tangent)) -> f64 {
    let (l0, l1) = (a.0.lambda, b.0.lambda);
    let h = l1 - l0;
    let (y0, y1) = (a.0.alpha, b.0.alpha);
    let (m0, m1) = (a.1.dalpha * h, b.1.dalpha * h);
    let f = |t: f64| {
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    l0 + h * 0.5 * (lo + hi)
}

/// Parameter continuation over increasing `lambdas` starting at 0, with a
/// tangent predictor and Newton corrector.
pub fn sweep(grid: &RadialGrid, params: ProblemParams, lambdas: &[f64]) -> Result<SweepTrace> {
    if lambdas.is_empty() || lambdas[0] != 0.0 {
        return Err(Error::InvalidParameter("sweep must start at lambda = 0".into()));
    }
    if lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("lambda values must be strictly increasing".into()));
    }
    let first = initial_point(grid, params)?;
    let first_tan = tangent(grid, params, &first)?;
    let mut points = vec![first];
    let mut tangents = vec![first_tan];
    for &target in &lambdas[1..] {
        let (pt, tan) = advance(grid, params, points.last().unwrap(), tangents.last().unwrap(), target)?;
        points.push(pt);
        tangents.push(tan);
    }
    let lambda_plus = points
        .windows(2)
        .zip(tangents.windows(2))
        .find(|(pw, _)| pw[0].alpha > 0.0 && pw[1].alpha <= 0.0)
        .map(|(pw, tw)| {
            if pw[1].alpha == 0.0 {
                pw[1].lambda
            } else {
                hermite_zero((&pw[0], &tw[0]), (&pw[1], &tw[1]))
            }
        });
    let alpha_decreasing = points.windows(2).all(|w| w[1].alpha < w[0].alpha);
    let energy_increasing = points.windows(2).all(|w| w[1].energy > w[0].energy);
    let n = points.len();
    Ok(SweepTrace {
        points,
        tangents,
        lambda_plus,
        alpha_decreasing,
        energy_increasing,
        sigma1: vec![None; n],
    })
}

/// Evenly spaced λ values `0, Δ, …, λ_max` (`count` points).
pub fn lambda_grid(lambda_max: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2);
    (0..count)
        .map(|i| lambda_max * i as f64 / (count - 1) as f64)
        .collect()
}

/// The solution at a single λ, reached by continuation from λ = 0.
pub fn solve_at(grid: &RadialGrid, params: ProblemParams, lambda: f64, steps: usize) -> Result<BranchPoint> {
    if lambda == 0.0 {
        return initial_point(grid, params);
    }
    let trace = sweep(grid, params, &lambda_grid(lambda, steps.max(2)))?;
    Ok(trace.points.last().unwrap().clone())
}

/// λ at which α_λ crosses zero, from continuation plus a safeguarded secant
/// (Illinois) iteration until |α| ≤ 10⁻⁹.
pub fn find_lambda_plus(grid: &RadialGrid, params: ProblemParams) -> Result<f64> {
    const ALPHA_TOL: f64 = 1e-9;
    let mut a = initial_point(grid, params)?;
    let mut ta = tangent(grid, params, &a)?;
    // Linear extrapolation of α from λ = 0 sets the marching scale.
    let step = -1.0 / ta.dalpha / 10.0;
    let (mut b, mut tb);
    let mut marches = 0;
    loop {
        let (pt, tan) = advance(grid, params, &a, &ta, a.lambda + step)?;
        if pt.alpha <= 0.0 {
            b = pt;
            tb = tan;
            break;
        }
        a = pt;
        ta = tan;
        marches += 1;
        if marches > 10_000 {
            return Err(Error::NotConverged("alpha never changed sign".into()));
        }
    }
    if b.alpha.abs() <= ALPHA_TOL {
        return Ok(b.lambda);
    }
    let mut side = 0i8;
    let (mut fa, mut fb) = (a.alpha, b.alpha);
    for _ in 0..200 {
        let mut x = (a.lambda * fb - b.lambda * fa) / (fb - fa);
        if !(x > a.lambda && x < b.lambda) {
            x = 0.5 * (a.lambda + b.lambda);
        }
        let (from, from_tan) = if x - a.lambda <= b.lambda - x { (&a, &ta) } else { (&b, &tb) };
        let (a0, psi0) = predict(from, from_tan, x - from.lambda);
        let pt = newton_solve(grid, params, x, (a0, &psi0[..]))?;
        if pt.alpha.abs() <= ALPHA_TOL || (b.lambda - a.lambda) <= 1e-15 * b.lambda {
            return Ok(x);
        }
        let tan = tangent(grid, params, &pt)?;
        if pt.alpha > 0.0 {
            fa = pt.alpha;
            a = pt;
            ta = tan;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        } else {
            fb = pt.alpha;
            b = pt;
            tb = tan;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        }
    }
    Err(Error::NotConverged("lambda_plus secant iteration".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn setup(dim: usize, p: f64, m: usize) -> (RadialGrid, ProblemParams) {
        (RadialGrid::new(dim, m).unwrap(), ProblemParams::new(dim, p).unwrap())
    }

    #[test]
    fn residual_at_lambda_zero_torsion() {
        let (g, pr) = setup(2, 2.0, 256);
        let psi = torsion_profile(&g);
        let (phi1, phi2) = residual(&g, pr, 0.0, 1.0, &psi);
        assert!(phi1.abs() < 1e-13);
        assert!(crate::linalg::max_abs(&phi2) < 1e-8);
    }

    #[test]
    fn residual_of_empty_density() {
        let (g, pr) = setup(3, 2.0, 64);
        let (phi1, phi2) = residual(&g, pr, 0.0, 0.0, &g.zeros());
        assert_eq!(phi1, -1.0);
        assert!(phi2.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn jacobian_is_linear_and_reduces_at_zero() {
        let (g, pr) = setup(2, 2.0, 128);
        let pt = initial_point(&g, pr).unwrap();
        let (s0, f0) = jacobian_apply(&g, pr, &pt, 0.0, &g.zeros());
        assert_eq!(s0, 0.0);
        assert!(f0.iter().all(|v| *v == 0.0));
        // λ = 0: (p s ∫1, −Δφ − p s).
        let r_max = g.radius();
        let phi = GridFunction::from_fn(&g, |r| (r_max - r) * (1.0 + r));
        let (s1, f1) = jacobian_apply(&g, pr, &pt, 0.7, &phi);
        assert!((s1 - 2.0 * 0.7).abs() < 1e-12);
        let lap = g.sector(0).apply(&g, &phi);
        for i in 0..g.cells() {
            assert!((f1[i] - (lap[i] - 2.0 * 0.7)).abs() < 1e-9 * lap[i].abs().max(1.0));
        }
    }

    #[test]
    fn newton_at_zero_returns_torsion() {
        for dim in [2, 3] {
            let (g, pr) = setup(dim, 2.0, 256);
            let pt = initial_point(&g, pr).unwrap();
            assert!((pt.alpha - 1.0).abs() < 1e-12);
            let t = torsion_profile(&g);
            assert!(pt.psi.iter().zip(t.iter()).all(|(a, b)| (a - b).abs() < 1e-12));
            let n = dim as f64;
            let exact = g.radius().powi(2) / (2.0 * n * (n + 2.0));
            assert!((pt.energy - exact).abs() < 1e-4 * exact);
        }
        let (g, pr) = setup(2, 2.0, 2048);
        let pt = initial_point(&g, pr).unwrap();
        assert!((pt.energy - 1.0 / (16.0 * PI)).abs() < 1e-6 / (16.0 * PI));
    }

    #[test]
    fn sweep_rejects_bad_lambda_lists() {
        let (g, pr) = setup(2, 2.0, 64);
        assert!(sweep(&g, pr, &[0.5, 1.0]).is_err());
        assert!(sweep(&g, pr, &[0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn single_point_sweep() {
        let (g, pr) = setup(3, 1.5, 128);
        let tr = sweep(&g, pr, &[0.0]).unwrap();
        assert_eq!(tr.points.len(), 1);
        assert_eq!(tr.points[0].alpha, 1.0);
        assert!(tr.lambda_plus.is_none());
    }
}
