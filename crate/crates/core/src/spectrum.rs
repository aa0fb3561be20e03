//! The nonlocal linearized operator at a branch point.
//!
//! In sector `l` the eigenproblem −Δφ = (τ + σ) V [φ]_λ becomes the pencil
//! `K u = κ B u` with κ = τ + σ, where `K` is the sector stiffness and
//!
//! ```text
//! B = D − d dᵀ / m   (l = 0),      B = D   (l ≥ 1),      D = diag(w V), d = w V.
//! ```
//!
//! `B` is positive semidefinite, so the wanted eigenvalues are the largest
//! ν = 1/κ of `S = K⁻¹B`, which is self-adjoint in the K inner product. In
//! terms of the compact operator T = G ∗ (τ V [·]_λ) this is T = τS and
//! μ = τν; the formulation stays valid at τ = 0.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::branch::{potential_values, BranchPoint, SweepTrace};
use crate::emden::ProblemParams;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, RadialGrid, SectorOperator, SectorSolver};
use crate::linalg::{dot, max_abs};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_SWEEPS: usize = 500;
pub const DEFAULT_LMAX: usize = 2;
const MIN_MASS: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialData {
    pub v: GridFunction,
    /// m = ∫V.
    pub m: f64,
    /// Edge of the plasma region {α + λψ > 0}.
    pub r_plus: f64,
    /// τ = λp.
    pub tau: f64,
}

impl PotentialData {
    /// ⟨f⟩_λ = ∫Vf / ∫V.
    pub fn mean(&self, grid: &RadialGrid, f: &[f64]) -> f64 {
        grid.weighted_dot(&self.v, f) / self.m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub sector: usize,
    pub sigma: f64,
    /// τ/(τ+σ); absent at τ = 0.
    pub mu: Option<f64>,
    /// Normalized to unit H¹₀ norm.
    pub phi: GridFunction,
    /// ⟨φ⟩_λ; zero by construction for l ≥ 1.
    pub mean: f64,
    /// ‖−Δφ − (τ+σ)V[φ]_λ‖_{H⁻¹}.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sigma1 {
    pub sigma1: f64,
    pub sector: usize,
    /// Lowest σ in each sector 0..=l_max.
    pub sector_minima: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub alpha_negative: bool,
    /// ‖V [φ₀]_λ‖_∞ for the constructed candidate (α < 0 only).
    pub v_deflated_norm: Option<f64>,
    /// ‖T φ₀‖_{H¹₀} (α < 0 only).
    pub t_norm: Option<f64>,
    /// ⟨φ₀⟩_λ, which equals the plateau value 1 (α < 0 only).
    pub candidate_mean: Option<f64>,
    /// Smallest computed μ in the radial sector (τ > 0, α ≥ 0 only).
    pub min_mu: Option<f64>,
    pub candidate: Option<GridFunction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    /// ⟨φ⟩_λ / m.
    pub lhs: f64,
    /// (λ(p−1) + σ)⟨ψ[φ]_λ⟩_λ.
    pub rhs: f64,
    pub residual: f64,
    pub sign_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub lambda: f64,
    pub sectors: Vec<Vec<EigenPair>>,
    pub sigma1: f64,
    pub argmin_sector: usize,
    pub kernel: KernelReport,
    pub identities: Vec<IdentityCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    /// ⟨ψ, φ_j⟩_{H¹₀}.
    pub beta: Vec<f64>,
    /// (τ/μ_j) ∫ V [φ_j]_λ ψ.
    pub beta_spectral: Vec<f64>,
    /// ‖ψ − Σ_{i≤j} β_i φ_i‖_{H¹₀} for j = 0..k.
    pub reconstruction_errors: Vec<f64>,
}

pub fn potential(grid: &RadialGrid, params: ProblemParams, point: &BranchPoint) -> PotentialData {
    let v = potential_values(params, point.lambda, point.alpha, &point.psi);
    let m = grid.integrate(&v);
    let r_plus = if point.alpha >= 0.0 {
        grid.radius()
    } else {
        let s: Vec<f64> = point.psi.iter().map(|x| point.alpha + point.lambda * x).collect();
        let r = grid.nodes();
        match s.iter().position(|x| *x <= 0.0) {
            Some(0) | None => 0.0,
            Some(i) => r[i - 1] + (r[i] - r[i - 1]) * s[i - 1] / (s[i - 1] - s[i]),
        }
    };
    PotentialData {
        v,
        m,
        r_plus,
        tau: point.lambda * params.p(),
    }
}

/// (⟨φ⟩_λ, [φ]_λ).
pub fn deflate(grid: &RadialGrid, pot: &PotentialData, phi: &[f64]) -> (f64, GridFunction) {
    let mean = pot.mean(grid, phi);
    (mean, phi.iter().map(|x| x - mean).collect::<Vec<_>>().into())
}

/// T φ = G_l ∗ (τ V [φ]_λ), with deflation in the radial sector only.
pub fn apply_t(grid: &RadialGrid, pot: &PotentialData, l: usize, phi: &[f64]) -> Result<GridFunction> {
    let shifted = if l == 0 { deflate(grid, pot, phi).1 } else { phi.to_vec().into() };
    let f: Vec<f64> = shifted.iter().zip(pot.v.iter()).map(|(a, v)| pot.tau * v * a).collect();
    grid.green_solve(l, &f)
}

/// The matrix `B` of the sector pencil, acting on unknown vectors.
#[derive(Debug, Clone)]
pub(crate) struct MassOperator {
    d: Vec<f64>,
    /// Some(m) when the rank-one deflation is active.
    deflation: Option<f64>,
}

impl MassOperator {
    pub(crate) fn new(grid: &RadialGrid, op: &SectorOperator, pot: &PotentialData) -> Result<Self> {
        let first = op.first();
        let d: Vec<f64> = (0..op.size())
            .map(|k| grid.weights()[first + k] * pot.v[first + k])
            .collect();
        let deflation = if op.sector_index() == 0 {
            if !(pot.m > MIN_MASS) {
                return Err(Error::DegenerateDeflation { mass: pot.m });
            }
            Some(pot.m)
        } else {
            None
        };
        Ok(Self { d, deflation })
    }

    pub(crate) fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.d.iter().zip(u).map(|(a, b)| a * b).collect();
        if let Some(m) = self.deflation {
            let c = dot(&self.d, u) / m;
            for (o, di) in out.iter_mut().zip(&self.d) {
                *o -= c * di;
            }
        }
        out
    }

    fn mean(&self, u: &[f64]) -> f64 {
        match self.deflation {
            Some(m) => dot(&self.d, u) / m,
            None => 0.0,
        }
    }

    fn dense(&self) -> DMatrix<f64> {
        let n = self.d.len();
        let mut b = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.d));
        if let Some(m) = self.deflation {
            for i in 0..n {
                for j in 0..n {
                    b[(i, j)] -= self.d[i] * self.d[j] / m;
                }
            }
        }
        b
    }
}

struct Pencil<'a> {
    op: &'a SectorOperator,
    solver: SectorSolver,
    mass: MassOperator,
}

impl Pencil<'_> {
    fn apply_s(&self, u: &[f64]) -> Vec<f64> {
        let mut y = self.mass.apply(u);
        self.solver.solve_weighted_in_place(&mut y);
        y
    }

    fn k_norm(&self, u: &[f64]) -> f64 {
        self.op.energy_inner(u, u).max(0.0).sqrt()
    }

    /// K-orthonormalize in place (two passes of modified Gram–Schmidt);
    /// returns false if a column collapsed.
    fn orthonormalize(&self, cols: &mut [Vec<f64>]) -> bool {
        for j in 0..cols.len() {
            let before = self.k_norm(&cols[j]);
            for _ in 0..2 {
                for i in 0..j {
                    let ki = self.op.stiffness_apply(&cols[i]);
                    let c = dot(&ki, &cols[j]);
                    let (head, tail) = cols.split_at_mut(j);
                    for (x, y) in tail[0].iter_mut().zip(&head[i]) {
                        *x -= c * y;
                    }
                }
            }
            let norm = self.k_norm(&cols[j]);
            if !(norm > 1e-10 * before) || norm == 0.0 {
                return false;
            }
            for x in cols[j].iter_mut() {
                *x /= norm;
            }
        }
        true
    }
}

fn random_block(n: usize, b: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..b)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

/// Fix the sign so the largest-magnitude entry is positive.
fn normalize_sign(u: &mut [f64]) {
    let mut idx = 0;
    for (i, x) in u.iter().enumerate() {
        if x.abs() > u[idx].abs() {
            idx = i;
        }
    }
    if u[idx] < 0.0 {
        for x in u.iter_mut() {
            *x = -*x;
        }
    }
}

fn make_pair(
    grid: &RadialGrid,
    pencil: &Pencil,
    l: usize,
    tau: f64,
    nu: f64,
    mut u: Vec<f64>,
    residual: f64,
) -> EigenPair {
    normalize_sign(&mut u);
    let kappa = 1.0 / nu;
    EigenPair {
        sector: l,
        sigma: kappa - tau,
        mu: (tau > 0.0).then_some(tau * nu),
        mean: pencil.mass.mean(&u),
        phi: pencil.op.extend(grid, &u),
        residual,
    }
}

/// The `k` lowest σ in sector `l` by subspace iteration on `K⁻¹B` with
/// K-orthonormalization and Rayleigh–Ritz.
pub fn sector_eigs(
    grid: &RadialGrid,
    params: ProblemParams,
    point: &BranchPoint,
    l: usize,
    k: usize,
) -> Result<Vec<EigenPair>> {
    sector_eigs_with(grid, params, point, l, k, DEFAULT_TOL, MAX_SWEEPS)
}

pub fn sector_eigs_with(
    grid: &RadialGrid,
    params: ProblemParams,
    point: &BranchPoint,
    l: usize,
    k: usize,
    tol: f64,
    max_sweeps: usize,
) -> Result<Vec<EigenPair>> {
    if k == 0 || k > 10 {
        return Err(Error::InvalidParameter(format!("k must be in 1..=10, got {k}")));
    }
    let pot = potential(grid, params, point);
    let op = grid.sector(l);
    let mass = MassOperator::new(grid, &op, &pot)?;
    solve_pencil(grid, &op, mass, pot.tau, k, tol, max_sweeps)
}

/// The `k` lowest eigenvalues of the plain Dirichlet problem −Δφ = σφ in
/// sector `l` (no potential, no deflation).
pub fn dirichlet_eigs(grid: &RadialGrid, l: usize, k: usize) -> Result<Vec<EigenPair>> {
    if k == 0 || k > 10 {
        return Err(Error::InvalidParameter(format!("k must be in 1..=10, got {k}")));
    }
    let op = grid.sector(l);
    let mass = MassOperator {
        d: op.weights().to_vec(),
        deflation: None,
    };
    solve_pencil(grid, &op, mass, 0.0, k, DEFAULT_TOL, MAX_SWEEPS)
}

fn solve_pencil(
    grid: &RadialGrid,
    op: &SectorOperator,
    mass: MassOperator,
    tau: f64,
    k: usize,
    tol: f64,
    max_sweeps: usize,
) -> Result<Vec<EigenPair>> {
    let l = op.sector_index();
    let pencil = Pencil {
        op,
        solver: op.factor()?,
        mass,
    };
    let n = op.size();
    let b = (k + 3).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + l as u64);
    let mut x = random_block(n, b, &mut rng);
    while !pencil.orthonormalize(&mut x) {
        x = random_block(n, b, &mut rng);
    }
    let mut nus: Option<Vec<f64>> = None;
    let mut worst = f64::INFINITY;
    for _ in 0..max_sweeps {
        let mut y: Vec<Vec<f64>> = x.iter().map(|c| pencil.apply_s(c)).collect();
        if let Some(nu) = &nus {
            let res: Vec<f64> = (0..k)
                .map(|j| {
                    let diff: Vec<f64> = y[j].iter().zip(&x[j]).map(|(a, b)| a - nu[j] * b).collect();
                    pencil.k_norm(&diff) / nu[j]
                })
                .collect();
            worst = res.iter().cloned().fold(0.0, f64::max);
            if worst <= tol && nu[..k].iter().all(|v| *v > 0.0) {
                let x = std::mem::take(&mut x);
                return Ok(x
                    .into_iter()
                    .take(k)
                    .zip(nu.iter().zip(&res))
                    .map(|(u, (&nu, &r))| make_pair(grid, &pencil, l, tau, nu, u, r))
                    .collect());
            }
        }
        if !pencil.orthonormalize(&mut y) {
            // The range of B is smaller than the block; refill with noise.
            let fresh = random_block(n, b, &mut rng);
            for (j, col) in y.iter_mut().enumerate() {
                if pencil.k_norm(col) < 1e-12 {
                    *col = pencil.apply_s(&fresh[j]);
                }
            }
            if !pencil.orthonormalize(&mut y) {
                return Err(Error::EigenNotConverged {
                    sector: l,
                    residual: worst,
                    sweeps: 0,
                });
            }
        }
        let by: Vec<Vec<f64>> = y.iter().map(|c| pencil.mass.apply(c)).collect();
        let h = DMatrix::from_fn(b, b, |i, j| 0.5 * (dot(&y[i], &by[j]) + dot(&y[j], &by[i])));
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..b).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let mut nx = vec![vec![0.0; n]; b];
        for (dst, &src) in nx.iter_mut().zip(&order) {
            for (c, yc) in y.iter().enumerate() {
                let coef = eig.eigenvectors[(c, src)];
                for (a, v) in dst.iter_mut().zip(yc) {
                    *a += coef * v;
                }
            }
        }
        x = nx;
        nus = Some(order.iter().map(|&i| eig.eigenvalues[i]).collect());
    }
    Err(Error::EigenNotConverged {
        sector: l,
        residual: worst,
        sweeps: max_sweeps,
    })
}

/// Dense reference solver for the same pencil (Cholesky reduction plus a
/// symmetric eigensolve); intended for grids with at most a few hundred
/// cells.
pub fn dense_sector_eigs(
    grid: &RadialGrid,
    params: ProblemParams,
    point: &BranchPoint,
    l: usize,
    k: usize,
) -> Result<Vec<EigenPair>> {
    let pot = potential(grid, params, point);
    let op = grid.sector(l);
    let mass = MassOperator::new(grid, &op, &pot)?;
    let n = op.size();
    if n > 1024 {
        return Err(Error::InvalidParameter(format!("dense oracle limited to 1024 unknowns, got {n}")));
    }
    let st = op.stiffness();
    let kmat = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            st.diag[i]
        } else if i + 1 == j {
            st.off[i]
        } else if j + 1 == i {
            st.off[j]
        } else {
            0.0
        }
    });
    let chol = kmat
        .cholesky()
        .ok_or_else(|| Error::Singular("sector stiffness not positive definite".into()))?;
    let lower = chol.l();
    let bmat = mass.dense();
    let half = lower
        .solve_lower_triangular(&bmat)
        .ok_or_else(|| Error::Singular("triangular solve".into()))?;
    let c = lower
        .solve_lower_triangular(&half.transpose())
        .ok_or_else(|| Error::Singular("triangular solve".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let pencil = Pencil {
        op: &op,
        solver: op.factor()?,
        mass,
    };
    let lt = lower.transpose();
    order
        .into_iter()
        .take(k)
        .map(|idx| {
            let nu = eig.eigenvalues[idx];
            let y = eig.eigenvectors.column(idx).into_owned();
            let x = lt
                .solve_upper_triangular(&y)
                .ok_or_else(|| Error::Singular("triangular solve".into()))?;
            let u: Vec<f64> = x.iter().cloned().collect();
            let sy = pencil.apply_s(&u);
            let diff: Vec<f64> = sy.iter().zip(&u).map(|(a, b)| a - nu * b).collect();
            let res = pencil.k_norm(&diff) / nu;
            Ok(make_pair(grid, &pencil, l, pot.tau, nu, u, res))
        })
        .collect()
}

/// Minimum of σ over sectors 0..=l_max. Sector minima must not decrease for
/// l ≥ 1, otherwise the truncation is not justified and the call fails.
pub fn sigma1(grid: &RadialGrid, params: ProblemParams, point: &BranchPoint, l_max: usize) -> Result<Sigma1> {
    if l_max < 2 {
        return Err(Error::InvalidParameter(format!("l_max must be >= 2, got {l_max}")));
    }
    let minima: Vec<f64> = (0..=l_max)
        .into_par_iter()
        .map(|l| sector_eigs(grid, params, point, l, 1).map(|v| v[0].sigma))
        .collect::<Result<_>>()?;
    if minima[1..].windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::SectorOrder(minima));
    }
    let (sector, &sigma1) = minima
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    Ok(Sigma1 {
        sigma1,
        sector,
        sector_minima: minima,
    })
}

/// Fill the σ₁ slots of a sweep trace, points in parallel.
pub fn annotate_sigma1(
    grid: &RadialGrid,
    params: ProblemParams,
    trace: &mut SweepTrace,
    l_max: usize,
) -> Result<Vec<Sigma1>> {
    let all: Vec<Sigma1> = trace
        .points
        .par_iter()
        .map(|pt| sigma1(grid, params, pt, l_max))
        .collect::<Result<_>>()?;
    trace.sigma1 = all.iter().map(|s| Some(s.sigma1)).collect();
    Ok(all)
}

/// Radial kernel candidate: 1 on [0, r₊], harmonic on (r₊, R), zero at R.
pub fn kernel_candidate(grid: &RadialGrid, r_plus: f64) -> GridFunction {
    let big_r = grid.radius();
    let n = grid.dim();
    let profile = |r: f64| -> f64 {
        if n == 2 {
            (r / big_r).ln()
        } else {
            r.powf(2.0 - n as f64) - big_r.powf(2.0 - n as f64)
        }
    };
    let at_edge = profile(r_plus);
    GridFunction::from_fn(grid, |r| if r <= r_plus { 1.0 } else { profile(r) / at_edge })
}

pub fn kernel_check(grid: &RadialGrid, params: ProblemParams, point: &BranchPoint) -> Result<KernelReport> {
    let pot = potential(grid, params, point);
    if point.alpha >= 0.0 {
        let min_mu = if pot.tau > 0.0 {
            let pairs = sector_eigs(grid, params, point, 0, 3)?;
            pairs.iter().filter_map(|p| p.mu).reduce(f64::min)
        } else {
            None
        };
        return Ok(KernelReport {
            alpha_negative: false,
            v_deflated_norm: None,
            t_norm: None,
            candidate_mean: None,
            min_mu,
            candidate: None,
        });
    }
    let phi0 = kernel_candidate(grid, pot.r_plus);
    let (mean, deflated) = deflate(grid, &pot, &phi0);
    let vd: Vec<f64> = deflated.iter().zip(pot.v.iter()).map(|(a, v)| a * v).collect();
    let t = apply_t(grid, &pot, 0, &phi0)?;
    Ok(KernelReport {
        alpha_negative: true,
        v_deflated_norm: Some(max_abs(&vd)),
        t_norm: Some(grid.h10_norm(&t)),
        candidate_mean: Some(mean),
        min_mu: None,
        candidate: Some(phi0),
    })
}

/// ⟨φ⟩_λ/m = (λ(p−1) + σ)⟨ψ[φ]_λ⟩_λ and the sign condition.
pub fn eigen_identity_check(
    grid: &RadialGrid,
    params: ProblemParams,
    point: &BranchPoint,
    pair: &EigenPair,
) -> IdentityCheck {
    let pot = potential(grid, params, point);
    let (mean, deflated) = if pair.sector == 0 {
        deflate(grid, &pot, &pair.phi)
    } else {
        (0.0, pair.phi.clone())
    };
    let lhs = if pair.sector == 0 { mean / pot.m } else { 0.0 };
    let prod: Vec<f64> = deflated.iter().zip(point.psi.iter()).map(|(a, b)| a * b).collect();
    let psi_mean = if pair.sector == 0 { pot.mean(grid, &prod) } else { 0.0 };
    let factor = point.lambda * (params.p() - 1.0) + pair.sigma;
    let rhs = factor * psi_mean;
    let floor = 1e-8 * max_abs(&pair.phi) / pot.m;
    let scale = lhs.abs().max(rhs.abs()).max(floor);
    let residual = (lhs - rhs).abs() / scale;
    let significant = mean.abs() > 1e-10 * max_abs(&pair.phi);
    let sign_ok = !(significant && factor > 0.0) || (psi_mean.signum() == mean.signum());
    IdentityCheck {
        lhs,
        rhs,
        residual,
        sign_ok,
    }
}

/// Fourier coefficients of `psi_test` on the first `k` radial eigenfunctions,
/// by the H¹₀ product and by the spectral formula.
pub fn project_eigenbasis(
    grid: &RadialGrid,
    params: ProblemParams,
    point: &BranchPoint,
    psi_test: &[f64],
    k: usize,
) -> Result<Projection> {
    let pot = potential(grid, params, point);
    if !(pot.tau > 0.0) {
        return Err(Error::InvalidParameter("projection needs tau > 0".into()));
    }
    let pairs = sector_eigs(grid, params, point, 0, k)?;
    project_onto(grid, &pot, &pairs, psi_test)
}

pub fn project_onto(
    grid: &RadialGrid,
    pot: &PotentialData,
    pairs: &[EigenPair],
    psi_test: &[f64],
) -> Result<Projection> {
    let mut beta = Vec::with_capacity(pairs.len());
    let mut beta_spectral = Vec::with_capacity(pairs.len());
    let mut remainder = psi_test.to_vec();
    let mut errors = vec![grid.h10_norm(&remainder)];
    for pair in pairs {
        let mu = pair
            .mu
            .ok_or_else(|| Error::InvalidParameter("projection needs tau > 0".into()))?;
        let b = grid.h10_inner(psi_test, &pair.phi);
        let (_, deflated) = deflate(grid, pot, &pair.phi);
        let vd: Vec<f64> = deflated.iter().zip(pot.v.iter()).map(|(a, v)| a * v).collect();
        beta_spectral.push(pot.tau / mu * grid.weighted_dot(&vd, psi_test));
        beta.push(b);
        for (r, f) in remainder.iter_mut().zip(pair.phi.iter()) {
            *r -= b * f;
        }
        errors.push(grid.h10_norm(&remainder));
    }
    Ok(Projection {
        beta,
        beta_spectral,
        reconstruction_errors: errors,
    })
}

/// Eigenpairs in sectors 0..=l_max (`k` each), σ₁, kernel diagnostics and
/// the radial identity checks.
pub fn spectrum_report(
    grid: &RadialGrid,
    params: ProblemParams,
    point: &BranchPoint,
    l_max: usize,
    k: usize,
) -> Result<SpectrumReport> {
    if l_max < 2 {
        return Err(Error::InvalidParameter(format!("l_max must be >= 2, got {l_max}")));
    }
    let sectors: Vec<Vec<EigenPair>> = (0..=l_max)
        .into_par_iter()
        .map(|l| sector_eigs(grid, params, point, l, k))
        .collect::<Result<_>>()?;
    let minima: Vec<f64> = sectors.iter().map(|s| s[0].sigma).collect();
    if minima[1..].windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::SectorOrder(minima));
    }
    let (argmin_sector, &sigma1) = minima
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let identities = sectors[0]
        .iter()
        .map(|pair| eigen_identity_check(grid, params, point, pair))
        .collect();
    Ok(SpectrumReport {
        lambda: point.lambda,
        kernel: kernel_check(grid, params, point)?,
        sectors,
        sigma1,
        argmin_sector,
        identities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branch::{initial_point, solve_at};
    use std::f64::consts::PI;

    const J11: f64 = 3.831_705_970_207_512;

    fn setup(dim: usize, p: f64, m: usize) -> (RadialGrid, ProblemParams) {
        (RadialGrid::new(dim, m).unwrap(), ProblemParams::new(dim, p).unwrap())
    }

    #[test]
    fn potential_at_zero() {
        let (g, pr) = setup(2, 2.0, 128);
        let pt = initial_point(&g, pr).unwrap();
        let pot = potential(&g, pr, &pt);
        assert!(pot.v.iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!((pot.m - 1.0).abs() < 1e-12);
        assert_eq!(pot.r_plus, g.radius());
        assert_eq!(pot.tau, 0.0);
    }

    #[test]
    fn deflation_of_constants_and_torsion() {
        let (g, pr) = setup(2, 2.0, 512);
        let pt = initial_point(&g, pr).unwrap();
        let pot = potential(&g, pr, &pt);
        let (c, d) = deflate(&g, &pot, &vec![3.5; g.len()]);
        assert!((c - 3.5).abs() < 1e-12);
        assert!(max_abs(&d) < 1e-12);
        let (mean, _) = deflate(&g, &pot, &pt.psi);
        assert!((mean - 1.0 / (8.0 * PI)).abs() < 1e-5);
    }

    #[test]
    fn lambda_zero_dipole_is_dirichlet_eigenvalue() {
        let (g, pr) = setup(2, 2.0, 1024);
        let pt = initial_point(&g, pr).unwrap();
        let pairs = sector_eigs(&g, pr, &pt, 1, 1).unwrap();
        let exact = PI * J11 * J11;
        assert!((pairs[0].sigma - exact).abs() < 1e-4 * exact, "{}", pairs[0].sigma);
        assert_eq!(pairs[0].mean, 0.0);
        assert!(pairs[0].mu.is_none());
    }

    #[test]
    fn subspace_iteration_matches_dense_oracle() {
        let (g, pr) = setup(2, 2.0, 128);
        for lambda in [0.0, 8.0, 20.0] {
            let pt = solve_at(&g, pr, lambda, 12).unwrap();
            for l in 0..3 {
                let a = sector_eigs(&g, pr, &pt, l, 3).unwrap();
                let b = dense_sector_eigs(&g, pr, &pt, l, 3).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    assert!((x.sigma - y.sigma).abs() < 1e-8 * y.sigma.abs().max(1.0), "l={l} {} {}", x.sigma, y.sigma);
                    let diff: Vec<f64> = x.phi.iter().zip(y.phi.iter()).map(|(p, q)| p - q).collect();
                    assert!(g.h10_norm(&diff) < 1e-6);
                }
            }
        }
    }

    #[test]
    fn power_iteration_on_t_agrees() {
        let (g, pr) = setup(3, 2.0, 256);
        let pt = solve_at(&g, pr, 10.0, 8).unwrap();
        let pot = potential(&g, pr, &pt);
        let pairs = sector_eigs(&g, pr, &pt, 0, 1).unwrap();
        let mu_ref = pairs[0].mu.unwrap();
        let mut x = GridFunction::from_fn(&g, |r| g.radius() - r);
        let mut mu = 0.0;
        for _ in 0..400 {
            let y = apply_t(&g, &pot, 0, &x).unwrap();
            mu = g.h10_inner(&y, &x) / g.h10_inner(&x, &x);
            let n = g.h10_norm(&y);
            x = y.iter().map(|v| v / n).collect::<Vec<_>>().into();
        }
        assert!((mu - mu_ref).abs() < 1e-8 * mu_ref, "{mu} vs {mu_ref}");
        let sigma = pot.tau * (1.0 / mu_ref - 1.0);
        assert!((sigma - pairs[0].sigma).abs() < 1e-8 * sigma.abs());
    }

    #[test]
    fn sigma1_rejects_small_lmax() {
        let (g, pr) = setup(2, 2.0, 64);
        let pt = initial_point(&g, pr).unwrap();
        assert!(sigma1(&g, pr, &pt, 1).is_err());
        let s = sigma1(&g, pr, &pt, 2).unwrap();
        assert!(s.sigma1 > 0.0);
    }

    #[test]
    fn kernel_candidate_is_harmonic_outside() {
        let (g, _) = setup(3, 2.0, 512);
        let rp = 0.4 * g.radius();
        let phi = kernel_candidate(&g, rp);
        let lap = g.sector(0).apply(&g, &phi);
        for (i, r) in g.nodes().iter().enumerate().take(g.cells()) {
            if *r > rp + 2.0 * g.step() {
                assert!(lap[i].abs() < 1e-3, "{}", lap[i]);
            }
        }
        assert_eq!(phi[g.cells()], 0.0);
    }

    #[test]
    fn kernel_report_empty_for_positive_alpha() {
        let (g, pr) = setup(2, 2.0, 128);
        let pt = solve_at(&g, pr, 5.0, 5).unwrap();
        let k = kernel_check(&g, pr, &pt).unwrap();
        assert!(!k.alpha_negative);
        assert!(k.min_mu.unwrap() > 0.0);
    }
}
