//! Radial discretization of the unit-volume ball 𝔻_N.
//!
//! Nodes are uniform, `r_i = i·h`, `h = R/M`. Each node owns the spherical
//! shell between the neighbouring midpoints (a ball of radius `h/2` for the
//! origin, a half shell for `r = R`), and the quadrature weight is the exact
//! volume of that shell, so the weights sum to `ω_N R^N = 1`.
//!
//! The sector operators use the matching finite-volume fluxes. In weighted
//! form the Laplacian becomes a symmetric tridiagonal stiffness matrix `K`
//! with `K f = W (−Δ_l f)`, so discrete integration by parts
//! `Σ w (−Δ_l f) g = ⟨f, g⟩_{H¹₀}` holds exactly.

use std::f64::consts::PI;
use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{LdlFactor, SymTridiagonal};

/// Volume of the unit ball in ℝ^N.
pub fn unit_ball_volume(dim: usize) -> f64 {
    // ω_N = π^{N/2} / Γ(N/2 + 1), via the recursion ω_N = 2π/N · ω_{N−2}.
    match dim {
        0 => 1.0,
        1 => 2.0,
        n => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Radius of the ball of unit volume in ℝ^N.
pub fn unit_volume_radius(dim: usize) -> f64 {
    unit_ball_volume(dim).powf(-1.0 / dim as f64)
}

/// Nodal values on a [`RadialGrid`], boundary node included.
///
/// Functions in H¹₀ carry a zero in the last slot; sector-`l ≥ 1` profiles
/// also vanish at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction(pub Vec<f64>);

impl GridFunction {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn from_fn(grid: &RadialGrid, f: impl Fn(f64) -> f64) -> Self {
        Self(grid.nodes.iter().map(|&r| f(r)).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for GridFunction {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for GridFunction {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for GridFunction {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    dim: usize,
    cells: usize,
    radius: f64,
    step: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `flux[i]` = |S^{N−1}| r_{i+½}^{N−1} / h, the face coefficient between
    /// nodes `i` and `i + 1`.
    flux: Vec<f64>,
}

impl RadialGrid {
    pub const MIN_CELLS: usize = 16;

    /// Grid on `[0, R_N]` with `cells` uniform intervals.
    pub fn new(dim: usize, cells: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "dimension must be >= 2, got {dim}"
            )));
        }
        if cells < Self::MIN_CELLS {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least {} cells, got {cells}",
                Self::MIN_CELLS
            )));
        }
        let omega = unit_ball_volume(dim);
        let radius = unit_volume_radius(dim);
        let h = radius / cells as f64;
        let n = dim as i32;
        let nodes: Vec<f64> = (0..=cells).map(|i| i as f64 * h).collect();
        let ball = |r: f64| omega * r.powi(n);
        let mut weights = Vec::with_capacity(cells + 1);
        weights.push(ball(0.5 * h));
        for &r in &nodes[1..cells] {
            weights.push(ball(r + 0.5 * h) - ball(r - 0.5 * h));
        }
        weights.push(ball(radius) - ball(radius - 0.5 * h));
        let sphere = dim as f64 * omega;
        let flux = (0..cells)
            .map(|i| sphere * ((i as f64 + 0.5) * h).powi(n - 1) / h)
            .collect();
        Ok(Self {
            dim,
            cells,
            radius,
            step: h,
            nodes,
            weights,
            flux,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of cells M; there are M + 1 nodes.
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn len(&self) -> usize {
        self.cells + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn flux(&self) -> &[f64] {
        &self.flux
    }

    pub fn zeros(&self) -> GridFunction {
        GridFunction::zeros(self.len())
    }

    /// Σ w_i f_i.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Quadrature-weighted L² product Σ w_i f_i g_i.
    pub fn weighted_dot(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    /// ⟨f, g⟩_{H¹₀} for radial functions vanishing at r = R.
    pub fn h10_inner(&self, f: &[f64], g: &[f64]) -> f64 {
        (0..self.cells)
            .map(|i| self.flux[i] * (f[i + 1] - f[i]) * (g[i + 1] - g[i]))
            .sum()
    }

    pub fn h10_norm(&self, f: &[f64]) -> f64 {
        self.h10_inner(f, f).max(0.0).sqrt()
    }

    /// Assemble the sector-`l` operator.
    pub fn sector(&self, l: usize) -> SectorOperator {
        SectorOperator::new(self, l)
    }

    /// Green solve in sector `l`: φ with −Δ_l φ = f and φ(R) = 0.
    pub fn green_solve(&self, l: usize, f: &[f64]) -> Result<GridFunction> {
        self.sector(l).factor()?.solve(self, f)
    }
}

/// Discrete `−f″ − (N−1)/r f′ + l(l+N−2)/r² f` with Dirichlet data at `R`.
///
/// Unknowns are nodes `first..M` where `first` is 0 for `l = 0` (symmetry at
/// the origin is built into the origin cell) and 1 for `l ≥ 1` (`f(0) = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct SectorOperator {
    sector: usize,
    first: usize,
    stiffness: SymTridiagonal,
    weights: Vec<f64>,
}

impl SectorOperator {
    fn new(grid: &RadialGrid, l: usize) -> Self {
        let first = usize::from(l > 0);
        let m = grid.cells;
        let n = grid.dim as f64;
        let centrifugal = (l as f64) * (l as f64 + n - 2.0);
        let mut diag = Vec::with_capacity(m - first);
        let mut off = Vec::with_capacity(m - first);
        for i in first..m {
            let left = if i > 0 { grid.flux[i - 1] } else { 0.0 };
            let mut d = left + grid.flux[i];
            if l > 0 {
                let r = grid.nodes[i];
                d += grid.weights[i] * centrifugal / (r * r);
            }
            diag.push(d);
            if i + 1 < m {
                off.push(-grid.flux[i]);
            }
        }
        Self {
            sector: l,
            first,
            stiffness: SymTridiagonal::new(diag, off),
            weights: grid.weights[first..m].to_vec(),
        }
    }

    pub fn sector_index(&self) -> usize {
        self.sector
    }

    /// Index of the first unknown node.
    pub fn first(&self) -> usize {
        self.first
    }

    /// Number of unknowns.
    pub fn size(&self) -> usize {
        self.stiffness.len()
    }

    pub fn stiffness(&self) -> &SymTridiagonal {
        &self.stiffness
    }

    /// Quadrature weights of the unknown nodes.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Restrict a full nodal vector to the unknowns.
    pub fn restrict<'a>(&self, f: &'a [f64]) -> &'a [f64] {
        &f[self.first..self.first + self.size()]
    }

    /// Embed unknowns into a full nodal vector (zeros elsewhere).
    pub fn extend(&self, grid: &RadialGrid, u: &[f64]) -> GridFunction {
        let mut out = grid.zeros();
        out[self.first..self.first + u.len()].copy_from_slice(u);
        out
    }

    /// `K u` on the unknowns.
    pub fn stiffness_apply(&self, u: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; u.len()];
        self.stiffness.matvec(u, &mut y);
        y
    }

    /// K-inner product of two unknown vectors (the sector H¹₀ product).
    pub fn energy_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        crate::linalg::dot(&self.stiffness_apply(u), v)
    }

    /// Discrete image `−Δ_l f` at the unknown nodes, returned on the full grid
    /// (zeros at the boundary node, and at the origin for `l ≥ 1`).
    pub fn apply(&self, grid: &RadialGrid, f: &[f64]) -> GridFunction {
        let y = self.stiffness_apply(self.restrict(f));
        let scaled: Vec<f64> = y.iter().zip(&self.weights).map(|(a, w)| a / w).collect();
        self.extend(grid, &scaled)
    }

    pub fn factor(&self) -> Result<SectorSolver> {
        Ok(SectorSolver {
            first: self.first,
            weights: self.weights.clone(),
            factor: self.stiffness.factor_spd()?,
        })
    }
}

/// Factored sector operator; reusable for repeated Green solves.
#[derive(Debug, Clone)]
pub struct SectorSolver {
    first: usize,
    weights: Vec<f64>,
    factor: LdlFactor,
}

impl SectorSolver {
    /// φ with −Δ_l φ = f at the unknown nodes, φ = 0 elsewhere.
    pub fn solve(&self, grid: &RadialGrid, f: &[f64]) -> Result<GridFunction> {
        let mut rhs: Vec<f64> = self
            .weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * f[self.first + k])
            .collect();
        self.factor.solve_in_place(&mut rhs);
        let mut out = grid.zeros();
        out[self.first..self.first + rhs.len()].copy_from_slice(&rhs);
        Ok(out)
    }

    /// Solve `K u = b` for a right-hand side already in weighted form.
    pub fn solve_weighted_in_place(&self, b: &mut [f64]) {
        self.factor.solve_in_place(b);
    }
}

/// Torsion profile (R² − r²)/(2N): the solution of −Δψ = 1, ψ(R) = 0.
pub fn torsion_profile(grid: &RadialGrid) -> GridFunction {
    let r2 = grid.radius * grid.radius;
    let n = grid.dim as f64;
    GridFunction::from_fn(grid, |r| (r2 - r * r) / (2.0 * n))
}

/// Linear interpolation of samples `values` on a uniform grid over `[0, span]`.
pub fn interpolate_uniform(values: &[f64], span: f64, x: f64) -> f64 {
    let n = values.len() - 1;
    let t = (x / span * n as f64).clamp(0.0, n as f64);
    let i = (t.floor() as usize).min(n - 1);
    let frac = t - i as f64;
    values[i] * (1.0 - frac) + values[i + 1] * frac
}
