//! The subcommands. Each returns a serializable summary; the caller prints it
//! and decides the exit code.

use std::path::PathBuf;

use plasmaball::branch::{find_lambda_plus, solve_at, sweep};
use plasmaball::emden::{lambda_plus_formula, solve_emden};
use plasmaball::spectrum::{self, annotate_sigma1};
use plasmaball::variational::{self, random_test_function, seeded_rng};
use plasmaball::{Error as CoreError, RadialGrid, SweepTrace};
use serde::Serialize;
use thiserror::Error;

use crate::checks::{self, Case, Check};
use crate::config::RunConfig;
use crate::output::{case_path, ensure_dir, fmt17, write_csv, write_json, SCHEMA_VERSION, SWEEP_HEADER};

const EMDEN_TOL: f64 = 1e-12;
const SOLVE_STEPS: usize = 20;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("solver failed{}: {source}", .lambda.map(|l| format!(" at lambda = {l}")).unwrap_or_default())]
    Solver { lambda: Option<f64>, source: CoreError },
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

/// λ at which a core error happened, if it names one.
fn failing_lambda(e: &CoreError) -> Option<f64> {
    match e {
        CoreError::NewtonDiverged { lambda, .. } | CoreError::ContinuationFailed { lambda, .. } => Some(*lambda),
        _ => None,
    }
}

fn solver(e: CoreError) -> RunError {
    RunError::Solver {
        lambda: failing_lambda(&e),
        source: e,
    }
}

fn solver_at(lambda: f64) -> impl Fn(CoreError) -> RunError {
    move |e| RunError::Solver {
        lambda: failing_lambda(&e).or(Some(lambda)),
        source: e,
    }
}

fn grid(cfg: &RunConfig) -> Result<RadialGrid, RunError> {
    RadialGrid::new(cfg.dimension, cfg.grid).map_err(solver)
}

fn formula(cfg: &RunConfig) -> Result<f64, RunError> {
    let params = cfg.params();
    let e = solve_emden(params, EMDEN_TOL).map_err(solver)?;
    Ok(lambda_plus_formula(params, e.i_p, plasmaball::grid::unit_volume_radius(cfg.dimension)))
}

#[derive(Debug, Serialize)]
pub struct EmdenSummary {
    pub schema: u32,
    pub dimension: usize,
    pub exponent: f64,
    pub i_p: f64,
    pub center: f64,
    pub boundary_slope: f64,
    pub unit_shot_zero: f64,
    pub lambda_plus: f64,
}

pub fn run_emden(cfg: &RunConfig) -> Result<EmdenSummary, RunError> {
    let params = cfg.params();
    let e = solve_emden(params, EMDEN_TOL).map_err(solver)?;
    Ok(EmdenSummary {
        schema: SCHEMA_VERSION,
        dimension: cfg.dimension,
        exponent: cfg.exponent,
        i_p: e.i_p,
        center: e.center,
        boundary_slope: e.boundary_slope,
        unit_shot_zero: e.unit_shot_zero,
        lambda_plus: lambda_plus_formula(params, e.i_p, plasmaball::grid::unit_volume_radius(cfg.dimension)),
    })
}

#[derive(Debug, Serialize)]
pub struct LambdaPlusSummary {
    pub schema: u32,
    pub dimension: usize,
    pub exponent: f64,
    pub grid: usize,
    pub formula: f64,
    pub continuation: f64,
    pub relative_difference: f64,
}

pub fn run_lambda_plus(cfg: &RunConfig) -> Result<LambdaPlusSummary, RunError> {
    let f = formula(cfg)?;
    let c = find_lambda_plus(&grid(cfg)?, cfg.params()).map_err(solver)?;
    Ok(LambdaPlusSummary {
        schema: SCHEMA_VERSION,
        dimension: cfg.dimension,
        exponent: cfg.exponent,
        grid: cfg.grid,
        formula: f,
        continuation: c,
        relative_difference: (c - f).abs() / f,
    })
}

#[derive(Debug, Serialize)]
pub struct SweepSummary {
    pub schema: u32,
    pub status: &'static str,
    pub dimension: usize,
    pub exponent: f64,
    pub grid: usize,
    pub lmax: usize,
    pub points: usize,
    /// Zero of α along the sweep; null if the range stops short of it.
    pub lambda_plus: Option<f64>,
    pub lambda_plus_formula: f64,
    pub alpha_decreasing: bool,
    pub energy_increasing: bool,
    pub sigma1_positive: bool,
    pub failing_lambda: Option<f64>,
    pub error: Option<String>,
    pub csv: PathBuf,
}

/// Branch sweep with σ₁; writes the CSV and the JSON summary.
pub fn run_sweep(cfg: &RunConfig) -> Result<(SweepTrace, SweepSummary), RunError> {
    let params = cfg.params();
    let g = grid(cfg)?;
    let lp = formula(cfg)?;
    let lambdas = cfg.lambdas(lp);
    ensure_dir(&cfg.out)?;
    let csv_path = case_path(&cfg.out, "branch", cfg.dimension, cfg.exponent, "csv");
    let json_path = case_path(&cfg.out, "branch", cfg.dimension, cfg.exponent, "json");
    let mut summary = SweepSummary {
        schema: SCHEMA_VERSION,
        status: "failed",
        dimension: cfg.dimension,
        exponent: cfg.exponent,
        grid: cfg.grid,
        lmax: cfg.lmax,
        points: lambdas.len(),
        lambda_plus: None,
        lambda_plus_formula: lp,
        alpha_decreasing: false,
        energy_increasing: false,
        sigma1_positive: false,
        failing_lambda: None,
        error: None,
        csv: csv_path.clone(),
    };
    let result = sweep(&g, params, &lambdas).map_err(solver).and_then(|mut trace| {
        let sig = annotate_sigma1(&g, params, &mut trace, cfg.lmax).map_err(solver)?;
        Ok((trace, sig))
    });
    let (trace, sig) = match result {
        Ok(x) => x,
        Err(e) => {
            if let RunError::Solver { lambda, .. } = &e {
                summary.failing_lambda = *lambda;
            }
            summary.error = Some(e.to_string());
            write_json(&json_path, &summary)?;
            return Err(e);
        }
    };
    let rows: Vec<Vec<String>> = trace
        .points
        .iter()
        .zip(&trace.tangents)
        .zip(&sig)
        .map(|((pt, tan), s)| {
            let pot = spectrum::potential(&g, params, pt);
            vec![
                fmt17(pt.lambda),
                fmt17(pt.alpha),
                fmt17(pt.energy),
                fmt17(s.sigma1),
                s.sector.to_string(),
                fmt17(pot.m),
                fmt17(pot.r_plus),
                fmt17(tan.dalpha),
                fmt17(pt.residual_norm),
            ]
        })
        .collect();
    write_csv(&csv_path, &SWEEP_HEADER, &rows)?;
    summary.status = "ok";
    summary.lambda_plus = trace.lambda_plus;
    summary.alpha_decreasing = trace.alpha_decreasing;
    summary.energy_increasing = trace.energy_increasing;
    summary.sigma1_positive = sig.iter().all(|s| s.sigma1 > 0.0);
    write_json(&json_path, &summary)?;
    Ok((trace, summary))
}

#[derive(Debug, Serialize)]
pub struct SectorSummary {
    pub sector: usize,
    pub sigma: Vec<f64>,
    pub mu: Vec<Option<f64>>,
    pub residual: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct SpectrumSummary {
    pub schema: u32,
    pub dimension: usize,
    pub exponent: f64,
    pub grid: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub sigma1: f64,
    pub argmin_sector: usize,
    pub sectors: Vec<SectorSummary>,
    pub alpha_negative: bool,
    pub kernel_v_deflated_norm: Option<f64>,
    pub kernel_t_norm: Option<f64>,
    pub min_mu: Option<f64>,
    pub identity_residuals: Vec<f64>,
    pub identity_signs_ok: bool,
}

/// Spectrum at `lambda` (default λ₊).
pub fn run_spectrum(cfg: &RunConfig, lambda: Option<f64>) -> Result<SpectrumSummary, RunError> {
    let params = cfg.params();
    let g = grid(cfg)?;
    let lambda = match lambda {
        Some(l) => l,
        None => formula(cfg)?,
    };
    let pt = solve_at(&g, params, lambda, SOLVE_STEPS).map_err(solver_at(lambda))?;
    let rep = spectrum::spectrum_report(&g, params, &pt, cfg.lmax, 3).map_err(solver_at(lambda))?;
    Ok(SpectrumSummary {
        schema: SCHEMA_VERSION,
        dimension: cfg.dimension,
        exponent: cfg.exponent,
        grid: cfg.grid,
        lambda,
        alpha: pt.alpha,
        sigma1: rep.sigma1,
        argmin_sector: rep.argmin_sector,
        sectors: rep
            .sectors
            .iter()
            .enumerate()
            .map(|(l, s)| SectorSummary {
                sector: l,
                sigma: s.iter().map(|p| p.sigma).collect(),
                mu: s.iter().map(|p| p.mu).collect(),
                residual: s.iter().map(|p| p.residual).collect(),
            })
            .collect(),
        alpha_negative: rep.kernel.alpha_negative,
        kernel_v_deflated_norm: rep.kernel.v_deflated_norm,
        kernel_t_norm: rep.kernel.t_norm,
        min_mu: rep.kernel.min_mu,
        identity_residuals: rep.identities.iter().map(|c| c.residual).collect(),
        identity_signs_ok: rep.identities.iter().all(|c| c.sign_ok),
    })
}

#[derive(Debug, Serialize)]
pub struct SobolevSummary {
    pub schema: u32,
    pub dimension: usize,
    pub exponent: f64,
    pub grid: usize,
    /// Λ(𝔻_N, 2p) by descent and by shooting.
    pub best_constant: f64,
    pub best_constant_shooting: f64,
    pub lambda0: f64,
    /// Planar only.
    pub lambda1: Option<f64>,
    pub lambda_plus: f64,
    pub relative_margin: f64,
}

pub fn run_sobolev(cfg: &RunConfig) -> Result<SobolevSummary, RunError> {
    let g = grid(cfg)?;
    let p = cfg.exponent;
    let bc = plasmaball::sobolev::best_constant(&g, 2.0 * p).map_err(solver)?;
    let lambda1 = if cfg.dimension == 2 {
        Some(plasmaball::sobolev::lambda1(&g, p).map_err(solver)?)
    } else {
        None
    };
    let lp = formula(cfg)?;
    let lambda0 = bc.value / p;
    Ok(SobolevSummary {
        schema: SCHEMA_VERSION,
        dimension: cfg.dimension,
        exponent: p,
        grid: cfg.grid,
        best_constant: bc.value,
        best_constant_shooting: bc.oracle_value,
        lambda0,
        lambda1,
        lambda_plus: lp,
        relative_margin: (lp - lambda0) / lp,
    })
}

#[derive(Debug, Serialize)]
pub struct VariationalSummary {
    pub schema: u32,
    pub dimension: usize,
    pub exponent: f64,
    pub grid: usize,
    pub lambda: f64,
    pub free_energy: f64,
    pub best_start: String,
    pub starts: Vec<(String, f64, f64)>,
    pub l1_to_newton: f64,
    pub alpha_recovered: f64,
    pub alpha_newton: f64,
    pub stationarity: f64,
    pub second_variation_min: f64,
    pub random_tests: usize,
}

/// Free-energy minimization at `lambda` (default λ₊) against the Newton branch.
pub fn run_variational(cfg: &RunConfig, lambda: Option<f64>) -> Result<VariationalSummary, RunError> {
    let params = cfg.params();
    let g = grid(cfg)?;
    let lambda = match lambda {
        Some(l) => l,
        None => formula(cfg)?,
    };
    let pt = solve_at(&g, params, lambda, SOLVE_STEPS).map_err(solver_at(lambda))?;
    let ms = variational::multistart(&g, params, lambda, None).map_err(solver_at(lambda))?;
    let mult = variational::recover_alpha(&g, params, lambda, &ms.best.rho).map_err(solver_at(lambda))?;
    let mut rng = seeded_rng(cfg.seed);
    let mut lo = f64::INFINITY;
    for i in 0..checks::RANDOM_TESTS {
        let l = i % (cfg.lmax + 1);
        let phi = random_test_function(&g, l, &mut rng);
        lo = lo.min(variational::second_variation(&g, params, &pt, l, &phi).map_err(solver_at(lambda))?);
    }
    Ok(VariationalSummary {
        schema: SCHEMA_VERSION,
        dimension: cfg.dimension,
        exponent: cfg.exponent,
        grid: cfg.grid,
        lambda,
        free_energy: ms.best.free_energy,
        best_start: format!("{:?}", ms.best_start),
        starts: ms.runs.iter().map(|(s, f, d)| (format!("{s:?}"), *f, *d)).collect(),
        l1_to_newton: variational::l1_distance(&g, &ms.best.rho, &pt.rho),
        alpha_recovered: mult.alpha,
        alpha_newton: pt.alpha,
        stationarity: ms.best.stationarity,
        second_variation_min: lo,
        random_tests: checks::RANDOM_TESTS,
    })
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub schema: u32,
    pub config: RunConfig,
    pub checks: Vec<Check>,
    pub passed: usize,
    pub failed: usize,
    pub all_passed: bool,
}

impl VerifyReport {
    pub fn new(config: RunConfig, checks: Vec<Check>) -> Self {
        let passed = checks.iter().filter(|c| c.passed).count();
        let failed = checks.len() - passed;
        Self {
            schema: SCHEMA_VERSION,
            config,
            checks,
            passed,
            failed,
            all_passed: failed == 0,
        }
    }
}

/// Every check for the configured (N, p). Failures are recorded, never fatal.
pub fn verify_checks(cfg: &RunConfig) -> Vec<Check> {
    let params = cfg.params();
    let mut out = Vec::new();
    if cfg.dimension == 2 {
        out.push(checks::disc_equality(params, cfg.grid));
    }
    // λ₊ only enters the default maximum, so any value works for an explicit range.
    let lambdas = cfg.lambda_max.is_some().then(|| cfg.lambdas(0.0));
    match Case::build(params, cfg.grid, cfg.lmax, cfg.seed, lambdas) {
        Ok(case) => out.extend(checks::case_checks(&case, cfg.tol)),
        Err(e) => out.extend(checks::failed_case_checks(params, &e)),
    }
    if cfg.exponent > 1.0 {
        out.push(checks::lambda0_margin(params, cfg.grid));
    }
    out.push(checks::order_energy(params, cfg.grid));
    out.push(checks::order_lambda_plus(params, cfg.grid));
    out.push(checks::order_sigma1(params, cfg.grid, cfg.lmax));
    out
}

pub fn run_verify(cfg: &RunConfig) -> Result<VerifyReport, RunError> {
    let report = VerifyReport::new(cfg.clone(), verify_checks(cfg));
    ensure_dir(&cfg.out)?;
    write_json(&case_path(&cfg.out, "verify", cfg.dimension, cfg.exponent, "json"), &report)?;
    Ok(report)
}

/// One line per check.
pub fn format_check(c: &Check) -> String {
    let measured = c.measured.map(|m| format!("{m:.3e}")).unwrap_or_else(|| "n/a".into());
    format!(
        "{} {:<40} measured {:>10}  tol {:.1e}  ({:.2}s) {}",
        if c.passed { "PASS" } else { "FAIL" },
        c.id,
        measured,
        c.tolerance,
        c.runtime_s,
        c.detail
    )
}
