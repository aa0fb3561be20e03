//! Cross-checks against independent oracles: closed forms, a separate
//! fixed-step integrator, finite differences along the branch, refinement.

use std::f64::consts::PI;

use plasmaball::branch::{self, find_lambda_plus, initial_point, newton_solve, solve_at, sweep, tangent};
use plasmaball::emden::{self, lambda_plus_formula, solve_emden, solve_emden_from};
use plasmaball::grid::unit_ball_volume;
use plasmaball::spectrum::{self, potential};
use plasmaball::{ProblemParams, RadialGrid};

fn params(dim: usize, p: f64) -> ProblemParams {
    ProblemParams::new(dim, p).unwrap()
}

fn formula_lambda_plus(pr: ProblemParams) -> f64 {
    let e = solve_emden(pr, 1e-12).unwrap();
    lambda_plus_formula(pr, e.i_p, plasmaball::grid::unit_volume_radius(pr.dim()))
}

/// Classical RK4 with a fixed step, started from the two-term series, and
/// I_p from the boundary flux of the rescaled solution.
fn rk4_emden_integral(dim: usize, p: f64, h: f64) -> f64 {
    let n = dim as f64;
    let f = |r: f64, y: [f64; 2]| -> [f64; 2] { [y[1], -(n - 1.0) / r * y[1] - y[0].max(0.0).powf(p)] };
    let mut r = 1e-4;
    let mut y = [1.0 - r * r / (2.0 * n), -r / n];
    loop {
        let k1 = f(r, y);
        let k2 = f(r + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = f(r + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = f(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        let next = [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        if next[0] <= 0.0 {
            break;
        }
        y = next;
        r += h;
    }
    // Newton steps onto the zero, each an RK4 step of length −u/u′.
    for _ in 0..6 {
        let s = -y[0] / y[1];
        let k1 = f(r, y);
        let k2 = f(r + 0.5 * s, [y[0] + 0.5 * s * k1[0], y[1] + 0.5 * s * k1[1]]);
        let k3 = f(r + 0.5 * s, [y[0] + 0.5 * s * k2[0], y[1] + 0.5 * s * k2[1]]);
        let k4 = f(r + s, [y[0] + s * k3[0], y[1] + s * k3[1]]);
        y = [
            y[0] + s / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + s / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        r += s;
    }
    -n * unit_ball_volume(dim) * r.powf((p + 1.0) / (p - 1.0)) * y[1]
}

#[test]
fn emden_integral_matches_fixed_step_oracle() {
    let pr = params(2, 2.0);
    let oracle = rk4_emden_integral(2, 2.0, 2e-4);
    let shots: Vec<f64> = [1e-6, 1e-8, 1e-10]
        .iter()
        .map(|tol| solve_emden(pr, *tol).unwrap().i_p)
        .collect();
    assert!((shots[2] - oracle).abs() < 1e-7 * oracle, "{} vs {oracle}", shots[2]);
    for s in &shots {
        assert!((s - shots[2]).abs() < 1e-6 * shots[2]);
    }
}

#[test]
fn emden_scaling_from_center_two() {
    let tol = 1e-10;
    for (dim, p) in [(3, 2.0), (2, 1.5), (4, 1.8)] {
        let pr = params(dim, p);
        let a = solve_emden_from(pr, 1.0, tol, 4096).unwrap();
        let b = solve_emden_from(pr, 2.0, tol, 4096).unwrap();
        let diff = a.profile.iter().zip(&b.profile).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(diff <= 10.0 * tol * a.center.max(1.0));
    }
}

#[test]
fn emden_point_lies_on_branch() {
    for (dim, p) in [(2, 2.0), (3, 2.0), (3, 1.5)] {
        let pr = params(dim, p);
        let e = solve_emden(pr, 1e-12).unwrap();
        let g = RadialGrid::new(dim, 1024).unwrap();
        let pt = emden::emden_to_branch_point(&e, &g).unwrap();
        let lf = lambda_plus_formula(pr, e.i_p, g.radius());
        assert_eq!(pt.alpha, 0.0);
        assert!((pt.lambda - lf).abs() < 1e-6 * lf);
        // Interpolated onto the grid, the residual is at discretization level.
        assert!(pt.residual_norm < 1e-4, "{}", pt.residual_norm);
        let coarse = RadialGrid::new(dim, 512).unwrap();
        let pc = emden::emden_to_branch_point(&e, &coarse).unwrap();
        assert!(pc.residual_norm > 2.5 * pt.residual_norm);
    }
}

#[test]
fn emden_integral_refinement() {
    // I_p from the fine profile versus grid quadratures of the same profile.
    let pr = params(3, 2.0);
    let e = solve_emden(pr, 1e-12).unwrap();
    let quad = |m: usize| -> f64 {
        let g = RadialGrid::new(3, m).unwrap();
        let r = g.radius();
        let scale = r.powi(3);
        let vals: Vec<f64> = g.nodes().iter().map(|x| e.eval(x / r).powf(2.0)).collect();
        g.integrate(&vals) / scale
    };
    let errs: Vec<f64> = [256, 512, 1024].iter().map(|&m| (quad(m) - e.i_p).abs()).collect();
    assert!(errs[0] / errs[1] > 3.0 && errs[1] / errs[2] > 3.0, "{errs:?}");
}

#[test]
fn lambda_zero_energy_closed_forms() {
    for dim in [2, 3, 4] {
        let g = RadialGrid::new(dim, 1024).unwrap();
        let pt = initial_point(&g, params(dim, 1.5)).unwrap();
        let n = dim as f64;
        let exact = g.radius().powi(2) / (2.0 * n * (n + 2.0));
        assert!((pt.energy - exact).abs() < 1e-5 * exact);
        let (e1, e2) = branch::energy_forms(&g, &pt);
        assert!((e1 - e2).abs() < 1e-5 * exact);
    }
    let g = RadialGrid::new(2, 2048).unwrap();
    let pt = initial_point(&g, params(2, 2.0)).unwrap();
    assert!((pt.energy - 1.0 / (16.0 * PI)).abs() < 1e-6);
}

#[test]
fn jacobian_matches_finite_differences() {
    let g = RadialGrid::new(2, 256).unwrap();
    let pr = params(2, 1.5);
    for lambda in [4.0, 20.0] {
        let pt = solve_at(&g, pr, lambda, 10).unwrap();
        let r_max = g.radius();
        let dirs = [
            (0.3, plasmaball::GridFunction::from_fn(&g, |r| (r_max - r) * (1.0 + 3.0 * r))),
            (-1.0, plasmaball::GridFunction::from_fn(&g, |r| (r_max * r_max - r * r) * (r * 7.0).cos())),
        ];
        for (s, phi) in dirs {
            let eps = 1e-6;
            let (j1, j2) = branch::jacobian_apply(&g, pr, &pt, s, &phi);
            let psi_e: Vec<f64> = pt.psi.iter().zip(phi.iter()).map(|(a, b)| a + eps * b).collect();
            let (f1, f2) = branch::residual(&g, pr, lambda, pt.alpha + eps * s, &psi_e);
            let (b1, b2) = branch::residual(&g, pr, lambda, pt.alpha, &pt.psi);
            assert!(((f1 - b1) / eps - j1).abs() < 1e-4 * j1.abs().max(1.0));
            let diff: Vec<f64> = (0..g.len()).map(|i| (f2[i] - b2[i]) / eps - j2[i]).collect();
            let scale = g.weighted_dot(&j2, &j2).sqrt();
            assert!(g.weighted_dot(&diff, &diff).sqrt() < 1e-3 * scale.max(1.0));
        }
    }
}

#[test]
fn tangent_matches_branch_differences() {
    let g = RadialGrid::new(2, 512).unwrap();
    let pr = params(2, 2.0);
    let lp = formula_lambda_plus(pr);
    for f in [0.0, 0.4, 1.6] {
        let lam = f * lp;
        let pt = if lam == 0.0 { initial_point(&g, pr).unwrap() } else { solve_at(&g, pr, lam, 12).unwrap() };
        let t = tangent(&g, pr, &pt).unwrap();
        assert!((t.dalpha - t.dalpha_from_means).abs() < 1e-8 * t.dalpha.abs());
        assert!(t.dalpha < 0.0 && t.denergy > 0.0);
        let d = 1e-4;
        let hi = newton_solve(&g, pr, lam + d, (pt.alpha + d * t.dalpha, &step(&pt.psi, &t.dpsi, d))).unwrap();
        let fd = if lam == 0.0 {
            (hi.alpha - pt.alpha) / d
        } else {
            let lo = newton_solve(&g, pr, lam - d, (pt.alpha - d * t.dalpha, &step(&pt.psi, &t.dpsi, -d))).unwrap();
            (hi.alpha - lo.alpha) / (2.0 * d)
        };
        let tol = if lam == 0.0 { 1e-3 } else { 1e-4 };
        assert!((fd - t.dalpha).abs() < tol * t.dalpha.abs(), "lambda {lam}: {fd} vs {}", t.dalpha);
    }
}

fn step(a: &[f64], b: &[f64], d: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + d * y).collect()
}

#[test]
fn lambda_plus_agrees_with_formula() {
    for (dim, p) in [(2, 2.0), (3, 2.0)] {
        let pr = params(dim, p);
        let g = RadialGrid::new(dim, 1024).unwrap();
        let lp = find_lambda_plus(&g, pr).unwrap();
        let lf = formula_lambda_plus(pr);
        assert!(lp.is_finite());
        assert!((lp - lf).abs() < 1e-3 * lf, "N={dim}: {lp} vs {lf}");
        let at = solve_at(&g, pr, lf, 20).unwrap();
        assert!(at.alpha.abs() < 1e-3);
        let above = solve_at(&g, pr, 1.1 * lf, 20).unwrap();
        assert!(above.alpha < 0.0);
        let pot = potential(&g, pr, &above);
        assert!(pot.r_plus < g.radius());
    }
}

#[test]
fn sweep_properties() {
    let g = RadialGrid::new(2, 512).unwrap();
    let pr = params(2, 2.0);
    let lp = formula_lambda_plus(pr);
    let tr = sweep(&g, pr, &branch::lambda_grid(3.0 * lp, 25)).unwrap();
    assert!(tr.alpha_decreasing && tr.energy_increasing);
    let changes = tr.points.windows(2).filter(|w| (w[0].alpha > 0.0) != (w[1].alpha > 0.0)).count();
    assert_eq!(changes, 1);
    let est = tr.lambda_plus.unwrap();
    assert!((est - lp).abs() < 1e-3 * lp);
    for (pt, tan) in tr.points.iter().zip(&tr.tangents) {
        assert!(pt.residual_norm <= 1e-10);
        assert!(pt.psi.iter().all(|v| *v >= 0.0));
        assert!(tan.dalpha < 0.0 && tan.denergy > 0.0);
        let pot = potential(&g, pr, pt);
        let mean = pot.mean(&g, &pt.psi);
        assert!(((pt.alpha + pt.lambda * mean) * pot.m - 1.0).abs() < 1e-9);
        let (e1, e2) = branch::energy_forms(&g, pt);
        assert!((e1 - e2).abs() < 1e-9 * e1);
    }
}

#[test]
fn alpha_second_order_in_grid() {
    let pr = params(3, 1.5);
    let lam = 12.0;
    let alphas: Vec<f64> = [256, 512, 1024]
        .iter()
        .map(|&m| solve_at(&RadialGrid::new(3, m).unwrap(), pr, lam, 12).unwrap().alpha)
        .collect();
    let ratio = (alphas[0] - alphas[1]) / (alphas[1] - alphas[2]);
    assert!((3.0..5.0).contains(&ratio), "{alphas:?}");
}

#[test]
fn spectrum_at_twice_lambda_plus_is_positive() {
    let pr = params(2, 2.0);
    let lp = formula_lambda_plus(pr);
    let g = RadialGrid::new(2, 512).unwrap();
    let pt = solve_at(&g, pr, 2.0 * lp, 20).unwrap();
    let rep = spectrum::spectrum_report(&g, pr, &pt, 2, 3).unwrap();
    assert!(rep.sigma1 > 0.0);
    for sector in &rep.sectors[1..] {
        assert!(sector.iter().all(|p| p.mean == 0.0));
    }
    for id in &rep.identities {
        assert!(id.residual < 1e-6 && id.sign_ok);
    }
    assert!(rep.kernel.alpha_negative);
    assert!(rep.kernel.v_deflated_norm.unwrap() <= 1e-8);
}

#[test]
fn fourier_coefficients_two_ways() {
    let pr = params(2, 2.0);
    let g = RadialGrid::new(2, 512).unwrap();
    let pt = solve_at(&g, pr, 6.0, 8).unwrap();
    let pairs = spectrum::sector_eigs(&g, pr, &pt, 0, 8).unwrap();
    let pot = potential(&g, pr, &pt);
    let first = spectrum::project_onto(&g, &pot, &pairs, &pairs[0].phi).unwrap();
    assert!((first.beta[0] - 1.0).abs() < 1e-8);
    assert!(first.beta[1..].iter().all(|b| b.abs() < 1e-8));
    let r_max = g.radius();
    let test = plasmaball::GridFunction::from_fn(&g, |r| (r_max * r_max - r * r) * (1.0 + r));
    let proj = spectrum::project_onto(&g, &pot, &pairs, &test).unwrap();
    for (a, b) in proj.beta.iter().zip(&proj.beta_spectral) {
        assert!((a - b).abs() < 1e-8 * proj.beta[0].abs());
    }
    assert!(proj.reconstruction_errors.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    // Orthonormal basis: the squared error drops by exactly β_j².
    for (j, b) in proj.beta.iter().enumerate() {
        let drop = proj.reconstruction_errors[j].powi(2) - proj.reconstruction_errors[j + 1].powi(2);
        assert!((drop - b * b).abs() < 1e-9, "j = {j}");
    }
    let combo: Vec<f64> = (0..g.len()).map(|i| pairs[0].phi[i] - 0.5 * pairs[3].phi[i]).collect();
    let exact = spectrum::project_onto(&g, &pot, &pairs, &combo).unwrap();
    assert!(*exact.reconstruction_errors.last().unwrap() < 1e-8);
}

#[test]
fn best_constant_matches_dirichlet_eigenvalue() {
    for dim in [2, 3] {
        let g = RadialGrid::new(dim, 512).unwrap();
        let bc = plasmaball::sobolev::best_constant(&g, 2.0).unwrap();
        let eig = spectrum::dirichlet_eigs(&g, 0, 1).unwrap();
        assert!((bc.value - eig[0].sigma).abs() < 1e-9 * bc.value, "{} vs {}", bc.value, eig[0].sigma);
        assert!(bc.minimizer.windows(2).all(|w| w[1] <= w[0]));
    }
}
