//! Free-energy minimization against the Newton branch.

use plasmaball::branch::solve_at;
use plasmaball::emden::{lambda_plus_formula, solve_emden};
use plasmaball::spectrum::sector_eigs;
use plasmaball::variational::{
    closing_identity, l1_distance, minimize_free_energy, multistart, random_test_function, recover_alpha,
    second_variation, seeded_rng, taylor_remainders, uniform_density,
};
use plasmaball::{ProblemParams, RadialGrid};

fn setup(dim: usize, p: f64, m: usize) -> (RadialGrid, ProblemParams, f64) {
    let pr = ProblemParams::new(dim, p).unwrap();
    let g = RadialGrid::new(dim, m).unwrap();
    let e = solve_emden(pr, 1e-12).unwrap();
    let lp = lambda_plus_formula(pr, e.i_p, g.radius());
    (g, pr, lp)
}

#[test]
fn minimizer_is_the_branch_solution() {
    for (dim, p) in [(2, 2.0), (3, 1.5)] {
        let (g, pr, lp) = setup(dim, p, 512);
        for f in [0.5, 1.5] {
            let pt = solve_at(&g, pr, f * lp, 20).unwrap();
            let ms = multistart(&g, pr, pt.lambda, Some(&pt.rho)).unwrap();
            assert_eq!(ms.runs.len(), 3);
            assert!(ms.runs.iter().all(|(_, _, d)| *d < 1e-3), "{:?}", ms.runs);
            assert!(l1_distance(&g, &ms.best.rho, &pt.rho) < 1e-3);
            assert!(ms.best.history.windows(2).all(|w| w[1] <= w[0] + 1e-14));
            let mult = recover_alpha(&g, pr, pt.lambda, &ms.best.rho).unwrap();
            assert!((mult.alpha - pt.alpha).abs() < 1e-6, "{} vs {}", mult.alpha, pt.alpha);
            assert!(mult.deviation < 1e-6);
        }
    }
}

#[test]
fn cold_start_descent_is_monotone() {
    let (g, pr, lp) = setup(2, 3.0, 256);
    let d = minimize_free_energy(&g, pr, 1.2 * lp, &uniform_density(&g)).unwrap();
    assert!(d.history.len() > 2);
    assert!(d.history.windows(2).all(|w| w[1] <= w[0] + 1e-14));
    assert!(d.stationarity <= 1e-8);
}

#[test]
fn closing_identity_on_eigenpairs() {
    let (g, pr, lp) = setup(2, 2.0, 512);
    for f in [0.5, 1.5] {
        let pt = solve_at(&g, pr, f * lp, 20).unwrap();
        for l in 0..3 {
            for pair in sector_eigs(&g, pr, &pt, l, 3).unwrap() {
                let (a, rhs) = closing_identity(&g, pr, &pt, &pair).unwrap();
                assert!((a - rhs).abs() <= 1e-6 * rhs.abs(), "l={l}: {a} vs {rhs}");
                assert!(a > 0.0);
            }
        }
    }
}

#[test]
fn free_energy_expansion_is_quadratic() {
    let (g, pr, lp) = setup(2, 2.0, 512);
    for f in [0.5, 1.0] {
        let pt = solve_at(&g, pr, f * lp, 20).unwrap();
        let mut rng = seeded_rng(17);
        let phi = random_test_function(&g, 0, &mut rng);
        let a = second_variation(&g, pr, &pt, 0, &phi).unwrap();
        let rem = taylor_remainders(&g, pr, &pt, &phi, &[1e-2, 1e-3, 1e-4]).unwrap();
        let err: Vec<f64> = rem.iter().map(|r| (r - a).abs() / a.abs()).collect();
        // O(ε) approach; at ε = 10⁻⁴ the difference of 𝓕 values is at rounding level.
        assert!(err.iter().all(|e| *e < 1e-3), "{err:?}");
        assert!(err[0] / err[1] > 5.0, "{err:?}");
    }
}
