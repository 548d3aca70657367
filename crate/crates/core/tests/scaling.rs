mod common;

use common::{adaptive_simpson, phi, quantile_by_bisection};
use lrt_calibrate::links::Link;
use lrt_calibrate::quad::GaussianQuadrature;
use lrt_calibrate::scaling::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TAU_LARGE: f64 = 1e3;

#[test]
fn probit_large_tau_limits_hold() {
    for &kappa in &[0.1, 0.2, 0.3, 0.4] {
        let b = solve_b(Link::Probit, kappa, TAU_LARGE).unwrap();
        let v = variance_map(Link::Probit, kappa, TAU_LARGE * TAU_LARGE).unwrap();
        assert!((b * (1.0 - 2.0 * kappa) / (2.0 * kappa) - 1.0).abs() < 0.02, "kappa={kappa} b={b}");
        assert!((v / (2.0 * kappa * TAU_LARGE * TAU_LARGE) - 1.0).abs() < 0.02, "kappa={kappa} v={v}");
    }
    // 2κ/(1−2κ) at κ = 0.3
    let b = solve_b(Link::Probit, 0.3, TAU_LARGE).unwrap();
    assert!((b / 1.5 - 1.0).abs() < 0.02);
}

#[test]
fn logistic_limit_formula_matches_integration_oracle() {
    for &kappa in &[0.1, 0.3] {
        let x = quantile_by_bisection(kappa + 0.5);
        let tail = adaptive_simpson(&phi, x, 40.0, 1e-15);
        let mid = adaptive_simpson(&phi, 0.0, x, 1e-15);
        let second = adaptive_simpson(&|z: f64| z * z * phi(z), 0.0, x, 1e-15);
        let oracle = (x * x * tail + second) / mid;
        let (bx, ratio) = logistic_large_tau_limits(kappa);
        assert!((bx - x).abs() < 1e-9);
        assert!((ratio - oracle).abs() < 1e-9, "{ratio} vs {oracle}");
    }
    assert!((quantile_by_bisection(0.8) - 0.8416212336).abs() < 1e-9);
}

#[test]
fn logistic_large_tau_limits_hold() {
    for &kappa in &[0.1, 0.3] {
        let (x, ratio) = logistic_large_tau_limits(kappa);
        let b = solve_b(Link::Logistic, kappa, TAU_LARGE).unwrap();
        let v = variance_map(Link::Logistic, kappa, TAU_LARGE * TAU_LARGE).unwrap();
        assert!((b / TAU_LARGE / x - 1.0).abs() < 0.02, "kappa={kappa}");
        assert!((v / (TAU_LARGE * TAU_LARGE) / ratio - 1.0).abs() < 0.02, "kappa={kappa}");
    }
}

#[test]
fn variance_map_falls_below_diagonal_at_large_tau() {
    for link in Link::ALL {
        let v = variance_map(link, 0.3, 1e4).unwrap();
        assert!(v < 1e4);
        assert!(variance_map(link, 0.3, 0.0).unwrap() > 0.0);
    }
}

#[test]
fn g_is_strictly_increasing() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let link = if rng.random_bool(0.5) { Link::Logistic } else { Link::Probit };
        let tau = rng.random_range(0.05..20.0);
        let b1 = 10f64.powf(rng.random_range(-3.0..2.0));
        let b2 = b1 * (1.0 + rng.random_range(0.01..3.0));
        let (g1, g2) = (expected_dpsi(link, tau, b1).unwrap(), expected_dpsi(link, tau, b2).unwrap());
        assert!(g1 < g2, "{link} tau={tau} b1={b1} b2={b2}");
    }
}

#[test]
fn solutions_satisfy_both_equations_at_both_orders() {
    let doubled = GaussianQuadrature::doubled();
    for link in Link::ALL {
        for i in 1..=9 {
            let kappa = 0.05 * f64::from(i);
            let s = solve_system(link, kappa).unwrap();
            let t2 = s.tau_star * s.tau_star;
            assert!(s.residuals.1.abs() < 1e-8, "{link} kappa={kappa}");
            assert!(s.residuals.0.abs() < 1e-8 * t2.max(1.0), "{link} kappa={kappa}");
            let (r0, r1) = residuals_with(doubled, link, kappa, s.tau_star, s.b_star).unwrap();
            assert!(r0.abs() < 1e-6 && r1.abs() < 1e-6);
            assert!(s.alpha > 1.0);
            assert!((s.alpha - t2 / s.b_star).abs() < 1e-12 * s.alpha);
        }
    }
}

#[test]
fn alpha_at_three_tenths_and_probit_agreement() {
    let lo = solve_system(Link::Logistic, 0.3).unwrap();
    let pr = solve_system(Link::Probit, 0.3).unwrap();
    assert!((lo.alpha - 1.5).abs() < 0.1);
    assert!((pr.alpha / lo.alpha - 1.0).abs() < 0.05);
}

#[test]
fn classical_limit_at_small_kappa() {
    let s = solve_system(Link::Logistic, 0.01).unwrap();
    let ratio = s.tau_star * s.tau_star / 0.04;
    assert!((0.98..=1.10).contains(&ratio), "ratio = {ratio}");
}

#[test]
fn alpha_curve_is_increasing() {
    let grid: Vec<f64> = (1..=9).map(|i| 0.05 * f64::from(i)).collect();
    for link in Link::ALL {
        let pts = alpha_curve(link, &grid);
        let alphas: Vec<f64> = pts.iter().map(|p| p.result.as_ref().unwrap().alpha).collect();
        assert!(alphas.windows(2).all(|w| w[0] < w[1]), "{link}: {alphas:?}");
        assert!(alphas[0] < alphas[5]);
    }
    let single = alpha_curve(Link::Logistic, &[0.3]);
    assert_eq!(single[0].result.as_ref().unwrap(), &solve_system(Link::Logistic, 0.3).unwrap());
}

#[test]
fn fixed_point_is_unique_from_distant_starts() {
    for link in Link::ALL {
        let s = solve_system(link, 0.3).unwrap();
        let t2 = s.tau_star * s.tau_star;
        for start in [0.1 * t2, 10.0 * t2] {
            let other = solve_system_from(link, 0.3, start).unwrap();
            assert!((other.tau_star.powi(2) - t2).abs() < 1e-6, "{link} start={start}");
        }
    }
}

#[test]
fn state_evolution_constant_at_fixed_point() {
    let s = solve_system(Link::Logistic, 0.3).unwrap();
    let t2 = s.tau_star * s.tau_star;
    let trace = state_evolution(Link::Logistic, 0.3, t2, 10).unwrap();
    assert_eq!(trace.tau_seq.len(), 11);
    assert_eq!(trace.b_seq.len(), 10);
    for &tau in &trace.tau_seq {
        assert!((tau * tau - t2).abs() < 1e-6);
    }
    for &b in &trace.b_seq {
        assert!((b - s.b_star).abs() < 1e-6);
    }
}

#[test]
fn state_evolution_converges_from_classical_start() {
    let s = solve_system(Link::Logistic, 0.3).unwrap();
    let trace = state_evolution(Link::Logistic, 0.3, 1.2, 200).unwrap();
    let last = trace.tau_seq.last().unwrap();
    assert!((last * last - s.tau_star * s.tau_star).abs() < 1e-6);
}
