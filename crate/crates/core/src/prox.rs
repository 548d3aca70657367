//! Scalar proximal operator of `bρ` and the companion map
//! `Ψ(z; b) = b ρ'(prox_{bρ}(z))`, equal to `z − prox_{bρ}(z)` at the root.

use thiserror::Error;

use crate::links::Link;

const MAX_ITER: usize = 200;
const TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProxError {
    #[error("prox solver did not converge for {link}, b = {b}, z = {z}")]
    NonConvergence { link: Link, b: f64, z: f64 },
    #[error("prox requires b >= 0 and finite z (b = {b}, z = {z})")]
    Domain { b: f64, z: f64 },
}

/// A prox evaluation with the quantities every caller ends up needing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxEval {
    pub b: f64,
    pub z: f64,
    /// The proximal point `x* = prox_{bρ}(z)`.
    pub x_star: f64,
    /// `Ψ(z; b) = bρ'(x*)`, which keeps full relative accuracy where
    /// `z − x*` would cancel.
    pub psi: f64,
    /// `∂Ψ/∂z = bρ''(x*) / (1 + bρ''(x*))`.
    pub dpsi_dz: f64,
}

impl ProxEval {
    /// `∂prox/∂z = 1 − ∂Ψ/∂z`.
    pub fn dprox_dz(&self) -> f64 {
        1.0 - self.dpsi_dz
    }
}

/// Solve `x + bρ'(x) = z` by Newton's method safeguarded with bisection.
///
/// `g(x) = x + bρ'(x) − z` is strictly increasing, `g(z) ≥ 0`, and
/// `g(z − bρ'(z)) ≤ 0` because ρ' is increasing, so the root is bracketed
/// in `[z − bρ'(z), z]` for any convex link.
pub fn prox_eval(link: Link, b: f64, z: f64) -> Result<ProxEval, ProxError> {
    if !(b >= 0.0) || !z.is_finite() || !b.is_finite() {
        return Err(ProxError::Domain { b, z });
    }
    if b == 0.0 {
        return Ok(ProxEval { b, z, x_star: z, psi: 0.0, dpsi_dz: 0.0 });
    }
    let tol = TOL * z.abs().max(1.0);
    let (r1z, r2z) = link.rho1_rho2(z);
    let mut hi = z;
    let g_hi = b * r1z;
    if g_hi <= tol {
        // ρ'(z) underflowed: z itself solves the equation to working precision
        return Ok(finish(link, b, z, z, r2z));
    }
    let mut lo = z - b * r1z;
    let mut x = lo;
    let mut g_prev = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let (r1, r2) = link.rho1_rho2(x);
        let g = x + b * r1 - z;
        if g.abs() < tol {
            return Ok(finish(link, b, z, x, r2));
        }
        if g < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - g / (1.0 + b * r2);
        // bisect when Newton leaves the bracket or fails to halve |g|
        let next = if newton > lo && newton < hi && g.abs() <= 0.5 * g_prev {
            newton
        } else {
            0.5 * (lo + hi)
        };
        g_prev = g.abs();
        if next == x || hi - lo <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            // bracket collapsed to adjacent floats: this is the root
            return Ok(finish(link, b, z, next, link.rho2(next)));
        }
        x = next;
    }
    Err(ProxError::NonConvergence { link, b, z })
}

#[inline]
fn finish(link: Link, b: f64, z: f64, x: f64, r2: f64) -> ProxEval {
    let br2 = b * r2;
    ProxEval { b, z, x_star: x, psi: b * link.rho1(x), dpsi_dz: br2 / (1.0 + br2) }
}

/// `prox_{bρ}(z) = argmin_x { bρ(x) + (x − z)²/2 }`.
pub fn prox(link: Link, b: f64, z: f64) -> Result<f64, ProxError> {
    Ok(prox_eval(link, b, z)?.x_star)
}

/// `Ψ(z; b) = bρ'(prox_{bρ}(z))`.
pub fn psi(link: Link, b: f64, z: f64) -> Result<f64, ProxError> {
    Ok(prox_eval(link, b, z)?.psi)
}

/// `∂Ψ(z; b)/∂z`.
pub fn dpsi_dz(link: Link, b: f64, z: f64) -> Result<f64, ProxError> {
    Ok(prox_eval(link, b, z)?.dpsi_dz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Plain bisection on `x + bρ'(x) = z`, independent of the Newton path.
    fn bisection_prox(link: Link, b: f64, z: f64) -> f64 {
        let (mut lo, mut hi) = (z - b * link.rho1(z) - 1.0, z);
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid + b * link.rho1(mid) - z < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn zero_b_is_identity() {
        assert_eq!(prox(Link::Logistic, 0.0, 1.7).unwrap(), 1.7);
        assert_eq!(psi(Link::Probit, 0.0, -3.2).unwrap(), 0.0);
        assert_eq!(dpsi_dz(Link::Logistic, 0.0, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn logistic_unit_b_at_origin_matches_bisection() {
        let oracle = bisection_prox(Link::Logistic, 1.0, 0.0);
        let x = prox(Link::Logistic, 1.0, 0.0).unwrap();
        assert!((x - oracle).abs() < 1e-12);
        assert!((x + 1.0 / (1.0 + (-x).exp())).abs() < 1e-12);
        assert!((psi(Link::Logistic, 1.0, 0.0).unwrap() + x).abs() < 1e-15);
    }

    #[test]
    fn probit_psi_matches_bisection() {
        let oracle = bisection_prox(Link::Probit, 2.0, 1.3);
        let p = psi(Link::Probit, 2.0, 1.3).unwrap();
        assert!((p - (1.3 - oracle)).abs() < 1e-10);
    }

    #[test]
    fn prox_increases_in_z() {
        let a = prox(Link::Logistic, 1.0, 1.0).unwrap();
        let b = prox(Link::Logistic, 1.0, 2.0).unwrap();
        assert!(b > a);
    }

    #[test]
    fn derivative_tends_to_one_for_large_b() {
        let vals: Vec<f64> = [1e2, 1e4, 1e6]
            .iter()
            .map(|&b| dpsi_dz(Link::Logistic, b, 0.0).unwrap())
            .collect();
        assert!(vals[0] < vals[1] && vals[1] < vals[2] && vals[2] < 1.0);
        // bρ''(x*) grows like log b at z = 0
        assert!(vals[2] > 0.9);
    }

    #[test]
    fn stationarity_and_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for link in Link::ALL {
            for _ in 0..2000 {
                let b = rng.random_range(1e-3..100.0);
                let z = rng.random_range(-50.0..50.0);
                let e = prox_eval(link, b, z).unwrap();
                let g = e.x_star + b * link.rho1(e.x_star) - z;
                assert!(g.abs() < 1e-12 * z.abs().max(1.0), "{link} b={b} z={z} g={g}");
                assert!((e.psi + e.x_star - z).abs() < 1e-10, "{link} b={b} z={z}");
                assert!((0.0..1.0).contains(&e.dpsi_dz), "{link} b={b} z={z} dpsi={}", e.dpsi_dz);
            }
        }
    }

    #[test]
    fn moreau_identity_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for link in Link::ALL {
            for _ in 0..10_000 {
                let b = rng.random_range(0.0..100.0f64).max(1e-12);
                let z = rng.random_range(-50.0..50.0);
                let x = prox(link, b, z).unwrap();
                let p = b * link.rho1(x);
                assert!((p + x - z).abs() < 1e-10, "{link} b={b} z={z}");
            }
        }
    }

    #[test]
    fn dpsi_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-5;
        for link in Link::ALL {
            for _ in 0..100 {
                let b = rng.random_range(0.05..20.0);
                let z = rng.random_range(-10.0..10.0);
                let fd = (psi(link, b, z + h).unwrap() - psi(link, b, z - h).unwrap()) / (2.0 * h);
                let exact = dpsi_dz(link, b, z).unwrap();
                assert!(((fd - exact) / exact).abs() < 1e-5, "{link} b={b} z={z}");
            }
        }
    }

    #[test]
    fn prox_slope_within_curvature_bounds() {
        let h = 1e-5;
        for link in Link::ALL {
            for &b in &[0.1, 1.0, 10.0] {
                for i in -40..=40 {
                    let z = f64::from(i) * 0.5;
                    let fd = (prox(link, b, z + h).unwrap() - prox(link, b, z - h).unwrap()) / (2.0 * h);
                    let lower = 1.0 / (1.0 + b * link.sup_rho2());
                    assert!(fd >= lower - 1e-6 && fd <= 1.0 + 1e-6, "{link} b={b} z={z} fd={fd}");
                }
            }
        }
    }

    #[test]
    fn prox_non_increasing_in_b() {
        for link in Link::ALL {
            for i in -20..=20 {
                let z = f64::from(i);
                let mut prev = f64::INFINITY;
                for k in 0..30 {
                    let b = 0.01 * 1.4f64.powi(k);
                    let x = prox(link, b, z).unwrap();
                    assert!(x <= prev + 1e-12, "{link} z={z} b={b}");
                    prev = x;
                }
            }
        }
    }

    #[test]
    fn rejects_negative_b() {
        assert!(matches!(prox(Link::Logistic, -1.0, 0.0), Err(ProxError::Domain { .. })));
        assert!(prox(Link::Logistic, 1.0, f64::NAN).is_err());
    }
}
