//! The two-equation system for `(τ*, b*)`:
//!
//! ```text
//! τ² = (1/κ) E[Ψ(τZ; b)²],    κ = E[Ψ'(τZ; b)],    Z ~ N(0, 1),
//! ```
//!
//! its variance map `V(τ²)`, state evolution, and the rescaling factor
//! `α(κ) = τ*²/b*` that turns `2Λ_j` into an asymptotic χ²₁ variable.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dist::{normal_cdf, normal_pdf, normal_quantile, normal_sf};
use crate::format::sig;
use crate::links::Link;
use crate::prox::{prox_eval, ProxError};
use crate::quad::GaussianQuadrature;

/// Largest admissible κ; `b(τ)` diverges as κ → 1/2.
pub const KAPPA_MAX: f64 = 0.5 - 1e-3;
/// Damping of the variance-map iteration.
pub const DAMPING: f64 = 0.5;
/// Relative step size at which the fixed-point iteration stops.
pub const FIXED_POINT_TOL: f64 = 1e-9;
/// Iteration cap for the fixed point.
pub const MAX_ITERATIONS: usize = 100_000;
/// Target accuracy `|G(b) − κ|` of [`solve_b`].
pub const B_TOL: f64 = 1e-10;
const B_MAX: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalingError {
    #[error("kappa = {0} is outside (0, {KAPPA_MAX})")]
    KappaOutOfRange(f64),
    #[error("tau^2 = {0} must be finite and nonnegative")]
    InvalidTau(f64),
    #[error("no b below {B_MAX:e} reaches E[psi'] = {kappa} at tau = {tau}")]
    BracketFailure { kappa: f64, tau: f64 },
    #[error("variance-map iteration did not converge in {0} steps")]
    NoConvergence(usize),
    #[error(transparent)]
    Prox(#[from] ProxError),
}

/// Solution of the system at one κ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingSolution {
    pub kappa: f64,
    pub tau_star: f64,
    pub b_star: f64,
    /// `τ*²/b*`.
    pub alpha: f64,
    /// Variance-map steps taken.
    pub iterations: usize,
    /// `(τ*² − E[Ψ²]/κ, κ − E[Ψ'])` at the returned pair.
    pub residuals: (f64, f64),
}

/// State-evolution sequences; `tau_seq` has one more entry than `b_seq`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateEvolutionTrace {
    pub tau_seq: Vec<f64>,
    pub b_seq: Vec<f64>,
}

/// One entry of [`alpha_curve`].
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub kappa: f64,
    pub result: Result<ScalingSolution, ScalingError>,
}

fn check_kappa(kappa: f64) -> Result<(), ScalingError> {
    if kappa > 0.0 && kappa < KAPPA_MAX {
        Ok(())
    } else {
        Err(ScalingError::KappaOutOfRange(kappa))
    }
}

/// `(E[Ψ(τZ; b)²], E[Ψ'(τZ; b)])` under the rule `q`.
pub fn psi_moments_with(
    q: &GaussianQuadrature,
    link: Link,
    tau: f64,
    b: f64,
) -> Result<(f64, f64), ProxError> {
    let [m2, g] = q.try_expect_n(
        |u| prox_eval(link, b, u).map(|e| [e.psi * e.psi, e.dpsi_dz]),
        tau,
    )?;
    Ok((m2, g))
}

/// `G(b) = E[Ψ'(τZ; b)]`, strictly increasing in `b`.
pub fn expected_dpsi(link: Link, tau: f64, b: f64) -> Result<f64, ProxError> {
    expected_dpsi_with(GaussianQuadrature::standard(), link, tau, b)
}

fn expected_dpsi_with(q: &GaussianQuadrature, link: Link, tau: f64, b: f64) -> Result<f64, ProxError> {
    q.try_expect(|u| prox_eval(link, b, u).map(|e| e.dpsi_dz), tau)
}

/// The unique `b > 0` with `E[Ψ'(τZ; b)] = κ`.
pub fn solve_b(link: Link, kappa: f64, tau: f64) -> Result<f64, ScalingError> {
    solve_b_with(GaussianQuadrature::standard(), link, kappa, tau, None)
}

/// [`solve_b`] with an explicit rule and an optional starting guess.
pub fn solve_b_with(
    q: &GaussianQuadrature,
    link: Link,
    kappa: f64,
    tau: f64,
    guess: Option<f64>,
) -> Result<f64, ScalingError> {
    if !(kappa > 0.0 && kappa < 0.5) {
        return Err(ScalingError::KappaOutOfRange(kappa));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(ScalingError::InvalidTau(tau * tau));
    }
    let f = |b: f64| -> Result<f64, ScalingError> { Ok(expected_dpsi_with(q, link, tau, b)? - kappa) };

    // bracket in log b: f(lo) < 0 ≤ f(hi)
    let start = guess.filter(|g| g.is_finite() && *g > 0.0).unwrap_or(1.0);
    let mut b0 = start;
    let mut f0 = f(b0)?;
    if f0.abs() < B_TOL {
        return Ok(b0);
    }
    let (mut lo, mut f_lo, mut hi, mut f_hi);
    let step = if guess.is_some() { 1.25 } else { 4.0 };
    if f0 < 0.0 {
        let mut b1 = b0 * step;
        let mut f1 = f(b1)?;
        while f1 < 0.0 {
            (b0, f0) = (b1, f1);
            b1 *= 4.0;
            if b1 > B_MAX {
                return Err(ScalingError::BracketFailure { kappa, tau });
            }
            f1 = f(b1)?;
        }
        (lo, f_lo, hi, f_hi) = (b0, f0, b1, f1);
    } else {
        let mut b1 = b0 / step;
        let mut f1 = f(b1)?;
        while f1 >= 0.0 {
            (b0, f0) = (b1, f1);
            b1 /= 4.0;
            if b1 < f64::MIN_POSITIVE {
                return Err(ScalingError::BracketFailure { kappa, tau });
            }
            f1 = f(b1)?;
        }
        (lo, f_lo, hi, f_hi) = (b1, f1, b0, f0);
    }

    // Illinois regula falsi on x = ln b
    let (mut x_lo, mut x_hi) = (lo.ln(), hi.ln());
    let mut side = 0i8;
    for _ in 0..200 {
        let x = (x_lo * f_hi - x_hi * f_lo) / (f_hi - f_lo);
        let x = if x > x_lo && x < x_hi { x } else { 0.5 * (x_lo + x_hi) };
        let b = x.exp();
        let fx = f(b)?;
        if fx.abs() < B_TOL || x_hi - x_lo < 4.0 * f64::EPSILON * x.abs().max(1.0) {
            return Ok(b);
        }
        if fx < 0.0 {
            (x_lo, f_lo) = (x, fx);
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            (x_hi, f_hi) = (x, fx);
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
    }
    lo = x_lo.exp();
    hi = x_hi.exp();
    Ok(0.5 * (lo + hi))
}

/// `V(τ²) = (1/κ) E[Ψ(τZ; b(τ))²]`. At τ² = 0 this is `Ψ(0; b(0))²/κ`
/// with `b(0)ρ''(prox_{b(0)ρ}(0)) = κ/(1 − κ)`, the τ → 0 limit.
pub fn variance_map(link: Link, kappa: f64, tau_sq: f64) -> Result<f64, ScalingError> {
    Ok(variance_map_with(GaussianQuadrature::standard(), link, kappa, tau_sq, None)?.0)
}

/// `(V(τ²), b(τ))` with an explicit rule and a starting guess for `b`.
pub fn variance_map_with(
    q: &GaussianQuadrature,
    link: Link,
    kappa: f64,
    tau_sq: f64,
    b_guess: Option<f64>,
) -> Result<(f64, f64), ScalingError> {
    if !(tau_sq >= 0.0 && tau_sq.is_finite()) {
        return Err(ScalingError::InvalidTau(tau_sq));
    }
    let tau = tau_sq.sqrt();
    let b = solve_b_with(q, link, kappa, tau, b_guess)?;
    let m2 = q.try_expect(|u| prox_eval(link, b, u).map(|e| e.psi * e.psi), tau)?;
    Ok((m2 / kappa, b))
}

/// Defects of both equations at `(τ, b)` under the rule `q`.
pub fn residuals_with(
    q: &GaussianQuadrature,
    link: Link,
    kappa: f64,
    tau: f64,
    b: f64,
) -> Result<(f64, f64), ProxError> {
    let (m2, g) = psi_moments_with(q, link, tau, b)?;
    Ok((tau * tau - m2 / kappa, kappa - g))
}

/// Solve the system at κ from the default start `τ₀² = 4κ`.
pub fn solve_system(link: Link, kappa: f64) -> Result<ScalingSolution, ScalingError> {
    solve_system_from(link, kappa, 4.0 * kappa)
}

/// Solve the system by the damped iteration
/// `τ² ← (1 − λ)τ² + λV(τ²)` started at `tau0_sq`.
pub fn solve_system_from(link: Link, kappa: f64, tau0_sq: f64) -> Result<ScalingSolution, ScalingError> {
    check_kappa(kappa)?;
    if !(tau0_sq >= 0.0 && tau0_sq.is_finite()) {
        return Err(ScalingError::InvalidTau(tau0_sq));
    }
    let q = GaussianQuadrature::standard();
    let mut tau_sq = tau0_sq;
    let mut b = None;
    for it in 1..=MAX_ITERATIONS {
        let (v, b_t) = variance_map_with(q, link, kappa, tau_sq, b)?;
        b = Some(b_t);
        let next = (1.0 - DAMPING) * tau_sq + DAMPING * v;
        let done = (next - tau_sq).abs() < FIXED_POINT_TOL * tau_sq.max(1.0);
        tau_sq = next;
        if done {
            let tau_star = tau_sq.sqrt();
            let b_star = solve_b_with(q, link, kappa, tau_star, b)?;
            let residuals = residuals_with(q, link, kappa, tau_star, b_star)?;
            return Ok(ScalingSolution {
                kappa,
                tau_star,
                b_star,
                alpha: tau_sq / b_star,
                iterations: it,
                residuals,
            });
        }
    }
    Err(ScalingError::NoConvergence(MAX_ITERATIONS))
}

/// Solve the system at every κ of `grid`, in parallel, in grid order.
pub fn alpha_curve(link: Link, grid: &[f64]) -> Vec<CurvePoint> {
    grid.par_iter()
        .map(|&kappa| CurvePoint { kappa, result: solve_system(link, kappa) })
        .collect()
}

/// Write `kappa,tau_star,b_star,alpha` rows for the solved points of a curve.
/// Failed points are skipped; the caller reports them.
pub fn write_curve_csv<W: Write>(mut out: W, points: &[CurvePoint]) -> std::io::Result<()> {
    writeln!(out, "kappa,tau_star,b_star,alpha")?;
    for p in points {
        if let Ok(s) = &p.result {
            writeln!(
                out,
                "{},{},{},{}",
                sig(s.kappa, 12),
                sig(s.tau_star, 12),
                sig(s.b_star, 12),
                sig(s.alpha, 12)
            )?;
        }
    }
    Ok(())
}

/// Run `steps` undamped state-evolution steps from `τ₀²`.
pub fn state_evolution(
    link: Link,
    kappa: f64,
    tau0_sq: f64,
    steps: usize,
) -> Result<StateEvolutionTrace, ScalingError> {
    check_kappa(kappa)?;
    if !(tau0_sq >= 0.0 && tau0_sq.is_finite()) {
        return Err(ScalingError::InvalidTau(tau0_sq));
    }
    let q = GaussianQuadrature::standard();
    let mut tau_seq = vec![tau0_sq.sqrt()];
    let mut b_seq = Vec::with_capacity(steps);
    let mut tau_sq = tau0_sq;
    for _ in 0..steps {
        let (v, b) = variance_map_with(q, link, kappa, tau_sq, b_seq.last().copied())?;
        b_seq.push(b);
        tau_sq = v;
        tau_seq.push(v.sqrt());
    }
    Ok(StateEvolutionTrace { tau_seq, b_seq })
}

/// Probit limits as τ → ∞: `(lim b(τ), lim V(τ²)/τ²) = (2κ/(1−2κ), 2κ)`.
pub fn probit_large_tau_limits(kappa: f64) -> (f64, f64) {
    (2.0 * kappa / (1.0 - 2.0 * kappa), 2.0 * kappa)
}

/// Logistic limits as τ → ∞: `(lim b(τ)/τ, lim V(τ²)/τ²)` with
/// `lim b/τ = x = Φ⁻¹(κ + 1/2)` and
/// `lim V/τ² = (x² P{Z > x} + E[Z² 1{0 < Z < x}]) / P{0 < Z < x}`.
pub fn logistic_large_tau_limits(kappa: f64) -> (f64, f64) {
    let x = normal_quantile(kappa + 0.5).expect("kappa + 1/2 lies in (0, 1)");
    let p_mid = normal_cdf(x) - 0.5;
    // ∫₀ˣ z²φ(z) dz = Φ(x) − 1/2 − xφ(x)
    let truncated = p_mid - x * normal_pdf(x);
    (x, (x * x * normal_sf(x) + truncated) / p_mid)
}
