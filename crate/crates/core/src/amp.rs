//! Approximate message passing for `min_β Σ ρ(X_iᵀβ)` with the constant
//! state-evolution sequence `b_t ≡ b*`:
//!
//! ```text
//! η^t     = Xβ^t + Ψ(η^{t−1}; b_{t−1}),     η^{−1} = 0, b_{−1} = 0
//! β^{t+1} = β^t − (1/p) XᵀΨ(η^t; b_t)
//! ```
//!
//! A fixed point satisfies `Xᵀρ'(Xβ) = 0`, the first-order condition of
//! `Σ ρ(X_iᵀβ)`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::format::sig;
use crate::links::Link;
use crate::prox::{psi, ProxError};
use crate::scaling::ScalingSolution;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AmpError {
    #[error("AMP needs a nonempty design (n = {n}, p = {p})")]
    EmptyDesign { n: usize, p: usize },
    #[error("scaling solution has a non-positive tau* or b*")]
    InvalidScaling,
    #[error(transparent)]
    Prox(#[from] ProxError),
}

/// One AMP iterate; `eta_t = X·beta_t + Ψ(η^{t−1}; b_{t−1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmpState {
    pub beta_t: DVector<f64>,
    pub eta_t: DVector<f64>,
    pub t: usize,
    pub b_t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmpRun {
    /// `(t, ‖β^t‖²)` for `t = 0..=iters`.
    pub norms: Vec<(usize, f64)>,
    /// `‖β^{t+1} − β^t‖` for `t = 0..iters`.
    pub step_norms: Vec<f64>,
    pub last: AmpState,
    /// The iterate before `last`; `None` when `iters = 0`.
    pub previous: Option<AmpState>,
}

fn psi_vec(link: Link, b: f64, z: &DVector<f64>) -> Result<DVector<f64>, ProxError> {
    let mut out = DVector::zeros(z.len());
    for (o, &zi) in out.iter_mut().zip(z.iter()) {
        *o = psi(link, b, zi)?;
    }
    Ok(out)
}

/// Seeded direction with `‖β⁰‖² = τ*²`.
pub fn initial_beta(p: usize, tau_star: f64, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = DVector::from_fn(p, |_, _| StandardNormal.sample(&mut rng));
    let norm = v.norm();
    v *= tau_star / norm;
    v
}

/// Run `iters` AMP steps from a seeded `β⁰` with `b_t ≡ b*`.
pub fn amp_run(x: &DMatrix<f64>, link: Link, scaling: &ScalingSolution, iters: usize, seed: u64) -> Result<AmpRun, AmpError> {
    let (n, p) = x.shape();
    if n == 0 || p == 0 {
        return Err(AmpError::EmptyDesign { n, p });
    }
    let b = scaling.b_star;
    if !(b > 0.0 && scaling.tau_star > 0.0) {
        return Err(AmpError::InvalidScaling);
    }
    let beta0 = initial_beta(p, scaling.tau_star, seed);
    // Ψ(η^{−1}; b_{−1}) = Ψ(0; 0) = 0
    let eta0 = x * &beta0;
    let mut state = AmpState { beta_t: beta0, eta_t: eta0, t: 0, b_t: b };
    let mut norms = vec![(0, state.beta_t.norm_squared())];
    let mut step_norms = Vec::with_capacity(iters);
    let mut previous = None;
    let inv_p = 1.0 / p as f64;
    for _ in 0..iters {
        let r = psi_vec(link, state.b_t, &state.eta_t)?;
        let step = x.tr_mul(&r) * inv_p;
        let beta = &state.beta_t - &step;
        let mut eta = x * &beta;
        eta += &r;
        step_norms.push(step.norm());
        let next = AmpState { beta_t: beta, eta_t: eta, t: state.t + 1, b_t: b };
        norms.push((next.t, next.beta_t.norm_squared()));
        previous = Some(std::mem::replace(&mut state, next));
    }
    Ok(AmpRun { norms, step_norms, last: state, previous })
}

/// `‖Xᵀρ'(Xβ^t + η^{t−1} − η^t)‖·(b/p)`, which equals `‖β^t − β^{t−1}‖`
/// because the argument of ρ' is `prox_{bρ}(η^{t−1})`.
pub fn stationarity_residual(x: &DMatrix<f64>, link: Link, previous: &AmpState, last: &AmpState) -> f64 {
    let mut arg = x * &last.beta_t;
    arg += &previous.eta_t;
    arg -= &last.eta_t;
    arg.apply(|t| *t = link.rho1(*t));
    x.tr_mul(&arg).norm() * previous.b_t / x.ncols() as f64
}

/// Write `t,beta_norm_sq` rows with 12 significant digits.
pub fn write_amp_csv<W: Write>(mut out: W, norms: &[(usize, f64)]) -> std::io::Result<()> {
    writeln!(out, "t,beta_norm_sq")?;
    for &(t, v) in norms {
        writeln!(out, "{t},{}", sig(v, 12))?;
    }
    Ok(())
}
