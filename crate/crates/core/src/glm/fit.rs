use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::Serialize;

use super::separable::check_separable;
use super::{compensated_sum, Dataset, GlmError};
use crate::links::Link;

/// Relative pivot below which a Cholesky factor is declared singular.
const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub link: Link,
    pub max_iter: usize,
    /// Convergence when `‖∇ℓ‖∞ < grad_tol · n`.
    pub grad_tol: f64,
    /// `‖β‖` above which the separability checker runs.
    pub divergence_guard: f64,
    /// Run the separability checker before Newton.
    pub check_separability: bool,
}

impl FitOptions {
    pub fn new(link: Link) -> Self {
        Self { link, max_iter: 100, grad_tol: 1e-8, divergence_guard: 50.0, check_separability: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub beta_hat: Vec<f64>,
    pub negloglik: f64,
    pub converged: bool,
    pub separable: bool,
    pub newton_iters: usize,
    /// `‖∇ℓ(β̂)‖∞`.
    pub grad_norm: f64,
    /// Why the fit stopped when it did not converge.
    pub diagnostic: Option<String>,
}

/// `ℓ(β) = Σ ρ(−ỹ_i X_iᵀβ)`.
pub fn negloglik(data: &Dataset, link: Link, beta: &[f64]) -> Result<f64, GlmError> {
    if beta.len() != data.p() {
        return Err(GlmError::DimensionMismatch(format!("beta has {} entries for p = {}", beta.len(), data.p())));
    }
    let m = data.margins(&DVector::from_column_slice(beta));
    Ok(nll_from_margins(link, &m))
}

pub(crate) fn nll_from_margins(link: Link, m: &DVector<f64>) -> f64 {
    compensated_sum(m.iter().map(|&t| link.rho(t)))
}

/// `∇ℓ = −Xᵀ(ỹ ∘ ρ'(m))`.
pub(crate) fn gradient(data: &Dataset, link: Link, m: &DVector<f64>) -> DVector<f64> {
    let r = DVector::from_iterator(m.len(), m.iter().zip(data.y.iter()).map(|(&t, &y)| -y * link.rho1(t)));
    data.x.tr_mul(&r)
}

/// `Xᵀ diag(ρ''(m)) X`.
pub(crate) fn hessian(x: &DMatrix<f64>, link: Link, m: &DVector<f64>) -> DMatrix<f64> {
    let mut w = x.clone();
    for (i, &t) in m.iter().enumerate() {
        let s = link.rho2(t).sqrt();
        w.row_mut(i).scale_mut(s);
    }
    // an explicit transpose lets the product use the blocked kernel
    w.transpose() * &w
}

/// Cholesky factor of a symmetric positive-definite matrix, rejecting
/// pivots that are negligible relative to their diagonal entry.
pub(crate) fn spd_factor(h: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let diag: Vec<f64> = h.diagonal().iter().copied().collect();
    let chol = Cholesky::new(h)?;
    let l = chol.l_dirty();
    diag.iter()
        .enumerate()
        .all(|(k, &d)| l[(k, k)] * l[(k, k)] > PIVOT_TOL * d)
        .then_some(chol)
}

/// Newton fit from `β = 0`.
pub fn fit_mle(data: &Dataset, opts: &FitOptions) -> Result<FitResult, GlmError> {
    fit_mle_from(data, opts, &vec![0.0; data.p()])
}

/// Newton's method with step halving on `ℓ`, started at `beta0`.
pub fn fit_mle_from(data: &Dataset, opts: &FitOptions, beta0: &[f64]) -> Result<FitResult, GlmError> {
    let (n, p) = (data.n(), data.p());
    if p == 0 {
        return Err(GlmError::EmptyModel);
    }
    if n <= p {
        return Err(GlmError::TooFewObservations { n, p });
    }
    if beta0.len() != p {
        return Err(GlmError::DimensionMismatch(format!("start has {} entries for p = {p}", beta0.len())));
    }
    let link = opts.link;
    if opts.check_separability && check_separable(data) {
        return Ok(separable_result(data, link, beta0.to_vec(), 0));
    }
    let tol = opts.grad_tol * n as f64;
    let mut beta = DVector::from_column_slice(beta0);
    let mut m = data.margins(&beta);
    let mut f = nll_from_margins(link, &m);
    let mut guard_checked = false;
    let stop = |beta: &DVector<f64>, f, grad_norm, iters, converged, diagnostic: Option<&str>| FitResult {
        beta_hat: beta.iter().copied().collect(),
        negloglik: f,
        converged,
        separable: false,
        newton_iters: iters,
        grad_norm,
        diagnostic: diagnostic.map(str::to_string),
    };

    for it in 0..=opts.max_iter {
        let g = gradient(data, link, &m);
        let gn = g.amax();
        if gn < tol {
            return Ok(stop(&beta, f, gn, it, true, None));
        }
        if !guard_checked && beta.norm() > opts.divergence_guard {
            guard_checked = true;
            if check_separable(data) {
                return Ok(separable_result(data, link, beta.iter().copied().collect(), it));
            }
        }
        if it == opts.max_iter {
            return Ok(stop(&beta, f, gn, it, false, Some("iteration limit reached")));
        }
        let chol = match spd_factor(hessian(&data.x, link, &m)) {
            Some(c) => c,
            None => return Ok(stop(&beta, f, gn, it, false, Some("singular Hessian"))),
        };
        let d = chol.solve(&g);
        match line_search(data, link, &beta, f, &g, &d) {
            Some((b, mm, ff)) => {
                beta = b;
                m = mm;
                f = ff;
            }
            None => return Ok(stop(&beta, f, gn, it, false, Some("line search stalled"))),
        }
    }
    unreachable!("the loop returns at it == max_iter")
}

fn separable_result(data: &Dataset, link: Link, beta: Vec<f64>, iters: usize) -> FitResult {
    let b = DVector::from_vec(beta);
    let m = data.margins(&b);
    FitResult {
        negloglik: nll_from_margins(link, &m),
        grad_norm: gradient(data, link, &m).amax(),
        beta_hat: b.iter().copied().collect(),
        converged: false,
        separable: true,
        newton_iters: iters,
        diagnostic: Some("data are perfectly separable; the MLE does not exist".into()),
    }
}

/// Backtracking along `β − s·d`, halving `s` until the Armijo condition
/// holds or the decrease is at rounding level.
pub(crate) fn line_search(
    data: &Dataset,
    link: Link,
    beta: &DVector<f64>,
    f: f64,
    g: &DVector<f64>,
    d: &DVector<f64>,
) -> Option<(DVector<f64>, DVector<f64>, f64)> {
    let slope = g.dot(d);
    if !(slope > 0.0) {
        return None;
    }
    let noise = 1e-13 * f.abs().max(1.0);
    let mut s = 1.0;
    for _ in 0..60 {
        let b = beta - d * s;
        let m = data.margins(&b);
        let fb = nll_from_margins(link, &m);
        if fb <= f - 1e-4 * s * slope || (fb - f).abs() <= noise {
            return Some((b, m, fb));
        }
        s *= 0.5;
    }
    None
}

/// `α̃ = (1/n)·Tr(G̃⁻¹)` with `G̃ = (1/n)X̃ᵀDX̃`, i.e. `Tr((X̃ᵀDX̃)⁻¹)`, for a
/// reduced design `X̃` and its fit `β̃`. `D` holds the Hessian weights
/// `ρ''(−ỹ_i X̃_iᵀβ̃)`.
pub fn empirical_alpha_tilde(reduced: &Dataset, link: Link, reduced_fit: &FitResult) -> Result<f64, GlmError> {
    if reduced.p() == 0 {
        return Err(GlmError::EmptyModel);
    }
    if !reduced_fit.converged {
        return Err(GlmError::FitNotConverged);
    }
    if reduced_fit.beta_hat.len() != reduced.p() {
        return Err(GlmError::DimensionMismatch(format!(
            "reduced fit has {} coefficients for p = {}",
            reduced_fit.beta_hat.len(),
            reduced.p()
        )));
    }
    let m = reduced.margins(&DVector::from_column_slice(&reduced_fit.beta_hat));
    let chol = spd_factor(hessian(&reduced.x, link, &m)).ok_or(GlmError::SingularHessian)?;
    Ok(chol.inverse().trace())
}
