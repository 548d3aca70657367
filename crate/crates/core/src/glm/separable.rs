//! Perfect separation: is there `β ≠ 0` with `ỹ_i X_iᵀβ > 0` for all `i`?
//!
//! With `a_i = ỹ_i X_i` the margin problem
//!
//! ```text
//! max t   s.t.   a_iᵀβ ≥ t,  −1 ≤ β_k ≤ 1
//! ```
//!
//! has the LP dual `min ‖Aᵀλ‖₁` over the probability simplex, written in
//! standard form as
//!
//! ```text
//! min Σ_k (u_k + v_k)   s.t.   Σ_i λ_i a_ik − u_k + v_k = 0,  Σ_i λ_i = 1,  λ, u, v ≥ 0.
//! ```
//!
//! It is solved exactly by a dense revised simplex; the optimal duals give
//! the separating direction `β = −π_{0..p}`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::fit::gradient;
use super::{compensated_sum, Dataset, GlmError};
use crate::links::Link;

/// Margin above which the data count as separated.
pub const MARGIN_TOL: f64 = 1e-7;
const PRICE_TOL: f64 = 1e-11;
const PIVOT_MIN: f64 = 1e-11;
const REFACTOR_EVERY: usize = 64;

/// Outcome of the margin LP.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparabilityCertificate {
    pub separable: bool,
    /// `min_i ỹ_i X_iᵀβ` for the returned direction, with `‖β‖∞ ≤ 1`.
    pub margin: f64,
    pub beta: Vec<f64>,
    pub pivots: usize,
}

/// True iff some `β` separates the data with margin above [`MARGIN_TOL`];
/// margins at or below it count as not separable.
pub fn check_separable(data: &Dataset) -> bool {
    separability_certificate(data).separable
}

/// Weak-duality bound on the margin LP from any `β` with all `ρ'(m_i) > 0`:
/// with `λ_i = ρ'(m_i)`, every `‖β'‖∞ ≤ 1` has
/// `min_i a_iᵀβ' ≤ ‖Σ λ_i a_i‖₁ / Σ λ_i = ‖∇ℓ(β)‖₁ / Σ ρ'(m_i)`.
/// A value at or below [`MARGIN_TOL`] certifies the data as not separable.
pub fn dual_margin_bound(data: &Dataset, link: Link, beta: &[f64]) -> Result<f64, GlmError> {
    if beta.len() != data.p() {
        return Err(GlmError::DimensionMismatch(format!("beta has {} entries for p = {}", beta.len(), data.p())));
    }
    let m = data.margins(&DVector::from_column_slice(beta));
    let total = compensated_sum(m.iter().map(|&t| link.rho1(t)));
    if !(total > 0.0) {
        return Ok(f64::INFINITY);
    }
    Ok(gradient(data, link, &m).lp_norm(1) / total)
}

/// Column of the standard-form LP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Var {
    Lambda(usize),
    U(usize),
    V(usize),
}

/// The LP with `a_i` stored as the columns of a p×n matrix.
struct Lp {
    at: DMatrix<f64>,
    p: usize,
}

impl Lp {
    fn cost(&self, v: Var) -> f64 {
        match v {
            Var::Lambda(_) => 0.0,
            Var::U(_) | Var::V(_) => 1.0,
        }
    }

    fn column(&self, v: Var) -> DVector<f64> {
        let mut c = DVector::zeros(self.p + 1);
        match v {
            Var::Lambda(i) => {
                c.rows_mut(0, self.p).copy_from(&self.at.column(i));
                c[self.p] = 1.0;
            }
            Var::U(k) => c[k] = -1.0,
            Var::V(k) => c[k] = 1.0,
        }
        c
    }
}

/// Solve the margin LP and report the separating direction it finds.
pub fn separability_certificate(data: &Dataset) -> SeparabilityCertificate {
    let (n, p) = (data.n(), data.p());
    if n == 0 || p == 0 {
        return SeparabilityCertificate { separable: n == 0 && p > 0, margin: 0.0, beta: vec![0.0; p], pivots: 0 };
    }
    // column i is a_i = ỹ_i X_i
    let mut at = data.x().transpose();
    for (i, &y) in data.y_signed().iter().enumerate() {
        at.column_mut(i).scale_mut(y);
    }
    let lp = Lp { at, p };
    let m = p + 1;

    // start from λ_0 = 1 with u or v absorbing each coordinate of a_0
    let mut basis: Vec<Var> = (0..p).map(|k| if lp.at[(k, 0)] >= 0.0 { Var::U(k) } else { Var::V(k) }).collect();
    basis.push(Var::Lambda(0));
    let mut binv = DMatrix::<f64>::zeros(m, m);
    for k in 0..p {
        let s = if matches!(basis[k], Var::U(_)) { -1.0 } else { 1.0 };
        binv[(k, k)] = s;
        binv[(k, p)] = -s * lp.at[(k, 0)];
    }
    binv[(p, p)] = 1.0;

    let index_of = |v: Var| match v {
        Var::Lambda(i) => i,
        Var::U(k) => n + k,
        Var::V(k) => n + p + k,
    };
    let var_at = |ci: usize| match ci {
        i if i < n => Var::Lambda(i),
        k if k < n + p => Var::U(k - n),
        k => Var::V(k - n - p),
    };
    let mut in_basis = vec![false; n + 2 * p];
    for &v in &basis {
        in_basis[index_of(v)] = true;
    }

    let refactor_every = REFACTOR_EVERY.max(m);
    let max_pivots = 50 * (n + 2 * p).max(100);
    let mut pivots = 0;
    let mut degenerate_run = 0;
    let mut pi = DVector::<f64>::zeros(m);
    let mut reduced = DVector::<f64>::zeros(n + 2 * p);
    while pivots < max_pivots {
        let cb = DVector::from_iterator(m, basis.iter().map(|&v| lp.cost(v)));
        pi = binv.tr_mul(&cb);
        // reduced costs c_v − πᵀA_v for every column
        let prices = lp.at.tr_mul(&pi.rows(0, p));
        for i in 0..n {
            reduced[i] = -(prices[i] + pi[p]);
        }
        for k in 0..p {
            reduced[n + k] = 1.0 + pi[k];
            reduced[n + p + k] = 1.0 - pi[k];
        }
        // Dantzig pricing; Bland's rule while the objective is stuck
        let bland = degenerate_run > 2 * m;
        let mut entering: Option<(usize, f64)> = None;
        for (ci, &d) in reduced.iter().enumerate() {
            if in_basis[ci] || d >= -PRICE_TOL {
                continue;
            }
            if bland {
                entering = Some((ci, d));
                break;
            }
            if entering.is_none_or(|(_, best)| d < best) {
                entering = Some((ci, d));
            }
        }
        let Some((ci, _)) = entering else { break };
        let dir = &binv * lp.column(var_at(ci));
        let xb = binv.column(p);

        // ratio test, ties to the smallest basis variable index for Bland
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            if dir[r] > PIVOT_MIN {
                let ratio = xb[r].max(0.0) / dir[r];
                let better = match leave {
                    None => true,
                    Some((lr, best)) => {
                        ratio < best - 1e-14
                            || (ratio <= best + 1e-14 && index_of(basis[r]) < index_of(basis[lr]))
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        // the feasible set is bounded, so every improving column has a leaving row
        let Some((r, step)) = leave else { break };
        degenerate_run = if step <= 1e-14 { degenerate_run + 1 } else { 0 };

        // B⁻¹ ← B⁻¹ − (dir − e_r)·row_r(B⁻¹)/dir_r
        let pivot_row = binv.row(r).transpose() / dir[r];
        let mut u = dir;
        u[r] -= 1.0;
        binv.ger(-1.0, &u, &pivot_row, 1.0);
        in_basis[index_of(basis[r])] = false;
        in_basis[ci] = true;
        basis[r] = var_at(ci);
        pivots += 1;

        if pivots % refactor_every == 0 {
            let b = DMatrix::from_columns(&basis.iter().map(|&v| lp.column(v)).collect::<Vec<_>>());
            if let Some(inv) = b.try_inverse() {
                binv = inv;
            }
        }
    }

    let beta: Vec<f64> = (0..p).map(|k| (-pi[k]).clamp(-1.0, 1.0)).collect();
    let bv = DVector::from_column_slice(&beta);
    let margin = lp.at.tr_mul(&bv).min();
    SeparabilityCertificate { separable: margin > MARGIN_TOL, margin, beta, pivots }
}
