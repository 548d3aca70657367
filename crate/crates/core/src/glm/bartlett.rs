//! Bartlett correction `α_n = (n/2)[Tr(D_p²) − Tr(D_{p−1}²)]`, where `D_p` is
//! the diagonal of the hat matrix `X(XᵀX)⁻¹Xᵀ` and `D_{p−1}` the same with
//! column j removed. The full `n×n` hat matrix is never formed.

use nalgebra::DMatrix;

use super::fit::spd_factor;
use super::{Dataset, GlmError};

/// Leverage data: `A = X(XᵀX)⁻¹`, `h_i = Σ_k X_ik A_ik` and `diag((XᵀX)⁻¹)`.
struct Leverages {
    a: DMatrix<f64>,
    h: Vec<f64>,
    m_diag: Vec<f64>,
}

fn leverages(x: &DMatrix<f64>) -> Result<Leverages, GlmError> {
    let gram = x.transpose() * x;
    let chol = spd_factor(gram).ok_or(GlmError::SingularGram)?;
    let m = chol.inverse();
    let a = x * &m;
    let h = (0..x.nrows()).map(|i| x.row(i).dot(&a.row(i))).collect();
    Ok(Leverages { m_diag: m.diagonal().iter().copied().collect(), a, h })
}

/// `α_n` for every coordinate. Removing column j downdates the leverages to
/// `h_i − A_ij²/[(XᵀX)⁻¹]_jj`.
pub fn bartlett_alpha_all(data: &Dataset) -> Result<Vec<f64>, GlmError> {
    if data.p() == 0 {
        return Err(GlmError::EmptyModel);
    }
    let lev = leverages(data.x())?;
    let half_n = 0.5 * data.n() as f64;
    Ok((0..data.p())
        .map(|j| {
            let c = lev.m_diag[j];
            // Σ h² − Σ (h − a²/c)² expanded to avoid cancellation
            let diff: f64 = lev
                .h
                .iter()
                .zip(lev.a.column(j).iter())
                .map(|(&h, &a)| {
                    let d = a * a / c;
                    d * (2.0 * h - d)
                })
                .sum();
            half_n * diff
        })
        .collect())
}

/// `α_n` for coordinate `j`.
pub fn bartlett_alpha(data: &Dataset, j: usize) -> Result<f64, GlmError> {
    if j >= data.p() {
        return Err(GlmError::CoordinateOutOfRange(j));
    }
    Ok(bartlett_alpha_all(data)?[j])
}
