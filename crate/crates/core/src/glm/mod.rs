//! Binary-regression MLE under the global null: fitting, separability,
//! likelihood-ratio statistics and their three p-values.
//!
//! With signed responses `ỹ_i ∈ {−1, +1}` the negative log-likelihood is
//! `ℓ(β) = Σ ρ(m_i)` with margins `m_i = −ỹ_i X_iᵀβ`.

mod bartlett;
mod fit;
mod llr;
mod separable;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub use bartlett::{bartlett_alpha, bartlett_alpha_all};
pub use fit::{empirical_alpha_tilde, fit_mle, fit_mle_from, negloglik, FitOptions, FitResult};
pub use llr::{llr_all, write_llr_csv, CoordinateError, LlrRecord};
pub use separable::{check_separable, dual_margin_bound, separability_certificate, SeparabilityCertificate, MARGIN_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GlmError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("design or response contains a non-finite value")]
    NonFinite,
    #[error("responses must be -1 or +1 (found {0})")]
    InvalidResponse(f64),
    #[error("fitting needs n > p (n = {n}, p = {p})")]
    TooFewObservations { n: usize, p: usize },
    #[error("X^T X is singular (the design columns are linearly dependent)")]
    SingularGram,
    #[error("Hessian is singular at the current iterate")]
    SingularHessian,
    #[error("the model has no columns")]
    EmptyModel,
    #[error("the full-model fit did not converge")]
    FitNotConverged,
    #[error("coordinate {0} is out of range")]
    CoordinateOutOfRange(usize),
    #[error("reduced fit failed: {0}")]
    ReducedFit(String),
    #[error("negative log-likelihood ratio {lambda} beyond tolerance")]
    NegativeLlr { lambda: f64 },
}

/// A design matrix with signed responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl Dataset {
    /// Validate and wrap `x` (n×p) and `y_signed` (length n, entries ±1).
    pub fn new(x: DMatrix<f64>, y_signed: DVector<f64>) -> Result<Self, GlmError> {
        if x.nrows() != y_signed.len() {
            return Err(GlmError::DimensionMismatch(format!(
                "X has {} rows but y has {} entries",
                x.nrows(),
                y_signed.len()
            )));
        }
        if x.iter().chain(y_signed.iter()).any(|v| !v.is_finite()) {
            return Err(GlmError::NonFinite);
        }
        if let Some(&bad) = y_signed.iter().find(|&&v| v != 1.0 && v != -1.0) {
            return Err(GlmError::InvalidResponse(bad));
        }
        Ok(Self { x, y: y_signed })
    }

    /// Build from 0/1 responses, mapping 1 ↦ +1 and 0 ↦ −1.
    pub fn from_binary(x: DMatrix<f64>, y01: &[f64]) -> Result<Self, GlmError> {
        let mut signed = Vec::with_capacity(y01.len());
        for &v in y01 {
            signed.push(match v {
                v if v == 1.0 => 1.0,
                v if v == 0.0 => -1.0,
                other => return Err(GlmError::InvalidResponse(other)),
            });
        }
        Self::new(x, DVector::from_vec(signed))
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y_signed(&self) -> &DVector<f64> {
        &self.y
    }

    /// The dataset with column `j` removed.
    pub fn without_column(&self, j: usize) -> Result<Dataset, GlmError> {
        if j >= self.p() {
            return Err(GlmError::CoordinateOutOfRange(j));
        }
        Ok(Dataset { x: self.x.clone().remove_column(j), y: self.y.clone() })
    }

    /// Margins `m_i = −ỹ_i X_iᵀβ`.
    pub(crate) fn margins(&self, beta: &DVector<f64>) -> DVector<f64> {
        let mut m = &self.x * beta;
        m.iter_mut().zip(self.y.iter()).for_each(|(m, y)| *m *= -y);
        m
    }
}

/// Neumaier-compensated sum; LLRs are small differences of large sums.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
