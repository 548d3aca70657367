//! Calibration of likelihood-ratio tests in high-dimensional logistic and
//! probit regression.
//!
//! In the regime `p/n → κ ∈ (0, 1/2)` the LLR statistic `2Λ_j` for a null
//! coordinate is asymptotically `α(κ)·χ²₁` rather than `χ²₁`, where
//! `α(κ) = τ*²/b*` and `(τ*, b*)` solve a two-equation system built from the
//! proximal operator of the effective link. This crate solves that system,
//! fits the MLE, computes classical, Bartlett-corrected and adjusted
//! p-values, and runs the Monte Carlo experiments that check them.

pub mod amp;
pub mod dist;
pub mod format;
pub mod glm;
pub mod links;
pub mod prox;
pub mod quad;
pub mod scaling;
pub mod simulate;
