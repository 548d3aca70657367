//! Expectations under the standard normal.
//!
//! The rule is a trapezoid sum in `v` under the map `z = c·sinh(v)` with
//! `c = 1/max(1, τ)`. Near the origin the node spacing in `u = τz` is at most
//! `Δv`, so features of `f` on the unit scale stay resolved however large τ
//! gets, while the spacing grows geometrically into the Gaussian tail. A
//! fixed Gauss–Hermite rule cannot do this: its spacing in `u` grows like τ.

use std::sync::OnceLock;

use crate::dist::normal_pdf;

/// Default number of nodes.
pub const DEFAULT_ORDER: usize = 200;

/// Integration range in standard deviations; `z²φ(z)` beyond it is below 1e−16.
const Z_MAX: f64 = 9.0;

/// An `order`-point rule for `E[f(τZ)]`, `Z ~ N(0, 1)`.
///
/// `nodes` and `weights` are the rule for τ ≤ 1, where it does not depend
/// on τ; for τ > 1 [`expect`](Self::expect) rebuilds the nodes on the fly.
#[derive(Debug, Clone)]
pub struct GaussianQuadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussianQuadrature {
    pub fn new(order: usize) -> Self {
        assert!(order >= 2, "quadrature order must be at least 2");
        let (nodes, weights) = (0..order).map(|k| node(order, k, 1.0)).unzip::<_, _, Vec<_>, Vec<_>>();
        let total: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Self { nodes, weights }
    }

    /// Process-wide rule of [`DEFAULT_ORDER`], built on first use.
    pub fn standard() -> &'static GaussianQuadrature {
        static RULE: OnceLock<GaussianQuadrature> = OnceLock::new();
        RULE.get_or_init(|| GaussianQuadrature::new(DEFAULT_ORDER))
    }

    /// Process-wide rule of twice the default order, for accuracy checks.
    pub fn doubled() -> &'static GaussianQuadrature {
        static RULE: OnceLock<GaussianQuadrature> = OnceLock::new();
        RULE.get_or_init(|| GaussianQuadrature::new(2 * DEFAULT_ORDER))
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E[f(τZ)] ≈ Σ w_k f(τ z_k)`.
    pub fn expect<F: FnMut(f64) -> f64>(&self, mut f: F, tau: f64) -> f64 {
        match self.try_expect(|u| Ok::<f64, std::convert::Infallible>(f(u)), tau) {
            Ok(v) => v,
            Err(e) => match e {},
        }
    }

    /// Fallible variant of [`expect`](Self::expect); stops at the first error.
    pub fn try_expect<F, E>(&self, mut f: F, tau: f64) -> Result<f64, E>
    where
        F: FnMut(f64) -> Result<f64, E>,
    {
        Ok(self.try_expect_n(|u| f(u).map(|v| [v]), tau)?[0])
    }

    /// Expectations of `N` functions sharing one evaluation per node.
    pub fn try_expect_n<const N: usize, F, E>(&self, mut f: F, tau: f64) -> Result<[f64; N], E>
    where
        F: FnMut(f64) -> Result<[f64; N], E>,
    {
        let mut acc = [0.0; N];
        if tau <= 1.0 {
            for (&z, &w) in self.nodes.iter().zip(&self.weights) {
                let v = f(tau * z)?;
                acc.iter_mut().zip(v).for_each(|(a, v)| *a += w * v);
            }
            return Ok(acc);
        }
        let (n, c) = (self.order(), 1.0 / tau);
        let mut total = 0.0;
        for k in 0..n {
            let (z, w) = node(n, k, c);
            let v = f(tau * z)?;
            acc.iter_mut().zip(v).for_each(|(a, v)| *a += w * v);
            total += w;
        }
        acc.iter_mut().for_each(|a| *a /= total);
        Ok(acc)
    }
}

/// Node `k` of the `n`-point rule with scale `c`, unnormalized weight.
#[inline]
fn node(n: usize, k: usize, c: f64) -> (f64, f64) {
    let v_max = (Z_MAX / c).asinh();
    let dv = 2.0 * v_max / (n - 1) as f64;
    // integer numerator keeps the grid exactly antisymmetric
    let v = v_max * (2.0 * k as f64 - (n - 1) as f64) / (n - 1) as f64;
    let z = c * v.sinh();
    (z, dv * c * v.cosh() * normal_pdf(z))
}
