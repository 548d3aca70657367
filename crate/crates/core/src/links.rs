//! Effective links for binary regression under the symmetry condition
//! `μ(t) + μ(−t) = 1`. With signed responses `ỹ ∈ {−1, +1}` the negative
//! log-likelihood is `Σ ρ(−ỹ_i X_iᵀβ)`, where `ρ` is the effective link.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dist::{ln_normal_cdf, normal_cdf, normal_pdf, normal_sf, LN_SQRT_2PI};

/// Above this argument the probit derivatives switch to the Mills-ratio
/// continued fraction; `φ/Φ(−t)` computed directly loses all precision
/// before underflowing near t ≈ 38.
const PROBIT_TAIL: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Logistic,
    Probit,
}

impl Link {
    pub const ALL: [Link; 2] = [Link::Logistic, Link::Probit];

    /// Mean function μ: logistic sigmoid or Φ.
    pub fn mean(self, t: f64) -> f64 {
        match self {
            Link::Logistic => sigmoid(t),
            Link::Probit => normal_cdf(t),
        }
    }

    /// ρ(t): `log(1 + eᵗ)` or `−log Φ(−t)`.
    pub fn rho(self, t: f64) -> f64 {
        match self {
            Link::Logistic => t.max(0.0) + (-t.abs()).exp().ln_1p(),
            Link::Probit => {
                if t > PROBIT_TAIL {
                    0.5 * t * t + LN_SQRT_2PI + (t + mills_tail(t)).ln()
                } else {
                    -ln_normal_cdf(-t)
                }
            }
        }
    }

    /// ρ'(t). For the probit link this is the inverse Mills ratio φ(t)/Φ(−t).
    pub fn rho1(self, t: f64) -> f64 {
        match self {
            Link::Logistic => sigmoid(t),
            Link::Probit => {
                if t > PROBIT_TAIL {
                    t + mills_tail(t)
                } else {
                    normal_pdf(t) / normal_sf(t)
                }
            }
        }
    }

    /// ρ''(t).
    pub fn rho2(self, t: f64) -> f64 {
        match self {
            Link::Logistic => sigmoid(t) * sigmoid(-t),
            Link::Probit => {
                let (r1, gap) = self.probit_rho1_gap(t);
                r1 * gap
            }
        }
    }

    /// ρ'''(t).
    pub fn rho3(self, t: f64) -> f64 {
        match self {
            Link::Logistic => {
                let (s, c) = (sigmoid(t), sigmoid(-t));
                s * c * (c - s)
            }
            Link::Probit => {
                let (r1, gap) = self.probit_rho1_gap(t);
                let r2 = r1 * gap;
                r2 * gap + r1 * (r2 - 1.0)
            }
        }
    }

    /// `(ρ', ρ'')` in one pass.
    #[inline]
    pub fn rho1_rho2(self, t: f64) -> (f64, f64) {
        match self {
            Link::Logistic => {
                let (s, c) = (sigmoid(t), sigmoid(-t));
                (s, s * c)
            }
            Link::Probit => {
                let (r1, gap) = self.probit_rho1_gap(t);
                (r1, r1 * gap)
            }
        }
    }

    /// `sup_t ρ''(t)`.
    pub fn sup_rho2(self) -> f64 {
        match self {
            Link::Logistic => 0.25,
            Link::Probit => 1.0,
        }
    }

    /// Probit `(ρ'(t), ρ'(t) − t)`, with the gap computed without
    /// cancellation in the upper tail.
    fn probit_rho1_gap(self, t: f64) -> (f64, f64) {
        if t > PROBIT_TAIL {
            let gap = mills_tail(t);
            (t + gap, gap)
        } else {
            let r1 = normal_pdf(t) / normal_sf(t);
            (r1, r1 - t)
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Link::Logistic => "logistic",
            Link::Probit => "probit",
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Link {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "logistic" | "logit" => Ok(Link::Logistic),
            "probit" => Ok(Link::Probit),
            other => Err(format!("unknown model '{other}' (expected logistic or probit)")),
        }
    }
}

#[inline]
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `1/R(t) − t` where `R(t) = Φ(−t)/φ(t)` is the Mills ratio, evaluated as
/// the tail of Laplace's continued fraction `1/(t + 2/(t + 3/(t + …)))`.
fn mills_tail(t: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = TINY;
    let mut c = f;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64;
        d = t + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = t + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    f
}
