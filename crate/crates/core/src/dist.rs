//! Probability primitives used throughout the crate: the standard normal
//! density, CDF and quantile, and the chi-square upper tail.
//!
//! Everything is built on the regularized incomplete gamma function, so the
//! normal tail `Φ(-x) = Q(1/2, x²/2) / 2` and the chi-square tail
//! `Q(k/2, x/2)` share one well-tested kernel.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("chi-square argument must be non-negative, got {0}")]
    NegativeArgument(f64),
    #[error("chi-square degrees of freedom must be positive")]
    ZeroDegreesOfFreedom,
    #[error("normal quantile requires 0 < u < 1, got {0}")]
    QuantileDomain(f64),
}

/// ln(√(2π))
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_TERMS: usize = 10_000;

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x == 0.5 {
        return LN_SQRT_PI;
    }
    if x < 0.5 {
        // reflection
        let s = (std::f64::consts::PI * x).sin();
        return std::f64::consts::PI.ln() - s.abs().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Series for the lower regularized gamma P(a, x); valid for x < a + 1.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..MAX_TERMS {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Log of the upper regularized gamma Q(a, x) by modified Lentz on the
/// Legendre continued fraction; valid for x ≥ a + 1.
fn ln_gamma_q_cf(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    -x + a * x.ln() - ln_gamma(a) + h.ln()
}

/// Regularized incomplete gamma pair `(P(a, x), Q(a, x))`.
pub fn gamma_pq(a: f64, x: f64) -> (f64, f64) {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return (0.0, 1.0);
    }
    if x < a + 1.0 {
        let p = gamma_p_series(a, x);
        (p, 1.0 - p)
    } else {
        let q = ln_gamma_q_cf(a, x).exp();
        (1.0 - q, q)
    }
}

/// `ln Q(a, x)`, accurate far into the tail where `Q` itself underflows.
pub fn ln_gamma_q(a: f64, x: f64) -> f64 {
    if x < a + 1.0 {
        (-gamma_p_series(a, x)).ln_1p()
    } else {
        ln_gamma_q_cf(a, x)
    }
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Upper tail `1 − Φ(x)`.
pub fn normal_sf(x: f64) -> f64 {
    let (p, q) = gamma_pq(0.5, 0.5 * x * x);
    if x >= 0.0 {
        0.5 * q
    } else {
        0.5 + 0.5 * p
    }
}

/// Standard normal CDF Φ(x).
pub fn normal_cdf(x: f64) -> f64 {
    normal_sf(-x)
}

/// `ln Φ(x)`, finite for all finite `x`.
pub fn ln_normal_cdf(x: f64) -> f64 {
    if x < 0.0 {
        ln_gamma_q(0.5, 0.5 * x * x) - std::f64::consts::LN_2
    } else {
        (-normal_sf(x)).ln_1p()
    }
}

/// Standard normal quantile Φ⁻¹(u), refined by Halley steps until
/// `|Φ(q) − u| < 1e−12`.
pub fn normal_quantile(u: f64) -> Result<f64, DistError> {
    if !(u > 0.0 && u < 1.0) {
        return Err(DistError::QuantileDomain(u));
    }
    let mut x = acklam_initial(u);
    for _ in 0..8 {
        // work in the tail the value lives in to keep relative accuracy
        let err = if u < 0.5 {
            normal_cdf(x) - u
        } else {
            (1.0 - u) - normal_sf(x)
        };
        let pdf = normal_pdf(x);
        if pdf == 0.0 {
            break;
        }
        let step = err / pdf;
        x -= step / (1.0 + 0.5 * x * step);
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}

fn acklam_initial(u: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if u < P_LOW {
        tail((-2.0 * u.ln()).sqrt())
    } else if u > 1.0 - P_LOW {
        -tail((-2.0 * (1.0 - u).ln()).sqrt())
    } else {
        let q = u - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Chi-square distribution with integer degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChiSquare {
    df: u32,
}

impl ChiSquare {
    pub fn new(df: u32) -> Result<Self, DistError> {
        if df == 0 {
            return Err(DistError::ZeroDegreesOfFreedom);
        }
        Ok(Self { df })
    }

    pub fn df(&self) -> u32 {
        self.df
    }

    pub fn cdf(&self, x: f64) -> Result<f64, DistError> {
        Ok(self.pq(x)?.0)
    }

    /// Upper tail probability `P{χ²_df > x}`.
    pub fn sf(&self, x: f64) -> Result<f64, DistError> {
        Ok(self.pq(x)?.1)
    }

    fn pq(&self, x: f64) -> Result<(f64, f64), DistError> {
        if x.is_nan() || x < 0.0 {
            return Err(DistError::NegativeArgument(x));
        }
        if x.is_infinite() {
            return Ok((1.0, 0.0));
        }
        Ok(gamma_pq(0.5 * f64::from(self.df), 0.5 * x))
    }
}

/// Upper-tail probability of a chi-square with `df` degrees of freedom.
pub fn chisq_sf(df: u32, x: f64) -> Result<f64, DistError> {
    ChiSquare::new(df)?.sf(x)
}
