//! Monte Carlo harness under the global null: seeded designs, Bernoulli(1/2)
//! responses, per-trial fits and LLRs, pooled p-values and their summaries.

use std::io::Write;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::dist::chisq_sf;
use crate::format::{json_number, sig};
use crate::glm::{
    check_separable, dual_margin_bound, fit_mle, fit_mle_from, llr_all, Dataset, FitOptions, FitResult, LlrRecord,
    MARGIN_TOL,
};
use crate::links::Link;
use crate::scaling::ScalingSolution;

/// Tail thresholds reported in the tail table.
pub const TAIL_THRESHOLDS: [f64; 6] = [0.05, 0.01, 0.005, 0.001, 0.0005, 0.0001];
/// Equal-width bins of the uniformity test.
pub const GOF_BINS: usize = 20;
/// Gradient tolerance of the polishing step that sharpens the dual bound.
const POLISH_GRAD_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),
    #[error("scaling was solved at kappa = {got}, but p/n = {expected}")]
    ScalingMismatch { expected: f64, got: f64 },
    #[error("no p-values to summarize")]
    EmptyInput,
    #[error("p-value {0} is outside [0, 1]")]
    PValueOutOfRange(f64),
}

/// Row covariance of a Gaussian design.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    /// `Σ_jk = r^{|j−k|}`.
    Toeplitz(f64),
    Matrix(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    GaussianIid,
    BernoulliPm1,
    GaussianWithCovariance(Covariance),
}

/// Coordinates whose LLRs are computed (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coords {
    All,
    First(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    pub trials: usize,
    pub design: Design,
    pub link: Link,
    pub coords: Coords,
    pub master_seed: u64,
}

impl SimConfig {
    pub fn kappa(&self) -> f64 {
        self.p as f64 / self.n as f64
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.p == 0 || self.p >= self.n {
            return Err(SimError::InvalidConfig(format!("need 0 < p < n (n = {}, p = {})", self.n, self.p)));
        }
        if self.trials == 0 {
            return Err(SimError::InvalidConfig("trials must be at least 1".into()));
        }
        if let Coords::First(k) = self.coords {
            if k == 0 || k > self.p {
                return Err(SimError::InvalidConfig(format!("first-{k} coordinates requested with p = {}", self.p)));
            }
        }
        Ok(())
    }

    fn coordinate_list(&self) -> Vec<usize> {
        match self.coords {
            Coords::All => (0..self.p).collect(),
            Coords::First(k) => (0..k).collect(),
        }
    }

    fn to_json(&self) -> Value {
        let design = match &self.design {
            Design::GaussianIid => json!("gaussian"),
            Design::BernoulliPm1 => json!("bernoulli"),
            Design::GaussianWithCovariance(Covariance::Toeplitz(r)) => json!({ "toeplitz": json_number(*r) }),
            Design::GaussianWithCovariance(Covariance::Matrix(_)) => json!("gaussian-covariance"),
        };
        let coords = match self.coords {
            Coords::All => json!("all"),
            Coords::First(k) => json!(k),
        };
        json!({
            "n": self.n,
            "p": self.p,
            "trials": self.trials,
            "design": design,
            "model": self.link.name(),
            "coords": coords,
            "master_seed": self.master_seed,
            "kappa": json_number(self.kappa()),
        })
    }
}

/// SplitMix64 finalizer, used to decorrelate per-trial seeds.
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for one trial: `master_seed ⊕ splitmix64(trial + 1)`.
pub fn trial_rng(master_seed: u64, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(master_seed ^ splitmix64(trial as u64 + 1))
}

/// Draws datasets for a config; the covariance factor is computed once.
pub struct DesignSampler {
    n: usize,
    p: usize,
    design: Design,
    master_seed: u64,
    factor: Option<Cholesky<f64, Dyn>>,
}

impl DesignSampler {
    pub fn new(cfg: &SimConfig) -> Result<Self, SimError> {
        let factor = match &cfg.design {
            Design::GaussianWithCovariance(cov) => Some(covariance_factor(cov, cfg.p)?),
            _ => None,
        };
        Ok(Self { n: cfg.n, p: cfg.p, design: cfg.design.clone(), master_seed: cfg.master_seed, factor })
    }

    /// The design and ±1 responses of `trial`; a pure function of
    /// `(master_seed, trial)`.
    pub fn sample(&self, trial: usize) -> Dataset {
        let mut rng = trial_rng(self.master_seed, trial);
        let (n, p) = (self.n, self.p);
        let mut x = match self.design {
            Design::BernoulliPm1 => DMatrix::from_fn(n, p, |_, _| if rng.random_bool(0.5) { 1.0 } else { -1.0 }),
            _ => DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal)),
        };
        if let Some(chol) = &self.factor {
            // rows L z_i have covariance L Lᵀ = Σ
            x *= chol.l().transpose();
        }
        let y = DVector::from_fn(n, |_, _| if rng.random_bool(0.5) { 1.0 } else { -1.0 });
        Dataset::new(x, y).expect("sampled entries are finite and responses are ±1")
    }
}

fn covariance_factor(cov: &Covariance, p: usize) -> Result<Cholesky<f64, Dyn>, SimError> {
    let sigma = match cov {
        Covariance::Toeplitz(r) => {
            if !(r.abs() < 1.0) {
                return Err(SimError::InvalidCovariance(format!("Toeplitz parameter {r} must lie in (-1, 1)")));
            }
            DMatrix::from_fn(p, p, |j, k| r.powi((j as i32 - k as i32).abs()))
        }
        Covariance::Matrix(m) => {
            if m.shape() != (p, p) {
                return Err(SimError::InvalidCovariance(format!("matrix is {:?}, expected {p}x{p}", m.shape())));
            }
            let scale = m.amax().max(f64::MIN_POSITIVE);
            if (m - m.transpose()).amax() > 1e-12 * scale {
                return Err(SimError::InvalidCovariance("matrix is not symmetric".into()));
            }
            m.clone()
        }
    };
    Cholesky::new(sigma).ok_or_else(|| SimError::InvalidCovariance("matrix is not positive definite".into()))
}

/// The dataset of `trial` under `cfg`.
pub fn make_design(cfg: &SimConfig, trial: usize) -> Result<Dataset, SimError> {
    Ok(DesignSampler::new(cfg)?.sample(trial))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Classical,
    Bartlett,
    Adjusted,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Classical, Method::Bartlett, Method::Adjusted];

    pub fn name(self) -> &'static str {
        match self {
            Method::Classical => "classical",
            Method::Bartlett => "bartlett",
            Method::Adjusted => "adjusted",
        }
    }

    fn pick(self, r: &PooledRow) -> f64 {
        match self {
            Method::Classical => r.p_classical,
            Method::Bartlett => r.p_bartlett,
            Method::Adjusted => r.p_adjusted,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrialOutcome {
    Fitted {
        beta_hat: Vec<f64>,
        records: Vec<LlrRecord>,
        /// Coordinates whose reduced fit failed, with the reason.
        failed_coordinates: Vec<(usize, String)>,
    },
    Separable,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub outcome: TrialOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PooledRow {
    pub trial: usize,
    pub j: usize,
    pub lambda: f64,
    pub p_classical: f64,
    pub p_bartlett: f64,
    pub p_adjusted: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEntry {
    pub threshold: f64,
    pub fraction: f64,
    /// `√(f(1−f)/N)`.
    pub se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gof {
    pub stat: f64,
    pub pvalue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub config: SimConfig,
    pub scaling: ScalingSolution,
    pub trials: Vec<TrialRecord>,
    /// Sorted by `(trial, j)`.
    pub pooled: Vec<PooledRow>,
    pub tail_table: Vec<(Method, Vec<TailEntry>)>,
    /// Uniformity test of the adjusted pool; `None` when the pool is empty.
    pub gof: Option<Gof>,
    pub separable_trials: usize,
    pub failed_trials: usize,
    pub failed_coordinates: usize,
}

impl SimulationReport {
    pub fn pooled_pvalues(&self, method: Method) -> Vec<f64> {
        self.pooled.iter().map(|r| method.pick(r)).collect()
    }

    pub fn tail(&self, method: Method) -> &[TailEntry] {
        &self.tail_table.iter().find(|(m, _)| *m == method).expect("every method has a tail row").1
    }

    pub fn to_json(&self) -> Value {
        let mut table = Map::new();
        for (method, rows) in &self.tail_table {
            let mut by_threshold = Map::new();
            for e in rows {
                by_threshold.insert(
                    sig(e.threshold, 12),
                    json!({ "fraction": json_number(e.fraction), "se": json_number(e.se) }),
                );
            }
            table.insert(method.name().into(), Value::Object(by_threshold));
        }
        let gof = match self.gof {
            Some(g) => json!({ "stat": json_number(g.stat), "pvalue": json_number(g.pvalue) }),
            None => json!({ "stat": "nan", "pvalue": "nan", "error": SimError::EmptyInput.to_string() }),
        };
        json!({
            "config": self.config.to_json(),
            "scaling": {
                "kappa": json_number(self.scaling.kappa),
                "tau_star": json_number(self.scaling.tau_star),
                "b_star": json_number(self.scaling.b_star),
                "alpha": json_number(self.scaling.alpha),
            },
            "pooled_count": self.pooled.len(),
            "tail_table": Value::Object(table),
            "gof": gof,
            "separable_trials": self.separable_trials,
            "failed_trials": self.failed_trials,
            "failed_coordinates": self.failed_coordinates,
        })
    }
}

/// Fit one trial. Separability is settled exactly: a converged fit whose
/// dual margin bound is at most [`MARGIN_TOL`] certifies the data as not
/// separable, and the LP decides every other case.
fn fit_trial(data: &Dataset, opts: &FitOptions) -> Result<Option<FitResult>, String> {
    let fit = fit_mle(data, opts).map_err(|e| e.to_string())?;
    if fit.separable {
        return Ok(None);
    }
    if !fit.converged {
        return if check_separable(data) {
            Ok(None)
        } else {
            Err(fit.diagnostic.unwrap_or_else(|| "fit did not converge".into()))
        };
    }
    let certified = |f: &FitResult| dual_margin_bound(data, opts.link, &f.beta_hat).is_ok_and(|b| b <= MARGIN_TOL);
    if certified(&fit) {
        return Ok(Some(fit));
    }
    let polish_opts = FitOptions { grad_tol: POLISH_GRAD_TOL, ..*opts };
    let fit = match fit_mle_from(data, &polish_opts, &fit.beta_hat) {
        Ok(polished) if polished.converged => polished,
        _ => fit,
    };
    if certified(&fit) || !check_separable(data) {
        Ok(Some(fit))
    } else {
        Ok(None)
    }
}

fn run_trial(
    sampler: &DesignSampler,
    cfg: &SimConfig,
    coords: &[usize],
    scaling: &ScalingSolution,
    trial: usize,
) -> TrialRecord {
    let data = sampler.sample(trial);
    let opts = FitOptions::new(cfg.link);
    let outcome = match fit_trial(&data, &opts) {
        Err(msg) => TrialOutcome::Failed(msg),
        Ok(None) => TrialOutcome::Separable,
        Ok(Some(fit)) => match llr_all(&data, &opts, &fit, coords, scaling) {
            Err(e) => TrialOutcome::Failed(e.to_string()),
            Ok(results) => {
                let mut records = Vec::with_capacity(results.len());
                let mut failed_coordinates = Vec::new();
                for r in results {
                    match r {
                        Ok(rec) => records.push(rec),
                        Err(e) => failed_coordinates.push((e.j, e.error.to_string())),
                    }
                }
                TrialOutcome::Fitted { beta_hat: fit.beta_hat, records, failed_coordinates }
            }
        },
    };
    TrialRecord { trial, outcome }
}

/// Run every trial of `cfg` (concurrently, collected in trial order) and
/// summarize the pooled p-values.
pub fn run_simulation(cfg: &SimConfig, scaling: &ScalingSolution) -> Result<SimulationReport, SimError> {
    cfg.validate()?;
    if (scaling.kappa - cfg.kappa()).abs() > 1e-12 {
        return Err(SimError::ScalingMismatch { expected: cfg.kappa(), got: scaling.kappa });
    }
    let sampler = DesignSampler::new(cfg)?;
    let coords = cfg.coordinate_list();
    let trials: Vec<TrialRecord> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(&sampler, cfg, &coords, scaling, t))
        .collect();

    let mut pooled = Vec::new();
    let (mut separable_trials, mut failed_trials, mut failed_coordinates) = (0, 0, 0);
    for rec in &trials {
        match &rec.outcome {
            TrialOutcome::Separable => separable_trials += 1,
            TrialOutcome::Failed(_) => failed_trials += 1,
            TrialOutcome::Fitted { records, failed_coordinates: f, .. } => {
                failed_coordinates += f.len();
                pooled.extend(records.iter().map(|r| PooledRow {
                    trial: rec.trial,
                    j: r.j,
                    lambda: r.lambda,
                    p_classical: r.p_classical,
                    p_bartlett: r.p_bartlett,
                    p_adjusted: r.p_adjusted,
                }));
            }
        }
    }
    pooled.sort_by_key(|r| (r.trial, r.j));

    let tail_table = Method::ALL
        .iter()
        .map(|&m| (m, tail_table(&pooled.iter().map(|r| m.pick(r)).collect::<Vec<_>>())))
        .collect();
    let adjusted: Vec<f64> = pooled.iter().map(|r| r.p_adjusted).collect();
    let gof = match gof_uniformity(&adjusted) {
        Ok((stat, pvalue)) => Some(Gof { stat, pvalue }),
        Err(SimError::EmptyInput) => None,
        Err(e) => return Err(e),
    };
    Ok(SimulationReport {
        config: cfg.clone(),
        scaling: *scaling,
        trials,
        pooled,
        tail_table,
        gof,
        separable_trials,
        failed_trials,
        failed_coordinates,
    })
}

/// Fraction of p-values at or below each of [`TAIL_THRESHOLDS`], with its
/// binomial standard error. An empty pool gives NaN entries.
pub fn tail_table(pvalues: &[f64]) -> Vec<TailEntry> {
    let total = pvalues.len() as f64;
    TAIL_THRESHOLDS
        .iter()
        .map(|&threshold| {
            let fraction = pvalues.iter().filter(|&&v| v <= threshold).count() as f64 / total;
            TailEntry { threshold, fraction, se: (fraction * (1.0 - fraction) / total).sqrt() }
        })
        .collect()
}

/// Pearson statistic over 20 equal bins of `[0, 1]` and its χ²₁₉ p-value.
pub fn gof_uniformity(pvalues: &[f64]) -> Result<(f64, f64), SimError> {
    if pvalues.is_empty() {
        return Err(SimError::EmptyInput);
    }
    let mut counts = [0usize; GOF_BINS];
    for &v in pvalues {
        if !(0.0..=1.0).contains(&v) {
            return Err(SimError::PValueOutOfRange(v));
        }
        counts[((v * GOF_BINS as f64) as usize).min(GOF_BINS - 1)] += 1;
    }
    let expected = pvalues.len() as f64 / GOF_BINS as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let pvalue = chisq_sf(GOF_BINS as u32 - 1, stat).expect("Pearson statistic is nonnegative");
    Ok((stat, pvalue))
}

/// `(t, #{p ≤ t}/N)` for each grid point. An empty sample gives NaN.
pub fn empirical_cdf(pvalues: &[f64], grid: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = pvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total = sorted.len() as f64;
    grid.iter().map(|&t| (t, sorted.partition_point(|&v| v <= t) as f64 / total)).collect()
}

/// The lower-tail grid `0.1/p, 1.1/p, …` up to `12/p`.
pub fn tail_grid(p: usize) -> Vec<f64> {
    (0..12).map(|k| (0.1 + k as f64) / p as f64).collect()
}

/// Write `trial,j,p_classical,p_bartlett,p_adjusted` rows with 12
/// significant digits.
pub fn write_pooled_csv<W: Write>(mut out: W, rows: &[PooledRow]) -> std::io::Result<()> {
    writeln!(out, "trial,j,p_classical,p_bartlett,p_adjusted")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.trial,
            r.j,
            sig(r.p_classical, 12),
            sig(r.p_bartlett, 12),
            sig(r.p_adjusted, 12)
        )?;
    }
    Ok(())
}

/// Write `trial,j,lambda,p_classical,p_bartlett,p_adjusted` rows with 12
/// significant digits; the input format of p-value re-adjustment.
pub fn write_pooled_llr_csv<W: Write>(mut out: W, rows: &[PooledRow]) -> std::io::Result<()> {
    writeln!(out, "trial,j,lambda,p_classical,p_bartlett,p_adjusted")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.trial,
            r.j,
            sig(r.lambda, 12),
            sig(r.p_classical, 12),
            sig(r.p_bartlett, 12),
            sig(r.p_adjusted, 12)
        )?;
    }
    Ok(())
}

/// Separable trials among `cfg.trials` draws, decided by the margin LP.
pub fn count_separable(cfg: &SimConfig) -> Result<usize, SimError> {
    if cfg.p == 0 || cfg.n == 0 || cfg.trials == 0 {
        return Err(SimError::InvalidConfig("need n, p and trials all positive".into()));
    }
    let sampler = DesignSampler::new(cfg)?;
    Ok((0..cfg.trials).into_par_iter().filter(|&t| check_separable(&sampler.sample(t))).count())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(design: Design) -> SimConfig {
        SimConfig { n: 40, p: 4, trials: 3, design, link: Link::Logistic, coords: Coords::All, master_seed: 11 }
    }

    #[test]
    fn designs_are_deterministic() {
        for design in [Design::GaussianIid, Design::BernoulliPm1, Design::GaussianWithCovariance(Covariance::Toeplitz(0.5))] {
            let cfg = config(design);
            assert_eq!(make_design(&cfg, 2).unwrap(), make_design(&cfg, 2).unwrap());
            assert_ne!(make_design(&cfg, 2).unwrap(), make_design(&cfg, 3).unwrap());
        }
    }

    #[test]
    fn bernoulli_entries_are_signs() {
        let d = make_design(&config(Design::BernoulliPm1), 0).unwrap();
        assert!(d.x().iter().all(|&v| v == 1.0 || v == -1.0));
        assert!(d.y_signed().iter().all(|&v| v == 1.0 || v == -1.0));
    }

    #[test]
    fn gaussian_column_means_within_clt_band() {
        let cfg = SimConfig { n: 100_000, p: 2, ..config(Design::GaussianIid) };
        let d = make_design(&cfg, 0).unwrap();
        for j in 0..2 {
            assert!(d.x().column(j).mean().abs() < 4.0 / (cfg.n as f64).sqrt());
        }
    }

    #[test]
    fn toeplitz_rows_have_the_requested_covariance() {
        let cfg = SimConfig { n: 50_000, p: 3, ..config(Design::GaussianWithCovariance(Covariance::Toeplitz(0.5))) };
        let x = make_design(&cfg, 1).unwrap().x().clone();
        let cov = x.transpose() * &x / cfg.n as f64;
        for j in 0..3 {
            for k in 0..3 {
                let expect = 0.5f64.powi((j as i32 - k as i32).abs());
                assert!((cov[(j, k)] - expect).abs() < 0.03, "({j},{k}) {}", cov[(j, k)]);
            }
        }
    }

    #[test]
    fn invalid_covariances_are_rejected() {
        let bad = [
            Covariance::Toeplitz(1.0),
            Covariance::Matrix(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])),
            Covariance::Matrix(DMatrix::identity(3, 3)),
            Covariance::Matrix(DMatrix::from_row_slice(4, 4, &[1., 0.1, 0., 0., 0., 1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1.])),
        ];
        for c in bad {
            let r = make_design(&config(Design::GaussianWithCovariance(c.clone())), 0);
            assert!(matches!(r, Err(SimError::InvalidCovariance(_))), "{c:?}");
        }
    }

    #[test]
    fn gof_examples() {
        let uniform: Vec<f64> = (0..2000).map(|i| (i as f64 + 0.5) / 2000.0).collect();
        let (stat, p) = gof_uniformity(&uniform).unwrap();
        assert_eq!(stat, 0.0);
        assert_eq!(p, 1.0);
        let (stat, _) = gof_uniformity(&vec![0.42; 2000]).unwrap();
        assert!((stat - 38000.0).abs() < 1e-9);
        assert_eq!(gof_uniformity(&[]), Err(SimError::EmptyInput));
        assert_eq!(gof_uniformity(&[0.5, 1.5]), Err(SimError::PValueOutOfRange(1.5)));
        // p = 1 lands in the last bin
        assert!(gof_uniformity(&[1.0]).is_ok());
    }

    #[test]
    fn ecdf_edges() {
        let ps = [0.2, 0.4, 0.4, 0.9];
        let e = empirical_cdf(&ps, &[0.1, 0.4, 1.0]);
        assert_eq!(e, vec![(0.1, 0.0), (0.4, 0.75), (1.0, 1.0)]);
    }

    #[test]
    fn ecdf_of_uniform_draws_hugs_the_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ps: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        let grid: Vec<f64> = (0..=200).map(|k| k as f64 / 200.0).collect();
        let sup = empirical_cdf(&ps, &grid).iter().map(|&(t, f)| (f - t).abs()).fold(0.0, f64::max);
        assert!(sup < 0.01, "{sup}");
    }

    #[test]
    fn tail_grid_spans_the_lower_tail() {
        let g = tail_grid(60);
        assert_eq!(g.len(), 12);
        assert!((g[0] - 0.1 / 60.0).abs() < 1e-15);
        assert!(*g.last().unwrap() <= 12.0 / 60.0);
    }

    #[test]
    fn tail_table_standard_errors() {
        let ps: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let t = tail_table(&ps);
        assert_eq!(t[0].threshold, 0.05);
        assert!((t[0].fraction - 0.051).abs() < 1e-12);
        assert!((t[0].se - (0.051f64 * 0.949 / 1000.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let ok = config(Design::GaussianIid);
        assert!(ok.validate().is_ok());
        for bad in [
            SimConfig { trials: 0, ..ok.clone() },
            SimConfig { p: 40, ..ok.clone() },
            SimConfig { coords: Coords::First(5), ..ok.clone() },
            SimConfig { coords: Coords::First(0), ..ok.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(SimError::InvalidConfig(_))));
        }
    }

    #[test]
    fn trial_seeds_differ() {
        let a: u64 = trial_rng(5, 0).random();
        let b: u64 = trial_rng(5, 1).random();
        assert_ne!(a, b);
    }
}
