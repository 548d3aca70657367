mod common;

use std::sync::OnceLock;

use lrt_calibrate::links::Link;
use lrt_calibrate::scaling::{solve_system, ScalingSolution};
use lrt_calibrate::simulate::{
    run_simulation, Coords, Covariance, Design, Method, SimConfig, SimulationReport, TrialOutcome,
};

fn desk_config(design: Design, trials: usize, seed: u64) -> SimConfig {
    SimConfig { n: 200, p: 60, trials, design, link: Link::Logistic, coords: Coords::All, master_seed: seed }
}

fn scaling_03() -> &'static ScalingSolution {
    static S: OnceLock<ScalingSolution> = OnceLock::new();
    S.get_or_init(|| solve_system(Link::Logistic, 0.3).unwrap())
}

/// The 400-trial desk run shared by the statistical checks.
fn desk_run() -> &'static SimulationReport {
    static R: OnceLock<SimulationReport> = OnceLock::new();
    R.get_or_init(|| run_simulation(&desk_config(Design::GaussianIid, 400, 7), scaling_03()).unwrap())
}

fn fitted(report: &SimulationReport) -> impl Iterator<Item = (&Vec<f64>, &Vec<lrt_calibrate::glm::LlrRecord>)> {
    report.trials.iter().filter_map(|t| match &t.outcome {
        TrialOutcome::Fitted { beta_hat, records, .. } => Some((beta_hat, records)),
        _ => None,
    })
}

#[test]
fn desk_run_orders_the_three_corrections() {
    let r = desk_run();
    assert_eq!(r.separable_trials, 0);
    assert_eq!(r.failed_trials, 0);
    assert_eq!(r.pooled.len(), 24_000);
    let at5 = |m| r.tail(m)[0].fraction;
    let (c, b, a) = (at5(Method::Classical), at5(Method::Bartlett), at5(Method::Adjusted));
    assert!(c > b && b > a, "{c} {b} {a}");
    assert!((0.044..=0.056).contains(&a), "adjusted {a}");
    assert!(r.gof.unwrap().pvalue > 0.01);
}

#[test]
fn llr_tracks_the_scaled_squared_coefficient() {
    // 2Λ₁ ≈ (p/b*)·β̂₁²
    let s = scaling_03();
    let (x, y): (Vec<f64>, Vec<f64>) = fitted(desk_run())
        .map(|(beta, recs)| {
            let rec = recs.iter().find(|r| r.j == 0).unwrap();
            (60.0 / s.b_star * beta[0] * beta[0], 2.0 * rec.lambda)
        })
        .unzip();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mad = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).abs()).sum::<f64>() / n;
    assert!((0.9..=1.1).contains(&slope), "slope {slope}");
    assert!(mad < 0.15 * my, "residual {mad} vs mean {my}");
}

#[test]
fn scaled_coefficients_have_variance_tau_star_squared() {
    let vals: Vec<f64> = fitted(desk_run()).flat_map(|(beta, _)| beta.iter().map(|b| b * 60f64.sqrt())).collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let tau_sq = scaling_03().tau_star.powi(2);
    assert!((var / tau_sq - 1.0).abs() < 0.10, "{var} vs {tau_sq}");
}

#[test]
fn llr_law_is_invariant_to_row_covariance() {
    let lambdas = |design| -> Vec<f64> {
        let r = run_simulation(&desk_config(design, 200, 21), scaling_03()).unwrap();
        fitted(&r).flat_map(|(_, recs)| recs.iter().map(|r| r.lambda)).collect()
    };
    let iid = lambdas(Design::GaussianIid);
    let corr = lambdas(Design::GaussianWithCovariance(Covariance::Toeplitz(0.5)));
    let (d, p) = common::ks_two_sample(&iid, &corr);
    assert!(p > 0.01, "KS D = {d}, p = {p}");
}

#[test]
fn classical_and_adjusted_agree_when_kappa_is_tiny() {
    let cfg = SimConfig { n: 4000, p: 20, trials: 1, design: Design::GaussianIid, link: Link::Logistic, coords: Coords::All, master_seed: 3 };
    let s = solve_system(Link::Logistic, cfg.kappa()).unwrap();
    let r = run_simulation(&cfg, &s).unwrap();
    assert_eq!(r.pooled.len(), 20);
    let sup = r.pooled.iter().map(|row| (row.p_classical - row.p_adjusted).abs()).fold(0.0, f64::max);
    assert!(sup < 0.002, "{sup}");
}

#[test]
fn single_trial_single_coordinate() {
    let cfg = SimConfig { trials: 1, coords: Coords::First(1), ..desk_config(Design::BernoulliPm1, 1, 5) };
    let r = run_simulation(&cfg, scaling_03()).unwrap();
    for m in Method::ALL {
        assert_eq!(r.pooled_pvalues(m).len(), 1);
    }
}

#[test]
fn pooled_pvalues_do_not_depend_on_the_thread_count() {
    let cfg = SimConfig { n: 120, p: 36, trials: 12, design: Design::GaussianIid, link: Link::Probit, coords: Coords::All, master_seed: 99 };
    let s = solve_system(Link::Probit, cfg.kappa()).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| run_simulation(&cfg, &s).unwrap())
    };
    let (one, three) = (run(1), run(3));
    assert_eq!(one.pooled, three.pooled);
    assert_eq!(one.to_json(), three.to_json());
}

#[test]
fn report_json_has_the_documented_keys() {
    let cfg = SimConfig { coords: Coords::First(3), ..desk_config(Design::GaussianIid, 2, 1) };
    let v = run_simulation(&cfg, scaling_03()).unwrap().to_json();
    for key in ["config", "tail_table", "gof", "separable_trials", "failed_trials"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!(v["tail_table"]["adjusted"]["0.05"]["fraction"].is_number());
    assert!(v["tail_table"]["classical"]["0.0001"]["se"].is_number());
    // strict JSON round trip
    let text = serde_json::to_string(&v).unwrap();
    assert_eq!(serde_json::from_str::<serde_json::Value>(&text).unwrap(), v);
}
