use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use lrt_calibrate::amp::{amp_run, write_amp_csv};
use lrt_calibrate::dist::chisq_sf;
use lrt_calibrate::format::{has_non_finite, json_number, sig};
use lrt_calibrate::links::Link;
use lrt_calibrate::scaling::{alpha_curve, solve_system, write_curve_csv, ScalingSolution};
use lrt_calibrate::simulate::{
    count_separable, make_design, run_simulation, write_pooled_csv, write_pooled_llr_csv, Coords, Covariance, Design, SimConfig,
};
use serde_json::{json, Value};

use crate::error::{kappa_message, CliError, NUMERIC};

fn check_kappa(kappa: f64) -> Result<(), CliError> {
    if kappa > 0.0 && kappa < 0.5 {
        Ok(())
    } else {
        Err(CliError::domain(kappa_message(kappa)))
    }
}

/// Print `v` as JSON, flagging non-finite values that had to be written as
/// strings.
fn emit(mut v: Value) -> Result<(), CliError> {
    if has_non_finite(&v) {
        if let Value::Object(map) = &mut v {
            map.insert("non_finite".into(), Value::Bool(true));
        }
    }
    let text = serde_json::to_string_pretty(&v).expect("JSON values serialize");
    let mut out = io::stdout().lock();
    writeln!(out, "{text}")?;
    Ok(())
}

fn solution_json(s: &ScalingSolution) -> Value {
    json!({
        "kappa": json_number(s.kappa),
        "tau_star": json_number(s.tau_star),
        "b_star": json_number(s.b_star),
        "alpha": json_number(s.alpha),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

pub fn solve(model: Link, kappa: f64) -> Result<(), CliError> {
    check_kappa(kappa)?;
    emit(solution_json(&solve_system(model, kappa)?))
}

pub fn curve(model: Link, kappa_min: f64, kappa_max: f64, points: usize, out: Option<&Path>) -> Result<(), CliError> {
    check_kappa(kappa_min)?;
    check_kappa(kappa_max)?;
    if kappa_min > kappa_max {
        return Err(CliError::usage(format!("--kappa-min {kappa_min} exceeds --kappa-max {kappa_max}")));
    }
    let grid: Vec<f64> = if points == 1 {
        vec![kappa_min]
    } else {
        let step = (kappa_max - kappa_min) / (points - 1) as f64;
        (0..points).map(|i| if i + 1 == points { kappa_max } else { kappa_min + step * i as f64 }).collect()
    };
    let curve = alpha_curve(model, &grid);
    if let Some(path) = out {
        let mut w = create(path)?;
        write_curve_csv(&mut w, &curve)?;
        w.flush()?;
    }
    let mut failure = None;
    let rows: Vec<Value> = curve
        .iter()
        .map(|pt| match &pt.result {
            Ok(s) => solution_json(s),
            Err(e) => {
                failure.get_or_insert_with(|| CliError::from(e.clone()));
                json!({ "kappa": json_number(pt.kappa), "error": e.to_string() })
            }
        })
        .collect();
    if points == 1 {
        if let Some(e) = failure {
            return Err(e);
        }
        return emit(rows.into_iter().next().expect("one grid point"));
    }
    emit(Value::Array(rows))?;
    match failure {
        Some(e) => Err(CliError { code: e.code.max(NUMERIC), message: format!("some curve points failed: {}", e.message) }),
        None => Ok(()),
    }
}

fn parse_design(s: &str) -> Result<Design, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "gaussian" | "gaussian-iid" => Ok(Design::GaussianIid),
        "bernoulli" => Ok(Design::BernoulliPm1),
        other => match other.strip_prefix("toeplitz:").map(str::parse::<f64>) {
            Some(Ok(r)) => Ok(Design::GaussianWithCovariance(Covariance::Toeplitz(r))),
            _ => Err(CliError::usage(format!("unknown design '{s}' (expected gaussian, bernoulli or toeplitz:<r>)"))),
        },
    }
}

fn parse_coords(s: &str) -> Result<Coords, CliError> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(Coords::All);
    }
    s.parse::<usize>()
        .map(Coords::First)
        .map_err(|_| CliError::usage(format!("--coords must be 'all' or a count, got '{s}'")))
}

#[allow(clippy::too_many_arguments)]
pub fn simulate(
    n: usize,
    p: usize,
    trials: usize,
    design: &str,
    model: Link,
    coords: &str,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = SimConfig {
        n,
        p,
        trials,
        design: parse_design(design)?,
        link: model,
        coords: parse_coords(coords)?,
        master_seed: seed,
    };
    cfg.validate()?;
    check_kappa(cfg.kappa())?;
    let scaling = solve_system(model, cfg.kappa())?;
    let report = run_simulation(&cfg, &scaling)?;
    let value = report.to_json();
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))?;
        let mut w = create(&dir.join("report.json"))?;
        serde_json::to_writer_pretty(&mut w, &value).map_err(|e| CliError::io(e.to_string()))?;
        writeln!(w)?;
        w.flush()?;
        let mut w = create(&dir.join("pooled.csv"))?;
        write_pooled_csv(&mut w, &report.pooled)?;
        w.flush()?;
        let mut w = create(&dir.join("llr.csv"))?;
        write_pooled_llr_csv(&mut w, &report.pooled)?;
        w.flush()?;
    }
    emit(value)
}

/// Rewrite the CSV at `input` with `p_adjusted = P{χ²₁ > 2λ/α}`, replacing
/// an existing `p_adjusted` column.
pub fn adjust(input: &Path, model: Link, kappa: f64, output: Option<&Path>) -> Result<(), CliError> {
    check_kappa(kappa)?;
    let mut reader = csv::ReaderBuilder::new()
        .from_path(input)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", input.display())))?;
    let headers = reader.headers().map_err(|e| csv_error(input, &e))?.clone();
    let lambda_col = headers
        .iter()
        .position(|h| h.trim() == "lambda")
        .ok_or_else(|| CliError::io(format!("{}: line 1: no 'lambda' column", input.display())))?;
    let replace_col = headers.iter().position(|h| h.trim() == "p_adjusted");
    let alpha = solve_system(model, kappa)?.alpha;

    let sink: Box<dyn Write> = match output {
        Some(path) => Box::new(create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut writer = csv::Writer::from_writer(sink);
    let mut out_headers = headers.clone();
    if replace_col.is_none() {
        out_headers.push_field("p_adjusted");
    }
    writer.write_record(&out_headers).map_err(|e| CliError::io(e.to_string()))?;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(input, &e))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = record.get(lambda_col).unwrap_or("").trim();
        let lambda: f64 = field.parse().map_err(|_| {
            CliError::io(format!("{}: line {line}: lambda '{field}' is not a number", input.display()))
        })?;
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(CliError::io(format!(
                "{}: line {line}: lambda must be finite and nonnegative, got {lambda}",
                input.display()
            )));
        }
        let p_adj = sig(chisq_sf(1, 2.0 * lambda / alpha).expect("statistic is nonnegative"), 12);
        let fields: Vec<&str> = match replace_col {
            Some(c) => record.iter().enumerate().map(|(i, f)| if i == c { p_adj.as_str() } else { f }).collect(),
            None => record.iter().chain(std::iter::once(p_adj.as_str())).collect(),
        };
        writer.write_record(&fields).map_err(|e| CliError::io(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_error(input: &Path, e: &csv::Error) -> CliError {
    match e.position() {
        Some(pos) => CliError::io(format!("{}: line {}: {e}", input.display(), pos.line())),
        None => CliError::io(format!("{}: {e}", input.display())),
    }
}

pub fn separability(n: usize, p: usize, trials: usize, seed: u64) -> Result<(), CliError> {
    if n == 0 || p == 0 {
        return Err(CliError::usage("--n and --p must be positive"));
    }
    let cfg = SimConfig {
        n,
        p,
        trials,
        design: Design::GaussianIid,
        link: Link::Logistic,
        coords: Coords::All,
        master_seed: seed,
    };
    let separable = count_separable(&cfg)?;
    emit(json!({
        "n": n,
        "p": p,
        "trials": trials,
        "seed": seed,
        "separable_trials": separable,
        "separable_fraction": json_number(separable as f64 / trials as f64),
    }))
}

pub fn amp(n: usize, p: usize, iters: usize, seed: u64, model: Link, out: Option<&Path>) -> Result<(), CliError> {
    if p == 0 || p >= n {
        return Err(CliError::usage(format!("need 0 < p < n (n = {n}, p = {p})")));
    }
    let kappa = p as f64 / n as f64;
    check_kappa(kappa)?;
    let scaling = solve_system(model, kappa)?;
    let cfg = SimConfig {
        n,
        p,
        trials: 1,
        design: Design::GaussianIid,
        link: model,
        coords: Coords::All,
        master_seed: seed,
    };
    let x = make_design(&cfg, 0)?.x().clone();
    let run = amp_run(&x, model, &scaling, iters, seed)?;
    if let Some(path) = out {
        let mut w = create(path)?;
        write_amp_csv(&mut w, &run.norms)?;
        w.flush()?;
    }
    let tau_sq = scaling.tau_star * scaling.tau_star;
    let final_norm_sq = run.norms.last().expect("trace starts at t = 0").1;
    emit(json!({
        "n": n,
        "p": p,
        "kappa": json_number(kappa),
        "iters": iters,
        "seed": seed,
        "model": model.name(),
        "tau_star_sq": json_number(tau_sq),
        "b_star": json_number(scaling.b_star),
        "final_norm_sq": json_number(final_norm_sq),
        "relative_error": json_number((final_norm_sq - tau_sq).abs() / tau_sq),
    }))
}
