use serde_json::{json, Value};
use std::collections::BTreeMap;

use super::config::{ExperimentConfig, Mode};
use super::report::{num, opt_bool, opt_num, Report, Table};
use crate::apps::{
    davis_gut_mc, davis_gut_table, lil_envelope, log_slope, smoother_weight_table_with, LilMode, RegressionDesign,
};
use crate::error::{Error, Result};
use crate::field::{aggregates, build_weights_with, WeightTable};
use crate::innovations::InnovationModel;
use crate::mc::{lil_replication, simulate_tail, SimOptions};
use crate::theory::{large_prediction, moderate_prediction, uniform_prediction, validity_ranges, DeviationPrediction};

/// Runs the configured mode; `workers` only affects speed.
pub fn run(config: &ExperimentConfig, workers: Option<usize>) -> Result<Report> {
    config.validate()?;
    match config.mode {
        Mode::Coeffs => coeffs(config),
        Mode::Predict => predict(config),
        Mode::Simulate => simulate(config, workers),
        Mode::Verify => verify(config, workers),
        Mode::Regression => regression(config, workers),
        Mode::DavisGut => davis_gut(config, workers),
    }
}

fn context(op: &str, n: i64) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::InvalidParameter(m) => Error::InvalidParameter(format!("{op} (n = {n}): {m}")),
        Error::InvalidRegime(m) => Error::InvalidRegime(format!("{op} (n = {n}): {m}")),
        other => other,
    }
}

fn tables(config: &ExperimentConfig) -> Result<Vec<(i64, WeightTable)>> {
    let opts = config.build_options();
    config
        .n_values
        .iter()
        .map(|&n| {
            let region = config.region.region(n)?;
            build_weights_with(&config.field, &region, &opts).map(|w| (n, w)).map_err(context("build_weights", n))
        })
        .collect()
}

fn exponents(p: f64, t: Option<f64>) -> Vec<f64> {
    let mut e = vec![2.0, p];
    if let Some(t) = t {
        if t != p {
            e.push(t);
        }
    }
    e
}

fn table_artifact(config: &ExperimentConfig, n: i64, w: &WeightTable, out: &mut Vec<(String, Vec<u8>)>) -> Result<()> {
    if config.output.write_tables {
        let mut buf = Vec::new();
        w.write_binary(&mut buf)?;
        out.push((format!("weights_n{n}.wtab"), buf));
    }
    Ok(())
}

fn coeffs(config: &ExperimentConfig) -> Result<Report> {
    let t = config.tail_index()?;
    let mut table = Table::new(&[
        "n", "region", "window_cells", "sigma2", "stored_mass", "tail_bound", "rho2", "d_p", "u_p", "d_t", "u_t",
    ]);
    let mut artifacts = Vec::new();
    for (n, w) in tables(config)? {
        let agg = aggregates(&w, &exponents(config.p, t))?;
        table.push(vec![
            json!(n),
            json!(w.n_label()),
            json!(w.window().cells()),
            num(w.sigma2()),
            num(w.stored_mass()),
            num(w.tail_bound()),
            num(agg.rho2),
            opt_num(agg.d(config.p)),
            opt_num(agg.u(config.p)),
            opt_num(t.and_then(|t| agg.d(t))),
            opt_num(t.and_then(|t| agg.u(t))),
        ]);
        table_artifact(config, n, &w, &mut artifacts)?;
    }
    let mut r = Report::new(table);
    r.artifacts = artifacts;
    Ok(r)
}

/// Predictions at one threshold; heavy-tailed parts are absent for
/// light-tailed laws and for fields with negative weights.
struct Predictions {
    moderate: DeviationPrediction,
    large: Option<DeviationPrediction>,
    uniform: Option<DeviationPrediction>,
}

fn predictions(config: &ExperimentConfig, w: &WeightTable, model: &InnovationModel, x: f64, n: i64) -> Result<Predictions> {
    let t = config.tail_index()?;
    let agg = aggregates(w, &exponents(config.p, t))?;
    let moderate = moderate_prediction(x, &agg, config.p).map_err(context("moderate_prediction", n))?;
    let soft = |r: Result<DeviationPrediction>| match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::NegativeWeight { .. }) => Ok(None),
        Err(e) => Err(e),
    };
    let large = if model.is_heavy_tailed() && x > 0.0 {
        soft(large_prediction(x * w.sigma(), w, model, config.ct_margin)).map_err(context("large_prediction", n))?
    } else {
        None
    };
    let uniform = if x > 0.0 {
        soft(uniform_prediction(x, w, &agg, model, config.p, config.ct_margin)).map_err(context("uniform_prediction", n))?
    } else {
        None
    };
    Ok(Predictions { moderate, large, uniform })
}

fn sides(config: &ExperimentConfig) -> f64 {
    if config.two_sided {
        2.0
    } else {
        1.0
    }
}

fn predict(config: &ExperimentConfig) -> Result<Report> {
    let model = config.model()?;
    let t = config.tail_index()?;
    let k = sides(config);
    let mut table = Table::new(&[
        "n",
        "x",
        "x_abs",
        "pred_moderate",
        "pred_large",
        "pred_uniform",
        "heavy_part",
        "gaussian_part",
        "moderate_ok",
        "large_ok",
        "dominant",
        "x_moderate_max",
        "x_large_min",
    ]);
    for (n, w) in tables(config)? {
        let agg = aggregates(&w, &exponents(config.p, t))?;
        let ranges = match t {
            Some(t) => Some(validity_ranges(&agg, config.p, t, config.ct_margin).map_err(context("validity_ranges", n))?),
            None => None,
        };
        for &x in &config.thresholds {
            let pr = predictions(config, &w, &model, x, n)?;
            let best = pr.uniform.as_ref().unwrap_or(&pr.moderate);
            table.push(vec![
                json!(n),
                num(x),
                num(x * w.sigma()),
                num((k * pr.moderate.value).min(1.0)),
                opt_num(pr.large.as_ref().map(|p| (k * p.value).min(1.0))),
                opt_num(pr.uniform.as_ref().map(|p| (k * p.value).min(1.0))),
                opt_num(best.heavy_part.map(|v| k * v)),
                num(k * best.gaussian_part),
                opt_bool(pr.moderate.moderate_ok),
                opt_bool(pr.large.as_ref().and_then(|p| p.large_ok)),
                json!(best.dominant),
                opt_num(ranges.map(|r| r.x_moderate_max).or_else(|| {
                    agg.u(config.p).map(|u| (2.0 * (1.0 / u).ln()).sqrt())
                })),
                opt_num(ranges.map(|r| r.x_large_min)),
            ]);
        }
    }
    Ok(Report::new(table))
}

fn sim_options(config: &ExperimentConfig, index: usize, workers: Option<usize>) -> SimOptions {
    SimOptions { workers, ..SimOptions::new(config.n_samples, config.seed.wrapping_add(index as u64)).two_sided(config.two_sided) }
}

fn simulate(config: &ExperimentConfig, workers: Option<usize>) -> Result<Report> {
    let model = config.model()?;
    let mut table = Table::new(&["n_label", "x_sigma_units", "x_abs", "p_hat", "stderr", "n_samples", "seed"]);
    for (i, (n, w)) in tables(config)?.into_iter().enumerate() {
        let opts = sim_options(config, i, workers);
        for e in simulate_tail(&w, &model, &config.thresholds, &opts).map_err(context("simulate_tail", n))? {
            table.push(vec![
                json!(e.n_label),
                num(e.x_sigma),
                num(e.x_abs),
                num(e.p_hat),
                num(e.stderr),
                json!(e.n_samples),
                json!(e.seed),
            ]);
        }
    }
    Ok(Report::new(table))
}

fn verify(config: &ExperimentConfig, workers: Option<usize>) -> Result<Report> {
    let model = config.model()?;
    let tol = config.tolerances;
    let k = sides(config);
    let mut table = Table::new(&[
        "n",
        "x",
        "mc",
        "mc_stderr",
        "pred_moderate",
        "pred_large",
        "pred_uniform",
        "moderate_ok",
        "large_ok",
        "ratio",
        "pass",
    ]);
    let (mut checked, mut failed) = (0usize, 0usize);
    for (i, (n, w)) in tables(config)?.into_iter().enumerate() {
        let opts = sim_options(config, i, workers);
        let est = simulate_tail(&w, &model, &config.thresholds, &opts).map_err(context("simulate_tail", n))?;
        for (e, &x) in est.iter().zip(&config.thresholds) {
            let pr = predictions(config, &w, &model, x, n)?;
            let scaled = |p: &DeviationPrediction| (k * p.value).min(1.0);
            let moderate = scaled(&pr.moderate);
            let large = pr.large.as_ref().map(scaled);
            let uniform = pr.uniform.as_ref().map(scaled);
            let moderate_ok = pr.moderate.moderate_ok;
            let large_ok = pr.large.as_ref().and_then(|p| p.large_ok);
            let (reference, applicable) = match (model.is_heavy_tailed(), uniform) {
                (true, Some(u)) => (u, moderate_ok == Some(true) || large_ok == Some(true)),
                _ => (moderate, moderate_ok == Some(true)),
            };
            let ratio = e.p_hat / reference;
            let pass = applicable.then(|| {
                let se = e.stderr_under(reference);
                (ratio >= tol.ratio_low && ratio <= tol.ratio_high) || (e.p_hat - reference).abs() <= tol.stderr_k * se
            });
            if let Some(ok) = pass {
                checked += 1;
                failed += usize::from(!ok);
            }
            table.push(vec![
                json!(n),
                num(x),
                num(e.p_hat),
                num(e.stderr),
                num(moderate),
                opt_num(large),
                opt_num(uniform),
                opt_bool(moderate_ok),
                opt_bool(large_ok),
                num(ratio),
                opt_bool(pass),
            ]);
        }
    }
    let mut r = Report::new(table);
    r.passed = failed == 0;
    r.summary = json!({"rows_checked": checked, "rows_failed": failed, "tolerances": tol});
    Ok(r)
}

fn regression(config: &ExperimentConfig, workers: Option<usize>) -> Result<Report> {
    let settings = config.regression.as_ref().expect("validated");
    let model = config.model()?;
    let opts = config.build_options();
    let mut table = Table::new(&[
        "n",
        "bandwidth",
        "sigma2",
        "rho2",
        "u_p",
        "x_u_np",
        "envelope_u_np",
        "x_loglog",
        "envelope_loglog",
        "rho_condition",
        "lil_frequency",
        "lil_stderr",
        "gaussian_reference",
    ]);
    let mut artifacts = Vec::new();
    let mut built = Vec::new();
    for &n in &config.n_values {
        let h = settings.bandwidth * (n as f64).powf(-settings.bandwidth_exponent);
        let design = RegressionDesign {
            region: config.region.region(n)?,
            design: settings.design.clone(),
            kernel: settings.kernel,
            bandwidth: h,
            eval_point: settings.eval_point.clone(),
        };
        let w = smoother_weight_table_with(&design, &config.field, &opts).map_err(context("smoother_weight_table", n))?;
        table_artifact(config, n, &w, &mut artifacts)?;
        built.push((n, h, w));
    }
    let lil = if config.n_samples > 0 {
        let ws: Vec<WeightTable> = built.iter().map(|b| b.2.clone()).collect();
        Some(lil_replication(&ws, &model, config.p, config.n_samples, config.seed, workers)?)
    } else {
        None
    };
    for (i, (n, h, w)) in built.iter().enumerate() {
        let agg = aggregates(w, &[2.0, config.p])?;
        let env = lil_envelope(&agg, config.p, w.sigma(), LilMode::UNp).map_err(context("lil_envelope", *n))?;
        let card = config.region.region(*n)?.cardinality();
        let ll = if card >= 3 { Some(lil_envelope(&agg, config.p, w.sigma(), LilMode::LogLog { n: card })?) } else { None };
        let row = lil.as_ref().map(|l| &l[i]);
        table.push(vec![
            json!(n),
            num(*h),
            num(w.sigma2()),
            num(agg.rho2),
            opt_num(agg.u(config.p)),
            num(env.x_sigma),
            num(env.value),
            opt_num(ll.map(|e| e.x_sigma)),
            opt_num(ll.map(|e| e.value)),
            opt_bool(ll.and_then(|e| e.rho_condition)),
            opt_num(row.map(|r| r.frequency)),
            opt_num(row.map(|r| r.stderr)),
            opt_num(row.map(|r| r.gaussian_reference)),
        ]);
    }
    let mut r = Report::new(table);
    r.artifacts = artifacts;
    Ok(r)
}

/// About four log-spaced integers per decade in `[m, n_max]`.
fn default_report_points(m: u64, n_max: u64) -> Vec<u64> {
    let mut pts = vec![m];
    let mut e = (m as f64).log10();
    loop {
        e += 0.25;
        let v = 10f64.powf(e).round() as u64;
        if v >= n_max {
            break;
        }
        if v > *pts.last().unwrap() {
            pts.push(v);
        }
    }
    if *pts.last().unwrap() < n_max {
        pts.push(n_max);
    }
    pts
}

fn davis_gut(config: &ExperimentConfig, workers: Option<usize>) -> Result<Report> {
    let d = config.davis_gut.as_ref().expect("validated");
    let spec = d.spec;
    let m = spec.psi_first_exceed();
    let mc_rows = if d.mc_n_values.is_empty() {
        Vec::new()
    } else {
        davis_gut_mc(&spec, &config.field, &d.mc_n_values, &config.model()?, config.n_samples, config.seed, &config.build_options(), workers)?
    };
    let mc: BTreeMap<u64, f64> = mc_rows.iter().map(|r| (r.n, r.mc_prob)).collect();
    let mut points: Vec<u64> = if d.report_points.is_empty() { default_report_points(m, d.n_max) } else { d.report_points.clone() };
    points.extend(mc.keys());
    points.sort_unstable();
    points.dedup();
    let rows = davis_gut_table(&spec, &points, &mc)?;
    let mut table = Table::new(&["n", "psi", "proxy_prob", "mc_prob", "term", "partial_sum"]);
    for r in &rows {
        table.push(vec![json!(r.n), num(r.psi), num(r.proxy_prob), opt_num(r.mc_prob), num(r.term), num(r.partial_sum)]);
    }
    let flatness = if mc_rows.len() >= 2 && mc_rows.iter().all(|r| r.ratio > 0.0) {
        let ns: Vec<f64> = mc_rows.iter().map(|r| r.n as f64).collect();
        let rs: Vec<f64> = mc_rows.iter().map(|r| r.ratio).collect();
        Some(log_slope(&ns, &rs)?)
    } else {
        None
    };
    let mut r = Report::new(table);
    r.summary = json!({
        "m": m,
        "converges": spec.classify().converges,
        "mc": mc_rows,
        "ratio_log_slope": flatness.map_or(Value::Null, num),
    });
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_points() {
        let p = default_report_points(3, 1000);
        assert_eq!(p.first(), Some(&3));
        assert_eq!(p.last(), Some(&1000));
        assert!(p.windows(2).all(|w| w[0] < w[1]));
    }
}
