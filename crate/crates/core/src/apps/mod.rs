//! Kernel-regression smoothers and Davis–Gut series diagnostics.

pub mod davis_gut;
pub mod regression;

pub use davis_gut::{
    davis_gut_classify, davis_gut_mc, davis_gut_table, davis_gut_term, psi, psi_first_exceed, series_partial,
    write_davis_gut_csv, Classification, Corollary, DavisGutRow, DavisGutSpec, DgMcRow, DgWeight,
};
pub use regression::{
    lil_envelope, regression_weights, smoother_weight_table, smoother_weight_table_with, DesignPoints, Kernel, LilEnvelope,
    LilMode, RegressionDesign,
};

use crate::error::{invalid, Result};

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(invalid("a log-log slope needs at least two paired points"));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(invalid("log-log slope needs positive finite values"));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(invalid("log-log slope needs distinct x values"));
    }
    Ok(sxy / sxx)
}
