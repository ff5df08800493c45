use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::normal::normal_sf;
use crate::error::{invalid, Error, Result};
use crate::field::{aggregates, WeightAggregates, WeightTable};
use crate::innovations::InnovationModel;

/// Default relative margin above the strict lower bound on `C_t`.
pub const DEFAULT_CT_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Moderate,
    Large,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dominant {
    Gaussian,
    Heavy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationPrediction {
    /// Threshold in units of `sigma_n`.
    pub x: f64,
    pub x_abs: f64,
    pub regime: Regime,
    pub value: f64,
    /// `1 - Phi(x)`.
    pub gaussian_part: f64,
    /// `x^-t sum b^t h(x / b)`, switching to the exact survival for terms
    /// with `x / b` below the tail threshold.
    pub heavy_part: Option<f64>,
    /// `sum P(b xi >= x)`.
    pub exact_sum: Option<f64>,
    pub moderate_ok: Option<bool>,
    pub large_ok: Option<bool>,
    pub dominant: Dominant,
}

/// `x^2 <= 2 ln U_np^-1` and `x >= C_t sqrt(ln U_nt^-1)` thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityRanges {
    pub x_moderate_max: f64,
    pub x_large_min: f64,
    pub c_t: f64,
    /// Whether every `x` is covered by at least one of the two ranges.
    pub overlap: bool,
    /// Set when either `U` is within rounding of 1 and both ranges collapse.
    pub degenerate: bool,
}

/// `e^(t/2) (t + 2) / sqrt 2 * (1 + margin)`.
pub fn c_t(t: f64, margin: f64) -> f64 {
    (t / 2.0).exp() * (t + 2.0) / std::f64::consts::SQRT_2 * (1.0 + margin)
}

fn u_of(agg: &WeightAggregates, e: f64) -> Result<f64> {
    let u = agg.u(e).ok_or_else(|| invalid(format!("aggregates lack exponent {e}")))?;
    if !(u < 1.0) {
        return Err(Error::InvalidRegime(format!("U_n{e} = {u} is not below 1")));
    }
    Ok(u)
}

pub fn validity_ranges(agg: &WeightAggregates, p: f64, t: f64, margin: f64) -> Result<ValidityRanges> {
    let up = u_of(agg, p)?;
    let ut = u_of(agg, t)?;
    let ct = c_t(t, margin);
    let x_moderate_max = (2.0 * (1.0 / up).ln()).sqrt();
    let x_large_min = ct * (1.0 / ut).ln().sqrt();
    Ok(ValidityRanges {
        x_moderate_max,
        x_large_min,
        c_t: ct,
        overlap: x_large_min <= x_moderate_max,
        degenerate: (1.0 / up).ln() < 1e-12 || (1.0 / ut).ln() < 1e-12,
    })
}

/// `1 - Phi(x)` with the moderate-range flag.
pub fn moderate_prediction(x: f64, agg: &WeightAggregates, p: f64) -> Result<DeviationPrediction> {
    if !(x >= 0.0) {
        return Err(invalid("moderate prediction needs x >= 0"));
    }
    if !(p > 2.0) {
        return Err(invalid("moment order p must exceed 2"));
    }
    let u = u_of(agg, p)?;
    let g = normal_sf(x);
    Ok(DeviationPrediction {
        x,
        x_abs: x * agg.sigma(),
        regime: Regime::Moderate,
        value: g,
        gaussian_part: g,
        heavy_part: None,
        exact_sum: None,
        moderate_ok: Some(x * x <= 2.0 * (1.0 / u).ln()),
        large_ok: None,
        dominant: Dominant::Gaussian,
    })
}

/// Positive weights grouped by value, with numerical-noise negatives
/// dropped and genuine negatives rejected.
fn positive_groups(w: &WeightTable) -> Result<Vec<(f64, u64)>> {
    let noise = 1e-12 * w.max_abs();
    let mut groups: BTreeMap<u64, u64> = BTreeMap::new();
    for (r, s, b) in w.iter() {
        if b > noise {
            *groups.entry(b.to_bits()).or_insert(0) += 1;
        } else if b < -noise {
            return Err(Error::NegativeWeight { r, s, value: b });
        }
    }
    Ok(groups.into_iter().map(|(k, c)| (f64::from_bits(k), c)).collect())
}

/// `(sum P(b xi >= x), x^-t sum b^t h(x/b))` over positive weights.
fn heavy_sums(groups: &[(f64, u64)], model: &InnovationModel, x_abs: f64) -> Result<(f64, f64)> {
    let tail = model
        .tail()
        .ok_or_else(|| Error::UnsupportedModel(format!("{} has no regularly varying tail", model.name())))?;
    let mut exact = 0.0;
    let mut hform = 0.0;
    for &(b, k) in groups {
        let z = x_abs / b;
        let s = model.survival(z);
        exact += k as f64 * s;
        hform += k as f64 * if z >= tail.x0 { x_abs.powf(-tail.t) * b.powf(tail.t) * tail.h.value(z) } else { s };
    }
    Ok((exact, hform))
}

/// `sum P(b xi >= x)` for a threshold in absolute units.
pub fn large_prediction(x_abs: f64, w: &WeightTable, model: &InnovationModel, margin: f64) -> Result<DeviationPrediction> {
    let tail = model
        .tail()
        .ok_or_else(|| Error::UnsupportedModel(format!("{} has no regularly varying tail", model.name())))?;
    if !(x_abs > 0.0) {
        return Err(invalid("large deviation threshold must be positive"));
    }
    let groups = positive_groups(w)?;
    let agg = aggregates(w, &[tail.t])?;
    let ut = u_of(&agg, tail.t)?;
    let (exact, hform) = heavy_sums(&groups, model, x_abs)?;
    let x = x_abs / w.sigma();
    let g = normal_sf(x);
    Ok(DeviationPrediction {
        x,
        x_abs,
        regime: Regime::Large,
        value: exact.min(1.0),
        gaussian_part: g,
        heavy_part: Some(hform),
        exact_sum: Some(exact),
        moderate_ok: None,
        large_ok: Some(x >= c_t(tail.t, margin) * (1.0 / ut).ln().sqrt()),
        dominant: if hform >= g { Dominant::Heavy } else { Dominant::Gaussian },
    })
}

/// `x^-t sum b^t h(x/b) + 1 - Phi(x)`, threshold in units of `sigma_n`.
pub fn uniform_prediction(
    x: f64,
    w: &WeightTable,
    agg: &WeightAggregates,
    model: &InnovationModel,
    p: f64,
    margin: f64,
) -> Result<DeviationPrediction> {
    if !(x > 0.0) {
        return Err(invalid("uniform prediction needs x > 0"));
    }
    let g = normal_sf(x);
    let x_abs = x * w.sigma();
    let Some(tail) = model.tail() else {
        let up = u_of(agg, p)?;
        return Ok(DeviationPrediction {
            x,
            x_abs,
            regime: Regime::Uniform,
            value: g,
            gaussian_part: g,
            heavy_part: None,
            exact_sum: None,
            moderate_ok: Some(x * x <= 2.0 * (1.0 / up).ln()),
            large_ok: None,
            dominant: Dominant::Gaussian,
        });
    };
    if !(p > 2.0 && p < tail.t) {
        return Err(invalid(format!("p must lie in (2, t) = (2, {}), got {p}", tail.t)));
    }
    let groups = positive_groups(w)?;
    let up = u_of(agg, p)?;
    let ut = match agg.u(tail.t) {
        Some(_) => u_of(agg, tail.t)?,
        None => u_of(&aggregates(w, &[tail.t])?, tail.t)?,
    };
    let (exact, hform) = heavy_sums(&groups, model, x_abs)?;
    Ok(DeviationPrediction {
        x,
        x_abs,
        regime: Regime::Uniform,
        value: (hform + g).min(1.0),
        gaussian_part: g,
        heavy_part: Some(hform),
        exact_sum: Some(exact),
        moderate_ok: Some(x * x <= 2.0 * (1.0 / up).ln()),
        large_ok: Some(x >= c_t(tail.t, margin) * (1.0 / ut).ln().sqrt()),
        dominant: if hform >= g { Dominant::Heavy } else { Dominant::Gaussian },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{build_weights, CoefficientField, IndexRegion};
    use crate::slowvar::SlowlyVaryingFn;

    fn identity(n: i64) -> WeightTable {
        build_weights(&CoefficientField::delta(), &IndexRegion::square(n).unwrap(), 1e-6).unwrap()
    }

    #[test]
    fn c3_value() {
        assert!((c_t(3.0, 0.0) - 15.845).abs() < 1e-3);
    }

    #[test]
    fn moderate_examples() {
        let agg = aggregates(&identity(10), &[3.0, 4.0]).unwrap();
        let p = moderate_prediction(3.0, &agg, 4.0).unwrap();
        assert_eq!(p.moderate_ok, Some(true));
        assert!((p.value - 0.001_349_898).abs() < 1e-9);
        assert_eq!(moderate_prediction(3.2, &agg, 4.0).unwrap().moderate_ok, Some(false));
        assert_eq!(moderate_prediction(0.0, &agg, 4.0).unwrap().value, 0.5);
        let v = validity_ranges(&agg, 4.0, 3.0, DEFAULT_CT_MARGIN).unwrap();
        assert!((v.x_moderate_max - 3.0349).abs() < 1e-4);
        assert!((v.x_large_min - 25.24).abs() < 0.01);
        assert!(!v.overlap);
    }

    #[test]
    fn single_weight_is_not_a_valid_regime() {
        let w = WeightTable::from_weights(&[1.0]).unwrap();
        let agg = aggregates(&w, &[4.0]).unwrap();
        assert!(matches!(moderate_prediction(1.0, &agg, 4.0), Err(Error::InvalidRegime(_))));
    }

    #[test]
    fn two_equal_weights_closed_form() {
        let m = InnovationModel::hybrid(3.0, SlowlyVaryingFn::default(), 0.5, 1.0).unwrap();
        let tail = m.tail().unwrap();
        let b = std::f64::consts::FRAC_1_SQRT_2;
        let w = WeightTable::from_weights(&[b, b]).unwrap();
        let x = 2.0 * tail.x0;
        let p = large_prediction(x, &w, &m, DEFAULT_CT_MARGIN).unwrap();
        let expect = 2.0 * tail.h.value(1.0) * b.powi(3) / x.powi(3);
        assert!((p.value / expect - 1.0).abs() < 1e-12);
        assert!((p.heavy_part.unwrap() / p.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_weights() {
        let m = InnovationModel::student_like(3.0).unwrap();
        let w = WeightTable::from_weights(&[1.0, -0.5]).unwrap();
        assert!(matches!(large_prediction(2.0, &w, &m, 0.05), Err(Error::NegativeWeight { .. })));
    }

    #[test]
    fn uniform_is_gaussian_dominated_at_small_x() {
        let w = identity(32);
        let agg = aggregates(&w, &[2.5, 3.0]).unwrap();
        let m = InnovationModel::hybrid(3.0, SlowlyVaryingFn::default(), 0.99999, 1.0).unwrap();
        let p = uniform_prediction(1.0, &w, &agg, &m, 2.5, 0.05).unwrap();
        assert_eq!(p.dominant, Dominant::Gaussian);
        assert!((p.value - 0.158_655).abs() < 1e-5);
        let far = uniform_prediction(12.0, &w, &agg, &m, 2.5, 0.05).unwrap();
        assert_eq!(far.dominant, Dominant::Heavy);
    }
}
