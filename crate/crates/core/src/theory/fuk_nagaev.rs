use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{invalid, Result};
use crate::field::WeightTable;
use crate::innovations::InnovationModel;

/// Fuk-Nagaev envelope for `P(sum (b xi) 1{b xi <= y} >= x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FukNagaev {
    pub value: f64,
    pub exponential_term: f64,
    pub power_term: f64,
    /// `sum E[(b xi)^m ; 0 < b xi < y]`.
    pub a: f64,
    /// `sum E[(b xi)^2 ; b xi < y]`.
    pub b2: f64,
}

/// `exp(-alpha^2 x^2 / (2 e^m B^2)) + (A / (beta x y^(m-1)))^(beta x / y)`
/// with `beta = m / (m + 2)` and `alpha = 2 / (m + 2)`.
pub fn fuk_nagaev_bound(w: &WeightTable, model: &InnovationModel, x_abs: f64, y: f64, m: f64) -> Result<FukNagaev> {
    if !(x_abs > 0.0 && y > 0.0) {
        return Err(invalid("Fuk-Nagaev bound needs x > 0 and y > 0"));
    }
    if !(m >= 2.0 && m.is_finite()) {
        return Err(invalid(format!("Fuk-Nagaev order must be at least 2, got {m}")));
    }
    let mut groups: BTreeMap<u64, u64> = BTreeMap::new();
    for b in w.nonzero() {
        *groups.entry(b.to_bits()).or_insert(0) += 1;
    }
    let (mut a, mut b2) = (0.0, 0.0);
    for (bits, k) in groups {
        let b = f64::from_bits(bits);
        let k = k as f64;
        let z = y / b;
        if b > 0.0 {
            a += k * b.powf(m) * model.abs_moment(m, 0.0, z)?;
            b2 += k * b * b * model.truncated_moment(2.0, f64::NEG_INFINITY, z)?;
        } else {
            a += k * b.abs().powf(m) * model.abs_moment(m, z, 0.0)?;
            b2 += k * b * b * model.truncated_moment(2.0, z, f64::INFINITY)?;
        }
    }
    let beta = m / (m + 2.0);
    let alpha = 2.0 / (m + 2.0);
    let exponential_term = (-alpha * alpha * x_abs * x_abs / (2.0 * m.exp() * b2)).exp();
    let power_term = if a > 0.0 { (a / (beta * x_abs * y.powf(m - 1.0))).powf(beta * x_abs / y) } else { 0.0 };
    Ok(FukNagaev { value: exponential_term + power_term, exponential_term, power_term, a, b2 })
}
