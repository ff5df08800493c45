use serde::{Deserialize, Serialize};

use super::coeffs::CoefficientField;
use super::region::IndexRegion;
use super::table::WeightTable;
use crate::error::{invalid, Result};

/// `D_t = sum |b|^t` and `U_t = D_2^(-t/2) D_t` for one exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSum {
    pub t: f64,
    pub d: f64,
    pub u: f64,
    /// Bound on the relative error of `d` caused by truncation.
    pub d_rel_err: f64,
    /// Bound on the relative error of `u` caused by truncation.
    pub u_rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightAggregates {
    pub sigma2: f64,
    /// Stored `D_2`, the normalizer of every `U_t`.
    pub d2: f64,
    /// `max b^2 / D_2`.
    pub rho2: f64,
    pub entries: Vec<PowerSum>,
}

impl WeightAggregates {
    pub fn get(&self, t: f64) -> Option<&PowerSum> {
        self.entries.iter().find(|e| e.t == t)
    }

    pub fn d(&self, t: f64) -> Option<f64> {
        self.get(t).map(|e| e.d)
    }

    pub fn u(&self, t: f64) -> Option<f64> {
        self.get(t).map(|e| e.u)
    }

    pub fn rho(&self) -> f64 {
        self.rho2.sqrt()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }
}

pub fn aggregates(w: &WeightTable, exponents: &[f64]) -> Result<WeightAggregates> {
    if exponents.is_empty() {
        return Err(invalid("at least one exponent is required"));
    }
    if let Some(t) = exponents.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(invalid(format!("exponents must be positive, got {t}")));
    }
    let d2 = w.stored_mass();
    let e2 = w.power_tail_bound(2.0) / d2;
    let entries = exponents
        .iter()
        .map(|&t| {
            let d = w.power_sum(t);
            let d_rel_err = if t == 2.0 { e2 } else { w.power_tail_bound(t) / d };
            let u = if t == 2.0 { 1.0 } else { d2.powf(-t / 2.0) * d };
            let u_rel_err = if t == 2.0 { 0.0 } else { d_rel_err.max(1.0 - (1.0 + e2).powf(-t / 2.0)) };
            PowerSum { t, d, u, d_rel_err, u_rel_err }
        })
        .collect();
    let m = w.max_abs();
    Ok(WeightAggregates { sigma2: w.sigma2(), d2, rho2: m * m / d2, entries })
}

/// Computable upper bounds on `rho_n = max |b| / sigma_n`.
pub fn rho_bounds(field: &CoefficientField, region: &IndexRegion, sigma: f64) -> Vec<(String, f64)> {
    if !(sigma > 0.0) {
        return Vec::new();
    }
    let mut out = Vec::new();
    if let Some(a1) = field.l1_norm() {
        out.push(("l1".to_string(), a1 / sigma));
    }
    let card = region.cardinality() as f64;
    for u in [1.25, 1.5, 1.75, 2.0] {
        if let Some(norm) = field.lu_norm(u) {
            let v = u / (u - 1.0);
            out.push((format!("holder_u{u}"), norm * card.powf(1.0 / v) / sigma));
        }
    }
    out
}
