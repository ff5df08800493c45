use serde::{Deserialize, Serialize};

use super::{simulate_tail_abs, SimOptions};
use crate::error::{Error, Result};
use crate::field::{aggregates, WeightTable};
use crate::innovations::InnovationModel;
use crate::theory::normal::normal_sf;

/// Exceedance frequency of `|S_n| > sigma_n sqrt(2 ln U_np^-1)` for one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LilRow {
    pub n_label: String,
    pub u_np: f64,
    /// Envelope in units of `sigma_n`.
    pub x_sigma: f64,
    pub x_abs: f64,
    pub frequency: f64,
    pub stderr: f64,
    pub n_reps: u64,
    /// `2 (1 - Phi(x))`, the Gaussian two-sided reference.
    pub gaussian_reference: f64,
}

/// Runs each table on its own seed `seed + index`, so rows are independent.
pub fn lil_replication(
    tables: &[WeightTable],
    model: &InnovationModel,
    p: f64,
    n_reps: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<Vec<LilRow>> {
    if !(p > 2.0) {
        return Err(crate::error::invalid(format!("moment order p must exceed 2, got {p}")));
    }
    let mut rows = Vec::with_capacity(tables.len());
    for (i, w) in tables.iter().enumerate() {
        let u = aggregates(w, &[p])?.u(p).expect("requested exponent");
        if !(u < 1.0) {
            return Err(Error::InvalidRegime(format!("U_np = {u} for {}; the envelope needs U_np < 1", w.n_label())));
        }
        let x = (2.0 * (1.0 / u).ln()).sqrt();
        let x_abs = x * w.sigma();
        let opts = SimOptions { workers, ..SimOptions::new(n_reps, seed.wrapping_add(i as u64)).two_sided(true) };
        let est = simulate_tail_abs(w, model, &[x_abs.next_up()], &opts)?.remove(0);
        rows.push(LilRow {
            n_label: w.n_label().to_string(),
            u_np: u,
            x_sigma: x,
            x_abs,
            frequency: est.p_hat,
            stderr: est.stderr,
            n_reps,
            gaussian_reference: 2.0 * normal_sf(x),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::enumerate_tail_two_sided;

    #[test]
    fn single_weight_is_invalid() {
        let w = WeightTable::from_weights(&[1.0]).unwrap();
        assert!(matches!(
            lil_replication(&[w], &InnovationModel::gaussian(), 4.0, 10, 1, None),
            Err(Error::InvalidRegime(_))
        ));
    }

    #[test]
    fn rademacher_four_weights_matches_enumeration() {
        let w = WeightTable::from_weights(&[1.0; 4]).unwrap();
        let rows = lil_replication(std::slice::from_ref(&w), &InnovationModel::rademacher(), 4.0, 200_000, 7, None).unwrap();
        let r = &rows[0];
        assert!((r.x_sigma - (2.0 * 4f64.ln()).sqrt()).abs() < 1e-12);
        let exact = enumerate_tail_two_sided(&w, &InnovationModel::rademacher(), r.x_abs.next_up()).unwrap();
        assert_eq!(exact, 0.125);
        assert!((r.frequency - exact).abs() < 5.0 * (exact * (1.0 - exact) / 200_000.0).sqrt());
    }
}
