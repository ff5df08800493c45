use crate::error::{Error, Result};
use crate::field::WeightTable;
use crate::innovations::InnovationModel;

/// Largest number of nonzero weights the oracle accepts.
pub const MAX_ENUMERATION_ATOMS: usize = 24;
const MAX_STATES: f64 = (1u64 << 24) as f64;

/// Exact `P(S >= threshold)` for a discrete innovation law.
pub fn enumerate_tail(w: &WeightTable, model: &InnovationModel, threshold: f64) -> Result<f64> {
    enumerate_sum_tail(&terms(w, model)?, threshold)
}

/// Exact `P(|S| >= threshold)`, `threshold > 0`.
pub fn enumerate_tail_two_sided(w: &WeightTable, model: &InnovationModel, threshold: f64) -> Result<f64> {
    let t = terms(w, model)?;
    let upper = enumerate_sum_tail(&t, threshold)?;
    let neg: Vec<Vec<(f64, f64)>> = t.iter().map(|d| d.iter().map(|&(v, p)| (-v, p)).collect()).collect();
    Ok(upper + enumerate_sum_tail(&neg, threshold)?)
}

fn terms(w: &WeightTable, model: &InnovationModel) -> Result<Vec<Vec<(f64, f64)>>> {
    let atoms = model
        .atoms()
        .ok_or_else(|| Error::UnsupportedModel(format!("{} has no finite support", model.name())))?;
    let nz = w.nonzero_count();
    if nz > MAX_ENUMERATION_ATOMS {
        return Err(Error::TooManyAtoms { atoms: nz, cap: MAX_ENUMERATION_ATOMS });
    }
    Ok(w.nonzero().map(|b| atoms.iter().map(|&(v, p)| (b * v, p)).collect()).collect())
}

/// `P(sum_i T_i >= threshold)` for independent discrete terms, each given
/// as `(value, probability)` pairs. Splits the terms in two halves,
/// enumerates each half's sums, and matches them with a sorted sweep.
pub fn enumerate_sum_tail(terms: &[Vec<(f64, f64)>], threshold: f64) -> Result<f64> {
    let states: f64 = terms.iter().map(|d| d.len() as f64).product();
    if terms.len() > MAX_ENUMERATION_ATOMS || states > MAX_STATES {
        return Err(Error::TooManyAtoms { atoms: terms.len(), cap: MAX_ENUMERATION_ATOMS });
    }
    let (left, right) = terms.split_at(terms.len() / 2);
    let a = half_sums(left);
    let mut b = half_sums(right);
    b.sort_by(|x, y| x.0.total_cmp(&y.0));
    // suffix[i] = total probability of b[i..]
    let mut suffix = vec![0.0; b.len() + 1];
    for i in (0..b.len()).rev() {
        suffix[i] = suffix[i + 1] + b[i].1;
    }
    let mut total = 0.0;
    for &(sa, pa) in &a {
        let i = b.partition_point(|&(sb, _)| sa + sb < threshold);
        total += pa * suffix[i];
    }
    Ok(total.min(1.0))
}

fn half_sums(terms: &[Vec<(f64, f64)>]) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 1.0)];
    for d in terms {
        let mut next = Vec::with_capacity(out.len() * d.len());
        for &(s, p) in &out {
            for &(v, q) in d {
                next.push((s + v, p * q));
            }
        }
        out = next;
    }
    out
}
