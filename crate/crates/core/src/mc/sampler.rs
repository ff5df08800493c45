//! Exact per-replicate samplers for `S = sum b xi`.

use rand::RngCore;
use rand_distr::{Binomial, Distribution, StandardNormal};
use std::collections::BTreeMap;

use crate::innovations::{InnovationKind, InnovationModel};
use crate::rng::RngStream;

const SQRT3: f64 = 1.732_050_807_568_877_2;
/// Groups at most this large draw their binomial from packed random bits.
const POPCOUNT_MAX: u64 = 256;
/// Uniform groups at most this large are summed term by term.
const DIRECT_UNIFORM_MAX: u64 = 24;
/// Binary digits drawn exactly in the dyadic uniform-sum sampler.
const DYADIC_LEVELS: i32 = 10;

#[derive(Debug, Clone)]
enum Count {
    Bits(u64),
    Btpe(Binomial),
}

impl Count {
    fn new(k: u64) -> Self {
        if k <= POPCOUNT_MAX {
            Count::Bits(k)
        } else {
            Count::Btpe(Binomial::new(k, 0.5).expect("valid binomial"))
        }
    }

    /// `Binomial(k, 1/2)`.
    #[inline]
    fn draw(&self, rng: &mut RngStream) -> u64 {
        match self {
            Count::Bits(k) => {
                let mut left = *k;
                let mut c = 0u64;
                while left >= 64 {
                    c += rng.next_u64().count_ones() as u64;
                    left -= 64;
                }
                if left > 0 {
                    c += (rng.next_u64() >> (64 - left)).count_ones() as u64;
                }
                c
            }
            Count::Btpe(b) => b.sample(rng),
        }
    }
}

#[derive(Debug, Clone)]
struct Group {
    b: f64,
    k: u64,
    count: Count,
}

#[derive(Debug, Clone)]
enum Plan {
    /// `sqrt(sum b^2) Z`.
    Gaussian { scale: f64 },
    Rademacher { singles: Vec<f64>, groups: Vec<Group> },
    Uniform { groups: Vec<Group> },
    Atoms { weights: Vec<f64> },
    TruncatedAtoms { weights: Vec<f64>, cap: f64 },
}

/// Draws replicates of `S = sum b xi` (or of the truncated sum
/// `sum bxi 1{bxi <= y}`) exactly in distribution, using sufficient
/// reductions where the law allows them.
#[derive(Debug, Clone)]
pub struct SumSampler {
    plan: Plan,
    model: InnovationModel,
}

impl SumSampler {
    pub fn new(weights: impl Iterator<Item = f64>, model: &InnovationModel, truncation: Option<f64>) -> Self {
        let weights: Vec<f64> = weights.filter(|b| *b != 0.0).collect();
        let plan = if let Some(cap) = truncation {
            Plan::TruncatedAtoms { weights, cap }
        } else {
            match model.kind() {
                InnovationKind::Gaussian => Plan::Gaussian { scale: weights.iter().map(|b| b * b).sum::<f64>().sqrt() },
                InnovationKind::Rademacher => {
                    let groups = group(&weights);
                    let (singles, groups): (Vec<Group>, Vec<Group>) = groups.into_iter().partition(|g| g.k == 1);
                    Plan::Rademacher { singles: singles.into_iter().map(|g| g.b).collect(), groups }
                }
                InnovationKind::UniformCentered => Plan::Uniform { groups: group(&weights) },
                _ => Plan::Atoms { weights },
            }
        };
        SumSampler { plan, model: model.clone() }
    }

    #[inline]
    pub fn draw(&self, rng: &mut RngStream) -> f64 {
        match &self.plan {
            Plan::Gaussian { scale } => {
                let z: f64 = StandardNormal.sample(rng);
                scale * z
            }
            Plan::Rademacher { singles, groups } => {
                let mut s = 0.0;
                for chunk in singles.chunks(64) {
                    let bits = rng.next_u64();
                    for (i, b) in chunk.iter().enumerate() {
                        s += if (bits >> i) & 1 == 1 { *b } else { -*b };
                    }
                }
                for g in groups {
                    let c = g.count.draw(rng) as f64;
                    s += g.b * (2.0 * c - g.k as f64);
                }
                s
            }
            Plan::Uniform { groups } => {
                let mut s = 0.0;
                for g in groups {
                    s += g.b * uniform_sum(g, rng);
                }
                s
            }
            Plan::Atoms { weights } => weights.iter().map(|b| b * self.model.sample_one(rng)).sum(),
            Plan::TruncatedAtoms { weights, cap } => weights
                .iter()
                .map(|b| {
                    let v = b * self.model.sample_one(rng);
                    if v <= *cap {
                        v
                    } else {
                        0.0
                    }
                })
                .sum(),
        }
    }
}

/// Sum of `k` i.i.d. uniforms on `[-sqrt 3, sqrt 3]`.
///
/// For large `k`, `sum U_i` with `U_i` uniform on `[0, 1)` is written through
/// the binary digits of the `U_i`: the `j`-th digits contribute
/// `2^-j Binomial(k, 1/2)`, independently across `j`. The first
/// `DYADIC_LEVELS` digit sums are drawn exactly and the remainder, itself
/// `2^-J` times a sum of `k` uniforms, is replaced by its normal
/// approximation with matched mean and variance.
#[inline]
fn uniform_sum(g: &Group, rng: &mut RngStream) -> f64 {
    if g.k <= DIRECT_UNIFORM_MAX {
        let mut s = 0.0;
        for _ in 0..g.k {
            s += 2.0 * rng.uniform() - 1.0;
        }
        return SQRT3 * s;
    }
    let mut u = 0.0;
    let mut scale = 0.5;
    for _ in 0..DYADIC_LEVELS {
        u += scale * g.count.draw(rng) as f64;
        scale *= 0.5;
    }
    let kf = g.k as f64;
    let z: f64 = StandardNormal.sample(rng);
    let rem_scale = (2.0f64).powi(-DYADIC_LEVELS);
    u += rem_scale * (0.5 * kf + (kf / 12.0).sqrt() * z);
    SQRT3 * (2.0 * u - kf)
}

fn group(weights: &[f64]) -> Vec<Group> {
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for b in weights {
        *counts.entry(b.to_bits()).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .map(|(bits, k)| Group { b: f64::from_bits(bits), k, count: Count::new(k) })
        .collect()
}
