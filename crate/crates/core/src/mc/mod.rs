//! Monte Carlo tail estimation, the enumeration oracle and LIL replication.

mod enumerate;
mod lil;
mod sampler;

pub use enumerate::{enumerate_sum_tail, enumerate_tail, enumerate_tail_two_sided, MAX_ENUMERATION_ATOMS};
pub use lil::{lil_replication, LilRow};
pub use sampler::SumSampler;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::field::WeightTable;
use crate::innovations::InnovationModel;
use crate::rng::RngStream;

/// Replicates per random substream.
pub const BLOCK_SIZE: u64 = 8192;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub n_samples: u64,
    pub seed: u64,
    #[serde(default)]
    pub two_sided: bool,
    /// Worker threads; `None` uses the ambient rayon pool. Never affects
    /// the result.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Simulate `sum bxi 1{bxi <= y}` instead of `S`.
    #[serde(default)]
    pub truncation: Option<f64>,
    /// Also tally `S + N(0, T)` with `T` the certified remainder variance.
    #[serde(default)]
    pub remainder_inflation: bool,
}

impl SimOptions {
    pub fn new(n_samples: u64, seed: u64) -> Self {
        SimOptions { n_samples, seed, two_sided: false, workers: None, truncation: None, remainder_inflation: false }
    }

    pub fn two_sided(mut self, yes: bool) -> Self {
        self.two_sided = yes;
        self
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn truncated_at(mut self, y: f64) -> Self {
        self.truncation = Some(y);
        self
    }
}

/// Estimated `P(S >= x)` (or `P(|S| >= x)`) from shared replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub n_label: String,
    pub x_sigma: f64,
    pub x_abs: f64,
    pub count: u64,
    pub p_hat: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub two_sided: bool,
    /// Estimate with the truncated remainder added as independent noise.
    pub p_hat_inflated: Option<f64>,
}

impl TailEstimate {
    /// Standard error under a hypothesized probability `p`.
    pub fn stderr_under(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.n_samples as f64).sqrt()
    }
}

/// Thresholds in units of `sigma_n`.
pub fn simulate_tail(w: &WeightTable, model: &InnovationModel, thresholds: &[f64], opts: &SimOptions) -> Result<Vec<TailEstimate>> {
    let sigma = w.sigma();
    let abs: Vec<f64> = thresholds.iter().map(|x| x * sigma).collect();
    let mut out = simulate_tail_abs(w, model, &abs, opts)?;
    for (e, x) in out.iter_mut().zip(thresholds) {
        e.x_sigma = *x;
    }
    Ok(out)
}

/// Thresholds in absolute units.
pub fn simulate_tail_abs(
    w: &WeightTable,
    model: &InnovationModel,
    thresholds: &[f64],
    opts: &SimOptions,
) -> Result<Vec<TailEstimate>> {
    if opts.n_samples == 0 {
        return Err(invalid("n_samples must be at least 1"));
    }
    if thresholds.iter().any(|x| x.is_nan()) || thresholds.windows(2).any(|p| p[0] > p[1]) {
        return Err(invalid("thresholds must be sorted ascending"));
    }
    if let Some(y) = opts.truncation {
        if !(y > 0.0) {
            return Err(invalid("truncation level must be positive"));
        }
    }
    let sampler = SumSampler::new(w.values().iter().copied(), model, opts.truncation);
    let inflation = if opts.remainder_inflation && w.tail_bound() > 0.0 { Some(w.tail_bound().sqrt()) } else { None };
    let counts = run_blocks(opts, thresholds.len(), inflation.is_some(), |rng| {
        let s = sampler.draw(rng);
        let s_infl = inflation.map(|sd| {
            let z: f64 = StandardNormal.sample(rng);
            s + sd * z
        });
        if opts.two_sided {
            (s.abs(), s_infl.map(f64::abs))
        } else {
            (s, s_infl)
        }
    }, thresholds)?;
    let n = opts.n_samples;
    let sigma = w.sigma();
    Ok(thresholds
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let p = counts.main[i] as f64 / n as f64;
            TailEstimate {
                n_label: w.n_label().to_string(),
                x_sigma: x / sigma,
                x_abs: x,
                count: counts.main[i],
                p_hat: p,
                stderr: (p * (1.0 - p) / n as f64).sqrt(),
                n_samples: n,
                seed: opts.seed,
                two_sided: opts.two_sided,
                p_hat_inflated: counts.inflated.as_ref().map(|c| c[i] as f64 / n as f64),
            }
        })
        .collect())
}

struct Counts {
    main: Vec<u64>,
    inflated: Option<Vec<u64>>,
}

/// Runs `n_samples` replicates in fixed blocks, block `i` on substream
/// `(seed, i)`, and returns exceedance counts `#{v >= thresholds[j]}`.
fn run_blocks<F>(opts: &SimOptions, m: usize, with_inflated: bool, draw: F, thresholds: &[f64]) -> Result<Counts>
where
    F: Fn(&mut RngStream) -> (f64, Option<f64>) + Sync,
{
    let n_blocks = opts.n_samples.div_ceil(BLOCK_SIZE);
    let block = |bi: u64| -> (Vec<u64>, Vec<u64>) {
        let mut rng = RngStream::new(opts.seed, bi);
        let reps = BLOCK_SIZE.min(opts.n_samples - bi * BLOCK_SIZE);
        let mut hist = vec![0u64; m + 1];
        let mut hist_i = vec![0u64; if with_inflated { m + 1 } else { 0 }];
        for _ in 0..reps {
            let (v, vi) = draw(&mut rng);
            hist[thresholds.partition_point(|t| *t <= v)] += 1;
            if let Some(vi) = vi {
                hist_i[thresholds.partition_point(|t| *t <= vi)] += 1;
            }
        }
        (hist, hist_i)
    };
    let merge = |mut a: (Vec<u64>, Vec<u64>), b: (Vec<u64>, Vec<u64>)| {
        for (x, y) in a.0.iter_mut().zip(&b.0) {
            *x += y;
        }
        for (x, y) in a.1.iter_mut().zip(&b.1) {
            *x += y;
        }
        a
    };
    let empty = || (vec![0u64; m + 1], vec![0u64; if with_inflated { m + 1 } else { 0 }]);
    let run = || (0..n_blocks).into_par_iter().map(block).reduce(empty, merge);
    let (hist, hist_i) = match opts.workers {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| invalid(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    let exceed = |h: &[u64]| {
        let mut c = vec![0u64; m];
        let mut acc = 0u64;
        for j in (0..m).rev() {
            acc += h[j + 1];
            c[j] = acc;
        }
        c
    };
    Ok(Counts { main: exceed(&hist), inflated: if with_inflated { Some(exceed(&hist_i)) } else { None } })
}
