//! Davis–Gut series diagnostics: the `Psi` clock, series terms, analytic
//! convergence classification and Monte Carlo proportionality checks.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

use super::log_slope;
use crate::error::{invalid, Result};
use crate::field::{build_weights_with, csv_error, BuildOptions, CoefficientField, IndexRegion};
use crate::innovations::InnovationModel;
use crate::mc::{simulate_tail_abs, SimOptions};
use crate::quad::integrate_log;

/// The weight function `h` on `[c, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DgWeight {
    /// `h = 1`.
    One,
    /// `h = (ln t)^r / (1 - r)`, `0 <= r < 1`.
    LogPow { r: f64 },
    /// `h = ln t`.
    Log,
}

fn default_c() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DavisGutSpec {
    pub weight: DgWeight,
    #[serde(default = "default_c")]
    pub c: f64,
    pub epsilon: f64,
    /// Extra series factor `(ln Psi(n))^-b`; `ln Psi = ln ln n` when `h = 1`.
    #[serde(default)]
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Corollary {
    /// `sum 1/(n (ln ln n)^b) P(|S_n| > (1+eps) sigma_n sqrt(2 ln ln n))`.
    C31 { b: f64 },
    /// `sum 1/(n (ln n)^r) P(|S_n| > (1+eps) sigma_n sqrt(2 (1-r) ln ln n))`.
    C32 { r: f64 },
    /// `sum 1/(n ln n) P(|S_n| > (1+eps) sigma_n sqrt(2 ln ln ln n))`.
    C33,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub converges: bool,
}

impl DavisGutSpec {
    pub fn new(weight: DgWeight, c: f64, epsilon: f64) -> Result<Self> {
        let s = DavisGutSpec { weight, c, epsilon, b: 0.0 };
        s.validate()?;
        Ok(s)
    }

    pub fn with_b(mut self, b: f64) -> Self {
        self.b = b;
        self
    }

    /// The `h`, `c` and `b` that turn the general series into a corollary's.
    pub fn for_corollary(corollary: Corollary, epsilon: f64) -> Result<Self> {
        match corollary {
            Corollary::C31 { b } => Ok(DavisGutSpec::new(DgWeight::One, 1.0, epsilon)?.with_b(b)),
            Corollary::C32 { r } => DavisGutSpec::new(DgWeight::LogPow { r }, 1.0, epsilon),
            Corollary::C33 => DavisGutSpec::new(DgWeight::Log, std::f64::consts::E, epsilon),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c >= 1.0 && self.c.is_finite()) {
            return Err(invalid(format!("lower limit c must be at least 1, got {}", self.c)));
        }
        if !self.epsilon.is_finite() || !self.b.is_finite() {
            return Err(invalid("epsilon and b must be finite"));
        }
        match self.weight {
            DgWeight::LogPow { r } if !(0.0..1.0).contains(&r) => Err(invalid(format!("r must lie in [0, 1), got {r}"))),
            DgWeight::Log if self.c <= 1.0 => Err(invalid("h = ln t needs c > 1")),
            _ if !(self.psi_crossing() < 9.0e15) => {
                Err(invalid("Psi stays below 1 up to 9e15; the series cannot be indexed"))
            }
            _ => Ok(()),
        }
    }

    pub fn h(&self, t: f64) -> f64 {
        match self.weight {
            DgWeight::One => 1.0,
            DgWeight::LogPow { r } => t.ln().powf(r) / (1.0 - r),
            DgWeight::Log => t.ln(),
        }
    }

    /// `Psi(t) = int_c^t (s h(s))^-1 ds`, taken as 0 below `c`.
    pub fn psi(&self, t: f64) -> f64 {
        if t <= self.c {
            return 0.0;
        }
        match self.weight {
            DgWeight::One => t.ln() - self.c.ln(),
            DgWeight::LogPow { r } => t.ln().powf(1.0 - r) - self.c.ln().powf(1.0 - r),
            DgWeight::Log => t.ln().ln() - self.c.ln().ln(),
        }
    }

    /// Solution of `Psi(t) = 1`.
    fn psi_crossing(&self) -> f64 {
        let lc = self.c.ln();
        match self.weight {
            DgWeight::One => self.c * std::f64::consts::E,
            DgWeight::LogPow { r } => (1.0 + lc.powf(1.0 - r)).powf(1.0 / (1.0 - r)).exp(),
            DgWeight::Log => (std::f64::consts::E * lc).exp(),
        }
    }

    /// Smallest integer `m >= c` with `Psi(m) > 1`.
    pub fn psi_first_exceed(&self) -> u64 {
        let mut m = (self.psi_crossing().floor() as u64).max(self.c.ceil() as u64).saturating_sub(1).max(1);
        while (m as f64) < self.c || self.psi(m as f64) <= 1.0 {
            m += 1;
        }
        m
    }

    /// `(1 + eps) sqrt(2 ln Psi(n))`, the threshold in units of `sigma_n`.
    pub fn threshold(&self, n: u64) -> f64 {
        (1.0 + self.epsilon) * (2.0 * self.psi(n as f64).ln()).sqrt()
    }

    /// Asymptotic probability shape `Psi^-(1+eps)^2 / sqrt(ln Psi)`.
    pub fn proxy_prob(&self, n: u64) -> f64 {
        let psi = self.psi(n as f64);
        psi.powf(-(1.0 + self.epsilon).powi(2)) / psi.ln().sqrt()
    }

    fn check_n(&self, n: u64) -> Result<()> {
        let m = self.psi_first_exceed();
        if n < m {
            return Err(invalid(format!("series starts at m = {m}, got n = {n}")));
        }
        Ok(())
    }

    /// `prob / (n h(n) (ln Psi(n))^b)`.
    pub fn term(&self, n: u64, prob: f64) -> Result<f64> {
        self.check_n(n)?;
        if !(0.0..=1.0).contains(&prob) {
            return Err(invalid(format!("probability must lie in [0, 1], got {prob}")));
        }
        if prob == 0.0 {
            return Ok(0.0);
        }
        Ok(prob * self.series_weight(n))
    }

    /// `1 / (n h(n) (ln Psi(n))^b)`.
    pub fn series_weight(&self, n: u64) -> f64 {
        let nf = n as f64;
        let v = 1.0 / (nf * self.h(nf));
        if self.b != 0.0 {
            v * self.psi(nf).ln().powf(-self.b)
        } else {
            v
        }
    }

    /// Proxy term; the proxy is a shape, not a probability, so it may exceed 1.
    fn proxy_term(&self, n: u64) -> f64 {
        self.proxy_prob(n) * self.series_weight(n)
    }

    /// Sum of terms for the listed `n <= n_max`, accumulated in increasing `n`.
    pub fn series_partial(&self, probs: &BTreeMap<u64, f64>, n_max: u64) -> Result<f64> {
        let mut s = 0.0;
        for (&n, &p) in probs.range(..=n_max) {
            s += self.term(n, p)?;
        }
        Ok(s)
    }

    /// Sum of proxy terms over `m <= n <= n_max`.
    pub fn proxy_partial_sum(&self, n_max: u64) -> f64 {
        let m = self.psi_first_exceed();
        (m..=n_max).map(|n| self.proxy_term(n)).sum()
    }

    /// Density of the proxy series in the `Psi` variable.
    fn density(&self, psi: f64) -> f64 {
        psi.powf(-(1.0 + self.epsilon).powi(2)) * psi.ln().powf(-0.5 - self.b)
    }

    /// Proxy series mass over `[psi_a, psi_b]`, as an integral in `Psi`.
    pub fn proxy_mass(&self, psi_a: f64, psi_b: f64) -> f64 {
        integrate_log(|p| self.density(p), psi_a, psi_b, 1e-12)
    }

    /// Fitted slope of `ln(mass of block k)` against `ln Psi_k` over
    /// `blocks` geometric blocks of `[psi_lo, psi_hi]`. Positive values mean
    /// the partial sums keep growing on a log scale.
    pub fn proxy_growth_slope(&self, psi_lo: f64, psi_hi: f64, blocks: usize) -> Result<f64> {
        if !(psi_lo > 1.0 && psi_hi > psi_lo && blocks >= 2) {
            return Err(invalid("need 1 < psi_lo < psi_hi and at least two blocks"));
        }
        let q = (psi_hi / psi_lo).powf(1.0 / blocks as f64);
        let (mut xs, mut ys) = (Vec::with_capacity(blocks), Vec::with_capacity(blocks));
        for k in 0..blocks {
            let a = psi_lo * q.powi(k as i32);
            xs.push(a * q.sqrt());
            ys.push(self.proxy_mass(a, a * q));
        }
        log_slope(&xs, &ys)
    }

    /// Analytic verdict: `S < inf` iff `eps > 0`, or `eps = 0` and `b > 1/2`.
    pub fn classify(&self) -> Classification {
        Classification { converges: self.epsilon > 0.0 || (self.epsilon == 0.0 && self.b > 0.5) }
    }
}

pub fn psi(spec: &DavisGutSpec, t: f64) -> f64 {
    spec.psi(t)
}

pub fn psi_first_exceed(spec: &DavisGutSpec) -> u64 {
    spec.psi_first_exceed()
}

pub fn davis_gut_term(spec: &DavisGutSpec, n: u64, prob: f64) -> Result<f64> {
    spec.term(n, prob)
}

pub fn series_partial(spec: &DavisGutSpec, probs: &BTreeMap<u64, f64>, n_max: u64) -> Result<f64> {
    spec.series_partial(probs, n_max)
}

/// Classification of a corollary's series at the spec's `epsilon`.
pub fn davis_gut_classify(spec: &DavisGutSpec, corollary: Corollary) -> Result<Classification> {
    Ok(DavisGutSpec::for_corollary(corollary, spec.epsilon)?.classify())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DavisGutRow {
    pub n: u64,
    pub psi: f64,
    pub proxy_prob: f64,
    pub mc_prob: Option<f64>,
    /// Proxy term at `n`.
    pub term: f64,
    /// Proxy partial sum over `m..=n`.
    pub partial_sum: f64,
}

/// Proxy series rows at each of `report_points` (sorted, at least `m`),
/// with partial sums over every integer up to the point.
pub fn davis_gut_table(spec: &DavisGutSpec, report_points: &[u64], mc: &BTreeMap<u64, f64>) -> Result<Vec<DavisGutRow>> {
    spec.validate()?;
    if report_points.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("report points must be strictly increasing"));
    }
    let m = spec.psi_first_exceed();
    let mut rows = Vec::with_capacity(report_points.len());
    let mut acc = 0.0;
    let mut next = m;
    for &n in report_points {
        spec.check_n(n)?;
        while next <= n {
            acc += spec.proxy_term(next);
            next += 1;
        }
        let proxy = spec.proxy_prob(n);
        rows.push(DavisGutRow {
            n,
            psi: spec.psi(n as f64),
            proxy_prob: proxy,
            mc_prob: mc.get(&n).copied(),
            term: spec.proxy_term(n),
            partial_sum: acc,
        });
    }
    Ok(rows)
}

pub fn write_davis_gut_csv<W: Write>(rows: &[DavisGutRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "psi", "proxy_prob", "mc_prob", "term", "partial_sum"]).map_err(csv_error)?;
    for r in rows {
        out.write_record([
            r.n.to_string(),
            format!("{:e}", r.psi),
            format!("{:e}", r.proxy_prob),
            r.mc_prob.map(|p| format!("{p:e}")).unwrap_or_default(),
            format!("{:e}", r.term),
            format!("{:e}", r.partial_sum),
        ])
        .map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

/// Monte Carlo `P(|S_n| > threshold)` against the proxy for one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgMcRow {
    pub n: u64,
    pub psi: f64,
    pub x_sigma: f64,
    pub mc_prob: f64,
    pub stderr: f64,
    pub proxy_prob: f64,
    /// `mc_prob / proxy_prob`; only its trend in `n` is meaningful.
    pub ratio: f64,
}

/// Square regions `[1, n]^2`, each `n` on its own seed `seed + index`.
#[allow(clippy::too_many_arguments)]
pub fn davis_gut_mc(
    spec: &DavisGutSpec,
    field: &CoefficientField,
    ns: &[u64],
    model: &InnovationModel,
    n_reps: u64,
    seed: u64,
    build: &BuildOptions,
    workers: Option<usize>,
) -> Result<Vec<DgMcRow>> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(ns.len());
    for (i, &n) in ns.iter().enumerate() {
        spec.check_n(n)?;
        let w = build_weights_with(field, &IndexRegion::square(n as i64)?, build)?;
        let x = spec.threshold(n);
        let opts = SimOptions { workers, ..SimOptions::new(n_reps, seed.wrapping_add(i as u64)).two_sided(true) };
        let est = simulate_tail_abs(&w, model, &[(x * w.sigma()).next_up()], &opts)?.remove(0);
        let proxy = spec.proxy_prob(n);
        rows.push(DgMcRow {
            n,
            psi: spec.psi(n as f64),
            x_sigma: x,
            mc_prob: est.p_hat,
            stderr: est.stderr,
            proxy_prob: proxy,
            ratio: est.p_hat / proxy,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::normal::normal_sf;

    fn spec(w: DgWeight, c: f64, eps: f64) -> DavisGutSpec {
        DavisGutSpec::new(w, c, eps).unwrap()
    }

    #[test]
    fn closed_forms() {
        let one = spec(DgWeight::One, 1.0, 0.0);
        let lp = spec(DgWeight::LogPow { r: 0.3 }, 1.0, 0.0);
        let lg = spec(DgWeight::Log, std::f64::consts::E, 0.0);
        for n in [3.0, 10.0, 1e3, 1e6] {
            assert!((one.psi(n) - f64::ln(n)).abs() < 1e-14);
            assert!((lp.psi(n) - f64::ln(n).powf(0.7)).abs() < 1e-14);
            assert!((lg.psi(n) - f64::ln(n).ln()).abs() < 1e-14);
        }
        assert_eq!(lg.psi_first_exceed(), 16);
        assert_eq!(one.psi_first_exceed(), 3);
        assert_eq!(lp.psi_first_exceed(), 3);
        assert_eq!(spec(DgWeight::One, 5.0, 0.0).psi_first_exceed(), 14);
    }

    #[test]
    fn psi_matches_quadrature() {
        for s in [spec(DgWeight::LogPow { r: 0.6 }, 2.0, 0.0), spec(DgWeight::Log, 3.0, 0.0), spec(DgWeight::One, 1.5, 0.0)] {
            for t in [4.0, 50.0, 1e4] {
                let q = integrate_log(|u| 1.0 / (u * s.h(u)), s.c, t, 1e-13);
                assert!((q - s.psi(t)).abs() < 1e-9, "{s:?} t={t}");
            }
            assert_eq!(s.psi(s.c), 0.0);
        }
    }

    #[test]
    fn terms() {
        let s = spec(DgWeight::One, 1.0, 0.0);
        assert_eq!(s.term(10, 0.0).unwrap(), 0.0);
        assert!((s.term(10, 0.1).unwrap() - 0.01).abs() < 1e-16);
        assert!(s.term(2, 0.1).is_err());
        assert!(s.term(10, 1.5).is_err());
        let probs = BTreeMap::from([(3, 0.5), (10, 0.1), (50, 0.2)]);
        assert!((s.series_partial(&probs, 10).unwrap() - (0.5 / 3.0 + 0.01)).abs() < 1e-15);
    }

    #[test]
    fn corollary_table() {
        let c = |eps: f64, cor| davis_gut_classify(&spec(DgWeight::One, 1.0, eps), cor).unwrap().converges;
        assert!(c(0.0, Corollary::C31 { b: 0.6 }));
        assert!(!c(0.0, Corollary::C31 { b: 0.5 }));
        assert!(!c(-0.5, Corollary::C31 { b: 1.0 }));
        assert!(c(0.5, Corollary::C31 { b: 0.0 }));
        assert!(!c(0.0, Corollary::C32 { r: 0.3 }));
        assert!(c(0.1, Corollary::C33));
        assert!(!c(0.0, Corollary::C33));
    }

    #[test]
    fn proxy_partial_sums_follow_the_integral() {
        let s = spec(DgWeight::One, 1.0, -0.5);
        let (a, b) = (10_000u64, 1_000_000u64);
        let sum: f64 = (a + 1..=b).map(|n| s.proxy_term(n)).sum();
        let integral = s.proxy_mass(s.psi(a as f64), s.psi(b as f64));
        assert!((sum / integral - 1.0).abs() < 1e-3, "{sum} vs {integral}");
        assert!(s.proxy_growth_slope(10.0, 1e6, 10).unwrap() > 0.0);
        assert!(spec(DgWeight::One, 1.0, 0.5).proxy_growth_slope(10.0, 1e6, 10).unwrap() < 0.0);
    }

    #[test]
    fn table_rows() {
        let s = spec(DgWeight::One, 1.0, 0.0);
        let rows = davis_gut_table(&s, &[3, 4, 10], &BTreeMap::from([(4, 0.3)])).unwrap();
        assert_eq!(rows[0].partial_sum, rows[0].term);
        let direct: f64 = (3..=10).map(|n| s.proxy_term(n)).sum();
        assert!((rows[2].partial_sum - direct).abs() < 1e-15);
        assert_eq!(rows[1].mc_prob, Some(0.3));
        let mut buf = Vec::new();
        write_davis_gut_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,psi,proxy_prob,mc_prob,term,partial_sum\n");
    }

    #[test]
    fn gaussian_mc_is_two_sided_normal_tail() {
        let s = spec(DgWeight::One, 1.0, 0.0);
        let f = CoefficientField::finite_support([(0, 0, 1.0), (1, 0, 0.3), (0, 1, 0.45)]).unwrap();
        let rows = davis_gut_mc(&s, &f, &[16], &InnovationModel::gaussian(), 200_000, 3, &BuildOptions::default(), None).unwrap();
        let p = 2.0 * normal_sf(rows[0].x_sigma);
        assert!((rows[0].mc_prob - p).abs() < 5.0 * (p * (1.0 - p) / 200_000.0).sqrt());
    }
}
