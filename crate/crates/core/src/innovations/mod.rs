//! Standardized innovation laws with prescribed right tails.

mod karamata;

pub use karamata::{karamata_check, karamata_sup_check, karamata_uniform_check, KaramataReport};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::quad;
use crate::rng::RngStream;
use crate::slowvar::SlowlyVaryingFn;
use crate::theory::normal::{normal_pdf, normal_sf};

const SQRT3: f64 = 1.732_050_807_568_877_2;
const QUAD_TOL: f64 = 1e-13;

fn half() -> f64 {
    0.5
}

fn one() -> f64 {
    1.0
}

/// Innovation law before standardization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InnovationKind {
    Gaussian,
    Rademacher,
    /// Uniform on `[-sqrt 3, sqrt 3]`.
    UniformCentered,
    /// Symmetric Pareto: `P(xi >= x) = (s / x)^t / 2` above `s = sqrt((t-2)/t)`.
    StudentLike { t: f64 },
    /// With probability `core_weight` uniform on `(-threshold, threshold)`,
    /// otherwise a symmetric tail `P(|X| >= x | tail) = (threshold / x)^t
    /// h0(x) / h0(threshold)`; then divided by its standard deviation.
    TwoSidedParetoHybrid {
        t: f64,
        #[serde(default)]
        h0: SlowlyVaryingFn,
        #[serde(default = "half")]
        core_weight: f64,
        #[serde(default = "one")]
        threshold: f64,
    },
}

/// Right tail `P(xi >= x) = h(x) / x^t` for `x >= x0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailDescriptor {
    pub t: f64,
    pub h: SlowlyVaryingFn,
    pub x0: f64,
}

impl TailDescriptor {
    /// `h(x) / x^t`; only meaningful for `x >= x0`.
    #[inline]
    pub fn tail_form(&self, x: f64) -> f64 {
        self.h.value(x) * x.powf(-self.t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeavyLaw {
    t: f64,
    core_weight: f64,
    /// Raw core half-width.
    raw_x0: f64,
    raw_h0: SlowlyVaryingFn,
    /// Raw standard deviation.
    sigma: f64,
    /// Standardized core half-width.
    x0: f64,
    /// Effective slowly varying factor after standardization.
    h: SlowlyVaryingFn,
}

impl HeavyLaw {
    fn new(t: f64, h0: SlowlyVaryingFn, core_weight: f64, raw_x0: f64) -> Result<Self> {
        if !(t > 2.0 && t.is_finite()) {
            return Err(invalid(format!("tail index must exceed 2, got {t}")));
        }
        h0.validate()?;
        if h0.log_exponent() >= t {
            return Err(invalid("log-power exponent must be below the tail index"));
        }
        if !(0.0..1.0).contains(&core_weight) {
            return Err(invalid(format!("core weight must lie in [0, 1), got {core_weight}")));
        }
        if !(raw_x0 > 0.0 && raw_x0.is_finite()) {
            return Err(invalid("hybrid threshold must be positive"));
        }
        let tail_m2 = if h0.is_constant() {
            raw_x0 * raw_x0 * t / (t - 2.0)
        } else {
            // E[T^2] = x0^2 + 2 int_{x0}^inf y S(y) dy
            let l0 = h0.value(raw_x0);
            let s = |y: f64| (raw_x0 / y).powf(t) * h0.value(y) / l0;
            raw_x0 * raw_x0 + 2.0 * quad::integrate_to_infinity(|y| y * s(y), raw_x0, 1e-14 * raw_x0 * raw_x0)
        };
        let var = core_weight * raw_x0 * raw_x0 / 3.0 + (1.0 - core_weight) * tail_m2;
        let sigma = var.sqrt();
        let k = 0.5 * (1.0 - core_weight) * raw_x0.powf(t) * sigma.powf(-t) / h0.value(raw_x0);
        Ok(HeavyLaw { t, core_weight, raw_x0, raw_h0: h0, sigma, x0: raw_x0 / sigma, h: h0.rescaled(sigma).times(k) })
    }

    /// `P(xi >= x)` for `x >= 0`.
    fn upper(&self, x: f64) -> f64 {
        if x >= self.x0 {
            self.h.value(x) * x.powf(-self.t)
        } else {
            0.5 * (1.0 - self.core_weight) + 0.5 * self.core_weight * (self.x0 - x) / self.x0
        }
    }

    fn density(&self, x: f64) -> f64 {
        let a = x.abs();
        if a < self.x0 {
            0.5 * self.core_weight / self.x0
        } else {
            self.h.value(a) * a.powf(-self.t - 1.0) * (self.t - self.h.elasticity(a))
        }
    }

    /// `int_a^b y^k g(y) dy` over `x0 <= a < b <= inf` where `g` is the tail
    /// density.
    fn tail_moment(&self, k: f64, a: f64, b: f64) -> Result<f64> {
        debug_assert!(a >= self.x0 * (1.0 - 1e-15));
        if !(b > a) {
            return Ok(0.0);
        }
        if b.is_infinite() && k >= self.t {
            return Err(Error::NonintegrableMoment { order: k, tail_index: self.t });
        }
        let t = self.t;
        if self.h.is_constant() {
            let c = self.h.value(1.0);
            let prim = |y: f64| {
                if k == t {
                    y.ln()
                } else if y.is_infinite() {
                    0.0
                } else {
                    y.powf(k - t) / (k - t)
                }
            };
            return Ok(c * t * (prim(b) - prim(a)));
        }
        // Integration by parts: [-y^k S]_a^b + k int_a^b y^(k-1) S(y) dy.
        let s = |y: f64| self.h.value(y) * y.powf(-t);
        let boundary = a.powf(k) * s(a) - if b.is_infinite() { 0.0 } else { b.powf(k) * s(b) };
        let f = |y: f64| y.powf(k - 1.0) * s(y);
        let scale = a.powf(k) * s(a);
        let integral = if b.is_infinite() {
            quad::integrate_to_infinity(f, a, QUAD_TOL * scale)
        } else {
            quad::integrate_log(f, a, b, QUAD_TOL * scale)
        };
        Ok(boundary + k * integral)
    }

    /// `int_lo^hi y^k dF(y)` over `0 <= lo < hi` of the standardized law.
    fn positive_moment(&self, k: f64, lo: f64, hi: f64) -> Result<f64> {
        let mut acc = 0.0;
        let (clo, chi) = (lo.min(self.x0), hi.min(self.x0));
        if chi > clo {
            let dens = 0.5 * self.core_weight / self.x0;
            acc += dens * (chi.powf(k + 1.0) - clo.powf(k + 1.0)) / (k + 1.0);
        }
        let (tlo, thi) = (lo.max(self.x0), hi.max(self.x0));
        acc += self.tail_moment(k, tlo, thi)?;
        Ok(acc)
    }

    /// Inverse of the conditional tail survival: `x >= x0` with
    /// `S(x) = v S(x0)`, `v in (0, 1]`.
    fn tail_quantile(&self, v: f64) -> f64 {
        if self.h.is_constant() {
            return self.x0 * v.powf(-1.0 / self.t);
        }
        let target = v.ln() + self.h.value(self.x0).ln() - self.t * self.x0.ln();
        let f = |y: f64| self.h.value(y.exp()).ln() - self.t * y - target;
        let mut lo = self.x0.ln();
        let mut y = lo - v.ln() / self.t;
        let mut hi = y;
        while f(hi) > 0.0 {
            hi += 1.0 + (hi - lo);
        }
        for _ in 0..100 {
            let fy = f(y);
            if fy > 0.0 {
                lo = y;
            } else {
                hi = y;
            }
            let d = self.h.elasticity(y.exp()) - self.t;
            let mut next = y - fy / d;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - y).abs() <= 1e-14 * next.abs().max(1.0) {
                y = next;
                break;
            }
            y = next;
        }
        y.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Law {
    Gaussian,
    Rademacher,
    Uniform,
    Heavy(HeavyLaw),
}

/// A standardized (mean 0, variance 1) innovation law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InnovationKind", into = "InnovationKind")]
pub struct InnovationModel {
    kind: InnovationKind,
    law: Law,
}

impl TryFrom<InnovationKind> for InnovationModel {
    type Error = Error;
    fn try_from(kind: InnovationKind) -> Result<Self> {
        InnovationModel::new(kind)
    }
}

impl From<InnovationModel> for InnovationKind {
    fn from(m: InnovationModel) -> Self {
        m.kind
    }
}

impl InnovationModel {
    pub fn new(kind: InnovationKind) -> Result<Self> {
        let law = match kind {
            InnovationKind::Gaussian => Law::Gaussian,
            InnovationKind::Rademacher => Law::Rademacher,
            InnovationKind::UniformCentered => Law::Uniform,
            InnovationKind::StudentLike { t } => Law::Heavy(HeavyLaw::new(t, SlowlyVaryingFn::default(), 0.0, 1.0)?),
            InnovationKind::TwoSidedParetoHybrid { t, h0, core_weight, threshold } => {
                Law::Heavy(HeavyLaw::new(t, h0, core_weight, threshold)?)
            }
        };
        Ok(InnovationModel { kind, law })
    }

    pub fn gaussian() -> Self {
        InnovationModel { kind: InnovationKind::Gaussian, law: Law::Gaussian }
    }

    pub fn rademacher() -> Self {
        InnovationModel { kind: InnovationKind::Rademacher, law: Law::Rademacher }
    }

    pub fn uniform() -> Self {
        InnovationModel { kind: InnovationKind::UniformCentered, law: Law::Uniform }
    }

    pub fn student_like(t: f64) -> Result<Self> {
        Self::new(InnovationKind::StudentLike { t })
    }

    pub fn hybrid(t: f64, h0: SlowlyVaryingFn, core_weight: f64, threshold: f64) -> Result<Self> {
        Self::new(InnovationKind::TwoSidedParetoHybrid { t, h0, core_weight, threshold })
    }

    pub fn kind(&self) -> &InnovationKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            InnovationKind::Gaussian => "gaussian",
            InnovationKind::Rademacher => "rademacher",
            InnovationKind::UniformCentered => "uniform_centered",
            InnovationKind::StudentLike { .. } => "student_like",
            InnovationKind::TwoSidedParetoHybrid { .. } => "two_sided_pareto_hybrid",
        }
    }

    /// Supremum of the finite absolute moment orders.
    pub fn moment_order(&self) -> f64 {
        match self.law {
            Law::Heavy(h) => h.t,
            _ => f64::INFINITY,
        }
    }

    pub fn tail(&self) -> Option<TailDescriptor> {
        match self.law {
            Law::Heavy(h) => Some(TailDescriptor { t: h.t, h: h.h, x0: h.x0 }),
            _ => None,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.law, Law::Gaussian)
    }

    pub fn is_heavy_tailed(&self) -> bool {
        matches!(self.law, Law::Heavy(_))
    }

    /// Finite support atoms `(value, probability)` of a discrete law.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self.law {
            Law::Rademacher => Some(vec![(-1.0, 0.5), (1.0, 0.5)]),
            _ => None,
        }
    }

    /// Standard deviation of the raw law that was divided out.
    pub fn raw_scale(&self) -> f64 {
        match self.law {
            Law::Heavy(h) => h.sigma,
            _ => 1.0,
        }
    }

    /// `P(X >= x)` for the raw, unstandardized hybrid or Pareto law.
    pub fn raw_survival(&self, x: f64) -> Option<f64> {
        match self.law {
            Law::Heavy(h) => {
                let upper = |y: f64| {
                    if y >= h.raw_x0 {
                        0.5 * (1.0 - h.core_weight) * (h.raw_x0 / y).powf(h.t) * h.raw_h0.value(y) / h.raw_h0.value(h.raw_x0)
                    } else {
                        0.5 * (1.0 - h.core_weight) + 0.5 * h.core_weight * (h.raw_x0 - y) / h.raw_x0
                    }
                };
                Some(if x >= 0.0 { upper(x) } else { 1.0 - upper(-x) })
            }
            _ => None,
        }
    }

    /// `P(xi >= x)`.
    pub fn survival(&self, x: f64) -> f64 {
        match self.law {
            Law::Gaussian => normal_sf(x),
            Law::Rademacher => {
                if x <= -1.0 {
                    1.0
                } else if x <= 1.0 {
                    0.5
                } else {
                    0.0
                }
            }
            Law::Uniform => ((SQRT3 - x) / (2.0 * SQRT3)).clamp(0.0, 1.0),
            Law::Heavy(h) => {
                if x >= 0.0 {
                    h.upper(x)
                } else {
                    1.0 - h.upper(-x)
                }
            }
        }
    }

    /// Lebesgue density (zero for atomic laws).
    pub fn density(&self, x: f64) -> f64 {
        match self.law {
            Law::Gaussian => normal_pdf(x),
            Law::Rademacher => 0.0,
            Law::Uniform => {
                if x.abs() < SQRT3 {
                    0.5 / SQRT3
                } else {
                    0.0
                }
            }
            Law::Heavy(h) => h.density(x),
        }
    }

    /// `E[|xi|^order ; lower < xi < upper]`.
    pub fn abs_moment(&self, order: f64, lower: f64, upper: f64) -> Result<f64> {
        check_interval(order, lower, upper)?;
        let pos = self.positive_part(order, lower.max(0.0), upper)?;
        let neg = if lower < 0.0 {
            self.positive_part(order, (-upper).max(0.0), -lower)?
        } else {
            0.0
        };
        Ok(pos + neg)
    }

    /// `E[xi^order ; lower < xi < upper]`; a non-integer order needs
    /// `lower >= 0`.
    pub fn truncated_moment(&self, order: f64, lower: f64, upper: f64) -> Result<f64> {
        check_interval(order, lower, upper)?;
        let pos = self.positive_part(order, lower.max(0.0), upper)?;
        if lower >= 0.0 {
            return Ok(pos);
        }
        if order.fract() != 0.0 {
            return Err(invalid("non-integer moments need a nonnegative lower limit"));
        }
        let neg = self.positive_part(order, (-upper).max(0.0), -lower)?;
        let sign = if (order as i64) % 2 == 0 { 1.0 } else { -1.0 };
        Ok(pos + sign * neg)
    }

    /// `int_lo^hi y^k dF(y)` restricted to the open interval `(lo, hi)`,
    /// `0 <= lo`; by symmetry also serves the negative half.
    fn positive_part(&self, k: f64, lo: f64, hi: f64) -> Result<f64> {
        if !(hi > lo) {
            return Ok(0.0);
        }
        match self.law {
            Law::Gaussian => Ok(gaussian_moment(k, lo, hi)),
            Law::Rademacher => Ok(if lo < 1.0 && 1.0 < hi { 0.5 } else { 0.0 }),
            Law::Uniform => {
                let (a, b) = (lo.min(SQRT3), hi.min(SQRT3));
                Ok((b.powf(k + 1.0) - a.powf(k + 1.0)) / ((k + 1.0) * 2.0 * SQRT3))
            }
            Law::Heavy(h) => h.positive_moment(k, lo, hi),
        }
    }

    #[inline]
    pub fn sample_one(&self, rng: &mut RngStream) -> f64 {
        match self.law {
            Law::Gaussian => StandardNormal.sample(rng),
            Law::Rademacher => {
                if rand::RngCore::next_u64(rng) >> 63 == 1 {
                    1.0
                } else {
                    -1.0
                }
            }
            Law::Uniform => (2.0 * rng.uniform() - 1.0) * SQRT3,
            Law::Heavy(h) => {
                let bits = rand::RngCore::next_u64(rng);
                let sign = if bits & 1 == 1 { 1.0 } else { -1.0 };
                let u = (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                if u < h.core_weight {
                    (2.0 * u / h.core_weight - 1.0) * h.x0
                } else {
                    sign * h.tail_quantile(rng.uniform_open0())
                }
            }
        }
    }

    pub fn sample(&self, rng: &mut RngStream, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.sample_one(rng)).collect()
    }

    /// CSV table with columns `x, survival, density`.
    pub fn write_table_csv<W: Write>(&self, xs: &[f64], w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["x", "survival", "density"]).map_err(crate::field::csv_error)?;
        for &x in xs {
            out.write_record([format!("{x}"), format!("{:e}", self.survival(x)), format!("{:e}", self.density(x))])
                .map_err(crate::field::csv_error)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn check_interval(order: f64, lower: f64, upper: f64) -> Result<()> {
    if !(order >= 0.0 && order.is_finite()) {
        return Err(invalid(format!("moment order must be nonnegative, got {order}")));
    }
    if !(lower < upper) {
        return Err(invalid("truncated moment needs lower < upper"));
    }
    Ok(())
}

/// `int_lo^hi y^k phi(y) dy` for `0 <= lo < hi`.
fn gaussian_moment(k: f64, lo: f64, hi: f64) -> f64 {
    if k.fract() == 0.0 && k <= 64.0 {
        // M_k = [-y^(k-1) phi]_lo^hi + (k-1) M_{k-2}
        let edge = |y: f64, p: i32| if y.is_infinite() { 0.0 } else { y.powi(p) * normal_pdf(y) };
        let n = k as i32;
        let mut m_prev = normal_sf(lo) - normal_sf(hi);
        let mut m = edge(lo, 0) - edge(hi, 0);
        if n == 0 {
            return m_prev;
        }
        for j in 2..=n {
            let next = edge(lo, j - 1) - edge(hi, j - 1) + (j - 1) as f64 * m_prev;
            m_prev = m;
            m = next;
        }
        return m;
    }
    let f = |y: f64| y.powf(k) * normal_pdf(y);
    let b = hi.min(lo.max(0.0) + 40.0);
    quad::integrate_panels(&f, lo, b, 1e-15, 16)
}
