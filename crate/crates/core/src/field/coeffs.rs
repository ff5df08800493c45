use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::slowvar::SlowlyVaryingFn;

/// Direction profile `b(cos, sin)` of an isotropic long-range field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AngularProfile {
    /// Identically one.
    #[default]
    Constant,
    /// Sector `i` covers angles `[boundaries[i], boundaries[i+1])`, the last
    /// sector wrapping to `2 pi`. `boundaries[0]` must be `0`.
    PiecewiseConstant { boundaries: Vec<f64>, values: Vec<f64> },
}

impl AngularProfile {
    pub fn validate(&self) -> Result<()> {
        if let AngularProfile::PiecewiseConstant { boundaries, values } = self {
            if boundaries.is_empty() || boundaries.len() != values.len() {
                return Err(invalid("angular profile needs one value per sector"));
            }
            if boundaries[0] != 0.0 {
                return Err(invalid("first sector boundary must be 0"));
            }
            if boundaries.windows(2).any(|w| !(w[0] < w[1])) || *boundaries.last().unwrap() >= 2.0 * PI {
                return Err(invalid("sector boundaries must increase within [0, 2 pi)"));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(invalid("angular values must be finite"));
            }
        }
        Ok(())
    }

    /// Value in direction `(r, s) != (0, 0)`.
    pub fn value(&self, r: f64, s: f64) -> f64 {
        match self {
            AngularProfile::Constant => 1.0,
            AngularProfile::PiecewiseConstant { boundaries, values } => {
                let mut theta = s.atan2(r);
                if theta < 0.0 {
                    theta += 2.0 * PI;
                }
                let i = boundaries.partition_point(|&b| b <= theta);
                values[i.saturating_sub(1)]
            }
        }
    }

    pub fn sup_abs(&self) -> f64 {
        match self {
            AngularProfile::Constant => 1.0,
            AngularProfile::PiecewiseConstant { values, .. } => {
                values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            }
        }
    }
}

/// Decay law of a summable (short-range) isotropic coefficient family,
/// expressed in the l1 radius `d = |r| + |s|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decay {
    /// `amplitude * exp(-rate d)`.
    Exponential { rate: f64 },
    /// `amplitude * (1 + d)^(-beta)`, `beta > 2`.
    PowerLaw { beta: f64 },
}

/// Parametric coefficient family `a_{r,s}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientField {
    /// Finitely many nonzero coefficients `(r, s, a_{r,s})`.
    FiniteSupport { coefficients: Vec<(i64, i64, f64)> },
    /// Isotropic summable decay.
    ShortRange { amplitude: f64, decay: Decay },
    /// `(|r|+|s|)^(-beta) L(|r|+|s|) b(r/rho, s/rho)` off the origin and `a00`
    /// at the origin, `1 < beta < 2`.
    LongRangeIsotropic {
        beta: f64,
        #[serde(default)]
        slowly_varying: SlowlyVaryingFn,
        #[serde(default)]
        angular: AngularProfile,
        #[serde(default)]
        a00: f64,
    },
}

/// Points with `|r| + |s| <= radius` on which norms are summed exactly
/// before switching to the analytic tail bound.
const EXACT_NORM_RADIUS: i64 = 10_000;
const EXACT_NORM_RADIUS_ANGULAR: i64 = 400;

impl CoefficientField {
    /// The unit mass at the origin: `X = xi`.
    pub fn delta() -> Self {
        CoefficientField::FiniteSupport { coefficients: vec![(0, 0, 1.0)] }
    }

    pub fn finite_support<I: IntoIterator<Item = (i64, i64, f64)>>(coefficients: I) -> Result<Self> {
        let mut merged: BTreeMap<(i64, i64), f64> = BTreeMap::new();
        for (r, s, a) in coefficients {
            *merged.entry((r, s)).or_insert(0.0) += a;
        }
        let f = CoefficientField::FiniteSupport {
            coefficients: merged.into_iter().filter(|&(_, a)| a != 0.0).map(|((r, s), a)| (r, s, a)).collect(),
        };
        f.validate()?;
        Ok(f)
    }

    pub fn exponential(amplitude: f64, rate: f64) -> Result<Self> {
        let f = CoefficientField::ShortRange { amplitude, decay: Decay::Exponential { rate } };
        f.validate()?;
        Ok(f)
    }

    pub fn power_law(amplitude: f64, beta: f64) -> Result<Self> {
        let f = CoefficientField::ShortRange { amplitude, decay: Decay::PowerLaw { beta } };
        f.validate()?;
        Ok(f)
    }

    pub fn long_range(beta: f64, slowly_varying: SlowlyVaryingFn, angular: AngularProfile, a00: f64) -> Result<Self> {
        let f = CoefficientField::LongRangeIsotropic { beta, slowly_varying, angular, a00 };
        f.validate()?;
        Ok(f)
    }

    /// Origin value that makes the lattice sum of `d^(-beta)` over l1 balls
    /// match its continuum integral up to `o(1)`: `a00 = -4 zeta(beta - 1)`.
    /// With it the weight aggregates of `[1,n]^2` follow their power laws in
    /// `n` without a lower-order correction.
    pub fn lattice_balanced_a00(beta: f64) -> f64 {
        -4.0 * riemann_zeta(beta - 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CoefficientField::FiniteSupport { coefficients } => {
                if coefficients.iter().any(|c| !c.2.is_finite()) {
                    return Err(invalid("coefficients must be finite"));
                }
            }
            CoefficientField::ShortRange { amplitude, decay } => {
                if !amplitude.is_finite() || *amplitude == 0.0 {
                    return Err(invalid("short-range amplitude must be finite and nonzero"));
                }
                match *decay {
                    Decay::Exponential { rate } if !(rate > 0.0 && rate.is_finite()) => {
                        return Err(invalid(format!("exponential rate must be positive, got {rate}")));
                    }
                    Decay::PowerLaw { beta } if !(beta > 2.0 && beta.is_finite()) => {
                        return Err(invalid(format!("summable power decay needs beta > 2, got {beta}")));
                    }
                    _ => {}
                }
            }
            CoefficientField::LongRangeIsotropic { beta, slowly_varying, angular, a00 } => {
                if !(*beta > 1.0 && *beta < 2.0) {
                    return Err(invalid(format!("long-range exponent must lie in (1, 2), got {beta}")));
                }
                slowly_varying.validate()?;
                angular.validate()?;
                if !a00.is_finite() {
                    return Err(invalid("a00 must be finite"));
                }
            }
        }
        Ok(())
    }

    pub fn is_finite_support(&self) -> bool {
        matches!(self, CoefficientField::FiniteSupport { .. })
    }

    #[inline]
    pub fn value(&self, r: i64, s: i64) -> f64 {
        match self {
            CoefficientField::FiniteSupport { coefficients } => coefficients
                .iter()
                .find(|c| c.0 == r && c.1 == s)
                .map_or(0.0, |c| c.2),
            CoefficientField::ShortRange { amplitude, decay } => {
                amplitude * radial_decay(decay, (r.abs() + s.abs()) as f64)
            }
            CoefficientField::LongRangeIsotropic { beta, slowly_varying, angular, a00 } => {
                if r == 0 && s == 0 {
                    *a00
                } else {
                    let d = (r.abs() + s.abs()) as f64;
                    d.powf(-beta) * slowly_varying.value(d) * angular.value(r as f64, s as f64)
                }
            }
        }
    }

    /// Bounding box `(r_min, r_max, s_min, s_max)` of a finite support.
    pub fn support_bounds(&self) -> Option<(i64, i64, i64, i64)> {
        match self {
            CoefficientField::FiniteSupport { coefficients } if !coefficients.is_empty() => {
                let mut b = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
                for &(r, s, _) in coefficients {
                    b = (b.0.min(r), b.1.max(r), b.2.min(s), b.3.max(s));
                }
                Some(b)
            }
            _ => None,
        }
    }

    /// `sum a_{r,s}` when it converges absolutely.
    pub fn total(&self) -> Option<f64> {
        match self {
            CoefficientField::FiniteSupport { coefficients } => Some(coefficients.iter().map(|c| c.2).sum()),
            CoefficientField::ShortRange { amplitude, decay } => match *decay {
                Decay::Exponential { rate } => {
                    let q = (-rate).exp();
                    Some(amplitude * ((1.0 + q) / (1.0 - q)).powi(2))
                }
                // Sum to the exact radius, then the midpoint of the integral bracket.
                Decay::PowerLaw { beta } => {
                    let head = ring_sum_head(|d| (1.0 + d).powf(-beta), 1.0, EXACT_NORM_RADIUS);
                    let d0 = EXACT_NORM_RADIUS as f64;
                    let tail = 4.0 * (2.0 + d0).powf(2.0 - beta) / (beta - 2.0);
                    Some(amplitude * (head + 0.5 * tail))
                }
            },
            CoefficientField::LongRangeIsotropic { .. } => None,
        }
    }

    /// `||a||_1`, exact or an upper bound; `None` when it diverges.
    pub fn l1_norm(&self) -> Option<f64> {
        self.lu_norm(1.0)
    }

    /// Upper bound on `||a||_u = (sum |a|^u)^(1/u)`, `None` when not finite.
    pub fn lu_norm(&self, u: f64) -> Option<f64> {
        if !(u >= 1.0) {
            return None;
        }
        let sum = match self {
            CoefficientField::FiniteSupport { coefficients } => {
                coefficients.iter().map(|c| c.2.abs().powf(u)).sum()
            }
            CoefficientField::ShortRange { amplitude, decay } => {
                let cu = amplitude.abs().powf(u);
                match *decay {
                    Decay::Exponential { rate } => {
                        let q = (-u * rate).exp();
                        cu * ((1.0 + q) / (1.0 - q)).powi(2)
                    }
                    Decay::PowerLaw { beta } => {
                        let k = u * beta;
                        if k <= 2.0 {
                            return None;
                        }
                        let head = ring_sum_head(|d| (1.0 + d).powf(-k), 1.0, EXACT_NORM_RADIUS);
                        let d0 = EXACT_NORM_RADIUS as f64;
                        cu * (head + 4.0 * (1.0 + d0).powf(2.0 - k) / (k - 2.0))
                    }
                }
            }
            CoefficientField::LongRangeIsotropic { angular, a00, .. } => {
                let (radius, head) = match angular {
                    AngularProfile::Constant => {
                        let env = |d: f64| self.radial(d).abs().powf(u);
                        (EXACT_NORM_RADIUS, ring_sum_head(env, 0.0, EXACT_NORM_RADIUS))
                    }
                    AngularProfile::PiecewiseConstant { .. } => {
                        let rad = EXACT_NORM_RADIUS_ANGULAR;
                        let mut acc = 0.0;
                        for d in 1..=rad {
                            for (r, s) in ring_points(d) {
                                acc += self.value(r, s).abs().powf(u);
                            }
                        }
                        (rad, acc)
                    }
                };
                let tail = self.tail_ring_sum(radius, 0.0, u);
                if !tail.is_finite() {
                    return None;
                }
                a00.abs().powf(u) + head + tail
            }
        };
        Some(sum.powf(1.0 / u))
    }

    /// Radial part `d^(-beta) L(d)` (long range) or the decay law (short range).
    fn radial(&self, d: f64) -> f64 {
        match self {
            CoefficientField::FiniteSupport { .. } => 0.0,
            CoefficientField::ShortRange { amplitude, decay } => amplitude * radial_decay(decay, d),
            CoefficientField::LongRangeIsotropic { beta, slowly_varying, .. } => {
                d.powf(-beta) * slowly_varying.value(d)
            }
        }
    }

    /// Upper bound on `sum_{d > margin} (ring_const + 4 d) E(d)^q`, where
    /// `E(d)` dominates `|a_{u,v}|` for every `|u| + |v| >= d`. Returns
    /// infinity when the series is not summable at this margin.
    pub fn tail_ring_sum(&self, margin: i64, ring_const: f64, q: f64) -> f64 {
        let m = margin.max(1) as f64;
        match self {
            CoefficientField::FiniteSupport { coefficients } => {
                let mut by_radius: BTreeMap<i64, f64> = BTreeMap::new();
                for &(r, s, a) in coefficients {
                    let e = by_radius.entry(r.abs() + s.abs()).or_insert(0.0);
                    *e = e.max(a.abs());
                }
                // E(d) is the sup over radii >= d.
                let mut sup = 0.0f64;
                let mut total = 0.0;
                for (&d, &a) in by_radius.iter().rev() {
                    sup = sup.max(a);
                    if d > margin {
                        total += (ring_const + 4.0 * d as f64) * sup.powf(q);
                    }
                }
                total
            }
            CoefficientField::ShortRange { amplitude, decay } => {
                let cq = amplitude.abs().powf(q);
                match *decay {
                    Decay::Exponential { rate } => {
                        let rho = (-q * rate).exp();
                        let d0 = margin.max(0) as f64 + 1.0;
                        let geo = rho.powf(d0) / (1.0 - rho);
                        let lin = rho.powf(d0) * (d0 - (d0 - 1.0) * rho) / (1.0 - rho).powi(2);
                        cq * (ring_const * geo + 4.0 * lin)
                    }
                    Decay::PowerLaw { beta } => {
                        let k = q * beta;
                        if k <= 2.0 {
                            return f64::INFINITY;
                        }
                        let base = 1.0 + margin.max(0) as f64;
                        cq * (ring_const * base.powf(1.0 - k) / (k - 1.0) + 4.0 * base.powf(2.0 - k) / (k - 2.0))
                    }
                }
            }
            CoefficientField::LongRangeIsotropic { beta, slowly_varying, angular, .. } => {
                let kappa = slowly_varying.growth_exponent_beyond(m);
                let k = q * (beta - kappa);
                if k <= 2.0 {
                    return f64::INFINITY;
                }
                let scale = (angular.sup_abs() * slowly_varying.value(m)).powf(q) * m.powf(-q * kappa);
                scale * (ring_const * m.powf(1.0 - k) / (k - 1.0) + 4.0 * m.powf(2.0 - k) / (k - 2.0))
            }
        }
    }

    /// Mirror image `a'_{r,s} = a_{-r,s}`.
    pub fn reflect_first_axis(&self) -> Result<Self> {
        match self {
            CoefficientField::FiniteSupport { coefficients } => Ok(CoefficientField::FiniteSupport {
                coefficients: coefficients.iter().map(|&(r, s, a)| (-r, s, a)).collect(),
            }),
            CoefficientField::ShortRange { .. } => Ok(self.clone()),
            CoefficientField::LongRangeIsotropic { angular: AngularProfile::Constant, .. } => Ok(self.clone()),
            CoefficientField::LongRangeIsotropic { .. } => {
                Err(invalid("reflection of piecewise angular profiles is not supported"))
            }
        }
    }
}

/// `zeta(s)` for real `s != 1` with `s > -1`, by Euler-Maclaurin summation.
pub(crate) fn riemann_zeta(s: f64) -> f64 {
    const N: usize = 64;
    let n = N as f64;
    let head: f64 = (1..N).map(|d| (d as f64).powf(-s)).sum();
    let mut acc = head + n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // B_{2k} / (2k)! for k = 1..4
    let coef = [1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0, -1.0 / 1209600.0];
    let mut rising = s;
    let mut power = n.powf(-s - 1.0);
    for (k, c) in coef.iter().enumerate() {
        acc += c * rising * power;
        let j = 2 * k as i32 + 1;
        rising *= (s + j as f64) * (s + j as f64 + 1.0);
        power /= n * n;
    }
    acc
}

#[inline]
fn radial_decay(decay: &Decay, d: f64) -> f64 {
    match *decay {
        Decay::Exponential { rate } => (-rate * d).exp(),
        Decay::PowerLaw { beta } => (1.0 + d).powf(-beta),
    }
}

/// `f(0) * origin_weight + sum_{d=1}^{radius} 4 d f(d)`: a radial function
/// summed over l1 rings (ring `d` holds `4 d` lattice points).
fn ring_sum_head<F: Fn(f64) -> f64>(f: F, origin_weight: f64, radius: i64) -> f64 {
    let mut acc = origin_weight * if origin_weight != 0.0 { f(0.0) } else { 0.0 };
    for d in 1..=radius {
        acc += 4.0 * d as f64 * f(d as f64);
    }
    acc
}

/// Lattice points with `|r| + |s| = d`, `d >= 1`.
pub(crate) fn ring_points(d: i64) -> impl Iterator<Item = (i64, i64)> {
    (0..d).flat_map(move |i| [(d - i, i), (-i, d - i), (-(d - i), -i), (i, -(d - i))])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_has_4d_points() {
        for d in 1..20 {
            let pts: std::collections::BTreeSet<_> = ring_points(d).collect();
            assert_eq!(pts.len() as i64, 4 * d);
            assert!(pts.iter().all(|&(r, s)| r.abs() + s.abs() == d));
        }
    }

    #[test]
    fn long_range_formula() {
        let f = CoefficientField::long_range(1.5, SlowlyVaryingFn::constant(2.0).unwrap(), AngularProfile::Constant, 0.25)
            .unwrap();
        assert_eq!(f.value(0, 0), 0.25);
        assert!((f.value(3, -1) - 2.0 * 4f64.powf(-1.5)).abs() < 1e-15);
        assert!(f.l1_norm().is_none());
        assert!(f.lu_norm(1.5).is_some());
        assert!(CoefficientField::long_range(2.5, SlowlyVaryingFn::default(), AngularProfile::Constant, 0.0).is_err());
    }

    #[test]
    fn zeta_reference_values() {
        assert!((riemann_zeta(0.5) + 1.460_354_508_809_586_8).abs() < 1e-13);
        assert!((riemann_zeta(2.0) - PI * PI / 6.0).abs() < 1e-13);
        assert!((riemann_zeta(0.0) + 0.5).abs() < 1e-13);
    }

    #[test]
    fn angular_sectors() {
        let p = AngularProfile::PiecewiseConstant { boundaries: vec![0.0, PI], values: vec![1.0, -2.0] };
        p.validate().unwrap();
        assert_eq!(p.value(1.0, 1.0), 1.0);
        assert_eq!(p.value(1.0, -1.0), -2.0);
        assert_eq!(p.sup_abs(), 2.0);
    }

    #[test]
    fn exponential_norm_closed_form() {
        let f = CoefficientField::exponential(1.0, 0.7).unwrap();
        let mut brute = 0.0;
        for r in -80i64..=80 {
            for s in -80i64..=80 {
                brute += f.value(r, s).abs();
            }
        }
        assert!((f.l1_norm().unwrap() - brute).abs() < 1e-12 * brute);
        assert!((f.total().unwrap() - brute).abs() < 1e-12 * brute);
    }

    #[test]
    fn tail_ring_sum_dominates_brute_force() {
        let fields = [
            CoefficientField::exponential(2.0, 0.3).unwrap(),
            CoefficientField::power_law(1.0, 2.5).unwrap(),
            CoefficientField::long_range(1.3, SlowlyVaryingFn::log_power(1.0, 1.0).unwrap(), AngularProfile::Constant, 0.0)
                .unwrap(),
        ];
        for f in &fields {
            for &(margin, ring_const, q) in &[(5i64, 10.0, 2.0), (20, 0.0, 2.0), (8, 4.0, 3.0)] {
                let bound = f.tail_ring_sum(margin, ring_const, q);
                let mut brute = 0.0;
                for d in (margin + 1)..4000 {
                    let e = f.radial(d as f64).abs();
                    brute += (ring_const + 4.0 * d as f64) * e.powf(q);
                }
                assert!(bound >= brute * (1.0 - 1e-12), "{f:?} m={margin}: {bound} < {brute}");
            }
        }
    }

    #[test]
    fn finite_support_merges_duplicates() {
        let f = CoefficientField::finite_support([(0, 0, 1.0), (0, 0, 0.5), (1, 0, 0.0)]).unwrap();
        assert_eq!(f, CoefficientField::FiniteSupport { coefficients: vec![(0, 0, 1.5)] });
        assert_eq!(f.support_bounds(), Some((0, 0, 0, 0)));
    }
}
