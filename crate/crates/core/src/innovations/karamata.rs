use serde::Serialize;

use crate::error::{invalid, Result};
use crate::quad;
use crate::slowvar::SlowlyVaryingFn;

/// Numeric value of a Karamata-type quantity against its asymptotic form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KaramataReport {
    /// 1: uniform ratio, 2: integral below, 3: integral above, 4: supremum.
    pub property: u8,
    pub exponent: f64,
    pub x: f64,
    pub numeric: f64,
    pub asymptotic: f64,
    pub ratio: f64,
}

/// Integral properties of a slowly varying `l`:
/// for `theta > -1`, `int_A^x y^theta l(y) dy ~ x^(theta+1) l(x) / (theta+1)`;
/// for `theta < -1`, `int_x^inf y^theta l(y) dy ~ x^(theta+1) l(x) / (-theta-1)`.
pub fn karamata_check(l: &SlowlyVaryingFn, theta: f64, x: f64, lower: f64) -> Result<KaramataReport> {
    l.validate()?;
    if theta == -1.0 || !theta.is_finite() {
        return Err(invalid("theta must be finite and different from -1"));
    }
    let f = |y: f64| y.powf(theta) * l.value(y);
    let head = x.powf(theta + 1.0) * l.value(x);
    let (property, numeric, asymptotic) = if theta > -1.0 {
        if !(lower > 0.0 && x > lower) {
            return Err(invalid("property 2 needs 0 < A < x"));
        }
        let v = if l.is_constant() {
            l.value(1.0) * (x.powf(theta + 1.0) - lower.powf(theta + 1.0)) / (theta + 1.0)
        } else {
            quad::integrate_log(f, lower, x, 1e-14 * head)
        };
        (2, v, head / (theta + 1.0))
    } else {
        if !(x > 0.0) {
            return Err(invalid("property 3 needs x > 0"));
        }
        let v = if l.is_constant() {
            l.value(1.0) * x.powf(theta + 1.0) / (-theta - 1.0)
        } else {
            quad::integrate_to_infinity(f, x, 1e-14 * head)
        };
        (3, v, head / (-theta - 1.0))
    };
    Ok(KaramataReport { property, exponent: theta, x, numeric, asymptotic, ratio: numeric / asymptotic })
}

/// Supremum property: for `eta > 0`, `sup_{A <= y <= x} y^eta l(y) ~ x^eta l(x)`;
/// for `eta < 0`, `sup_{y >= x} y^eta l(y) ~ x^eta l(x)`.
pub fn karamata_sup_check(l: &SlowlyVaryingFn, eta: f64, x: f64, lower: f64) -> Result<KaramataReport> {
    l.validate()?;
    if eta == 0.0 || !eta.is_finite() {
        return Err(invalid("eta must be finite and nonzero"));
    }
    let g = |y: f64| y.powf(eta) * l.value(y);
    let (a, b) = if eta > 0.0 {
        if !(lower > 0.0 && x > lower) {
            return Err(invalid("supremum over [A, x] needs 0 < A < x"));
        }
        (lower, x)
    } else {
        (x, x * 1e12)
    };
    let sup = log_grid_sup(&g, a, b);
    let asymptotic = g(x);
    Ok(KaramataReport { property: 4, exponent: eta, x, numeric: sup, asymptotic, ratio: sup / asymptotic })
}

/// Uniform convergence: `max_{lambda in [c, C]} |l(lambda x) / l(x) - 1|`,
/// reported as `ratio = 1 + max deviation`.
pub fn karamata_uniform_check(l: &SlowlyVaryingFn, c: f64, big_c: f64, x: f64) -> Result<KaramataReport> {
    l.validate()?;
    if !(c > 0.0 && big_c >= c) {
        return Err(invalid("need 0 < c <= C"));
    }
    let lx = l.value(x);
    let dev = (0..=200)
        .map(|i| {
            let lam = c * (big_c / c).powf(i as f64 / 200.0);
            (l.value(lam * x) / lx - 1.0).abs()
        })
        .fold(0.0, f64::max);
    Ok(KaramataReport { property: 1, exponent: 0.0, x, numeric: 1.0 + dev, asymptotic: 1.0, ratio: 1.0 + dev })
}

/// Supremum of `g` on `[a, b]` from a logarithmic grid refined around the
/// best point by golden-section search.
fn log_grid_sup<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64) -> f64 {
    const N: usize = 4000;
    let (la, lb) = (a.ln(), b.ln());
    let step = (lb - la) / N as f64;
    let at = |s: f64| g(s.exp().clamp(a, b));
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..=N {
        let v = at(la + step * i as f64);
        if v > best.1 {
            best = (i, v);
        }
    }
    let mut lo = la + step * best.0.saturating_sub(1) as f64;
    let mut hi = (la + step * (best.0 + 1) as f64).min(lb);
    let phi = 0.618_033_988_749_894_8;
    for _ in 0..80 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if at(m1) < at(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    best.1.max(at(0.5 * (lo + hi))).max(g(a)).max(g(b))
}
