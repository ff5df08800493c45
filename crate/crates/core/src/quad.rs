//! Thin wrappers over double-exponential (tanh-sinh) quadrature.

use quadrature::double_exponential;

/// `int_a^b f`, split into `panels` equal pieces.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    integrate_panels(&f, a, b, tol, 1)
}

pub fn integrate_panels<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, panels: usize) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == panels { b } else { lo + h };
            double_exponential::integrate(f, lo, hi, tol / panels as f64).integral
        })
        .sum()
}

/// `int_a^b f(y) dy` for `0 < a < b`, evaluated in `s = ln y` so that
/// integrands spread over many decades stay well resolved.
pub fn integrate_log<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    debug_assert!(a > 0.0);
    if !(b > a) {
        return 0.0;
    }
    let (la, lb) = (a.ln(), b.ln());
    let panels = ((lb - la) / 2.0).ceil().max(1.0) as usize;
    integrate_panels(&|s: f64| { let y = s.exp(); f(y) * y }, la, lb, tol, panels)
}

/// `int_a^inf f(y) dy` for `a > 0` through `y = a / v`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> f64 {
    debug_assert!(a > 0.0);
    // Decades near v = 0 carry the far tail; splitting them keeps it resolved.
    let g = |v: f64| {
        if v <= 0.0 {
            0.0
        } else {
            f(a / v) * a / (v * v)
        }
    };
    let mut total = 0.0;
    let mut hi = 1.0;
    for _ in 0..30 {
        let lo = hi * 0.1;
        total += double_exponential::integrate(g, lo, hi, tol / 31.0).integral;
        hi = lo;
    }
    total + double_exponential::integrate(g, 0.0, hi, tol / 31.0).integral
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-14);
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn log_substitution_matches_closed_form() {
        // int_2^1e6 ln y dy = [y ln y - y]
        let exact = |y: f64| y * y.ln() - y;
        let v = integrate_log(|y| y.ln(), 2.0, 1e6, 1e-10);
        let e = exact(1e6) - exact(2.0);
        assert!(((v - e) / e).abs() < 1e-12, "{v} vs {e}");
    }

    #[test]
    fn power_tail_to_infinity() {
        for (k, a) in [(2.0, 1.0), (3.5, 0.3), (1.2, 5.0)] {
            let v = integrate_to_infinity(|y: f64| y.powf(-k), a, 1e-12);
            let e = a.powf(1.0 - k) / (k - 1.0);
            assert!(((v - e) / e).abs() < 1e-8, "k={k}: {v} vs {e}");
        }
    }
}
