use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use super::coeffs::CoefficientField;
use super::fft::{correlate, transform_cells, Grid};
use super::region::IndexRegion;
use super::table::{TailCertificate, WeightTable, Window};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMethod {
    /// Direct summation for finite supports, FFT otherwise.
    #[default]
    Auto,
    Direct,
    Fft,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Relative l2 tail allowance.
    pub epsilon: f64,
    /// Largest FFT grid, in cells, that a build may allocate.
    pub max_cells: u64,
    pub method: WeightMethod,
    /// Fixed window margin for infinite fields; bypasses the epsilon ladder.
    #[serde(default)]
    pub margin: Option<i64>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { epsilon: 1e-6, max_cells: 1 << 24, method: WeightMethod::Auto, margin: None }
    }
}

impl BuildOptions {
    pub fn with_epsilon(epsilon: f64) -> Self {
        BuildOptions { epsilon, ..Default::default() }
    }
}

/// `b_{r,s} = sum_{(j,k) in region} a_{j+r,k+s}` with default options.
pub fn build_weights(field: &CoefficientField, region: &IndexRegion, epsilon: f64) -> Result<WeightTable> {
    build_weights_with(field, region, &BuildOptions::with_epsilon(epsilon))
}

pub fn build_weights_with(field: &CoefficientField, region: &IndexRegion, opts: &BuildOptions) -> Result<WeightTable> {
    build_weighted(field, region, None, opts, region.label())
}

/// Weighted build: `b_{r,s} = sum w_{j,k} a_{j+r,k+s}` with `cell_weights`
/// listed in [`IndexRegion::cells`] order.
pub(crate) fn build_weighted(
    field: &CoefficientField,
    region: &IndexRegion,
    cell_weights: Option<&[f64]>,
    opts: &BuildOptions,
    label: String,
) -> Result<WeightTable> {
    if !(opts.epsilon > 0.0 && opts.epsilon < 1.0) {
        return Err(invalid(format!("epsilon must lie in (0, 1), got {}", opts.epsilon)));
    }
    field.validate()?;
    let bbox = region.bounding_box();
    let (w, h) = (bbox.width() as usize, bbox.height() as usize);
    let mut g = Grid { rows: w, cols: h, data: vec![0.0; w * h] };
    let mut weight_mass = 0.0;
    match cell_weights {
        Some(cw) => {
            if cw.len() as u64 != region.cardinality() {
                return Err(invalid("one weight per region cell is required"));
            }
            for ((j, k), &v) in region.cells().zip(cw) {
                if !v.is_finite() {
                    return Err(invalid("cell weights must be finite"));
                }
                g.data[(j - bbox.j1) as usize * h + (k - bbox.k1) as usize] = v;
                weight_mass += v.abs();
            }
        }
        None => {
            for (j, k) in region.cells() {
                g.data[(j - bbox.j1) as usize * h + (k - bbox.k1) as usize] = 1.0;
            }
            weight_mass = region.cardinality() as f64;
        }
    }
    if weight_mass == 0.0 {
        return Err(Error::DegenerateField);
    }

    if let CoefficientField::FiniteSupport { coefficients } = field {
        let (umin, umax, vmin, vmax) = field.support_bounds().ok_or(Error::DegenerateField)?;
        let window = Window { r_min: umin - bbox.j2, r_max: umax - bbox.j1, s_min: vmin - bbox.k2, s_max: vmax - bbox.k1 };
        let values = match opts.method {
            WeightMethod::Auto | WeightMethod::Direct => {
                let mut vals = vec![0.0; window.cells()];
                let cols = window.cols();
                let cells: Vec<(i64, i64, f64)> = region
                    .cells()
                    .map(|(j, k)| (j, k, g.data[(j - bbox.j1) as usize * h + (k - bbox.k1) as usize]))
                    .filter(|c| c.2 != 0.0)
                    .collect();
                for &(u, v, a) in coefficients {
                    for &(j, k, wt) in &cells {
                        let idx = (u - j - window.r_min) as usize * cols + (v - k - window.s_min) as usize;
                        vals[idx] += wt * a;
                    }
                }
                vals
            }
            WeightMethod::Fft => {
                let (ar, ac) = ((umax - umin + 1) as usize, (vmax - vmin + 1) as usize);
                let mut a = Grid { rows: ar, cols: ac, data: vec![0.0; ar * ac] };
                for &(u, v, val) in coefficients {
                    a.data[(u - umin) as usize * ac + (v - vmin) as usize] += val;
                }
                let (o0, o1) = (1 - w as i64, 1 - h as i64);
                let cells = transform_cells((ar, ac), (w, h), (o0, o1), (window.rows(), window.cols()));
                if cells > opts.max_cells {
                    return Err(Error::WindowOverflow { cells, cap: opts.max_cells });
                }
                correlate(&a, &g, o0, o1, window.rows(), window.cols())
            }
        };
        return WeightTable::assemble(window, values, 0.0, label, None);
    }

    if opts.method == WeightMethod::Direct {
        return Err(invalid("direct summation needs a finite-support field"));
    }
    let ring_const = 2.0 * (w + h) as f64;
    let tail = |m: i64| weight_mass * weight_mass * field.tail_ring_sum(m, ring_const, 2.0);
    let cells_for = |m: i64| {
        let (lr, lc) = (2 * (w - 1 + m as usize) + 1, 2 * (h - 1 + m as usize) + 1);
        transform_cells((lr, lc), (w, h), (0, 0), (w + 2 * m as usize, h + 2 * m as usize))
    };

    if let Some(m) = opts.margin {
        if m < 1 {
            return Err(invalid("window margin must be at least 1"));
        }
        if cells_for(m) > opts.max_cells {
            return Err(Error::WindowOverflow { cells: cells_for(m), cap: opts.max_cells });
        }
        return finish(field, &g, bbox, m, tail(m), ring_const, weight_mass, label, correlate_at(field, &g, m));
    }
    let base_margin = w.max(h) as i64;
    if cells_for(base_margin) > opts.max_cells {
        return Err(Error::WindowOverflow { cells: cells_for(base_margin), cap: opts.max_cells });
    }
    let base = correlate_at(field, &g, base_margin);
    let base_mass: f64 = base.iter().map(|b| b * b).sum();
    if !(base_mass > 0.0) {
        return Err(Error::DegenerateField);
    }
    let target = opts.epsilon * base_mass;
    let mut margin = base_margin;
    loop {
        if tail(margin) <= target {
            break;
        }
        let next = ((margin as f64) * 1.25).ceil() as i64;
        let cells = cells_for(next);
        if cells > opts.max_cells {
            return Err(Error::WindowOverflow { cells, cap: opts.max_cells });
        }
        margin = next;
    }
    let values = if margin == base_margin { base } else { correlate_at(field, &g, margin) };
    finish(field, &g, bbox, margin, tail(margin), ring_const, weight_mass, label, values)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    field: &CoefficientField,
    g: &Grid,
    bbox: super::Rect,
    margin: i64,
    tail: f64,
    ring_const: f64,
    weight_mass: f64,
    label: String,
    values: Vec<f64>,
) -> Result<WeightTable> {
    debug_assert_eq!(values.len(), (g.rows + 2 * margin as usize) * (g.cols + 2 * margin as usize));
    let window = Window {
        r_min: -bbox.j2 - margin,
        r_max: -bbox.j1 + margin,
        s_min: -bbox.k2 - margin,
        s_max: -bbox.k1 + margin,
    };
    let certificate = TailCertificate { field: field.clone(), margin, ring_const, weight_mass };
    WeightTable::assemble(window, values, tail, label, Some(certificate))
}

/// Sample `a` on `|u| <= w-1+m`, `|v| <= h-1+m` and correlate with `g`.
fn correlate_at(field: &CoefficientField, g: &Grid, margin: i64) -> Vec<f64> {
    let (w, h) = (g.rows as i64, g.cols as i64);
    let (hu, hv) = (w - 1 + margin, h - 1 + margin);
    let (lr, lc) = ((2 * hu + 1) as usize, (2 * hv + 1) as usize);
    let mut a = Grid { rows: lr, cols: lc, data: Vec::with_capacity(lr * lc) };
    // Radial families repeat values along l1 rings; cache per radius when the
    // angular factor is constant.
    let radial_only = !matches!(
        field,
        CoefficientField::LongRangeIsotropic { angular: super::AngularProfile::PiecewiseConstant { .. }, .. }
    );
    let mut cache: HashMap<i64, f64> = HashMap::new();
    for u in -hu..=hu {
        for v in -hv..=hv {
            let val = if radial_only && (u, v) != (0, 0) {
                let d = u.abs() + v.abs();
                *cache.entry(d).or_insert_with(|| field.value(d, 0))
            } else {
                field.value(u, v)
            };
            a.data.push(val);
        }
    }
    correlate(&a, g, 0, 0, (w + 2 * margin) as usize, (h + 2 * margin) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{AngularProfile, Rect};
    use crate::slowvar::SlowlyVaryingFn;

    #[test]
    fn identity_field_shifts_indicator() {
        let t = build_weights(&CoefficientField::delta(), &IndexRegion::square(10).unwrap(), 1e-6).unwrap();
        assert_eq!(t.sigma2(), 100.0);
        assert_eq!(t.truncation_epsilon(), 0.0);
        for r in -12..=2 {
            for s in -12..=2 {
                let inside = (-10..=-1).contains(&r) && (-10..=-1).contains(&s);
                assert_eq!(t.get(r, s), if inside { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn fft_agrees_with_direct_on_finite_support() {
        let f = CoefficientField::finite_support([(0, 0, 1.0), (2, -1, -0.7), (-3, 1, 0.4), (1, 1, 2.5)]).unwrap();
        let region = IndexRegion::union(vec![Rect::new(0, 4, 1, 3).unwrap(), Rect::new(6, 7, -2, 0).unwrap()]).unwrap();
        let d = build_weights_with(&f, &region, &BuildOptions { method: WeightMethod::Direct, ..Default::default() }).unwrap();
        let q = build_weights_with(&f, &region, &BuildOptions { method: WeightMethod::Fft, ..Default::default() }).unwrap();
        assert_eq!(d.window(), q.window());
        let scale = d.max_abs();
        for (x, y) in d.values().iter().zip(q.values()) {
            assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn infinite_field_fft_matches_brute_force_inside_window() {
        let f = CoefficientField::exponential(1.0, 0.9).unwrap();
        let region = IndexRegion::square(3).unwrap();
        let t = build_weights(&f, &region, 1e-8).unwrap();
        for &(r, s) in &[(-1i64, -1i64), (-3, 0), (2, -5), (0, 0)] {
            let brute: f64 = region.cells().map(|(j, k)| f.value(j + r, k + s)).sum();
            assert!((t.get(r, s) - brute).abs() < 1e-12, "({r},{s})");
        }
        assert!(t.truncation_epsilon() <= 1e-8);
    }

    #[test]
    fn certificate_brackets_mass() {
        let f = CoefficientField::long_range(1.5, SlowlyVaryingFn::default(), AngularProfile::Constant, 0.0).unwrap();
        let region = IndexRegion::square(4).unwrap();
        let coarse = build_weights(&f, &region, 1e-2).unwrap();
        let fine = build_weights(&f, &region, 1e-3).unwrap();
        assert!(fine.window().cells() >= coarse.window().cells());
        assert!(fine.stored_mass() >= coarse.stored_mass());
        assert!(fine.stored_mass() <= coarse.stored_mass() + coarse.tail_bound());
    }

    #[test]
    fn overflow_and_bad_epsilon() {
        let f = CoefficientField::long_range(1.1, SlowlyVaryingFn::default(), AngularProfile::Constant, 0.0).unwrap();
        let region = IndexRegion::square(8).unwrap();
        let opts = BuildOptions { epsilon: 1e-9, max_cells: 1 << 12, ..Default::default() };
        assert!(matches!(build_weights_with(&f, &region, &opts), Err(Error::WindowOverflow { .. })));
        assert!(build_weights(&f, &region, 1.0).is_err());
    }
}
