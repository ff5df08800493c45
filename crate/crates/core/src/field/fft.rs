//! Two-dimensional FFT cross-correlation of real grids.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Dense real grid, row-major with `rows` along the first index axis.
#[derive(Debug, Clone)]
pub(crate) struct Grid {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

/// Smallest `m >= n` whose only prime factors are 2, 3 and 5.
pub(crate) fn fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2, 3, 5] {
            while k % p == 0 {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

/// Transform length needed on one axis so that circular correlation equals
/// the linear one for output offsets `o0 .. o0 + out - 1`.
pub(crate) fn axis_len(a_len: usize, g_len: usize, o0: i64, out: usize) -> usize {
    let lo = o0.min(0);
    let hi = (o0 + out as i64 + g_len as i64 - 2).max(a_len as i64 - 1);
    fast_len((hi - lo + 1) as usize)
}

/// Number of complex cells the transform of [`correlate`] would allocate.
pub(crate) fn transform_cells(a: (usize, usize), g: (usize, usize), o: (i64, i64), out: (usize, usize)) -> u64 {
    axis_len(a.0, g.0, o.0, out.0) as u64 * axis_len(a.1, g.1, o.1, out.1) as u64
}

/// `out[i][l] = sum_{p,q} g[p][q] a[i0 + i + p][l0 + l + q]`, with `a`
/// taken as zero outside its grid.
pub(crate) fn correlate(a: &Grid, g: &Grid, i0: i64, l0: i64, out_rows: usize, out_cols: usize) -> Vec<f64> {
    let nr = axis_len(a.rows, g.rows, i0, out_rows);
    let nc = axis_len(a.cols, g.cols, l0, out_cols);
    let mut planner = FftPlanner::<f64>::new();
    let (fr, fc) = (planner.plan_fft_forward(nr), planner.plan_fft_forward(nc));
    let (ir, ic) = (planner.plan_fft_inverse(nr), planner.plan_fft_inverse(nc));

    let mut ah = embed(a, nr, nc);
    forward(&mut ah, nr, nc, &fc, &fr);
    let mut gh = embed(g, nr, nc);
    forward(&mut gh, nr, nc, &fc, &fr);
    for (x, y) in ah.iter_mut().zip(gh.iter()) {
        *x *= y.conj();
    }
    drop(gh);
    // ah is in transposed (nc x nr) layout.
    process_rows(&ir, &mut ah, nr);
    let mut c = transpose(&ah, nc, nr);
    drop(ah);
    process_rows(&ic, &mut c, nc);

    let scale = 1.0 / (nr * nc) as f64;
    let mut out = Vec::with_capacity(out_rows * out_cols);
    for i in 0..out_rows {
        let ci = (i0 + i as i64).rem_euclid(nr as i64) as usize;
        for l in 0..out_cols {
            let cl = (l0 + l as i64).rem_euclid(nc as i64) as usize;
            out.push(c[ci * nc + cl].re * scale);
        }
    }
    out
}

fn embed(x: &Grid, nr: usize, nc: usize) -> Vec<Complex<f64>> {
    let mut buf = vec![Complex::new(0.0, 0.0); nr * nc];
    for i in 0..x.rows {
        for (l, &v) in x.data[i * x.cols..(i + 1) * x.cols].iter().enumerate() {
            buf[i * nc + l] = Complex::new(v, 0.0);
        }
    }
    buf
}

fn forward(buf: &mut Vec<Complex<f64>>, nr: usize, nc: usize, fc: &Arc<dyn Fft<f64>>, fr: &Arc<dyn Fft<f64>>) {
    process_rows(fc, buf, nc);
    *buf = transpose(buf, nr, nc);
    process_rows(fr, buf, nr);
}

fn process_rows(plan: &Arc<dyn Fft<f64>>, buf: &mut [Complex<f64>], len: usize) {
    debug_assert_eq!(buf.len() % len, 0);
    let mut scratch = vec![Complex::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    plan.process_with_scratch(buf, &mut scratch);
}

/// Transpose a `rows x cols` row-major buffer.
fn transpose(src: &[Complex<f64>], rows: usize, cols: usize) -> Vec<Complex<f64>> {
    const B: usize = 32;
    let mut dst = vec![Complex::new(0.0, 0.0); src.len()];
    for ib in (0..rows).step_by(B) {
        for jb in (0..cols).step_by(B) {
            for i in ib..(ib + B).min(rows) {
                for j in jb..(jb + B).min(cols) {
                    dst[j * rows + i] = src[i * cols + j];
                }
            }
        }
    }
    dst
}
