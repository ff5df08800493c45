use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

use super::coeffs::CoefficientField;
use crate::error::{invalid, Error, Result};

/// Inclusive index window `[r_min, r_max] x [s_min, s_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub r_min: i64,
    pub r_max: i64,
    pub s_min: i64,
    pub s_max: i64,
}

impl Window {
    pub fn rows(&self) -> usize {
        (self.r_max - self.r_min + 1) as usize
    }

    pub fn cols(&self) -> usize {
        (self.s_max - self.s_min + 1) as usize
    }

    pub fn cells(&self) -> usize {
        self.rows() * self.cols()
    }

    pub fn contains(&self, r: i64, s: i64) -> bool {
        (self.r_min..=self.r_max).contains(&r) && (self.s_min..=self.s_max).contains(&s)
    }
}

/// Data needed to bound `sum |b|^q` outside the stored window for any `q`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct TailCertificate {
    pub field: CoefficientField,
    pub margin: i64,
    pub ring_const: f64,
    pub weight_mass: f64,
}

impl TailCertificate {
    pub fn power_tail(&self, q: f64) -> f64 {
        self.weight_mass.powf(q) * self.field.tail_ring_sum(self.margin, self.ring_const, q)
    }
}

/// Dense weights `b_{n,r,s}` on a finite window with an l2 truncation
/// certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    window: Window,
    values: Vec<f64>,
    stored_mass: f64,
    tail_bound: f64,
    n_label: String,
    certificate: Option<TailCertificate>,
}

const MAGIC: &[u8; 4] = b"WTAB";
const FORMAT_VERSION: u32 = 1;
const CSV_CELL_CAP: usize = 1 << 20;

impl WeightTable {
    pub(crate) fn assemble(
        window: Window,
        values: Vec<f64>,
        tail_bound: f64,
        n_label: String,
        certificate: Option<TailCertificate>,
    ) -> Result<Self> {
        debug_assert_eq!(values.len(), window.cells());
        let stored_mass: f64 = values.iter().map(|b| b * b).sum();
        if !(stored_mass > 0.0) {
            return Err(Error::DegenerateField);
        }
        if !stored_mass.is_finite() || !tail_bound.is_finite() {
            return Err(invalid("weight field mass is not finite"));
        }
        Ok(WeightTable { window, values, stored_mass, tail_bound, n_label, certificate })
    }

    /// Exact table from a dense grid (no truncation).
    pub fn from_grid(window: Window, values: Vec<f64>, n_label: impl Into<String>) -> Result<Self> {
        if window.r_min > window.r_max || window.s_min > window.s_max || values.len() != window.cells() {
            return Err(invalid("grid size does not match the window"));
        }
        Self::assemble(window, values, 0.0, n_label.into(), None)
    }

    /// Exact table holding `weights` in a single row.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::DegenerateField);
        }
        let window = Window { r_min: 0, r_max: 0, s_min: 0, s_max: weights.len() as i64 - 1 };
        Self::from_grid(window, weights.to_vec(), format!("weights[{}]", weights.len()))
    }

    pub fn window(&self) -> Window {
        self.window
    }

    /// Row-major values, `r` outer.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, r: i64, s: i64) -> f64 {
        if !self.window.contains(r, s) {
            return 0.0;
        }
        let i = (r - self.window.r_min) as usize * self.window.cols() + (s - self.window.s_min) as usize;
        self.values[i]
    }

    /// `(r, s, b)` for every stored cell.
    pub fn iter(&self) -> impl Iterator<Item = (i64, i64, f64)> + '_ {
        let w = self.window;
        let cols = w.cols();
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &b)| (w.r_min + (i / cols) as i64, w.s_min + (i % cols) as i64, b))
    }

    pub fn nonzero(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied().filter(|b| *b != 0.0)
    }

    pub fn nonzero_count(&self) -> usize {
        self.values.iter().filter(|b| **b != 0.0).count()
    }

    /// `sigma_n^2`: stored mass plus the midpoint of the certified tail.
    pub fn sigma2(&self) -> f64 {
        self.stored_mass + 0.5 * self.tail_bound
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2().sqrt()
    }

    pub fn stored_mass(&self) -> f64 {
        self.stored_mass
    }

    /// Upper bound on the l2 mass outside the window.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn truncation_epsilon(&self) -> f64 {
        self.tail_bound / self.stored_mass
    }

    pub fn is_exact(&self) -> bool {
        self.tail_bound == 0.0
    }

    pub fn n_label(&self) -> &str {
        &self.n_label
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, b| m.max(b.abs()))
    }

    /// `sum |b|^t` over the stored window.
    pub fn power_sum(&self, t: f64) -> f64 {
        if t == 2.0 {
            return self.stored_mass;
        }
        self.values.iter().filter(|b| **b != 0.0).map(|b| b.abs().powf(t)).sum()
    }

    /// Upper bound on `sum |b|^t` outside the window.
    pub fn power_tail_bound(&self, t: f64) -> f64 {
        if self.tail_bound == 0.0 {
            return 0.0;
        }
        match &self.certificate {
            Some(c) if t == 2.0 => c.power_tail(t).min(self.tail_bound),
            Some(c) => c.power_tail(t),
            None => f64::INFINITY,
        }
    }

    /// `k * b` with the certificate scaled accordingly.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        let certificate = self.certificate.clone().map(|mut c| {
            c.weight_mass *= k.abs();
            c
        });
        Self::assemble(
            self.window,
            self.values.iter().map(|b| b * k).collect(),
            self.tail_bound * k * k,
            self.n_label.clone(),
            certificate,
        )
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.n_label = label.into();
        self
    }

    /// Little-endian binary grid: magic, version, window bounds, sigma2,
    /// truncation epsilon, label, then row-major values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        for v in [self.window.r_min, self.window.r_max, self.window.s_min, self.window.s_max] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.sigma2().to_le_bytes())?;
        w.write_all(&self.truncation_epsilon().to_le_bytes())?;
        w.write_all(&(self.n_label.len() as u32).to_le_bytes())?;
        w.write_all(self.n_label.as_bytes())?;
        let mut buf = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(invalid("not a weight table file"));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != FORMAT_VERSION {
            return Err(invalid("unsupported weight table version"));
        }
        let mut bounds = [0i64; 4];
        for v in bounds.iter_mut() {
            r.read_exact(&mut b8)?;
            *v = i64::from_le_bytes(b8);
        }
        r.read_exact(&mut b8)?;
        let _sigma2 = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let eps = f64::from_le_bytes(b8);
        r.read_exact(&mut b4)?;
        let mut label = vec![0u8; u32::from_le_bytes(b4) as usize];
        r.read_exact(&mut label)?;
        let label = String::from_utf8(label).map_err(|_| invalid("label is not UTF-8"))?;
        let window = Window { r_min: bounds[0], r_max: bounds[1], s_min: bounds[2], s_max: bounds[3] };
        if window.r_min > window.r_max || window.s_min > window.s_max {
            return Err(invalid("corrupt window bounds"));
        }
        let mut raw = vec![0u8; window.cells() * 8];
        r.read_exact(&mut raw)?;
        let values: Vec<f64> = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let stored: f64 = values.iter().map(|b| b * b).sum();
        Self::assemble(window, values, eps * stored, label, None)
    }

    /// `r,s,b` rows for every stored cell; refuses large windows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        if self.window.cells() > CSV_CELL_CAP {
            return Err(invalid(format!("window of {} cells is too large for CSV export", self.window.cells())));
        }
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["r", "s", "b"]).map_err(csv_err)?;
        for (r, s, b) in self.iter() {
            out.write_record([r.to_string(), s.to_string(), format!("{b:e}")]).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => invalid(format!("csv: {other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let w = Window { r_min: -2, r_max: 0, s_min: 3, s_max: 4 };
        let t = WeightTable::from_grid(w, vec![1.0, -2.0, 0.5, 0.0, 3.25, 1e-300], "x").unwrap();
        let mut buf = Vec::new();
        t.write_binary(&mut buf).unwrap();
        let back = WeightTable::read_binary(buf.as_slice()).unwrap();
        assert_eq!(back, t);
        assert!(WeightTable::read_binary(&buf[..10]).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let t = WeightTable::from_weights(&[1.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 3);
        assert!(s.starts_with("r,s,b\n0,0,1e0\n"));
    }

    #[test]
    fn zero_table_is_degenerate() {
        assert!(matches!(WeightTable::from_weights(&[0.0, 0.0]), Err(Error::DegenerateField)));
    }
}
