//! Fixed-design kernel smoothers over index regions and their LIL envelopes.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{build_weighted, BuildOptions, CoefficientField, IndexRegion, WeightAggregates, WeightTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    #[default]
    Epanechnikov,
    Gaussian,
    /// Constant kernel; every design point gets the same weight.
    Flat,
}

impl Kernel {
    /// Product kernel at the scaled offset `u`.
    pub fn eval(&self, u: &[f64]) -> f64 {
        match self {
            Kernel::Epanechnikov => u.iter().map(|v| 0.75 * (1.0 - v * v).max(0.0)).product(),
            Kernel::Gaussian => {
                let r2: f64 = u.iter().map(|v| v * v).sum();
                (-0.5 * r2).exp()
            }
            Kernel::Flat => 1.0,
        }
    }
}

/// Placement of the design points `z_{j,k}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DesignPoints {
    /// `((j - j1 + 1/2) / width, (k - k1 + 1/2) / height)` over the bounding box.
    #[default]
    Lattice,
    /// One-dimensional design `(i + 1/2) / N`, `i` the cell's position in
    /// region order.
    Line,
    /// Explicit points, one per region cell in region order.
    Explicit { points: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionDesign {
    pub region: IndexRegion,
    #[serde(default)]
    pub design: DesignPoints,
    #[serde(default)]
    pub kernel: Kernel,
    pub bandwidth: f64,
    pub eval_point: Vec<f64>,
}

impl RegressionDesign {
    pub fn new(region: IndexRegion, kernel: Kernel, bandwidth: f64, eval_point: Vec<f64>) -> Self {
        RegressionDesign { region, design: DesignPoints::Lattice, kernel, bandwidth, eval_point }
    }

    pub fn with_design(mut self, design: DesignPoints) -> Self {
        self.design = design;
        self
    }

    pub fn dim(&self) -> usize {
        match &self.design {
            DesignPoints::Lattice => 2,
            DesignPoints::Line => 1,
            DesignPoints::Explicit { points } => points.first().map_or(0, Vec::len),
        }
    }

    /// Design points in region cell order.
    pub fn points(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.region.cardinality() as usize;
        match &self.design {
            DesignPoints::Lattice => {
                let bb = self.region.bounding_box();
                let (w, h) = (bb.width() as f64, bb.height() as f64);
                Ok(self
                    .region
                    .cells()
                    .map(|(j, k)| vec![((j - bb.j1) as f64 + 0.5) / w, ((k - bb.k1) as f64 + 0.5) / h])
                    .collect())
            }
            DesignPoints::Line => Ok((0..n).map(|i| vec![(i as f64 + 0.5) / n as f64]).collect()),
            DesignPoints::Explicit { points } => {
                if points.len() != n {
                    return Err(invalid(format!("{} design points for {n} cells", points.len())));
                }
                let d = self.dim();
                if !(d == 1 || d == 2) || points.iter().any(|p| p.len() != d || p.iter().any(|v| !v.is_finite())) {
                    return Err(invalid("design points must be finite and all of dimension 1 or 2"));
                }
                Ok(points.clone())
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(invalid(format!("bandwidth must be positive, got {}", self.bandwidth)));
        }
        if self.eval_point.len() != self.dim() || self.eval_point.iter().any(|v| !v.is_finite()) {
            return Err(invalid(format!("evaluation point must be a finite point of dimension {}", self.dim())));
        }
        Ok(())
    }
}

/// Normalized smoother weights `K((z - z_jk)/h) / sum K(...)` in region
/// cell order.
pub fn regression_weights(design: &RegressionDesign) -> Result<Vec<(i64, i64, f64)>> {
    design.validate()?;
    let pts = design.points()?;
    let mut u = vec![0.0; design.dim()];
    let raw: Vec<f64> = pts
        .iter()
        .map(|p| {
            for ((ui, zi), pi) in u.iter_mut().zip(&design.eval_point).zip(p) {
                *ui = (zi - pi) / design.bandwidth;
            }
            design.kernel.eval(&u)
        })
        .collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyKernelSupport);
    }
    Ok(design.region.cells().zip(raw).map(|((j, k), v)| (j, k, v / total)).collect())
}

/// Weight table of the smoother `g_n(z) = sum w_jk(z) X_jk`.
pub fn smoother_weight_table(design: &RegressionDesign, field: &CoefficientField, epsilon: f64) -> Result<WeightTable> {
    smoother_weight_table_with(design, field, &BuildOptions::with_epsilon(epsilon))
}

pub fn smoother_weight_table_with(design: &RegressionDesign, field: &CoefficientField, opts: &BuildOptions) -> Result<WeightTable> {
    let w: Vec<f64> = regression_weights(design)?.into_iter().map(|c| c.2).collect();
    let z: Vec<String> = design.eval_point.iter().map(|v| format!("{v}")).collect();
    build_weighted(field, &design.region, Some(&w), opts, format!("{}@({})", design.region.label(), z.join(",")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LilMode {
    /// `sigma sqrt(2 ln U_np^-1)`.
    UNp,
    /// `sigma sqrt(2 ln ln n)`, valid when `rho <= (ln n)^(-1/(p-2))`.
    LogLog { n: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LilEnvelope {
    /// Envelope in absolute units.
    pub value: f64,
    /// Envelope in units of `sigma`.
    pub x_sigma: f64,
    pub u_np: f64,
    /// Whether `rho <= (ln n)^(-1/(p-2))`; only reported in log-log mode.
    pub rho_condition: Option<bool>,
}

pub fn lil_envelope(agg: &WeightAggregates, p: f64, sigma: f64, mode: LilMode) -> Result<LilEnvelope> {
    if !(p > 2.0) {
        return Err(invalid(format!("moment order p must exceed 2, got {p}")));
    }
    if !(sigma > 0.0) {
        return Err(invalid("sigma must be positive"));
    }
    let u = agg.u(p).ok_or_else(|| invalid(format!("aggregates lack exponent {p}")))?;
    if !(u < 1.0) {
        return Err(Error::InvalidRegime(format!("U_np = {u}; the envelope needs U_np < 1")));
    }
    let (x, rho_condition) = match mode {
        LilMode::UNp => ((2.0 * (1.0 / u).ln()).sqrt(), None),
        LilMode::LogLog { n } => {
            if n < 3 {
                return Err(Error::InvalidRegime(format!("log-log envelope needs n >= 3, got {n}")));
            }
            let ln_n = (n as f64).ln();
            ((2.0 * ln_n.ln()).sqrt(), Some(agg.rho() <= ln_n.powf(-1.0 / (p - 2.0))))
        }
    };
    Ok(LilEnvelope { value: sigma * x, x_sigma: x, u_np: u, rho_condition })
}
