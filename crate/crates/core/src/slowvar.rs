//! Slowly varying functions `l(x)` with `l(lambda x) / l(x) -> 1`.

use serde::{Deserialize, Serialize};
use std::f64::consts::E;

use crate::error::{invalid, Result};

fn unit_scale() -> f64 {
    1.0
}

/// A positive slowly varying function on `[1, inf)`.
///
/// `LogPower` evaluates `c * ln(e + scale * x)^gamma`. The `scale` factor is
/// what a rescaled argument `l(sigma x)` turns into, so standardizing an
/// innovation law keeps its tail inside this family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlowlyVaryingFn {
    Constant {
        c: f64,
    },
    LogPower {
        c: f64,
        gamma: f64,
        #[serde(default = "unit_scale")]
        scale: f64,
    },
}

impl SlowlyVaryingFn {
    pub fn constant(c: f64) -> Result<Self> {
        let l = SlowlyVaryingFn::Constant { c };
        l.validate()?;
        Ok(l)
    }

    pub fn log_power(c: f64, gamma: f64) -> Result<Self> {
        let l = SlowlyVaryingFn::LogPower { c, gamma, scale: 1.0 };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SlowlyVaryingFn::Constant { c } => {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(invalid(format!("slowly varying constant must be positive, got {c}")));
                }
            }
            SlowlyVaryingFn::LogPower { c, gamma, scale } => {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(invalid(format!("slowly varying constant must be positive, got {c}")));
                }
                if !gamma.is_finite() {
                    return Err(invalid("log-power exponent must be finite"));
                }
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(invalid(format!("log-power scale must be positive, got {scale}")));
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            SlowlyVaryingFn::Constant { c } => c,
            SlowlyVaryingFn::LogPower { c, gamma, scale } => {
                c * (E + scale * x.max(0.0)).ln().powf(gamma)
            }
        }
    }

    /// `x l'(x) / l(x)`, the local index of variation (zero for constants).
    pub fn elasticity(&self, x: f64) -> f64 {
        match *self {
            SlowlyVaryingFn::Constant { .. } => 0.0,
            SlowlyVaryingFn::LogPower { gamma, scale, .. } => {
                let y = E + scale * x.max(0.0);
                gamma * scale * x / (y * y.ln())
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, SlowlyVaryingFn::Constant { .. })
    }

    /// Exponent of the logarithmic factor (zero for constants).
    pub fn log_exponent(&self) -> f64 {
        match *self {
            SlowlyVaryingFn::Constant { .. } => 0.0,
            SlowlyVaryingFn::LogPower { gamma, .. } => gamma,
        }
    }

    /// `x -> l(factor * x)`, staying inside the family.
    pub fn rescaled(&self, factor: f64) -> Self {
        match *self {
            SlowlyVaryingFn::Constant { c } => SlowlyVaryingFn::Constant { c },
            SlowlyVaryingFn::LogPower { c, gamma, scale } => SlowlyVaryingFn::LogPower {
                c,
                gamma,
                scale: scale * factor,
            },
        }
    }

    /// `x -> k * l(x)`.
    pub fn times(&self, k: f64) -> Self {
        match *self {
            SlowlyVaryingFn::Constant { c } => SlowlyVaryingFn::Constant { c: c * k },
            SlowlyVaryingFn::LogPower { c, gamma, scale } => SlowlyVaryingFn::LogPower {
                c: c * k,
                gamma,
                scale,
            },
        }
    }

    /// Upper bound for `l(d) / l(m)` valid for all `d >= m >= 1`, returned as
    /// `(d / m)^kappa`. Uses `ln y <= ln y0 (y / y0)^(1 / ln y0)` for `y >= y0 > 1`.
    pub fn growth_exponent_beyond(&self, m: f64) -> f64 {
        match *self {
            SlowlyVaryingFn::Constant { .. } => 0.0,
            SlowlyVaryingFn::LogPower { gamma, scale, .. } => {
                if gamma <= 0.0 {
                    0.0
                } else {
                    gamma / (E + scale * m).ln()
                }
            }
        }
    }
}

impl Default for SlowlyVaryingFn {
    fn default() -> Self {
        SlowlyVaryingFn::Constant { c: 1.0 }
    }
}
