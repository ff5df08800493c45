use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::apps::{DavisGutSpec, DesignPoints, Kernel};
use crate::error::{Error, Result};
use crate::field::{BuildOptions, CoefficientField, IndexRegion, WeightMethod};
use crate::innovations::{InnovationKind, InnovationModel};
use crate::theory::DEFAULT_CT_MARGIN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Coeffs,
    Predict,
    Simulate,
    Verify,
    Regression,
    DavisGut,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Coeffs => "coeffs",
            Mode::Predict => "predict",
            Mode::Simulate => "simulate",
            Mode::Verify => "verify",
            Mode::Regression => "regression",
            Mode::DavisGut => "davis-gut",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionShape {
    /// `[1, n]^2`.
    #[default]
    Square,
    /// `[-n, n]^2`.
    Centered,
}

impl RegionShape {
    pub fn region(&self, n: i64) -> Result<IndexRegion> {
        match self {
            RegionShape::Square => IndexRegion::square(n),
            RegionShape::Centered => IndexRegion::centered(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildSettings {
    #[serde(default = "default_max_cells")]
    pub max_cells: u64,
    #[serde(default)]
    pub method: WeightMethod,
    #[serde(default)]
    pub margin: Option<i64>,
}

fn default_max_cells() -> u64 {
    BuildOptions::default().max_cells
}

impl Default for BuildSettings {
    fn default() -> Self {
        BuildSettings { max_cells: default_max_cells(), method: WeightMethod::Auto, margin: None }
    }
}

/// Pass rule for `verify`: the ratio lies in `[ratio_low, ratio_high]` or
/// the estimate is within `stderr_k` standard errors of the prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub ratio_low: f64,
    pub ratio_high: f64,
    pub stderr_k: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { ratio_low: 0.85, ratio_high: 1.15, stderr_k: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    pub dir: PathBuf,
    /// Prepended to every output file name.
    #[serde(default)]
    pub prefix: String,
    /// Also write each weight table in the binary grid format.
    #[serde(default)]
    pub write_tables: bool,
}

impl Default for OutputSettings {
    fn default() -> Self {
        OutputSettings { dir: PathBuf::from("fielddev-out"), prefix: String::new(), write_tables: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionSettings {
    #[serde(default)]
    pub kernel: Kernel,
    #[serde(default)]
    pub design: DesignPoints,
    /// `h_n = bandwidth * n^-bandwidth_exponent`.
    pub bandwidth: f64,
    #[serde(default)]
    pub bandwidth_exponent: f64,
    pub eval_point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DavisGutSettings {
    #[serde(flatten)]
    pub spec: DavisGutSpec,
    #[serde(default = "default_n_max")]
    pub n_max: u64,
    /// Rows to report; defaults to four log-spaced points per decade.
    #[serde(default)]
    pub report_points: Vec<u64>,
    /// Region sizes with Monte Carlo probabilities (`n_samples` each).
    #[serde(default)]
    pub mc_n_values: Vec<u64>,
}

fn default_n_max() -> u64 {
    1_000_000
}

fn default_field() -> CoefficientField {
    CoefficientField::delta()
}

fn default_innovation() -> InnovationKind {
    InnovationKind::Gaussian
}

fn default_p() -> f64 {
    4.0
}

fn default_epsilon() -> f64 {
    1e-6
}

fn default_ct_margin() -> f64 {
    DEFAULT_CT_MARGIN
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default = "default_field")]
    pub field: CoefficientField,
    #[serde(default)]
    pub region: RegionShape,
    #[serde(default)]
    pub n_values: Vec<i64>,
    #[serde(default = "default_innovation")]
    pub innovation: InnovationKind,
    #[serde(default = "default_p")]
    pub p: f64,
    /// Tail index; taken from the innovation when omitted.
    #[serde(default)]
    pub t: Option<f64>,
    /// Thresholds in units of `sigma_n`.
    #[serde(default)]
    pub thresholds: Vec<f64>,
    #[serde(default)]
    pub n_samples: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub build: BuildSettings,
    #[serde(default)]
    pub two_sided: bool,
    #[serde(default = "default_ct_margin")]
    pub ct_margin: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSettings,
    #[serde(default)]
    pub regression: Option<RegressionSettings>,
    #[serde(default)]
    pub davis_gut: Option<DavisGutSettings>,
}

fn cfg(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text).map_err(|e| cfg(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| cfg(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON serialization, in hex.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn model(&self) -> Result<InnovationModel> {
        InnovationModel::new(self.innovation.clone()).map_err(|e| cfg(format!("innovation: {e}")))
    }

    /// Tail index in force: the innovation's, checked against `t` if given.
    pub fn tail_index(&self) -> Result<Option<f64>> {
        let model = self.model()?;
        match (model.tail().map(|d| d.t), self.t) {
            (Some(a), Some(b)) if a != b => Err(cfg(format!("t = {b} contradicts the innovation's tail index {a}"))),
            (Some(a), _) => Ok(Some(a)),
            (None, t) => Ok(t),
        }
    }

    pub fn build_options(&self) -> BuildOptions {
        BuildOptions { epsilon: self.epsilon, max_cells: self.build.max_cells, method: self.build.method, margin: self.build.margin }
    }

    pub fn validate(&self) -> Result<()> {
        self.field.validate().map_err(|e| cfg(format!("field: {e}")))?;
        let t = self.tail_index()?;
        if !(self.p > 2.0 && self.p.is_finite()) {
            return Err(cfg(format!("p must exceed 2, got {}", self.p)));
        }
        if let Some(t) = t {
            if !(t > 2.0) {
                return Err(cfg(format!("t must exceed 2, got {t}")));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(cfg(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if !(self.ct_margin >= 0.0 && self.ct_margin.is_finite()) {
            return Err(cfg("ct_margin must be nonnegative"));
        }
        let tol = &self.tolerances;
        if !(tol.ratio_low > 0.0 && tol.ratio_low <= 1.0 && tol.ratio_high >= 1.0 && tol.stderr_k >= 0.0) {
            return Err(cfg("tolerances need 0 < ratio_low <= 1 <= ratio_high and stderr_k >= 0"));
        }
        if let Some(m) = self.build.margin {
            if m < 0 {
                return Err(cfg("build.margin must be nonnegative"));
            }
        }
        let needs_regions = self.mode != Mode::DavisGut;
        if needs_regions && self.n_values.is_empty() {
            return Err(cfg(format!("mode {} needs a nonempty n_values list", self.mode.as_str())));
        }
        if let Some(n) = self.n_values.iter().find(|n| **n < 1) {
            return Err(cfg(format!("region sizes must be positive, got {n}")));
        }
        if matches!(self.mode, Mode::Predict | Mode::Simulate | Mode::Verify) {
            if self.thresholds.is_empty() {
                return Err(cfg("thresholds are required"));
            }
            if self.thresholds.iter().any(|x| !(*x >= 0.0 && x.is_finite())) || self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
                return Err(cfg("thresholds must be finite, nonnegative and strictly increasing"));
            }
        }
        if matches!(self.mode, Mode::Simulate | Mode::Verify) && self.n_samples == 0 {
            return Err(cfg("n_samples must be positive"));
        }
        if matches!(self.mode, Mode::Predict | Mode::Verify) {
            if let Some(t) = t {
                if !(self.p < t) {
                    return Err(cfg(format!("heavy-tailed predictions need 2 < p < t, got p = {} and t = {t}", self.p)));
                }
            }
        }
        if self.mode == Mode::Regression {
            let r = self.regression.as_ref().ok_or_else(|| cfg("mode regression needs a regression section"))?;
            if !(r.bandwidth > 0.0 && r.bandwidth.is_finite() && r.bandwidth_exponent.is_finite()) {
                return Err(cfg("regression bandwidth must be positive"));
            }
        }
        if self.mode == Mode::DavisGut {
            let d = self.davis_gut.as_ref().ok_or_else(|| cfg("mode davis-gut needs a davis_gut section"))?;
            d.spec.validate().map_err(|e| cfg(format!("davis_gut: {e}")))?;
            let m = d.spec.psi_first_exceed();
            if d.n_max < m || d.n_max > 100_000_000 {
                return Err(cfg(format!("davis_gut.n_max must lie in [{m}, 1e8]")));
            }
            if d.report_points.iter().any(|n| *n < m || *n > d.n_max) || d.report_points.windows(2).any(|w| w[0] >= w[1]) {
                return Err(cfg(format!("report points must be strictly increasing within [{m}, n_max]")));
            }
            if d.mc_n_values.iter().any(|n| *n < m || *n > d.n_max) || d.mc_n_values.windows(2).any(|w| w[0] >= w[1]) {
                return Err(cfg(format!("mc_n_values must be strictly increasing within [{m}, n_max]")));
            }
            if !d.mc_n_values.is_empty() && self.n_samples == 0 {
                return Err(cfg("Monte Carlo Davis-Gut points need n_samples > 0"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"mode": "coeffs", "n_values": [10]}"#;

    #[test]
    fn defaults_and_round_trip() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.field, CoefficientField::delta());
        assert_eq!(c.p, 4.0);
        let again = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn schema_errors() {
        for bad in [
            "{",
            r#"{"mode": "coeffs"}"#,
            r#"{"mode": "bogus", "n_values": [1]}"#,
            r#"{"mode": "coeffs", "n_values": [10], "unknown": 1}"#,
            r#"{"mode": "verify", "n_values": [10], "thresholds": [1.0]}"#,
            r#"{"mode": "predict", "n_values": [10], "thresholds": [2.0, 1.0]}"#,
            r#"{"mode": "predict", "n_values": [10], "thresholds": [1.0], "innovation": {"kind": "student_like", "t": 3.0}, "p": 4.0}"#,
            r#"{"mode": "predict", "n_values": [10], "thresholds": [1.0], "innovation": {"kind": "student_like", "t": 3.0}, "t": 4.0, "p": 2.5}"#,
            r#"{"mode": "regression", "n_values": [10]}"#,
            r#"{"mode": "davis-gut"}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn heavy_tail_index_comes_from_the_innovation() {
        let c = ExperimentConfig::from_json(
            r#"{"mode": "predict", "n_values": [10], "thresholds": [1.0], "p": 2.5,
                "innovation": {"kind": "two_sided_pareto_hybrid", "t": 3.0}}"#,
        )
        .unwrap();
        assert_eq!(c.tail_index().unwrap(), Some(3.0));
    }

    #[test]
    fn davis_gut_section() {
        let c = ExperimentConfig::from_json(
            r#"{"mode": "davis-gut", "davis_gut": {"weight": {"kind": "log"}, "c": 2.718281828459045, "epsilon": 0.5, "n_max": 1000}}"#,
        )
        .unwrap();
        assert_eq!(c.davis_gut.unwrap().spec.psi_first_exceed(), 16);
    }
}
