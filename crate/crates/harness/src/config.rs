use std::path::PathBuf;

use hyperflow::analysis::DecayWindows;
use hyperflow::flow::{FlowConfig, OuterBc};
use hyperflow::geometry::Profile;
use hyperflow::grid::RadialGrid;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    FixedPoint,
    Conformal,
    Theorem1,
    Theorem2,
    SpectralSuite,
    ConvolutionSuite,
    ComparisonSuite,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::FixedPoint,
        Scenario::Conformal,
        Scenario::Theorem1,
        Scenario::Theorem2,
        Scenario::SpectralSuite,
        Scenario::ConvolutionSuite,
        Scenario::ComparisonSuite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::FixedPoint => "fixed-point",
            Scenario::Conformal => "conformal",
            Scenario::Theorem1 => "theorem1",
            Scenario::Theorem2 => "theorem2",
            Scenario::SpectralSuite => "spectral-suite",
            Scenario::ConvolutionSuite => "convolution-suite",
            Scenario::ComparisonSuite => "comparison-suite",
        }
    }

    fn needs_flow(self) -> bool {
        matches!(self, Scenario::FixedPoint | Scenario::Conformal | Scenario::Theorem1 | Scenario::Theorem2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridParams {
    pub r_max: f64,
    pub dr: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self { r_max: 15.0, dr: 0.05 }
    }
}

impl GridParams {
    pub fn build(&self) -> Result<RadialGrid, hyperflow::GeometryError> {
        RadialGrid::with_radius(self.r_max, self.dr)
    }
}

/// Thresholds asserted by the flow scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Checks {
    /// Bound on eps_curv over the whole run (theorem1, theorem2).
    pub eps1: f64,
    /// Bound on sup|h| and on metric drift (fixed-point).
    pub fixed_point_tol: f64,
    pub drift_tol: f64,
    /// Conformal factor of the initial metric and the times it is checked at.
    pub conformal_c0: f64,
    pub conformal_times: Vec<f64>,
    pub conformal_tol: f64,
    /// Relative tolerance on the conformal decay rate 2(n-1).
    pub rate_tol: f64,
    /// Smallest accepted fitted decay rate of sup|h|.
    pub min_temporal_rate: f64,
    /// Post-transient log-slopes of the weighted energy must stay below
    /// -energy_fraction * 2 lambda.
    pub energy_fraction: f64,
    /// Reference time of the Gaussian weight; absent means the flat weight.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_t_ref: Option<f64>,
    pub weight_c5: f64,
}

impl Default for Checks {
    fn default() -> Self {
        Self {
            eps1: 0.1,
            fixed_point_tol: 1e-6,
            drift_tol: 1e-5,
            conformal_c0: 1.05,
            conformal_times: vec![0.1, 0.5],
            conformal_tol: 1e-5,
            rate_tol: 0.05,
            min_temporal_rate: 0.0,
            energy_fraction: 0.5,
            weight_t_ref: None,
            weight_c5: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictionParams {
    /// Taken off 2 sqrt(lambda) and used as C5 = C10 in the certificate.
    pub slack: f64,
}

impl Default for PredictionParams {
    fn default() -> Self {
        Self { slack: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralParams {
    pub dr: f64,
    /// Ball radii for the function spectrum, increasing.
    pub r_max: Vec<f64>,
    pub exact_tol: f64,
    /// Relative distance of the largest ball's value from (n-1)^2/4.
    pub asymptote_tol: f64,
    pub tensor_r_max: f64,
    pub tensor_dr: f64,
    pub tensor_samples: usize,
    pub tensor_slack: f64,
    pub knots: usize,
    pub support: [f64; 2],
    pub minimize_tol: f64,
}

impl Default for SpectralParams {
    fn default() -> Self {
        Self {
            dr: 0.01,
            r_max: vec![10.0, 20.0, 30.0],
            exact_tol: 1e-4,
            asymptote_tol: 0.01,
            tensor_r_max: 20.0,
            tensor_dr: 0.02,
            tensor_samples: 100,
            tensor_slack: 0.05,
            knots: 10,
            support: [0.5, 15.0],
            minimize_tol: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvolutionParams {
    pub a: f64,
    pub b: f64,
    pub d_max: f64,
    pub d_step: f64,
    pub origin_tol: f64,
    pub slope_tol: f64,
}

impl Default for ConvolutionParams {
    fn default() -> Self {
        Self { a: 3.0, b: 1.0, d_max: 10.0, d_step: 0.5, origin_tol: 1e-3, slope_tol: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComparisonParams {
    pub r_max_scan: f64,
    pub points: usize,
    pub min_eps0: f64,
}

impl Default for ComparisonParams {
    fn default() -> Self {
        Self { r_max_scan: 200.0, points: 512, min_eps0: 1e-3 }
    }
}

fn default_n() -> usize {
    6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Where artifacts go; absent means nothing is written.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Also write every snapshot metric.
    #[serde(default)]
    pub write_snapshots: bool,
    #[serde(default)]
    pub grid: GridParams,
    #[serde(default)]
    pub profile: Profile,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub prediction: PredictionParams,
    #[serde(default)]
    pub windows: DecayWindows,
    #[serde(default)]
    pub checks: Checks,
    #[serde(default)]
    pub spectral: SpectralParams,
    #[serde(default)]
    pub convolution: ConvolutionParams,
    #[serde(default)]
    pub comparison: ComparisonParams,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("{field}: {msg}")]
    Field { field: String, msg: String },
}

fn field(field: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: field.to_string(), msg: msg.into() }
}

impl ExperimentConfig {
    /// The defaults each scenario is meant to run with.
    pub fn preset(scenario: Scenario) -> Self {
        let mut c = Self {
            scenario,
            n: 6,
            eps: 0.0,
            delta: None,
            seed: 0,
            output_dir: None,
            write_snapshots: false,
            grid: GridParams::default(),
            profile: Profile::default(),
            flow: FlowConfig::default(),
            prediction: PredictionParams::default(),
            windows: DecayWindows::default(),
            checks: Checks::default(),
            spectral: SpectralParams::default(),
            convolution: ConvolutionParams::default(),
            comparison: ComparisonParams::default(),
        };
        c.flow.snapshot_stride = 40;
        match scenario {
            Scenario::FixedPoint => {
                c.n = 4;
                c.flow.t_end = 1.0;
            }
            Scenario::Conformal => {
                c.grid.r_max = 12.0;
                c.flow.outer_bc = OuterBc::Free;
                c.flow.snapshot_stride = 10;
            }
            Scenario::Theorem1 | Scenario::Theorem2 => {
                c.eps = 0.01;
                c.delta = Some(3.0);
                c.flow.t_end = 2.0;
            }
            Scenario::SpectralSuite => {}
            Scenario::ConvolutionSuite => c.n = 3,
            Scenario::ComparisonSuite => c.delta = Some(0.1),
        }
        c
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let c: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    /// Checks every precondition the scenario will hit, before any compute.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = self.scenario;
        if self.n < 3 {
            return Err(field("n", format!("n = {} rejected: each n >= 3", self.n)));
        }
        if self.n > 8 {
            return Err(field("n", format!("n = {} above the supported maximum 8", self.n)));
        }
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            return Err(field("eps", "must be finite and >= 0"));
        }
        if let Some(d) = self.delta {
            if !(d.is_finite() && d > 0.0) {
                return Err(field("delta", format!("must be > 0, got {d}")));
            }
        }
        match s {
            Scenario::Theorem1 => {
                self.delta.ok_or_else(|| field("delta", "required by theorem1"))?;
                if !(self.eps > 0.0) {
                    return Err(field("eps", "theorem1 needs a perturbation, eps > 0"));
                }
            }
            Scenario::Theorem2 => {
                if self.n <= 5 {
                    return Err(field("n", format!("theorem2 needs n > 5, got {}", self.n)));
                }
                let d = self.delta.ok_or_else(|| field("delta", "required by theorem2"))?;
                if d <= 2.0 {
                    return Err(field("delta", format!("theorem2 needs delta > 2, got {d}")));
                }
                if !(self.eps > 0.0) {
                    return Err(field("eps", "theorem2 needs a perturbation, eps > 0"));
                }
            }
            Scenario::ComparisonSuite => {
                self.delta.ok_or_else(|| field("delta", "required by comparison-suite"))?;
            }
            _ => {}
        }
        if s.needs_flow() {
            self.grid.build().map_err(|e| field("grid", e.to_string()))?;
            self.flow.validate().map_err(|e| field("flow", e.to_string()))?;
            if self.prediction.slack < 0.0 || self.prediction.slack >= (self.n as f64 - 1.0) {
                return Err(field("prediction.slack", "must lie in [0, n - 1)"));
            }
            let c = &self.checks;
            if !(c.eps1 > 0.0) {
                return Err(field("checks.eps1", "must be > 0"));
            }
            if s == Scenario::Conformal {
                if !(c.conformal_c0 > 0.0 && c.conformal_c0.is_finite()) {
                    return Err(field("checks.conformal_c0", "must be > 0"));
                }
                if c.conformal_times.iter().any(|&t| !(t >= 0.0 && t <= self.flow.t_end)) {
                    return Err(field("checks.conformal_times", "must lie in [0, flow.t_end]"));
                }
            }
            if let Some(t) = c.weight_t_ref {
                if !(t > 0.0) {
                    return Err(field("checks.weight_t_ref", "must be > 0"));
                }
            }
            if !(c.weight_c5 >= 0.0) {
                return Err(field("checks.weight_c5", "must be >= 0"));
            }
            if matches!(s, Scenario::Theorem1 | Scenario::Theorem2) && !(self.windows.t_lo < self.flow.t_end) {
                return Err(field("windows.t_lo", "must precede flow.t_end"));
            }
            if self.windows.r_lo >= self.windows.r_hi {
                return Err(field("windows", "r_lo must be below r_hi"));
            }
        }
        if s == Scenario::SpectralSuite {
            let p = &self.spectral;
            if p.r_max.is_empty() || p.r_max.windows(2).any(|w| w[1] <= w[0]) {
                return Err(field("spectral.r_max", "must be a non-empty increasing list"));
            }
            for &r in &p.r_max {
                RadialGrid::with_radius(r, p.dr).map_err(|e| field("spectral.r_max", e.to_string()))?;
            }
            RadialGrid::with_radius(p.tensor_r_max, p.tensor_dr).map_err(|e| field("spectral.tensor_r_max", e.to_string()))?;
            if p.knots < 2 {
                return Err(field("spectral.knots", "need at least 2"));
            }
            let [lo, hi] = p.support;
            if !(lo > 0.0 && hi > lo && hi < p.tensor_r_max - 3.0 * p.tensor_dr) {
                return Err(field("spectral.support", "must lie inside (0, tensor_r_max)"));
            }
        }
        if s == Scenario::ConvolutionSuite {
            let p = &self.convolution;
            if !(p.a > 0.0 && p.b > 0.0) {
                return Err(field("convolution", "exponents must be positive"));
            }
            if p.a + p.b <= self.n as f64 - 1.0 {
                return Err(field("convolution", format!("a + b = {} must exceed n - 1 = {}", p.a + p.b, self.n - 1)));
            }
            if !(p.d_step > 0.0 && p.d_max >= 2.0 * p.d_step) {
                return Err(field("convolution.d_step", "need d_step > 0 and at least three distances"));
            }
        }
        if s == Scenario::ComparisonSuite {
            let p = &self.comparison;
            if !(p.r_max_scan > 1.0) || p.points < 2 {
                return Err(field("comparison", "need r_max_scan > 1 and at least 2 points"));
            }
        }
        Ok(())
    }
}
