//! Decay diagnostics on flow traces: the Gaussian weight and its residual,
//! the weighted energy, rate fits and the pointwise certificate.

mod certificate;
mod decay;
mod energy;
mod weight;

pub use certificate::{default_samples, pointwise_certificate, Certificate};
pub use decay::{accumulation, fit_decay, DecayReport, DecayWindows, SignTolerance};
pub use energy::{weighted_energy, EnergySeries, ENERGY_FLOOR};
pub use weight::{minimal_c5, weight_residual, WeightField};

use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::geometry::{interpolate, WarpedMetric};
use crate::stencil::Parity;

/// Rate constants standing in for the non-constructive ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayPrediction {
    pub n: usize,
    pub lambda: f64,
    /// 2 sqrt(lambda) - slack
    pub spatial_rate: f64,
    /// min(delta, spatial_rate / 2)
    pub alpha: f64,
    pub slack: f64,
    pub delta: f64,
}

impl DecayPrediction {
    /// lambda = (n-1)^2/4 with all slack carried separately.
    pub fn new(n: usize, delta: f64, slack: f64) -> Result<Self, AnalysisError> {
        if n < 3 || !(delta > 0.0) || !(slack >= 0.0) {
            return Err(AnalysisError::BadArgument(format!("n = {n}, delta = {delta}, slack = {slack}")));
        }
        let lambda = (n as f64 - 1.0).powi(2) / 4.0;
        let spatial_rate = 2.0 * lambda.sqrt() - slack;
        if spatial_rate <= 0.0 {
            return Err(AnalysisError::BadArgument(format!("slack {slack} leaves no spatial rate")));
        }
        Ok(Self { n, lambda, spatial_rate, alpha: delta.min(spatial_rate / 2.0), slack, delta })
    }
}

/// The initial metric seen through the flow labels: arclength and radial
/// coefficient of g(0) at any initial coordinate.
pub(crate) struct InitialFrame {
    dr: f64,
    s0: Vec<f64>,
    alpha0: Vec<f64>,
}

impl InitialFrame {
    pub fn new(m0: &WarpedMetric) -> Self {
        Self { dr: m0.grid().spacing(), s0: m0.arclength(), alpha0: m0.alpha().to_vec() }
    }

    /// g(0) distance from the origin to the sphere of initial coordinate `label`.
    pub fn arclength(&self, label: f64) -> f64 {
        interpolate(&self.s0, Parity::Odd, self.dr, label)
    }

    pub fn a(&self, label: f64) -> f64 {
        1.0 + interpolate(&self.alpha0, Parity::Even, self.dr, label)
    }

    /// Distance in g(0) between the spheres of two labels, less the base-ball radius.
    pub fn shell_distance(&self, label: f64, centre: f64, ball: f64) -> f64 {
        ((self.arclength(label) - self.arclength(centre)).abs() - ball).max(0.0)
    }
}

/// Default base-ball radius sqrt(eta)/2 with eta = 0.1.
pub fn default_ball_radius() -> f64 {
    0.1_f64.sqrt() / 2.0
}
