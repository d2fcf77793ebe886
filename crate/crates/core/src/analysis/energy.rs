use serde::{Deserialize, Serialize};

use super::{InitialFrame, WeightField};
use crate::error::AnalysisError;
use crate::flow::FlowTrace;
use crate::integrals::sphere_area;

/// The series stops once I falls below this.
pub const ENERGY_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySeries {
    pub times: Vec<f64>,
    /// I(s) = integral of |h|^2 e^xi dV_{g(s)}
    pub energy: Vec<f64>,
    /// d ln I / ds by three-point differences, at times[1..len-1]
    pub log_slope: Vec<f64>,
    /// True when the series was cut at ENERGY_FLOOR.
    pub truncated: bool,
}

impl EnergySeries {
    /// (time, log slope) pairs.
    pub fn slopes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times[1..].iter().cloned().zip(self.log_slope.iter().cloned())
    }
}

pub fn weighted_energy(trace: &FlowTrace, weight: &WeightField) -> Result<EnergySeries, AnalysisError> {
    if trace.states.is_empty() {
        return Err(AnalysisError::EmptyTrace);
    }
    let m0 = &trace.first().metric;
    let n = m0.dimension();
    let frame = InitialFrame::new(m0);
    let grid = m0.grid();
    let m = grid.interior_len(trace.config.collar);
    let omega = sphere_area(n - 1);
    let mut out = EnergySeries { times: Vec::new(), energy: Vec::new(), log_slope: Vec::new(), truncated: false };
    for st in trace.states.iter().filter(|s| s.t < weight.t_ref) {
        let mut sum = 0.0;
        for i in 0..m {
            let h2 = st.curvature.h_norm[i] * st.curvature.h_norm[i];
            if h2 == 0.0 {
                continue;
            }
            let d0 = frame.shell_distance(st.labels[i], weight.centre, weight.ball_radius);
            let ln_w = st.metric.a(i).ln() + (n - 1) as f64 * st.metric.b(i).ln();
            sum += (h2.ln() + weight.xi(d0, st.t) + ln_w).exp();
        }
        let value = omega * sum * grid.spacing();
        if value < ENERGY_FLOOR {
            out.truncated = true;
            break;
        }
        out.times.push(st.t);
        out.energy.push(value);
    }
    let (t, e) = (&out.times, &out.energy);
    for k in 1..t.len().saturating_sub(1) {
        let (h1, h2) = (t[k] - t[k - 1], t[k + 1] - t[k]);
        let (l0, l1, l2) = (e[k - 1].ln(), e[k].ln(), e[k + 1].ln());
        out.log_slope.push((-h2 / (h1 * (h1 + h2))) * l0 + ((h2 - h1) / (h1 * h2)) * l1 + (h1 / (h2 * (h1 + h2))) * l2);
    }
    Ok(out)
}
