//! Smallest C with |h|^2(x, t) <= C RHS(x, t), where
//!
//!   RHS = integral |h|^2(y, 0) exp(-d0(y)^2/((2 + C5) t) - (2 lambda - C10) t) dV_{g(0)}
//!
//! and C5 = C10 = the prediction slack. Distances are between the spheres
//! through x and y, which underestimates d(x, y) and so overestimates RHS.

use serde::{Deserialize, Serialize};

use super::{default_ball_radius, DecayPrediction, InitialFrame};
use crate::error::AnalysisError;
use crate::flow::FlowTrace;
use crate::integrals::sphere_area;

/// ln RHS below which a sample counts as underflowed.
const LN_UNDERFLOW: f64 = -700.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub c: f64,
    pub samples: usize,
    /// Samples dropped because RHS underflowed or t = 0.
    pub skipped: usize,
    pub c5: f64,
    pub c10: f64,
}

/// Every `node_stride`-th interior node at every `snap_stride`-th snapshot with t > 0.
pub fn default_samples(trace: &FlowTrace, node_stride: usize, snap_stride: usize) -> Vec<(usize, usize)> {
    let m = trace.first().metric.grid().interior_len(trace.config.collar);
    let mut out = Vec::new();
    for (k, st) in trace.states.iter().enumerate().step_by(snap_stride.max(1)) {
        if st.t > 0.0 {
            out.extend((0..m).step_by(node_stride.max(1)).map(|i| (i, k)));
        }
    }
    out
}

pub fn pointwise_certificate(
    trace: &FlowTrace,
    pred: &DecayPrediction,
    samples: &[(usize, usize)],
) -> Result<Certificate, AnalysisError> {
    if trace.states.is_empty() {
        return Err(AnalysisError::EmptyTrace);
    }
    let s0 = trace.first();
    let m0 = &s0.metric;
    let n = m0.dimension();
    let frame = InitialFrame::new(m0);
    let grid = m0.grid();
    let dr = grid.spacing();
    let ball = default_ball_radius();
    let (c5, c10) = (pred.slack, pred.slack);
    let m = grid.interior_len(trace.config.collar);
    // ln(|h|^2 w dr) of the initial data, nodes with h = 0 dropped
    let init: Vec<(f64, f64)> = (0..m)
        .filter(|&j| s0.curvature.h_norm[j] > 0.0)
        .map(|j| {
            let h = s0.curvature.h_norm[j];
            let lw = m0.a(j).ln() + (n - 1) as f64 * m0.b(j).ln();
            (s0.labels[j], 2.0 * h.ln() + lw + dr.ln())
        })
        .collect();
    let ln_omega = sphere_area(n - 1).ln();
    let mut cert = Certificate { c: 0.0, samples: 0, skipped: 0, c5, c10 };
    for &(i, k) in samples {
        let st = trace
            .states
            .get(k)
            .ok_or_else(|| AnalysisError::BadArgument(format!("snapshot {k} outside trace of {}", trace.states.len())))?;
        if i >= st.metric.len() {
            return Err(AnalysisError::BadArgument(format!("node {i} outside grid")));
        }
        let t = st.t - s0.t;
        if t <= 0.0 {
            cert.skipped += 1;
            continue;
        }
        let centre = st.labels[i];
        let terms: Vec<f64> = init
            .iter()
            .map(|&(l, base)| {
                let d0 = frame.shell_distance(l, centre, ball);
                base - d0 * d0 / ((2.0 + c5) * t)
            })
            .collect();
        let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ln_rhs = if top.is_finite() {
            top + terms.iter().map(|v| (v - top).exp()).sum::<f64>().ln() + ln_omega - (2.0 * pred.lambda - c10) * t
        } else {
            f64::NEG_INFINITY
        };
        let lhs = st.curvature.h_norm[i] * st.curvature.h_norm[i];
        if lhs == 0.0 {
            cert.samples += 1;
            continue;
        }
        if !(ln_rhs > LN_UNDERFLOW) {
            cert.skipped += 1;
            continue;
        }
        cert.samples += 1;
        cert.c = cert.c.max((lhs.ln() - ln_rhs).exp());
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{run, FlowConfig};
    use crate::geometry::{perturb, Profile, WarpedMetric};
    use crate::grid::RadialGrid;

    fn trace(eps: f64) -> FlowTrace {
        let g = RadialGrid::with_radius(12.0, 0.05).unwrap();
        let m = if eps == 0.0 {
            WarpedMetric::hyperbolic(6, g).unwrap()
        } else {
            perturb(6, g, eps, 3.0, &Profile::default(), 0).unwrap()
        };
        run(&m, &FlowConfig { t_end: 1.0, snapshot_stride: 100, ..Default::default() }).unwrap()
    }

    #[test]
    fn hyperbolic_certificate_is_zero() {
        let tr = trace(0.0);
        let pred = DecayPrediction::new(6, 3.0, 0.5).unwrap();
        let c = pointwise_certificate(&tr, &pred, &default_samples(&tr, 10, 1)).unwrap();
        assert_eq!(c.c, 0.0);
        assert!(c.samples > 0);
    }

    #[test]
    fn epsilon_independent_and_sample_stable() {
        let pred = DecayPrediction::new(6, 3.0, 0.5).unwrap();
        let (a, b) = (trace(0.01), trace(0.005));
        let ca = pointwise_certificate(&a, &pred, &default_samples(&a, 8, 1)).unwrap().c;
        let cb = pointwise_certificate(&b, &pred, &default_samples(&b, 8, 1)).unwrap().c;
        assert!(ca > 0.0 && cb > 0.0);
        assert!(ca / cb <= 2.0 && cb / ca <= 2.0, "{ca} vs {cb}");
        let dense = pointwise_certificate(&a, &pred, &default_samples(&a, 4, 1)).unwrap().c;
        assert!(dense / ca <= 2.0 && ca / dense <= 2.0, "{ca} vs {dense}");
    }
}
