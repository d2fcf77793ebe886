//! xi(y, s) = -d0(y)^2 / ((2 + C5)(t - s)), d0 the g(0) distance to a small
//! ball around x. Points are followed through the flow labels, so d0 is fixed
//! in s and only |grad d0| sees the evolving metric:
//!
//!   xi_s + |grad xi|^2 / 2 = d0^2 / ((2 + C5)(t - s)^2) (2G^2/(2 + C5) - 1),
//!   G = |grad d0|_{g(s)} = a0(L) L_r / a(r, s).

use serde::{Deserialize, Serialize};

use super::{default_ball_radius, InitialFrame};
use crate::error::AnalysisError;
use crate::flow::FlowTrace;
use crate::stencil::{d1, Parity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightField {
    pub t_ref: f64,
    pub c5: f64,
    pub x_index: usize,
    /// Initial coordinate of the centre x.
    pub centre: f64,
    pub ball_radius: f64,
    /// Snapshot times used.
    pub times: Vec<f64>,
    /// xi at each interior node, per snapshot.
    pub values: Vec<Vec<f64>>,
    /// xi_s + |grad xi|^2 / 2 at each interior node, per snapshot.
    pub residual: Vec<Vec<f64>>,
    /// Per snapshot, the largest residual over nodes.
    pub snapshot_max: Vec<f64>,
    pub max_residual: f64,
    /// Largest |grad d0|_{g(s)} over nodes and snapshots.
    pub max_gradient: f64,
}

impl WeightField {
    /// A weight with xi = 0 everywhere (infinite reference time).
    pub fn broad() -> Self {
        Self {
            t_ref: f64::INFINITY,
            c5: 0.0,
            x_index: 0,
            centre: 0.0,
            ball_radius: default_ball_radius(),
            times: Vec::new(),
            values: Vec::new(),
            residual: Vec::new(),
            snapshot_max: Vec::new(),
            max_residual: 0.0,
            max_gradient: 1.0,
        }
    }

    /// xi at a point of g(0) distance `d0` from the ball, at time s.
    pub fn xi(&self, d0: f64, s: f64) -> f64 {
        if self.t_ref.is_infinite() || d0 == 0.0 {
            return 0.0;
        }
        -d0 * d0 / ((2.0 + self.c5) * (self.t_ref - s))
    }
}

pub fn weight_residual(trace: &FlowTrace, x_index: usize, t_ref: f64, c5: f64) -> Result<WeightField, AnalysisError> {
    let t0 = trace.first().t;
    if !(t_ref > t0) {
        return Err(AnalysisError::BadReferenceTime { t_ref, t0 });
    }
    if !(c5 >= 0.0) {
        return Err(AnalysisError::BadArgument(format!("C5 = {c5} must be nonnegative")));
    }
    let m0 = &trace.first().metric;
    if x_index >= m0.len() {
        return Err(AnalysisError::BadArgument(format!("x index {x_index} outside grid of {}", m0.len())));
    }
    let frame = InitialFrame::new(m0);
    let grid = m0.grid();
    let ball = default_ball_radius();
    let centre = grid.r(x_index);
    let m = grid.interior_len(trace.config.collar);
    let nodes = grid.nodes();
    let mut disp = vec![0.0; grid.len()];
    let mut lr = vec![0.0; grid.len()];
    let mut field = WeightField {
        t_ref,
        c5,
        x_index,
        centre,
        ball_radius: ball,
        times: Vec::new(),
        values: Vec::new(),
        residual: Vec::new(),
        snapshot_max: Vec::new(),
        max_residual: f64::NEG_INFINITY,
        max_gradient: 0.0,
    };
    for st in trace.states.iter().filter(|s| s.t < t_ref) {
        // differentiate the label displacement so a static map gives L_r = 1 exactly
        for i in 0..grid.len() {
            disp[i] = st.labels[i] - nodes[i];
        }
        d1(&disp, Parity::Odd, grid.spacing(), &mut lr);
        let tau = t_ref - st.t;
        let mut xi = Vec::with_capacity(m);
        let mut res = Vec::with_capacity(m);
        for i in 0..m {
            let l = st.labels[i];
            let d0 = frame.shell_distance(l, centre, ball);
            let g = frame.a(l) * (1.0 + lr[i]) / st.metric.a(i);
            xi.push(field.xi(d0, st.t));
            // d0' changes sign across the ball but G enters squared
            if d0 == 0.0 {
                res.push(0.0);
            } else {
                res.push(d0 * d0 / ((2.0 + c5) * tau * tau) * (2.0 * g * g / (2.0 + c5) - 1.0));
                field.max_gradient = field.max_gradient.max(g.abs());
            }
        }
        let worst = res.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        field.times.push(st.t);
        field.values.push(xi);
        field.residual.push(res);
        field.snapshot_max.push(worst);
        field.max_residual = field.max_residual.max(worst);
    }
    if field.times.is_empty() {
        return Err(AnalysisError::EmptyTrace);
    }
    Ok(field)
}

/// Smallest C5 in [0, c5_max] with residual <= 0 everywhere, by bisection.
/// None when even c5_max fails.
pub fn minimal_c5(trace: &FlowTrace, x_index: usize, t_ref: f64, c5_max: f64) -> Result<Option<f64>, AnalysisError> {
    let ok = |c: f64| weight_residual(trace, x_index, t_ref, c).map(|w| w.max_residual <= 0.0);
    if ok(0.0)? {
        return Ok(Some(0.0));
    }
    if !ok(c5_max)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, c5_max);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{run, FlowConfig, FlowState};
    use crate::geometry::{perturb, Profile, WarpedMetric};
    use crate::grid::RadialGrid;

    /// Trace of a metric that does not move.
    fn frozen(m: WarpedMetric, times: &[f64]) -> FlowTrace {
        let mut tr = run(&m, &FlowConfig { t_end: 1e-3, snapshot_stride: 1_000_000, ..Default::default() }).unwrap();
        tr.states = times
            .iter()
            .enumerate()
            .map(|(k, &t)| FlowState { t, step: k, ..FlowState::new(m.clone()) })
            .collect();
        tr
    }

    #[test]
    fn frozen_hyperbolic_cancels() {
        let g = RadialGrid::with_radius(10.0, 0.05).unwrap();
        let tr = frozen(WarpedMetric::hyperbolic(5, g).unwrap(), &[0.0, 0.2, 0.4, 0.6]);
        for x in [0, 40, 100] {
            let w = weight_residual(&tr, x, 1.0, 0.0).unwrap();
            assert!(w.residual.iter().flatten().all(|r| r.abs() <= 1e-12), "{:?}", w.snapshot_max);
        }
    }

    #[test]
    fn frozen_closed_form() {
        let g = RadialGrid::with_radius(10.0, 0.05).unwrap();
        let tr = frozen(WarpedMetric::hyperbolic(5, g.clone()).unwrap(), &[0.0, 0.5]);
        let c5 = 0.1;
        let w = weight_residual(&tr, 0, 1.0, c5).unwrap();
        let frame = InitialFrame::new(&tr.first().metric);
        for (k, s) in [0.0, 0.5].iter().enumerate() {
            let tau: f64 = 1.0 - s;
            for (i, r) in w.residual[k].iter().enumerate() {
                let d = frame.shell_distance(g.r(i), g.r(0), default_ball_radius());
                let expect = -c5 * d * d / ((2.0 + c5).powi(2) * tau * tau);
                assert!((r - expect).abs() <= 1e-12 * expect.abs().max(1.0), "node {i}: {r} vs {expect}");
                assert!(*r <= 0.0);
            }
        }
    }

    #[test]
    fn reference_time_checked() {
        let g = RadialGrid::with_radius(6.0, 0.05).unwrap();
        let tr = frozen(WarpedMetric::hyperbolic(4, g).unwrap(), &[0.0, 0.1]);
        assert!(matches!(weight_residual(&tr, 0, 0.0, 0.0), Err(AnalysisError::BadReferenceTime { .. })));
    }

    #[test]
    fn bisection_matches_gradient_bound() {
        let g = RadialGrid::with_radius(10.0, 0.05).unwrap();
        let m = perturb(6, g, 0.01, 3.0, &Profile::default(), 0).unwrap();
        let tr = run(&m, &FlowConfig { t_end: 0.5, snapshot_stride: 50, ..Default::default() }).unwrap();
        let c = minimal_c5(&tr, 0, 0.6, 1.0).unwrap().unwrap();
        let gmax = weight_residual(&tr, 0, 0.6, 0.0).unwrap().max_gradient;
        assert!((c - 2.0 * (gmax * gmax - 1.0).max(0.0)).abs() < 1e-9, "{c} vs {gmax}");
        assert!(c < 0.2);
    }
}
