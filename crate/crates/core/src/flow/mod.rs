//! Normalized Ricci flow dg/dt = -2(Ric + (n-1) g) for warped metrics.

mod residual;
mod rhs;

pub use residual::{evolution_residual, ResidualOptions, ResidualStats, ResidualTerm};
pub use rhs::{stable_dt, FlowKernel};

use serde::{Deserialize, Serialize};

use crate::error::FlowError;
use crate::geometry::{
    curvature_with, hyperbolicity_from, CurvatureField, DeviationDerivs, HyperbolicityOptions, WarpedMetric,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OuterBc {
    PinHyperbolic,
    PinInitial,
    /// Outer node moves with its inner neighbour (zero gradient in time
    /// derivative); exact for the constant-curvature family.
    Free,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub dt_safety: f64,
    pub t_end: f64,
    pub snapshot_stride: usize,
    pub outer_bc: OuterBc,
    pub origin_tol: f64,
    pub cfl_floor: f64,
    /// Outer grid fraction left out of sup|h| and the order-delta sup.
    pub collar: f64,
    /// Order probed by the eps_order series.
    pub order_delta: f64,
    /// |h| next to the pinned node above which a boundary event is logged.
    pub boundary_warn: f64,
    /// Growth of interior sup|h| over its running minimum that triggers a
    /// stability warning.
    pub growth_warn: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt_safety: 0.9,
            t_end: 1.0,
            snapshot_stride: 100,
            outer_bc: OuterBc::PinHyperbolic,
            origin_tol: 1e-3,
            cfl_floor: 1e-12,
            collar: 0.1,
            order_delta: 3.0,
            boundary_warn: 1e-3,
            growth_warn: 10.0,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |m: &str| Err(FlowError::InvalidConfig(m.to_string()));
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return bad("dt_safety must lie in (0, 1]");
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad("t_end must be positive");
        }
        if self.snapshot_stride == 0 {
            return bad("snapshot_stride must be >= 1");
        }
        if !(self.origin_tol > 0.0) {
            return bad("origin_tol must be positive");
        }
        if !(self.cfl_floor >= 0.0) {
            return bad("cfl_floor must be >= 0");
        }
        if !(0.0..1.0).contains(&self.collar) {
            return bad("collar must lie in [0, 1)");
        }
        if !(self.order_delta >= 0.0) {
            return bad("order_delta must be >= 0");
        }
        if !(self.growth_warn > 1.0) {
            return bad("growth_warn must exceed 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub t: f64,
    pub step: usize,
    pub metric: WarpedMetric,
    pub curvature: CurvatureField,
    pub dt_last: f64,
    /// Initial coordinate of the Ricci-flow point now sitting at each node.
    pub labels: Vec<f64>,
}

impl FlowState {
    pub fn new(metric: WarpedMetric) -> Self {
        let curvature = crate::geometry::curvature(&metric).expect("grid validated at construction");
        let labels = metric.grid().nodes();
        Self { t: 0.0, step: 0, metric, curvature, dt_last: 0.0, labels }
    }

    /// sup |h| over nodes inside the collar.
    pub fn sup_h(&self, collar: f64) -> f64 {
        let m = self.metric.grid().interior_len(collar);
        self.curvature.h_norm[..m].iter().fold(0.0, |a, &b| a.max(b))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsSample {
    pub t: f64,
    pub eps_metric: f64,
    pub eps_curv: f64,
    pub eps_order: f64,
    pub eps_order_arclength: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FlowEvent {
    BoundaryResidual { t: f64, value: f64 },
    StabilityWarning { t: f64, step: usize, reason: String },
    OriginCompatibility { t: f64, deviation: f64 },
    Failure { t: f64, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub config: FlowConfig,
    pub states: Vec<FlowState>,
    /// (t, sup |h|) at every snapshot
    pub sup_h_series: Vec<(f64, f64)>,
    pub eps_series: Vec<EpsSample>,
    pub events: Vec<FlowEvent>,
    pub failure: Option<FlowError>,
    pub boundary_residual_max: f64,
}

impl FlowTrace {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn last(&self) -> &FlowState {
        self.states.last().expect("trace holds the initial state")
    }

    pub fn first(&self) -> &FlowState {
        &self.states[0]
    }

    pub fn has_stability_warning(&self) -> bool {
        self.events.iter().any(|e| matches!(e, FlowEvent::StabilityWarning { .. }))
    }

    /// Largest per-node change of a or b relative to the initial metric.
    pub fn metric_drift(&self) -> f64 {
        let m0 = &self.first().metric;
        let mut d = 0.0_f64;
        for s in &self.states {
            for i in 0..m0.len() {
                d = d.max((s.metric.alpha()[i] - m0.alpha()[i]).abs());
                d = d.max((s.metric.beta()[i] - m0.beta()[i]).abs());
            }
        }
        d
    }
}

/// RK4 integrator with its scratch buffers.
#[derive(Debug, Clone)]
pub struct Integrator {
    kernel: FlowKernel,
    derivs: DeviationDerivs,
    pinned: Option<(f64, f64)>,
    k: [Vec<f64>; 9],
    tmp: [Vec<f64>; 3],
}

impl Integrator {
    pub fn new(metric0: &WarpedMetric, bc: OuterBc) -> Self {
        let len = metric0.len();
        let last = len - 1;
        let pinned = match bc {
            OuterBc::PinHyperbolic => Some((0.0, 0.0)),
            OuterBc::PinInitial => Some((metric0.alpha()[last], metric0.beta()[last])),
            OuterBc::Free => None,
        };
        let mut kernel = FlowKernel::new(metric0.dimension(), metric0.grid());
        kernel.free_outer = pinned.is_none();
        Self {
            kernel,
            derivs: DeviationDerivs::zeros(len),
            pinned,
            k: std::array::from_fn(|_| vec![0.0; len]),
            tmp: std::array::from_fn(|_| vec![0.0; len]),
        }
    }

    pub fn dt_for(&self, metric: &WarpedMetric, dt_safety: f64) -> f64 {
        stable_dt(metric.dimension(), metric.grid(), metric.alpha(), metric.beta(), &self.kernel.basis.sinh, dt_safety)
    }

    /// Writes the boundary values into the state.
    pub fn apply_bc(&mut self, state: &mut FlowState) {
        let last = state.metric.len() - 1;
        if let Some((pa, pb)) = self.pinned {
            let (al, be) = state.metric.deviation_mut();
            al[last] = pa;
            be[last] = pb;
        }
        state.curvature = curvature_with(&state.metric, &self.kernel.basis, &mut self.derivs);
    }

    /// One RK4 step of length dt.
    pub fn advance(&mut self, state: &mut FlowState, dt: f64) -> Result<(), FlowError> {
        let len = state.metric.len();
        let [k1a, k1b, k1l, k2a, k2b, k2l, k3a, k3b, k3l] = &mut self.k;
        let [ta, tb, tl] = &mut self.tmp;
        let al0 = state.metric.alpha().to_vec();
        let be0 = state.metric.beta().to_vec();
        let l0 = state.labels.clone();
        let kern = &mut self.kernel;

        kern.eval(&al0, &be0, &l0, k1a, k1b, k1l);
        for i in 0..len {
            ta[i] = al0[i] + 0.5 * dt * k1a[i];
            tb[i] = be0[i] + 0.5 * dt * k1b[i];
            tl[i] = l0[i] + 0.5 * dt * k1l[i];
        }
        kern.eval(ta, tb, tl, k2a, k2b, k2l);
        for i in 0..len {
            ta[i] = al0[i] + 0.5 * dt * k2a[i];
            tb[i] = be0[i] + 0.5 * dt * k2b[i];
            tl[i] = l0[i] + 0.5 * dt * k2l[i];
        }
        kern.eval(ta, tb, tl, k3a, k3b, k3l);
        for i in 0..len {
            ta[i] = al0[i] + dt * k3a[i];
            tb[i] = be0[i] + dt * k3b[i];
            tl[i] = l0[i] + dt * k3l[i];
        }
        // reuse k1 as the running sum, then evaluate k4 into k2's slot
        for i in 0..len {
            k1a[i] += 2.0 * k2a[i] + 2.0 * k3a[i];
            k1b[i] += 2.0 * k2b[i] + 2.0 * k3b[i];
            k1l[i] += 2.0 * k2l[i] + 2.0 * k3l[i];
        }
        kern.eval(ta, tb, tl, k2a, k2b, k2l);
        let t_new = state.t + dt;
        {
            let (al, be) = state.metric.deviation_mut();
            for i in 0..len {
                al[i] = al0[i] + dt / 6.0 * (k1a[i] + k2a[i]);
                be[i] = be0[i] + dt / 6.0 * (k1b[i] + k2b[i]);
                state.labels[i] = l0[i] + dt / 6.0 * (k1l[i] + k2l[i]);
            }
            if let Some((pa, pb)) = self.pinned {
                al[len - 1] = pa;
                be[len - 1] = pb;
            }
            for i in 0..len {
                if !(al[i].is_finite() && be[i].is_finite()) {
                    return Err(FlowError::NonFinite(t_new));
                }
                if al[i] <= -1.0 || be[i] <= -1.0 {
                    return Err(FlowError::PositivityLoss { t: t_new, index: i });
                }
            }
        }
        state.t = t_new;
        state.step += 1;
        state.dt_last = dt;
        state.curvature = curvature_with(&state.metric, &self.kernel.basis, &mut self.derivs);
        Ok(())
    }

    /// DeTurck coefficient f for a metric.
    pub fn gauge_field(&mut self, metric: &WarpedMetric) -> Vec<f64> {
        self.kernel.gauge(metric.alpha(), metric.beta());
        self.kernel.f.clone()
    }
}

/// One step of the flow with the stable time step for the current state.
pub fn step(state: &FlowState, config: &FlowConfig) -> Result<FlowState, FlowError> {
    config.validate()?;
    let mut integ = Integrator::new(&state.metric, config.outer_bc);
    let mut next = state.clone();
    let dt = integ.dt_for(&next.metric, config.dt_safety);
    if dt < config.cfl_floor {
        return Err(FlowError::DtUnderFloor { t: state.t, dt, floor: config.cfl_floor });
    }
    integ.advance(&mut next, dt)?;
    Ok(next)
}

fn record(trace: &mut FlowTrace, state: &FlowState, config: &FlowConfig) {
    let rep = hyperbolicity_from(
        &state.metric,
        &state.curvature,
        config.order_delta,
        &HyperbolicityOptions { collar: config.collar, ..Default::default() },
    );
    trace.sup_h_series.push((state.t, state.sup_h(config.collar)));
    trace.eps_series.push(EpsSample {
        t: state.t,
        eps_metric: rep.eps_metric,
        eps_curv: rep.eps_curv,
        eps_order: rep.eps_order,
        eps_order_arclength: rep.eps_order_arclength,
        dt: state.dt_last,
    });
    trace.states.push(state.clone());
}

/// Integrates to `config.t_end`, recording every `snapshot_stride` steps.
///
/// Step failures end the run early; the partial trace carries the error in
/// `failure` and a matching event.
pub fn run(metric0: &WarpedMetric, config: &FlowConfig) -> Result<FlowTrace, FlowError> {
    run_from(FlowState::new(metric0.clone()), config)
}

/// As [`run`], continuing from an existing state up to `config.t_end`.
pub fn run_from(initial: FlowState, config: &FlowConfig) -> Result<FlowTrace, FlowError> {
    config.validate()?;
    let mut integ = Integrator::new(&initial.metric, config.outer_bc);
    let mut state = initial;
    integ.apply_bc(&mut state);
    let mut trace = FlowTrace {
        config: config.clone(),
        states: Vec::new(),
        sup_h_series: Vec::new(),
        eps_series: Vec::new(),
        events: Vec::new(),
        failure: None,
        boundary_residual_max: 0.0,
    };
    record(&mut trace, &state, config);
    let interior = state.metric.grid().interior_len(config.collar);
    let last = state.metric.len() - 1;
    let dt0 = integ.dt_for(&state.metric, config.dt_safety);
    let mut running_min = state.sup_h(config.collar);
    let (mut warned_growth, mut warned_dt, mut warned_bdy, mut warned_origin) = (false, false, false, false);
    let mut since_snapshot = 0;
    while state.t < config.t_end * (1.0 - 1e-14) {
        let mut dt = integ.dt_for(&state.metric, config.dt_safety);
        if dt < config.cfl_floor {
            let err = FlowError::DtUnderFloor { t: state.t, dt, floor: config.cfl_floor };
            trace.events.push(FlowEvent::Failure { t: state.t, message: err.to_string() });
            trace.failure = Some(err);
            break;
        }
        if !warned_dt && dt < 0.05 * dt0 {
            warned_dt = true;
            trace.events.push(FlowEvent::StabilityWarning {
                t: state.t,
                step: state.step,
                reason: format!("time step collapsed to {dt:e} from {dt0:e}"),
            });
        }
        if state.t + dt > config.t_end {
            dt = config.t_end - state.t;
        }
        if let Err(err) = integ.advance(&mut state, dt) {
            trace.events.push(FlowEvent::Failure { t: state.t, message: err.to_string() });
            trace.failure = Some(err);
            break;
        }
        let sup = state.curvature.h_norm[..interior].iter().fold(0.0_f64, |a, &b| a.max(b));
        running_min = running_min.min(sup);
        if !warned_growth && running_min > 0.0 && sup > config.growth_warn * running_min && sup > 1e-8 {
            warned_growth = true;
            trace.events.push(FlowEvent::StabilityWarning {
                t: state.t,
                step: state.step,
                reason: format!("sup|h| grew to {sup:e} from minimum {running_min:e}"),
            });
        }
        let bdy = state.curvature.h_norm[last - 1];
        trace.boundary_residual_max = trace.boundary_residual_max.max(bdy);
        if !warned_bdy && bdy > config.boundary_warn {
            warned_bdy = true;
            trace.events.push(FlowEvent::BoundaryResidual { t: state.t, value: bdy });
        }
        let dev = (state.metric.origin_slope() - 1.0).abs();
        if !warned_origin && dev > config.origin_tol {
            warned_origin = true;
            trace.events.push(FlowEvent::OriginCompatibility { t: state.t, deviation: dev });
        }
        since_snapshot += 1;
        let done = state.t >= config.t_end * (1.0 - 1e-14);
        if since_snapshot == config.snapshot_stride || done {
            record(&mut trace, &state, config);
            since_snapshot = 0;
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{perturb, Profile};
    use crate::grid::RadialGrid;

    #[test]
    fn hyperbolic_is_fixed_to_roundoff() {
        let g = RadialGrid::with_radius(10.0, 0.1).unwrap();
        let m = WarpedMetric::hyperbolic(5, g).unwrap();
        let s1 = step(&FlowState::new(m.clone()), &FlowConfig::default()).unwrap();
        assert!(s1.metric.max_deviation() <= 1e-12);
        assert!(s1.dt_last > 0.0);
    }

    #[test]
    fn config_validation() {
        let c = FlowConfig { dt_safety: 1.5, ..Default::default() };
        assert!(c.validate().is_err());
        let c = FlowConfig { dt_safety: 0.5, snapshot_stride: 0, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn conformal_factor_follows_closed_form() {
        let n = 6;
        let g = RadialGrid::with_radius(4.0, 0.04).unwrap();
        let m = WarpedMetric::conformal_hyperbolic(n, g, 1.05).unwrap();
        let cfg = FlowConfig { t_end: 0.1, dt_safety: 0.5, snapshot_stride: 1000, outer_bc: OuterBc::PinInitial, ..Default::default() };
        let tr = run(&m, &cfg).unwrap();
        assert!(tr.completed());
        let s = tr.last();
        let c = (1.0 + s.metric.alpha()[0]).powi(2);
        let exact = 1.0 + 0.05 * (-2.0 * (n - 1) as f64 * 0.1).exp();
        assert!((c - exact).abs() / exact < 1e-5, "{c} vs {exact}");
    }

    #[test]
    fn perturbation_decays() {
        let g = RadialGrid::with_radius(10.0, 0.1).unwrap();
        let m = perturb(6, g, 0.01, 3.0, &Profile::default(), 0).unwrap();
        let cfg = FlowConfig { t_end: 0.5, snapshot_stride: 50, ..Default::default() };
        let tr = run(&m, &cfg).unwrap();
        assert!(tr.completed(), "{:?}", tr.failure);
        let (_, h0) = tr.sup_h_series[0];
        let (_, h1) = *tr.sup_h_series.last().unwrap();
        assert!(h1 < 0.05 * h0, "{h0} -> {h1}");
        assert_eq!(tr.sup_h_series.len(), tr.states.len());
        assert!(tr.states.windows(2).all(|w| w[1].t > w[0].t));
    }
}
