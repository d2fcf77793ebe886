//! Discrete check of the evolution identity for |h|^2 along a trace:
//!
//!   d|h|^2/dt = Lap|h|^2 - 2|grad h|^2 - 4 R_ipjq h_ij h_pq
//!               - 4 tr h^3            (from dh/dt)
//!               + 4 tr h^3            (variation of g^-1 in |h|^2)
//!               + W(|h|^2)            (radial gauge transport)
//!
//! The two cubic terms cancel; they are kept apart so that a sign error in
//! the quadratic term of dh/dt can be injected.

use serde::{Deserialize, Serialize};

use super::{FlowState, FlowTrace, Integrator};
use crate::error::FlowError;
use crate::stencil::{d12, Parity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualTerm {
    Laplacian,
    Gradient,
    CurvatureContraction,
    /// -4 tr h^3 coming from the -2 h_ip h_pj term of dh/dt
    QuadraticH,
    MetricVariation,
    Transport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualOptions {
    /// Outer grid fraction left out.
    pub collar: f64,
    /// Largest step gap allowed inside a snapshot triple.
    pub max_step_gap: usize,
    /// Term whose sign is flipped (fault injection).
    pub flip: Option<ResidualTerm>,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        Self { collar: 0.1, max_step_gap: 4, flip: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    /// Volume-weighted L2 norm of the residual over that of d|h|^2/dt, per triple.
    pub max_relative: Option<f64>,
    pub mean_relative: Option<f64>,
    /// Volume-weighted L2 norm of the residual.
    pub max_absolute: f64,
    pub triples: usize,
}

fn sign(opts: &ResidualOptions, term: ResidualTerm) -> f64 {
    if opts.flip == Some(term) {
        -1.0
    } else {
        1.0
    }
}

/// Residual of the identity at the middle state, given d|h|^2/dt there.
/// Returns (weighted L2 residual, weighted L2 of d|h|^2/dt).
fn triple_residual(
    mid: &FlowState,
    u_t: &[f64],
    integ: &mut Integrator,
    opts: &ResidualOptions,
) -> (f64, f64) {
    let m = &mid.metric;
    let k = &mid.curvature;
    let n = m.dimension();
    let nm = (n - 1) as f64;
    let grid = m.grid();
    let dr = grid.spacing();
    let len = m.len();
    let f = integ.gauge_field(m);
    let u: Vec<f64> = k.h_norm.iter().map(|h| h * h).collect();
    let mut u1 = vec![0.0; len];
    let mut u2 = vec![0.0; len];
    d12(&u, Parity::Even, dr, &mut u1, &mut u2);
    let mut hr1 = vec![0.0; len];
    let mut ht1 = vec![0.0; len];
    let mut scratch = vec![0.0; len];
    d12(&k.h_rad, Parity::Even, dr, &mut hr1, &mut scratch);
    d12(&k.h_tan, Parity::Even, dr, &mut ht1, &mut scratch);
    let mut al1 = vec![0.0; len];
    let mut be1 = vec![0.0; len];
    d12(m.alpha(), Parity::Even, dr, &mut al1, &mut scratch);
    d12(m.beta(), Parity::Even, dr, &mut be1, &mut scratch);

    let (s_lap, s_grad, s_rhh, s_quad, s_var, s_tr) = (
        sign(opts, ResidualTerm::Laplacian),
        sign(opts, ResidualTerm::Gradient),
        sign(opts, ResidualTerm::CurvatureContraction),
        sign(opts, ResidualTerm::QuadraticH),
        sign(opts, ResidualTerm::MetricVariation),
        sign(opts, ResidualTerm::Transport),
    );
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..grid.interior_len(opts.collar) {
        let r = grid.r(i);
        let a = m.a(i);
        let p = 1.0 + m.beta()[i];
        let bb = 1.0 / r.tanh() + be1[i] / p; // b'/b
        let lap = u2[i] / (a * a) - al1[i] * u1[i] / (a * a * a) + nm * bb * u1[i] / (a * a);
        let (hr, ht) = (k.h_rad[i], k.h_tan[i]);
        let rot = bb / a;
        let grad2 = (hr1[i] * hr1[i] + nm * ht1[i] * ht1[i]) / (a * a) + 2.0 * nm * rot * rot * (hr - ht) * (hr - ht);
        let rhh = -2.0 * nm * k.k_rad[i] * hr * ht - nm * (nm - 1.0) * k.k_sph[i] * ht * ht;
        let tr3 = hr * hr * hr + nm * ht * ht * ht;
        let rhs = s_lap * lap - s_grad * 2.0 * grad2 - s_rhh * 4.0 * rhh - s_quad * 4.0 * tr3
            + s_var * 4.0 * tr3
            + s_tr * f[i] * u1[i];
        let w = a * m.b(i).powi(n as i32 - 1);
        let res = u_t[i] - rhs;
        num += w * res * res;
        den += w * u_t[i] * u_t[i];
    }
    (num.sqrt(), den.sqrt())
}

/// Residual statistics over every consecutive snapshot triple of a trace.
pub fn evolution_residual(trace: &FlowTrace, opts: &ResidualOptions) -> Result<ResidualStats, FlowError> {
    let st = &trace.states;
    if st.len() < 3 {
        return Err(FlowError::TooFewSnapshots(st.len()));
    }
    let mut integ = Integrator::new(&st[0].metric, trace.config.outer_bc);
    let mut rel: Vec<f64> = Vec::new();
    let mut max_abs = 0.0_f64;
    let mut any_zero = false;
    for w in st.windows(3) {
        let (s0, s1, s2) = (&w[0], &w[1], &w[2]);
        let gap = (s1.step - s0.step).max(s2.step - s1.step);
        if gap > opts.max_step_gap {
            return Err(FlowError::StrideTooCoarse { spacing: gap as f64, limit: opts.max_step_gap as f64 });
        }
        let h1 = s1.t - s0.t;
        let h2 = s2.t - s1.t;
        // three-point derivative on a nonuniform stencil
        let c0 = -h2 / (h1 * (h1 + h2));
        let c1 = (h2 - h1) / (h1 * h2);
        let c2 = h1 / (h2 * (h1 + h2));
        let sq = |s: &FlowState, i: usize| s.curvature.h_norm[i] * s.curvature.h_norm[i];
        let u_t: Vec<f64> = (0..s1.metric.len()).map(|i| c0 * sq(s0, i) + c1 * sq(s1, i) + c2 * sq(s2, i)).collect();
        let (num, den) = triple_residual(s1, &u_t, &mut integ, opts);
        max_abs = max_abs.max(num);
        if den > 0.0 && den.is_finite() {
            rel.push(num / den);
        } else {
            any_zero = true;
        }
    }
    let triples = st.len() - 2;
    let (max_relative, mean_relative) = if rel.is_empty() || any_zero {
        (None, None)
    } else {
        (Some(rel.iter().cloned().fold(0.0, f64::max)), Some(rel.iter().sum::<f64>() / rel.len() as f64))
    };
    Ok(ResidualStats { max_relative, mean_relative, max_absolute: max_abs, triples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{run, run_from, FlowConfig};
    use crate::geometry::{perturb, Profile, WarpedMetric};
    use crate::grid::RadialGrid;

    fn short_trace(dr: f64, eps: f64) -> FlowTrace {
        let g = RadialGrid::with_radius(8.0, dr).unwrap();
        let m = perturb(6, g, eps, 3.0, &Profile::default(), 0).unwrap();
        let warm = run(&m, &FlowConfig { t_end: 0.05, snapshot_stride: 1_000_000, ..Default::default() }).unwrap();
        let s = warm.last().clone();
        let t = s.t;
        run_from(s, &FlowConfig { t_end: t + 1e-4, snapshot_stride: 1, ..Default::default() }).unwrap()
    }

    #[test]
    fn hyperbolic_residual_vanishes() {
        let g = RadialGrid::with_radius(8.0, 0.1).unwrap();
        let m = WarpedMetric::hyperbolic(6, g).unwrap();
        let tr = run(&m, &FlowConfig { t_end: 1e-3, snapshot_stride: 1, ..Default::default() }).unwrap();
        let r = evolution_residual(&tr, &ResidualOptions::default()).unwrap();
        assert!(r.max_absolute <= 1e-10);
        assert!(r.max_relative.is_none());
    }

    #[test]
    fn residual_refines_and_catches_mutations() {
        let coarse = evolution_residual(&short_trace(0.04, 0.1), &ResidualOptions::default()).unwrap();
        let fine_tr = short_trace(0.02, 0.1);
        let fine = evolution_residual(&fine_tr, &ResidualOptions::default()).unwrap();
        let (c, f) = (coarse.max_relative.unwrap(), fine.max_relative.unwrap());
        assert!(f < 0.05 && c / f >= 2.0, "{c} -> {f}");
        for term in [ResidualTerm::QuadraticH, ResidualTerm::CurvatureContraction] {
            let o = ResidualOptions { flip: Some(term), ..Default::default() };
            let mutated = evolution_residual(&fine_tr, &o).unwrap().max_relative.unwrap();
            assert!(mutated >= 10.0 * f, "{term:?}: {mutated} vs {f}");
        }
    }

    #[test]
    fn coarse_stride_rejected() {
        let g = RadialGrid::with_radius(8.0, 0.1).unwrap();
        let m = perturb(6, g, 0.01, 3.0, &Profile::default(), 0).unwrap();
        let tr = run(&m, &FlowConfig { t_end: 0.01, snapshot_stride: 10, ..Default::default() }).unwrap();
        assert!(matches!(
            evolution_residual(&tr, &ResidualOptions::default()),
            Err(FlowError::StrideTooCoarse { .. })
        ));
    }
}
