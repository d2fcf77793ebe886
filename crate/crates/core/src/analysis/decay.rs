use serde::{Deserialize, Serialize};

use super::DecayPrediction;
use crate::error::AnalysisError;
use crate::fit::{linear_fit, LineFit};
use crate::flow::FlowTrace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecayWindows {
    /// Transient cut for the temporal fit.
    pub t_lo: f64,
    /// End of the temporal fit; None means the last snapshot.
    pub t_hi: Option<f64>,
    /// Arclength window of the spatial fit at the final time.
    pub r_lo: f64,
    pub r_hi: f64,
    /// Fit rms above which the report is marked low confidence.
    pub max_rms: f64,
    pub sign_tol: SignTolerance,
}

/// Tolerance on K <= 0 and Ric >= -(n-1) g.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignTolerance(pub f64);

impl Default for DecayWindows {
    fn default() -> Self {
        Self { t_lo: 0.2, t_hi: None, r_lo: 3.0, r_hi: 10.0, max_rms: 0.25, sign_tol: SignTolerance(1e-3) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub prediction: DecayPrediction,
    /// Slope of -ln sup|h| against t.
    pub temporal_rate: f64,
    pub temporal_fit: LineFit,
    /// Slope of -ln|K+1| against the final arclength.
    pub spatial_order: f64,
    pub spatial_fit: LineFit,
    /// Same slope against the grid coordinate.
    pub spatial_order_grid: f64,
    /// Integral of sup|h| over the whole trace.
    pub accumulation: f64,
    pub max_sectional: f64,
    /// Smallest eigenvalue of h = Ric + (n-1) g.
    pub min_h: f64,
    pub curvature_nonpositive: bool,
    pub ricci_bounded_below: bool,
    pub theorem2_verdict: bool,
    pub low_confidence: bool,
}

/// Trapezoid integral of sup|h| dt over the trace.
pub fn accumulation(trace: &FlowTrace) -> f64 {
    trace.sup_h_series.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum()
}

pub fn fit_decay(trace: &FlowTrace, pred: &DecayPrediction, win: &DecayWindows) -> Result<DecayReport, AnalysisError> {
    if trace.states.is_empty() {
        return Err(AnalysisError::EmptyTrace);
    }
    let t_hi = win.t_hi.unwrap_or(trace.last().t);
    let (tx, ty): (Vec<f64>, Vec<f64>) = trace
        .sup_h_series
        .iter()
        .filter(|(t, h)| *t >= win.t_lo && *t <= t_hi && *h > 0.0)
        .map(|(t, h)| (*t, -h.ln()))
        .unzip();
    let temporal_fit = linear_fit(&tx, &ty)
        .ok_or_else(|| AnalysisError::BadWindow(format!("fewer than two snapshots in t in [{}, {t_hi}]", win.t_lo)))?;

    let last = trace.last();
    let grid = last.metric.grid();
    let m = grid.interior_len(trace.config.collar);
    let s = last.metric.arclength();
    if win.r_lo >= win.r_hi || s[m - 1] < win.r_hi {
        return Err(AnalysisError::BadWindow(format!(
            "spatial window [{}, {}] must lie inside the interior (arclength up to {:.3})",
            win.r_lo,
            win.r_hi,
            s[m - 1]
        )));
    }
    let k = &last.curvature;
    let mut sx = Vec::new();
    let mut sr = Vec::new();
    let mut sy = Vec::new();
    for i in 0..m {
        let d = k.k_dev(i);
        if s[i] >= win.r_lo && s[i] <= win.r_hi && d > 0.0 {
            sx.push(s[i]);
            sr.push(grid.r(i));
            sy.push(-d.ln());
        }
    }
    let spatial_fit = linear_fit(&sx, &sy).ok_or_else(|| AnalysisError::BadWindow("no curvature deviation in the spatial window".into()))?;
    let spatial_order_grid = linear_fit(&sr, &sy).map_or(f64::NAN, |f| f.slope);

    let mut max_sectional = f64::NEG_INFINITY;
    let mut min_h = f64::INFINITY;
    for i in 0..m {
        max_sectional = max_sectional.max(k.k_rad[i]).max(k.k_sph[i]);
        min_h = min_h.min(k.h_rad[i]).min(k.h_tan[i]);
    }
    let tol = win.sign_tol.0;
    let curvature_nonpositive = max_sectional <= tol;
    let ricci_bounded_below = min_h >= -tol;
    let spatial_order = spatial_fit.slope;
    Ok(DecayReport {
        prediction: *pred,
        temporal_rate: temporal_fit.slope,
        temporal_fit,
        spatial_order,
        spatial_fit,
        spatial_order_grid,
        accumulation: accumulation(trace),
        max_sectional,
        min_h,
        curvature_nonpositive,
        ricci_bounded_below,
        theorem2_verdict: spatial_order > 2.0 && curvature_nonpositive && ricci_bounded_below,
        low_confidence: temporal_fit.rms > win.max_rms || spatial_fit.rms > win.max_rms,
    })
}
