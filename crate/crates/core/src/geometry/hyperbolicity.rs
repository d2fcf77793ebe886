use serde::{Deserialize, Serialize};

use super::{curvature, CurvatureField, WarpedMetric};
use crate::error::GeometryError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicityOptions {
    /// Outer fraction of the grid left out of the order-delta sup.
    pub collar: f64,
    /// Threshold the verdict flags are evaluated against.
    pub threshold: f64,
}

impl Default for HyperbolicityOptions {
    fn default() -> Self {
        Self { collar: 0.1, threshold: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperbolicityVerdict {
    pub metric_ok: bool,
    pub curvature_ok: bool,
    pub order_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicityReport {
    pub eps_metric: f64,
    pub eps_curv: f64,
    /// sup |K+1| e^{delta r}, r the grid coordinate.
    pub eps_order: f64,
    /// Same sup with r replaced by the arclength of the metric itself.
    pub eps_order_arclength: f64,
    pub delta: f64,
    pub threshold: f64,
    pub verdict: HyperbolicityVerdict,
}

impl HyperbolicityReport {
    pub fn verdict_at(&self, eps: f64) -> HyperbolicityVerdict {
        HyperbolicityVerdict {
            metric_ok: self.eps_metric <= eps,
            curvature_ok: self.eps_curv <= eps,
            order_ok: self.eps_order <= eps,
        }
    }
}

pub fn hyperbolicity(metric: &WarpedMetric, delta: f64) -> Result<HyperbolicityReport, GeometryError> {
    hyperbolicity_with(metric, delta, &HyperbolicityOptions::default())
}

pub fn hyperbolicity_with(
    metric: &WarpedMetric,
    delta: f64,
    opts: &HyperbolicityOptions,
) -> Result<HyperbolicityReport, GeometryError> {
    let k = curvature(metric)?;
    Ok(hyperbolicity_from(metric, &k, delta, opts))
}

/// Report from an already computed curvature field.
pub fn hyperbolicity_from(
    metric: &WarpedMetric,
    k: &CurvatureField,
    delta: f64,
    opts: &HyperbolicityOptions,
) -> HyperbolicityReport {
    let grid = metric.grid();
    let (al, be) = (metric.alpha(), metric.beta());
    let mut eps_metric = 0.0_f64;
    let mut eps_curv = 0.0_f64;
    for i in 0..grid.len() {
        eps_metric = eps_metric.max((al[i] * (2.0 + al[i])).abs()).max((be[i] * (2.0 + be[i])).abs());
        eps_curv = eps_curv.max(k.k_dev(i));
    }
    let s = metric.arclength();
    let mut eps_order = 0.0_f64;
    let mut eps_order_arc = 0.0_f64;
    for i in 0..grid.interior_len(opts.collar) {
        let d = k.k_dev(i);
        eps_order = eps_order.max(d * (delta * grid.r(i)).exp());
        eps_order_arc = eps_order_arc.max(d * (delta * s[i]).exp());
    }
    let mut rep = HyperbolicityReport {
        eps_metric,
        eps_curv,
        eps_order,
        eps_order_arclength: eps_order_arc,
        delta,
        threshold: opts.threshold,
        verdict: HyperbolicityVerdict { metric_ok: false, curvature_ok: false, order_ok: false },
    };
    rep.verdict = rep.verdict_at(opts.threshold);
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::perturb::{perturb, Profile};
    use crate::grid::RadialGrid;
    use proptest::prelude::*;

    #[test]
    fn hyperbolic_is_zero() {
        let g = RadialGrid::with_radius(15.0, 0.05).unwrap();
        let r = hyperbolicity(&WarpedMetric::hyperbolic(6, g).unwrap(), 3.0).unwrap();
        assert_eq!((r.eps_metric, r.eps_curv, r.eps_order), (0.0, 0.0, 0.0));
        assert!(r.verdict.metric_ok && r.verdict.order_ok);
    }

    #[test]
    fn scaled_warp_metric_eps() {
        let g = RadialGrid::with_radius(10.0, 0.05).unwrap();
        let a = vec![1.0; g.len()];
        let b: Vec<f64> = g.nodes().iter().map(|r| 1.03 * r.sinh()).collect();
        let m = WarpedMetric::from_warps(4, g, &a, &b).unwrap();
        let r = hyperbolicity(&m, 1.0).unwrap();
        assert!((r.eps_metric - (1.03_f64 * 1.03 - 1.0)).abs() < 1e-12, "{}", r.eps_metric);
    }

    #[test]
    fn order_sup_matches_brute_force() {
        let g = RadialGrid::with_radius(15.0, 0.05).unwrap();
        let m = perturb(6, g.clone(), 0.01, 3.0, &Profile::default(), 0).unwrap();
        let rep = hyperbolicity(&m, 3.0).unwrap();
        // brute force: same profile sampled four times finer
        let fine = RadialGrid::with_radius(15.0, 0.0125).unwrap();
        let mf = perturb(6, fine.clone(), 0.01, 3.0, &Profile::default(), 0).unwrap();
        let k = curvature(&mf).unwrap();
        let c = (0..fine.interior_len(0.1)).map(|i| k.k_dev(i) * (3.0 * fine.r(i)).exp()).fold(0.0, f64::max);
        assert!(rep.eps_order >= 0.5 * c && rep.eps_order <= 2.0 * c, "{} vs {c}", rep.eps_order);
        assert!(rep.eps_order.is_finite() && rep.eps_order < 1.0);
    }

    proptest! {
        #[test]
        fn order_dominates_and_is_monotone(eps in 0.0..0.1f64, d1 in 0.0..3.0f64, dd in 0.0..2.0f64) {
            let g = RadialGrid::with_radius(8.0, 0.05).unwrap();
            let m = perturb(5, g, eps, 2.0, &Profile::default(), 0).unwrap();
            let opts = HyperbolicityOptions { collar: 0.0, threshold: 0.1 };
            let lo = hyperbolicity_with(&m, d1, &opts).unwrap();
            let hi = hyperbolicity_with(&m, d1 + dd, &opts).unwrap();
            prop_assert!(lo.eps_order >= lo.eps_curv);
            prop_assert!(hi.eps_order >= lo.eps_order);
            prop_assert!(lo.eps_metric >= 0.0 && lo.eps_curv >= 0.0);
        }
    }
}
