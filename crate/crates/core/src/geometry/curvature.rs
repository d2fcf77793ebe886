use serde::{Deserialize, Serialize};

use super::WarpedMetric;
use crate::error::GeometryError;
use crate::grid::{RadialGrid, MIN_NODES};
use crate::stencil::{d12, Parity};

/// Per-node curvature of a warped metric in the orthonormal frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureField {
    pub k_rad: Vec<f64>,
    pub k_sph: Vec<f64>,
    /// K_rad + 1, kept separately so tiny deviations survive.
    pub k_rad_dev: Vec<f64>,
    /// K_sph + 1.
    pub k_sph_dev: Vec<f64>,
    pub ric_rad: Vec<f64>,
    pub ric_tan: Vec<f64>,
    pub h_rad: Vec<f64>,
    pub h_tan: Vec<f64>,
    pub h_norm: Vec<f64>,
    pub q_norm: Vec<f64>,
}

impl CurvatureField {
    /// Assembles every derived array from K_rad + 1 and K_sph + 1.
    pub fn from_deviations(n: usize, k_rad_dev: Vec<f64>, k_sph_dev: Vec<f64>) -> Self {
        let m = (n - 1) as f64;
        let len = k_rad_dev.len();
        let mut f = CurvatureField {
            k_rad: Vec::with_capacity(len),
            k_sph: Vec::with_capacity(len),
            k_rad_dev: Vec::new(),
            k_sph_dev: Vec::new(),
            ric_rad: Vec::with_capacity(len),
            ric_tan: Vec::with_capacity(len),
            h_rad: Vec::with_capacity(len),
            h_tan: Vec::with_capacity(len),
            h_norm: Vec::with_capacity(len),
            q_norm: Vec::with_capacity(len),
        };
        for i in 0..len {
            let (dr, ds) = (k_rad_dev[i], k_sph_dev[i]);
            let hr = m * dr;
            let ht = dr + (m - 1.0) * ds;
            f.k_rad.push(dr - 1.0);
            f.k_sph.push(ds - 1.0);
            f.h_rad.push(hr);
            f.h_tan.push(ht);
            f.ric_rad.push(hr - m);
            f.ric_tan.push(ht - m);
            f.h_norm.push((hr * hr + m * ht * ht).sqrt());
            f.q_norm.push(2.0 * (m * dr * dr + 0.5 * m * (m - 1.0) * ds * ds).sqrt());
        }
        f.k_rad_dev = k_rad_dev;
        f.k_sph_dev = k_sph_dev;
        f
    }

    pub fn len(&self) -> usize {
        self.k_rad.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_rad.is_empty()
    }

    /// max(|K_rad + 1|, |K_sph + 1|) at node i.
    #[inline]
    pub fn k_dev(&self, i: usize) -> f64 {
        self.k_rad_dev[i].abs().max(self.k_sph_dev[i].abs())
    }

    /// tr h = h_rad + (n - 1) h_tan.
    pub fn trace_h(&self, n: usize, i: usize) -> f64 {
        self.h_rad[i] + (n - 1) as f64 * self.h_tan[i]
    }
}

/// Hyperbolic functions of the grid nodes, shared by curvature and flow.
#[derive(Debug, Clone)]
pub struct RadialBasis {
    pub sinh: Vec<f64>,
    pub coth: Vec<f64>,
    /// 1 / sinh^2 r
    pub csch2: Vec<f64>,
}

impl RadialBasis {
    pub fn new(grid: &RadialGrid) -> Self {
        let sinh: Vec<f64> = grid.nodes().iter().map(|r| r.sinh()).collect();
        let coth = grid.nodes().iter().map(|r| 1.0 / r.tanh()).collect();
        let csch2 = sinh.iter().map(|s| 1.0 / (s * s)).collect();
        Self { sinh, coth, csch2 }
    }
}

/// First and second derivatives of the deviation fields.
#[derive(Debug, Clone)]
pub struct DeviationDerivs {
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
}

impl DeviationDerivs {
    pub fn zeros(len: usize) -> Self {
        Self { a1: vec![0.0; len], a2: vec![0.0; len], b1: vec![0.0; len], b2: vec![0.0; len] }
    }

    pub fn compute(&mut self, alpha: &[f64], beta: &[f64], dr: f64) {
        d12(alpha, Parity::Even, dr, &mut self.a1, &mut self.a2);
        d12(beta, Parity::Even, dr, &mut self.b1, &mut self.b2);
    }
}

/// K_rad + 1 and K_sph + 1 at one node, written so each term carries a
/// factor of the deviation from g_H.
#[inline]
#[allow(clippy::too_many_arguments)]
pub fn curvature_deviation(
    al: f64,
    be: f64,
    al1: f64,
    be1: f64,
    be2: f64,
    coth: f64,
    csch2: f64,
) -> (f64, f64) {
    let a = 1.0 + al;
    let p = 1.0 + be;
    let a2m1 = al * (2.0 + al);
    let kr = (a * p * a2m1 - a * (2.0 * coth * be1 + be2) + (coth * p + be1) * al1) / (a * a * a * p);
    let ks = ((al - be) * (2.0 + al + be) * csch2 + p * p * a2m1 - 2.0 * coth * p * be1 - be1 * be1)
        / (a * a * p * p);
    (kr, ks)
}

/// Closed-form curvature of a warped metric.
pub fn curvature(metric: &WarpedMetric) -> Result<CurvatureField, GeometryError> {
    let grid = metric.grid();
    if grid.len() < MIN_NODES {
        return Err(GeometryError::GridTooCoarse(grid.len()));
    }
    let basis = RadialBasis::new(grid);
    let mut d = DeviationDerivs::zeros(grid.len());
    Ok(curvature_with(metric, &basis, &mut d))
}

pub(crate) fn curvature_with(
    metric: &WarpedMetric,
    basis: &RadialBasis,
    d: &mut DeviationDerivs,
) -> CurvatureField {
    let (al, be) = (metric.alpha(), metric.beta());
    d.compute(al, be, metric.grid().spacing());
    let len = al.len();
    let mut kr = Vec::with_capacity(len);
    let mut ks = Vec::with_capacity(len);
    for i in 0..len {
        let (x, y) = curvature_deviation(al[i], be[i], d.a1[i], d.b1[i], d.b2[i], basis.coth[i], basis.csch2[i]);
        kr.push(x);
        ks.push(y);
    }
    CurvatureField::from_deviations(metric.dimension(), kr, ks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::perturb::{perturb, Profile};
    use proptest::prelude::*;

    fn from_fn(n: usize, grid: RadialGrid, a: impl Fn(f64) -> f64, b: impl Fn(f64) -> f64) -> WarpedMetric {
        let av: Vec<f64> = grid.nodes().iter().map(|&r| a(r)).collect();
        let bv: Vec<f64> = grid.nodes().iter().map(|&r| b(r)).collect();
        WarpedMetric::from_warps(n, grid, &av, &bv).unwrap()
    }

    #[test]
    fn hyperbolic_is_exact() {
        let g = RadialGrid::with_radius(15.0, 0.05).unwrap();
        for n in [3, 4, 6] {
            let c = curvature(&WarpedMetric::hyperbolic(n, g.clone()).unwrap()).unwrap();
            assert!(c.h_norm.iter().all(|&h| h == 0.0));
            assert!(c.k_rad.iter().chain(&c.k_sph).all(|&k| k == -1.0));
            assert!(c.ric_rad.iter().all(|&x| x == -((n - 1) as f64)));
        }
    }

    #[test]
    fn round_sphere_has_curvature_one() {
        for c in [1.0_f64, 2.0] {
            let dr = 0.001;
            let g = RadialGrid::with_radius(c * 1.5, dr).unwrap();
            let m = from_fn(4, g, |_| 1.0, |r| c * (r / c).sin());
            let k = curvature(&m).unwrap();
            let target = 1.0 / (c * c);
            for i in 0..k.len() - 1 {
                assert!((k.k_sph[i] - target).abs() < 1e-5, "c={c} i={i} {}", k.k_sph[i]);
                assert!((k.k_rad[i] - target).abs() < 1e-5, "c={c} i={i} {}", k.k_rad[i]);
            }
        }
    }

    #[test]
    fn euclidean_warp_is_flat() {
        let g = RadialGrid::with_radius(4.0, 0.01).unwrap();
        let m = from_fn(3, g, |_| 1.0, |r| r);
        let k = curvature(&m).unwrap();
        for i in 0..k.len() {
            assert!(k.k_rad[i].abs() < 1e-4 && k.k_sph[i].abs() < 1e-4, "i={i}");
        }
    }

    #[test]
    fn raw_formula_agrees_with_deviation_form() {
        // K_rad = -b_ss/b and K_sph = (1 - b_s^2)/b^2 evaluated from a and b directly
        let g = RadialGrid::with_radius(6.0, 0.01).unwrap();
        let m = perturb(4, g.clone(), 0.05, 2.0, &Profile::default(), 0).unwrap();
        let k = curvature(&m).unwrap();
        let (a, b) = (m.a_values(), m.b_values());
        let dr = g.spacing();
        // raw differencing loses accuracy like dr^2/r^2 near the origin
        for i in g.index_of(1.0)..g.len() - 5 {
            let a1 = (a[i + 1] - a[i - 1]) / (2.0 * dr);
            let b1 = (b[i + 1] - b[i - 1]) / (2.0 * dr);
            let b2 = (b[i + 1] - 2.0 * b[i] + b[i - 1]) / (dr * dr);
            let kr = -(b2 * a[i] - a1 * b1) / (a[i].powi(3) * b[i]);
            let ks = (1.0 - (b1 / a[i]).powi(2)) / (b[i] * b[i]);
            assert!((kr - k.k_rad[i]).abs() < 1e-3, "i={i}");
            assert!((ks - k.k_sph[i]).abs() < 1e-3, "i={i}");
        }
    }

    proptest! {
        #[test]
        fn trace_and_einstein_identities(
            eps in 0.0..0.2f64,
            delta in 0.5..4.0f64,
            n in 3usize..9,
            center in 0.5..4.0f64,
        ) {
            let g = RadialGrid::with_radius(10.0, 0.05).unwrap();
            let m = perturb(n, g, eps, delta, &Profile::GaussianBump { center, width: 1.0 }, 0).unwrap();
            let k = curvature(&m).unwrap();
            let nm = (n - 1) as f64;
            for i in 0..k.len() {
                let tr = k.ric_rad[i] + nm * k.ric_tan[i] + n as f64 * nm;
                prop_assert!((k.trace_h(n, i) - tr).abs() < 1e-9);
                // |h| small forces both eigenvalues to -(n-1) and conversely
                let tol = 1e-6;
                if k.h_norm[i] <= tol {
                    prop_assert!((k.ric_rad[i] + nm).abs() <= tol && (k.ric_tan[i] + nm).abs() <= tol);
                }
                if (k.ric_rad[i] + nm).abs() <= tol / n as f64 && (k.ric_tan[i] + nm).abs() <= tol / n as f64 {
                    prop_assert!(k.h_norm[i] <= tol);
                }
                prop_assert!(k.q_norm[i] >= 0.0);
            }
        }
    }
}
