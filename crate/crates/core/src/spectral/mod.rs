//! Bottom of the spectrum for functions and traceless 2-tensors on warped
//! metrics, plus the cosh/sinh comparison inequality.

mod comparison;
mod spline;
mod tensor;
mod tridiag;

pub use comparison::{comparison_margin, find_epsilon0, find_epsilon0_with, ComparisonProbe, EPS0_UPPER};
pub use spline::SplineFamily;
pub use tensor::{
    connection_weight, minimize_tensor_quotient, sample_tensor_quotients, tensor_rayleigh, tensor_rayleigh_with,
    ConnectionModel, TensorOptions, TestTensor,
};
pub use tridiag::smallest_eigenvalue;

use serde::{Deserialize, Serialize};

use crate::error::SpectralError;
use crate::geometry::WarpedMetric;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralKind {
    FunctionBottom,
    FunctionRayleigh,
    TensorRayleigh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCondition {
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    pub value: f64,
    pub kind: SpectralKind,
    pub domain_radius: f64,
    pub grid_spacing: f64,
    pub bc: BoundaryCondition,
}

impl SpectralEstimate {
    fn new(value: f64, kind: SpectralKind, metric: &WarpedMetric) -> Self {
        Self {
            value,
            kind,
            domain_radius: metric.grid().r_max(),
            grid_spacing: metric.grid().spacing(),
            bc: BoundaryCondition::Dirichlet,
        }
    }
}

/// Eigenvalue tolerance of the bisection.
pub const EIGEN_TOL: f64 = 1e-10;
pub const EIGEN_MAX_ITER: usize = 200;

/// ln of the volume density w = a b^{n-1} at each node.
pub(crate) fn log_density(metric: &WarpedMetric) -> Vec<f64> {
    let nm = (metric.dimension() - 1) as f64;
    (0..metric.len()).map(|i| metric.a(i).ln() + nm * metric.b(i).ln()).collect()
}

/// ln(b^{n-1}/a) on the cell faces r_i + dr/2, the last one at r_max.
fn log_flux_faces(metric: &WarpedMetric) -> Vec<f64> {
    let grid = metric.grid();
    let (al, be) = (metric.alpha(), metric.beta());
    let nm = (metric.dimension() - 1) as f64;
    let len = metric.len();
    (0..len)
        .map(|i| {
            let (am, bm) = if i + 1 < len {
                (0.5 * (al[i] + al[i + 1]), 0.5 * (be[i] + be[i + 1]))
            } else {
                (1.5 * al[i] - 0.5 * al[i - 1], 1.5 * be[i] - 0.5 * be[i - 1])
            };
            let r = grid.r(i) + 0.5 * grid.spacing();
            nm * (r.sinh().ln() + (1.0 + bm).ln()) - (1.0 + am).ln()
        })
        .collect()
}

/// Smallest Dirichlet eigenvalue of the radial Laplacian
/// -(1/w) d/dr((w/a^2) d/dr), w = a b^{n-1}.
///
/// Finite-volume discretization on the cell-centered grid, symmetrized by
/// w^{1/2} and assembled in log space so large radii do not overflow.
pub fn function_bottom(metric: &WarpedMetric) -> Result<SpectralEstimate, SpectralError> {
    let lw = log_density(metric);
    let lc = log_flux_faces(metric);
    let len = lw.len();
    let inv_dr2 = 1.0 / (metric.grid().spacing() * metric.grid().spacing());
    let mut diag = vec![0.0; len];
    let mut off = vec![0.0; len - 1];
    for i in 0..len {
        let right = if i + 1 < len { (lc[i] - lw[i]).exp() } else { 2.0 * (lc[i] - lw[i]).exp() };
        let left = if i > 0 { (lc[i - 1] - lw[i]).exp() } else { 0.0 };
        diag[i] = (left + right) * inv_dr2;
        if i + 1 < len {
            off[i] = -(lc[i] - 0.5 * (lw[i] + lw[i + 1])).exp() * inv_dr2;
        }
    }
    let value = smallest_eigenvalue(&diag, &off, EIGEN_TOL, EIGEN_MAX_ITER)?;
    Ok(SpectralEstimate::new(value, SpectralKind::FunctionBottom, metric))
}

/// Rayleigh quotient of a radial function profile: the profile is taken
/// piecewise linear between nodes, the weights are integrated by the
/// trapezoid rule on each cell.
pub fn rayleigh_function(metric: &WarpedMetric, f: &[f64]) -> Result<SpectralEstimate, SpectralError> {
    let len = metric.len();
    if f.len() != len {
        return Err(SpectralError::BadArgument(format!("profile has {} values, grid has {len}", f.len())));
    }
    let (lo, hi) = support(f).ok_or(SpectralError::ZeroDenominator)?;
    let grid = metric.grid();
    if lo == 0 || hi + 1 >= len {
        return Err(SpectralError::SupportTouchesBoundary { lo: grid.r(lo), hi: grid.r(hi), r_max: grid.r_max() });
    }
    let lw = log_density(metric);
    let shift = lw[lo - 1..=hi + 1].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let dr = grid.spacing();
    let (mut num, mut den) = (0.0, 0.0);
    for i in lo - 1..=hi {
        let a0 = metric.a(i);
        let a1 = metric.a(i + 1);
        let c0 = (lw[i] - shift).exp() / (a0 * a0);
        let c1 = (lw[i + 1] - shift).exp() / (a1 * a1);
        let s = (f[i + 1] - f[i]) / dr;
        num += s * s * 0.5 * (c0 + c1) * dr;
    }
    for i in lo..=hi {
        den += f[i] * f[i] * (lw[i] - shift).exp() * dr;
    }
    if den <= 0.0 {
        return Err(SpectralError::ZeroDenominator);
    }
    Ok(SpectralEstimate::new(num / den, SpectralKind::FunctionRayleigh, metric))
}

/// First and last nonzero index.
pub(crate) fn support(f: &[f64]) -> Option<(usize, usize)> {
    let lo = f.iter().position(|&v| v != 0.0)?;
    let hi = f.iter().rposition(|&v| v != 0.0)?;
    Some((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use std::f64::consts::PI;

    fn hyp(n: usize, r_max: f64, dr: f64) -> WarpedMetric {
        WarpedMetric::hyperbolic(n, RadialGrid::with_radius(r_max, dr).unwrap()).unwrap()
    }

    #[test]
    fn hyperbolic_three_space_closed_form() {
        let lam = function_bottom(&hyp(3, 20.0, 0.01)).unwrap().value;
        let exact = 1.0 + (PI / 20.0).powi(2);
        assert!((lam - exact).abs() < 1e-4, "{lam} vs {exact}");
    }

    #[test]
    fn euclidean_ball() {
        let g = RadialGrid::with_radius(5.0, 0.005).unwrap();
        let a = vec![1.0; g.len()];
        let m = WarpedMetric::from_warps(3, g.clone(), &a, &g.nodes()).unwrap();
        let lam = function_bottom(&m).unwrap().value;
        let exact = (PI / 5.0).powi(2);
        assert!((lam / exact - 1.0).abs() < 0.01, "{lam} vs {exact}");
    }

    #[test]
    fn seven_dimensional_trend() {
        let mut prev = f64::INFINITY;
        for r in [10.0, 20.0, 30.0] {
            let lam = function_bottom(&hyp(7, r, 0.01)).unwrap().value;
            assert!(lam < prev && lam > 9.0, "r_max={r}: {lam}");
            prev = lam;
        }
        assert!((prev / 9.0 - 1.0).abs() < 0.01);
    }

    #[test]
    fn rayleigh_bounds_and_homogeneity() {
        let m = hyp(3, 10.0, 0.01);
        let f: Vec<f64> =
            m.grid().nodes().iter().map(|&r| if (2.0..=8.0).contains(&r) { (PI * (r - 2.0) / 6.0).sin() } else { 0.0 }).collect();
        let q = rayleigh_function(&m, &f).unwrap().value;
        assert!(q >= 1.0, "{q}");
        let f10: Vec<f64> = f.iter().map(|v| 10.0 * v).collect();
        assert!((rayleigh_function(&m, &f10).unwrap().value - q).abs() <= 1e-12 * q);
        // the discrete quotient is bounded below by the discrete bottom
        assert!(q >= function_bottom(&m).unwrap().value - 1e-9);
    }

    #[test]
    fn hat_function_quadrature() {
        let n = 4;
        let m = hyp(n, 6.0, 0.05);
        let g = m.grid();
        let (i0, i1, i2) = (40usize, 50usize, 70usize);
        let h = g.spacing();
        let f: Vec<f64> = (0..g.len())
            .map(|i| match i {
                _ if i > i0 && i <= i1 => (i - i0) as f64 / (i1 - i0) as f64,
                _ if i > i1 && i < i2 => (i2 - i) as f64 / (i2 - i1) as f64,
                _ => 0.0,
            })
            .collect();
        // direct trapezoid rule with the exact slopes, in plain arithmetic
        let w = |i: usize| g.r(i).sinh().powi(n as i32 - 1);
        let up = 1.0 / ((i1 - i0) as f64 * h);
        let down = 1.0 / ((i2 - i1) as f64 * h);
        let mut num = 0.0;
        for i in i0..i1 {
            num += up * up * 0.5 * (w(i) + w(i + 1)) * h;
        }
        for i in i1..i2 {
            num += down * down * 0.5 * (w(i) + w(i + 1)) * h;
        }
        let den: f64 = (0..g.len()).map(|i| f[i] * f[i] * w(i) * h).sum();
        let q = rayleigh_function(&m, &f).unwrap().value;
        assert!((q - num / den).abs() <= 1e-8 * q, "{q} vs {}", num / den);
    }

    #[test]
    fn rayleigh_errors() {
        let m = hyp(3, 5.0, 0.05);
        assert!(matches!(rayleigh_function(&m, &vec![0.0; m.len()]), Err(SpectralError::ZeroDenominator)));
        let mut f = vec![0.0; m.len()];
        f[0] = 1.0;
        assert!(matches!(rayleigh_function(&m, &f), Err(SpectralError::SupportTouchesBoundary { .. })));
    }
}
