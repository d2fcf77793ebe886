use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::grid::RadialGrid;
use crate::stencil::even_at_origin;

/// Rotationally symmetric metric a(r)^2 dr^2 + b(r)^2 g_sphere.
///
/// Stored relative to hyperbolic space: `alpha = a - 1` and
/// `beta = b / sinh r - 1`. Both are even in r. Keeping the deviation as the
/// state makes g_H an exact zero and lets curvature deviations far below the
/// truncation error of raw differencing be resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpedMetric {
    dimension: usize,
    grid: RadialGrid,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl WarpedMetric {
    /// Builds from the deviations `alpha = a - 1`, `beta = b / sinh r - 1`.
    pub fn from_deviation(
        dimension: usize,
        grid: RadialGrid,
        alpha: Vec<f64>,
        beta: Vec<f64>,
    ) -> Result<Self, GeometryError> {
        if dimension < 3 {
            return Err(GeometryError::DimensionTooSmall(dimension));
        }
        for v in [&alpha, &beta] {
            if v.len() != grid.len() {
                return Err(GeometryError::LengthMismatch { expected: grid.len(), got: v.len() });
            }
        }
        let m = Self { dimension, grid, alpha, beta };
        m.check_positive()?;
        Ok(m)
    }

    /// Builds from raw warps a, b.
    pub fn from_warps(
        dimension: usize,
        grid: RadialGrid,
        a: &[f64],
        b: &[f64],
    ) -> Result<Self, GeometryError> {
        for v in [a, b] {
            if v.len() != grid.len() {
                return Err(GeometryError::LengthMismatch { expected: grid.len(), got: v.len() });
            }
        }
        let alpha = a.iter().map(|&x| x - 1.0).collect();
        let beta = b.iter().enumerate().map(|(i, &x)| x / grid.r(i).sinh() - 1.0).collect();
        Self::from_deviation(dimension, grid, alpha, beta)
    }

    /// Hyperbolic space: a = 1, b = sinh r.
    pub fn hyperbolic(dimension: usize, grid: RadialGrid) -> Result<Self, GeometryError> {
        let n = grid.len();
        Self::from_deviation(dimension, grid, vec![0.0; n], vec![0.0; n])
    }

    /// Metric c * g_H.
    pub fn conformal_hyperbolic(dimension: usize, grid: RadialGrid, c: f64) -> Result<Self, GeometryError> {
        if !(c.is_finite() && c > 0.0) {
            return Err(GeometryError::BadParameter(format!("conformal factor {c}")));
        }
        let n = grid.len();
        let s = c.sqrt() - 1.0;
        Self::from_deviation(dimension, grid, vec![s; n], vec![s; n])
    }

    fn check_positive(&self) -> Result<(), GeometryError> {
        for i in 0..self.grid.len() {
            let (al, be) = (self.alpha[i], self.beta[i]);
            if !(al > -1.0 && be > -1.0 && al.is_finite() && be.is_finite()) {
                return Err(GeometryError::NonPositiveWarp { index: i, a: self.a(i), b: self.b(i) });
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub(crate) fn deviation_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.alpha, &mut self.beta)
    }

    #[inline]
    pub fn a(&self, i: usize) -> f64 {
        1.0 + self.alpha[i]
    }

    #[inline]
    pub fn b(&self, i: usize) -> f64 {
        self.grid.r(i).sinh() * (1.0 + self.beta[i])
    }

    pub fn a_values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.a(i)).collect()
    }

    pub fn b_values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.b(i)).collect()
    }

    /// b_s(0) = b'(0)/a(0) from the parity extension; 1 for a smooth metric.
    pub fn origin_slope(&self) -> f64 {
        (1.0 + even_at_origin(&self.beta)) / (1.0 + even_at_origin(&self.alpha))
    }

    /// Radial arclength s(r_i) = integral of a from 0 to r_i.
    pub fn arclength(&self) -> Vec<f64> {
        let dr = self.grid.spacing();
        let mut s = Vec::with_capacity(self.len());
        let a0 = 1.0 + even_at_origin(&self.alpha);
        // [0, r_0] by trapezoid with the extrapolated origin value
        let mut acc = 0.25 * dr * (a0 + self.a(0));
        s.push(acc);
        for i in 1..self.len() {
            acc += 0.5 * dr * (self.a(i - 1) + self.a(i));
            s.push(acc);
        }
        s
    }

    /// Largest |a - 1| and |b/sinh r - 1| over all nodes.
    pub fn max_deviation(&self) -> f64 {
        self.alpha.iter().chain(&self.beta).fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> RadialGrid {
        RadialGrid::new(64, 0.1).unwrap()
    }

    #[test]
    fn hyperbolic_has_sinh_warp() {
        let m = WarpedMetric::hyperbolic(3, grid()).unwrap();
        for i in 0..m.len() {
            assert_eq!(m.a(i), 1.0);
            assert_eq!(m.b(i), m.grid().r(i).sinh());
        }
        assert_eq!(m.origin_slope(), 1.0);
    }

    #[test]
    fn rejects_low_dimension_and_bad_warps() {
        assert!(matches!(
            WarpedMetric::hyperbolic(2, grid()),
            Err(GeometryError::DimensionTooSmall(2))
        ));
        let mut a = vec![1.0; 64];
        a[5] = -0.1;
        let b: Vec<f64> = grid().nodes().iter().map(|r| r.sinh()).collect();
        assert!(matches!(
            WarpedMetric::from_warps(4, grid(), &a, &b),
            Err(GeometryError::NonPositiveWarp { index: 5, .. })
        ));
        assert!(WarpedMetric::from_warps(4, grid(), &a[..10], &b).is_err());
    }

    #[test]
    fn arclength_of_hyperbolic_is_r() {
        let m = WarpedMetric::hyperbolic(4, grid()).unwrap();
        let s = m.arclength();
        for i in 0..m.len() {
            assert!((s[i] - m.grid().r(i)).abs() < 1e-12);
        }
        let c = WarpedMetric::conformal_hyperbolic(4, grid(), 1.21).unwrap();
        let s = c.arclength();
        assert!((s[10] - 1.1 * c.grid().r(10)).abs() < 1e-12);
    }
}
