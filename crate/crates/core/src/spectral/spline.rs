use serde::{Deserialize, Serialize};

use crate::error::SpectralError;
use crate::grid::RadialGrid;

/// Uniform cubic B-splines whose supports lie inside [lo, hi]. Every member
/// vanishes with two derivatives at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplineFamily {
    pub lo: f64,
    pub hi: f64,
    /// Number of basis functions (free coefficients).
    pub knots: usize,
}

/// Cardinal cubic B-spline on [0, 4] and its derivative.
fn cardinal(u: f64) -> (f64, f64) {
    if !(0.0..4.0).contains(&u) {
        return (0.0, 0.0);
    }
    let (k, t) = (u.floor(), u - u.floor());
    match k as i32 {
        0 => (t * t * t / 6.0, t * t / 2.0),
        1 => ((-3.0 * t * t * t + 3.0 * t * t + 3.0 * t + 1.0) / 6.0, (-9.0 * t * t + 6.0 * t + 3.0) / 6.0),
        2 => ((3.0 * t * t * t - 6.0 * t * t + 4.0) / 6.0, (9.0 * t * t - 12.0 * t) / 6.0),
        _ => ((1.0 - t).powi(3) / 6.0, -(1.0 - t).powi(2) / 2.0),
    }
}

impl SplineFamily {
    pub fn new(lo: f64, hi: f64, knots: usize) -> Result<Self, SpectralError> {
        if !(lo >= 0.0 && hi > lo) || knots == 0 {
            return Err(SpectralError::BadArgument(format!("spline family needs 0 <= lo < hi and knots > 0, got [{lo}, {hi}], {knots}")));
        }
        Ok(Self { lo, hi, knots })
    }

    fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.knots + 3) as f64
    }

    /// Value and derivative of basis function k at r.
    pub fn basis(&self, k: usize, r: f64) -> (f64, f64) {
        let h = self.step();
        let (v, d) = cardinal((r - self.lo) / h - k as f64);
        (v, d / h)
    }

    /// Nodes of the grid whose values can be nonzero.
    pub fn node_range(&self, grid: &RadialGrid) -> std::ops::Range<usize> {
        let first = (0..grid.len()).find(|&i| grid.r(i) > self.lo).unwrap_or(grid.len());
        let last = (0..grid.len()).rev().find(|&i| grid.r(i) < self.hi).map_or(0, |i| i + 1);
        first..last.max(first)
    }

    /// Profile on the grid for the given coefficients.
    pub fn profile(&self, grid: &RadialGrid, coeffs: &[f64]) -> Vec<f64> {
        let mut f = vec![0.0; grid.len()];
        for i in self.node_range(grid) {
            let r = grid.r(i);
            f[i] = coeffs.iter().enumerate().map(|(k, c)| c * self.basis(k, r).0).sum();
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity_inside() {
        let s = SplineFamily::new(2.0, 8.0, 10).unwrap();
        // away from the ends the full basis sums to one
        let h = (8.0 - 2.0) / 13.0;
        for r in [2.0 + 3.5 * h, 5.0, 2.0 + 9.9 * h] {
            let sum: f64 = (0..10).map(|k| s.basis(k, r).0).sum();
            assert!((sum - 1.0).abs() < 1e-12, "{r}: {sum}");
            let d: f64 = (0..10).map(|k| s.basis(k, r).1).sum();
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_matches_difference() {
        let s = SplineFamily::new(0.0, 7.0, 4).unwrap();
        for k in 0..4 {
            for r in [0.3, 1.7, 2.2, 4.9, 6.1] {
                let e = 1e-6;
                let fd = (s.basis(k, r + e).0 - s.basis(k, r - e).0) / (2.0 * e);
                assert!((fd - s.basis(k, r).1).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn profile_vanishes_outside() {
        let g = RadialGrid::with_radius(10.0, 0.05).unwrap();
        let s = SplineFamily::new(3.0, 6.0, 5).unwrap();
        let f = s.profile(&g, &[1.0, -2.0, 0.5, 1.0, 3.0]);
        for (i, v) in f.iter().enumerate() {
            if g.r(i) <= 3.0 || g.r(i) >= 6.0 {
                assert_eq!(*v, 0.0);
            }
        }
    }
}
