use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

/// Smallest grid accepted anywhere in the crate.
pub const MIN_NODES: usize = 16;

/// Cell-centered radial grid, r_i = (i + 1/2) dr.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    node_count: usize,
    spacing: f64,
}

impl RadialGrid {
    pub fn new(node_count: usize, spacing: f64) -> Result<Self, GeometryError> {
        if node_count < MIN_NODES {
            return Err(GeometryError::GridTooCoarse(node_count));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(GeometryError::BadSpacing(spacing));
        }
        // sinh overflows past ~710
        if node_count as f64 * spacing > 700.0 {
            return Err(GeometryError::RadiusTooLarge(node_count as f64 * spacing));
        }
        Ok(Self { node_count, spacing })
    }

    /// Grid covering [0, r_max] with spacing as close to `spacing` as divides r_max.
    pub fn with_radius(r_max: f64, spacing: f64) -> Result<Self, GeometryError> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(GeometryError::BadSpacing(r_max));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(GeometryError::BadSpacing(spacing));
        }
        let count = (r_max / spacing).round().max(1.0) as usize;
        Self::new(count, r_max / count as f64)
    }

    pub fn len(&self) -> usize {
        self.node_count
    }

    pub fn is_empty(&self) -> bool {
        self.node_count == 0
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn r_max(&self) -> f64 {
        self.node_count as f64 * self.spacing
    }

    #[inline]
    pub fn r(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.spacing
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.node_count).map(|i| self.r(i)).collect()
    }

    /// Number of nodes left after dropping an outer collar of the given fraction.
    pub fn interior_len(&self, collar: f64) -> usize {
        let keep = ((1.0 - collar.clamp(0.0, 1.0)) * self.node_count as f64).floor() as usize;
        keep.clamp(1, self.node_count)
    }

    /// Index of the node nearest to r, clamped to the grid.
    pub fn index_of(&self, r: f64) -> usize {
        let x = (r / self.spacing - 0.5).round();
        if x <= 0.0 {
            0
        } else {
            (x as usize).min(self.node_count - 1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_cell_centered() {
        let g = RadialGrid::new(20, 0.5).unwrap();
        assert_eq!(g.r(0), 0.25);
        assert_eq!(g.r_max(), 10.0);
        let n = g.nodes();
        assert!(n.windows(2).all(|w| (w[1] - w[0] - 0.5).abs() < 1e-14));
    }

    #[test]
    fn rejects_small_grids() {
        assert!(matches!(RadialGrid::new(15, 0.1), Err(GeometryError::GridTooCoarse(15))));
        assert!(RadialGrid::new(16, 0.0).is_err());
    }

    #[test]
    fn radius_constructor_hits_r_max() {
        let g = RadialGrid::with_radius(15.0, 0.05).unwrap();
        assert_eq!(g.len(), 300);
        assert!((g.r_max() - 15.0).abs() < 1e-12);
        assert_eq!(g.index_of(g.r(37)), 37);
        assert_eq!(g.index_of(-3.0), 0);
        assert_eq!(g.index_of(1e9), 299);
    }
}
