//! Rotationally symmetric metrics on H^n and their curvature.

pub mod chart;
mod curvature;
mod hyperbolicity;
mod metric;
mod perturb;
mod regauge;

pub use chart::curvature_oracle;
pub use curvature::{curvature, curvature_deviation, CurvatureField, DeviationDerivs, RadialBasis};
pub(crate) use curvature::curvature_with;
pub use hyperbolicity::{
    hyperbolicity, hyperbolicity_from, hyperbolicity_with, HyperbolicityOptions, HyperbolicityReport,
    HyperbolicityVerdict,
};
pub use metric::WarpedMetric;
pub use perturb::{outer_taper, perturb, smooth_step, Profile};
pub use regauge::{interpolate, ArclengthGauge};

use crate::error::GeometryError;
use crate::grid::RadialGrid;

/// Hyperbolic space g_H on the grid.
pub fn make_hyperbolic(n: usize, grid: RadialGrid) -> Result<WarpedMetric, GeometryError> {
    WarpedMetric::hyperbolic(n, grid)
}
