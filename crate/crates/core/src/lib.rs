//! Normalized Ricci flow on rotationally symmetric perturbations of
//! hyperbolic space, with the spectral, integral and decay diagnostics used
//! to check its long-time behaviour.

// negated float comparisons reject NaN on purpose; index loops mirror the stencils
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod error;
pub mod fit;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod integrals;
pub mod io;
pub mod spectral;
pub mod stencil;

pub use error::{AnalysisError, FlowError, FormatError, GeometryError, IntegralError, SpectralError};
pub use geometry::{curvature, curvature_oracle, hyperbolicity, make_hyperbolic, perturb, CurvatureField, Profile, WarpedMetric};
pub use grid::RadialGrid;
pub use flow::{run, FlowConfig, FlowTrace};
