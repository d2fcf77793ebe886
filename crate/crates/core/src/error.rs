use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Serialize, Deserialize)]
pub enum GeometryError {
    #[error("grid too coarse: {0} nodes (need at least 16)")]
    GridTooCoarse(usize),
    #[error("invalid grid spacing or radius {0}")]
    BadSpacing(f64),
    #[error("grid radius {0} too large for double-precision warps")]
    RadiusTooLarge(f64),
    #[error("dimension {0} rejected: need n >= 3")]
    DimensionTooSmall(usize),
    #[error("dimension {0} not supported here")]
    UnsupportedDimension(usize),
    #[error("warp positivity violated at node {index} (a = {a}, b = {b})")]
    NonPositiveWarp { index: usize, a: f64, b: f64 },
    #[error("array length {got} does not match grid ({expected} nodes)")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

#[derive(Debug, Error, Clone, PartialEq, Serialize, Deserialize)]
pub enum FlowError {
    #[error("invalid flow config: {0}")]
    InvalidConfig(String),
    #[error("positivity lost at t = {t}, node {index}")]
    PositivityLoss { t: f64, index: usize },
    #[error("time step {dt} under floor {floor} at t = {t}")]
    DtUnderFloor { t: f64, dt: f64, floor: f64 },
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
    #[error("residual needs at least 3 snapshots, got {0}")]
    TooFewSnapshots(usize),
    #[error("snapshot spacing {spacing} exceeds {limit} for the centered time difference")]
    StrideTooCoarse { spacing: f64, limit: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("eigenvalue bisection did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("zero denominator in Rayleigh quotient")]
    ZeroDenominator,
    #[error("test support [{lo}, {hi}] must lie inside (0, {r_max}) with a ghost cell margin")]
    SupportTouchesBoundary { lo: f64, hi: f64, r_max: f64 },
    #[error("connection model disagrees with the coordinate oracle: {model} vs {oracle} at r = {r}")]
    OracleDisagreement { model: f64, oracle: f64, r: f64 },
    #[error("comparison predicate fails at eps = 0 (n = {n}, delta = {delta})")]
    PredicateFailsAtZero { n: usize, delta: f64 },
    #[error("invalid argument: {0}")]
    BadArgument(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegralError {
    #[error("integral diverges: a + b = {sum} <= n - 1 = {threshold}")]
    Divergent { sum: f64, threshold: f64 },
    #[error("invalid query: {0}")]
    BadQuery(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("reference time {t_ref} not after first snapshot at {t0}")]
    BadReferenceTime { t_ref: f64, t0: f64 },
    #[error("trace has no snapshots")]
    EmptyTrace,
    #[error("invalid window: {0}")]
    BadWindow(String),
    #[error("invalid argument: {0}")]
    BadArgument(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
