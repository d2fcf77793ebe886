//! Exponential convolutions on exact hyperbolic space,
//! J(x, y) = int e^{-a d(x,z)} e^{-b d(y,z)} dV_z,
//! in polar coordinates about x with d(y, z) from the hyperbolic law of cosines.

mod gauss;

pub use gauss::{gamma_half, gauss_legendre, sphere_area};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::IntegralError;
use crate::fit::linear_fit;

/// Gauss-Legendre order of each radial panel.
const PANEL_ORDER: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    /// Radial cutoff; None means 40 + D.
    pub s_max: Option<f64>,
    /// Total radial nodes (rounded up to whole panels).
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    /// Largest admissible analytic tail bound.
    pub tail_tol: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self { s_max: None, radial_nodes: 1024, angular_nodes: 96, tail_tol: 1e-10 }
    }
}

impl QuadSpec {
    pub fn refined(&self) -> Self {
        Self { radial_nodes: 2 * self.radial_nodes, angular_nodes: 2 * self.angular_nodes, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionQuery {
    pub n: usize,
    pub a_exp: f64,
    pub b_exp: f64,
    /// d(x, y)
    pub distance: f64,
    pub quad: QuadSpec,
}

impl ConvolutionQuery {
    pub fn new(n: usize, a_exp: f64, b_exp: f64, distance: f64) -> Self {
        Self { n, a_exp, b_exp, distance, quad: QuadSpec::default() }
    }

    pub fn s_max(&self) -> f64 {
        self.quad.s_max.unwrap_or(40.0 + self.distance)
    }

    /// Exponent excess a + b - (n - 1); the integral converges iff positive.
    pub fn excess(&self) -> f64 {
        self.a_exp + self.b_exp - (self.n as f64 - 1.0)
    }
}

/// ln sinh s, accurate for large s.
fn ln_sinh(s: f64) -> f64 {
    s + (-(-2.0 * s).exp_m1()).ln() - std::f64::consts::LN_2
}

/// d(y, z) for |x z| = s at angle theta from the ray x y, |x y| = dist, via
/// sinh^2(d/2) = sinh^2((s - D)/2) + sinh D sinh s sin^2(theta/2).
fn law_of_cosines(dist: f64, s: f64, theta: f64) -> f64 {
    let u = (0.5 * (s - dist)).sinh();
    let v = (0.5 * theta).sin();
    2.0 * (u * u + dist.sinh() * s.sinh() * v * v).sqrt().asinh()
}

pub fn convolution_integral(q: &ConvolutionQuery) -> Result<f64, IntegralError> {
    if q.n < 2 || !(q.distance >= 0.0) || !q.a_exp.is_finite() || !q.b_exp.is_finite() {
        return Err(IntegralError::BadQuery(format!("n = {}, D = {}", q.n, q.distance)));
    }
    if q.quad.radial_nodes == 0 || q.quad.angular_nodes == 0 {
        return Err(IntegralError::BadQuery("quadrature needs radial and angular nodes".into()));
    }
    let threshold = q.n as f64 - 1.0;
    if q.excess() <= 0.0 {
        return Err(IntegralError::Divergent { sum: q.a_exp + q.b_exp, threshold });
    }
    let s_max = q.s_max();
    if s_max <= q.distance {
        return Err(IntegralError::BadQuery(format!("cutoff {s_max} must exceed D = {}", q.distance)));
    }
    let tail = (-q.excess() * (s_max - q.distance)).exp();
    if tail > q.quad.tail_tol {
        return Err(IntegralError::BadQuery(format!("tail bound {tail:e} above {:e}; raise s_max", q.quad.tail_tol)));
    }
    let (gx, gw) = gauss_legendre(PANEL_ORDER);
    let (tx, tw) = gauss_legendre(q.quad.angular_nodes);
    let panels = q.quad.radial_nodes.div_ceil(PANEL_ORDER).max(2);
    // panel edges with a break at s = D where the integrand has a cusp
    let mut edges = Vec::with_capacity(panels + 2);
    let h = s_max / panels as f64;
    for k in 0..=panels {
        edges.push(k as f64 * h);
    }
    if q.distance > 0.0 {
        edges.push(q.distance);
        edges.sort_by(f64::total_cmp);
        edges.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    }
    let (dist, a, b) = (q.distance, q.a_exp, q.b_exp);
    let nm = q.n as f64 - 1.0;
    let ang_pow = q.n as i32 - 2;
    let mut total = 0.0;
    for win in edges.windows(2) {
        let (s0, s1) = (win[0], win[1]);
        let (c, r) = (0.5 * (s0 + s1), 0.5 * (s1 - s0));
        for (x, w) in gx.iter().zip(&gw) {
            let s = c + r * x;
            let radial = (nm * ln_sinh(s) - a * s).exp();
            let mut inner = 0.0;
            // theta = pi u^3 clusters nodes at the cusp direction theta = 0
            for (y, v) in tx.iter().zip(&tw) {
                let u = 0.5 * (1.0 + y);
                let th = PI * u * u * u;
                inner += v * 3.0 * u * u * th.sin().powi(ang_pow) * (-b * law_of_cosines(dist, s, th)).exp();
            }
            total += w * r * radial * inner * 0.5 * PI;
        }
    }
    Ok(sphere_area(q.n - 2) * total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub distance: f64,
    pub integral: f64,
    /// integral e^{b D}
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioCurve {
    pub n: usize,
    pub a_exp: f64,
    pub b_exp: f64,
    pub points: Vec<RatioPoint>,
    /// Empirical constant: the largest ratio.
    pub max_ratio: f64,
    /// Slope of ln(ratio) against D on the last third of the D range.
    pub tail_slope: f64,
    /// a + b > n - 1 and a > b.
    pub hypotheses_hold: bool,
}

pub fn convolution_ratio_curve(
    n: usize,
    a_exp: f64,
    b_exp: f64,
    distances: &[f64],
    quad: &QuadSpec,
) -> Result<RatioCurve, IntegralError> {
    if distances.len() < 2 {
        return Err(IntegralError::BadQuery("need at least two distances".into()));
    }
    let mut points = Vec::with_capacity(distances.len());
    for &d in distances {
        let integral = convolution_integral(&ConvolutionQuery { n, a_exp, b_exp, distance: d, quad: *quad })?;
        points.push(RatioPoint { distance: d, integral, ratio: integral * (b_exp * d).exp() });
    }
    let d_max = distances.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let d_min = distances.iter().cloned().fold(f64::INFINITY, f64::min);
    let cut = d_max - (d_max - d_min) / 3.0;
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        points.iter().filter(|p| p.distance >= cut - 1e-12).map(|p| (p.distance, p.ratio.ln())).unzip();
    let tail_slope = linear_fit(&xs, &ys).map_or(f64::NAN, |f| f.slope);
    let max_ratio = points.iter().map(|p| p.ratio).fold(0.0, f64::max);
    Ok(RatioCurve {
        n,
        a_exp,
        b_exp,
        points,
        max_ratio,
        tail_slope,
        hypotheses_hold: a_exp + b_exp > n as f64 - 1.0 && a_exp > b_exp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_value_three_space() {
        let v = convolution_integral(&ConvolutionQuery::new(3, 3.0, 1.0, 0.0)).unwrap();
        assert!((v - PI / 6.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn law_of_cosines_matches_cosh_form() {
        for &(d, s, th) in &[(1.0f64, 2.0f64, 0.3f64), (3.0, 0.5, 2.0), (0.0, 1.0, 1.0), (2.0, 2.0, 1e-3)] {
            let c = d.cosh() * s.cosh() - d.sinh() * s.sinh() * th.cos();
            assert!((law_of_cosines(d, s, th) - c.acosh()).abs() < 1e-8);
        }
    }

    #[test]
    fn divergent_boundary_flagged() {
        let e = convolution_integral(&ConvolutionQuery::new(3, 1.0, 1.0, 0.0));
        assert!(matches!(e, Err(IntegralError::Divergent { .. })));
    }

    #[test]
    fn swapping_centres() {
        // polar coordinates about y instead of x exchange the exponents
        for d in [0.0, 0.5, 2.0, 5.0] {
            let v = convolution_integral(&ConvolutionQuery::new(3, 3.0, 1.2, d)).unwrap();
            let w = convolution_integral(&ConvolutionQuery::new(3, 1.2, 3.0, d)).unwrap();
            assert!(((v - w) / w).abs() < 1e-6, "D={d}: {v} {w}");
        }
    }

    #[test]
    fn quadrature_converged() {
        for &(n, a, b, d) in &[(3, 3.0, 1.0, 4.0), (6, 6.0, 5.0, 7.0), (3, 3.0, 1.0, 0.0)] {
            let q = ConvolutionQuery::new(n, a, b, d);
            let v = convolution_integral(&q).unwrap();
            let w = convolution_integral(&ConvolutionQuery { quad: q.quad.refined(), ..q }).unwrap();
            assert!(((v - w) / w).abs() < 1e-6, "n={n} D={d}: {v} vs {w}");
        }
    }
}
