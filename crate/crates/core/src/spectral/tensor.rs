//! Rayleigh quotient of traceless tensors xi = f(r) T0,
//! T0 = diag(n-1, -1, ..., -1)/sqrt(n(n-1)) in the orthonormal frame.
//!
//! Writing xi = f (l1 - l2) e^r e^r + f l2 g and using de^r(e_k) = (b_s/b) e^k
//! for angular e_k, the angular derivatives contribute
//! 2(n-1) (l1 - l2)^2 f^2 (b_s/b)^2 = 2n f^2 (b_s/b)^2, so
//! |grad xi|^2 = f_s^2 + 2n f^2 (b_s/b)^2.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{log_density, support, SpectralEstimate, SpectralKind, SplineFamily};
use crate::error::SpectralError;
use crate::geometry::chart::{sample_angles, Chart, MAX_DIM};
use crate::geometry::WarpedMetric;
use crate::grid::RadialGrid;
use crate::stencil::{d1, Parity};

/// Weight of the connection term f^2 (b_s/b)^2 in |grad xi|^2.
pub fn connection_weight(n: usize) -> f64 {
    2.0 * n as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestTensor {
    pub profile: Vec<f64>,
    pub support: (f64, f64),
}

impl TestTensor {
    pub fn new(grid: &RadialGrid, profile: Vec<f64>) -> Result<Self, SpectralError> {
        if profile.len() != grid.len() {
            return Err(SpectralError::BadArgument(format!("profile has {} values, grid has {}", profile.len(), grid.len())));
        }
        let (lo, hi) = support(&profile).ok_or(SpectralError::ZeroDenominator)?;
        let t = Self { profile, support: (grid.r(lo), grid.r(hi)) };
        if lo == 0 || hi + 2 >= grid.len() {
            return Err(SpectralError::SupportTouchesBoundary { lo: t.support.0, hi: t.support.1, r_max: grid.r_max() });
        }
        Ok(t)
    }

    /// Frame eigenvalues (radial, tangential) of T0.
    pub fn frame_form(n: usize) -> (f64, f64) {
        let c = 1.0 / ((n * (n - 1)) as f64).sqrt();
        ((n - 1) as f64 * c, -c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConnectionModel {
    Warped,
    /// Connection term dropped (fault injection).
    Zeroed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TensorOptions {
    pub connection: ConnectionModel,
    /// Nodes checked against the coordinate chart; 0 disables the check.
    pub oracle_nodes: usize,
    pub oracle_tol: f64,
}

impl Default for TensorOptions {
    fn default() -> Self {
        Self { connection: ConnectionModel::Warped, oracle_nodes: 4, oracle_tol: 1e-5 }
    }
}

/// b_s/b = (coth r + beta'/(1 + beta))/a at each node.
fn rotation(metric: &WarpedMetric) -> Vec<f64> {
    let grid = metric.grid();
    let mut b1 = vec![0.0; metric.len()];
    d1(metric.beta(), Parity::Even, grid.spacing(), &mut b1);
    (0..metric.len())
        .map(|i| (1.0 / grid.r(i).tanh() + b1[i] / (1.0 + metric.beta()[i])) / metric.a(i))
        .collect()
}

/// |grad xi|^2 at node i from the coordinate Christoffel symbols.
fn chart_gradient_sq(chart: &Chart, n: usize, i: usize, f: f64, f1: f64) -> f64 {
    let th = sample_angles(n);
    let geo = chart.geometry_at(i, &th);
    let (l1, l2) = TestTensor::frame_form(n);
    let dl = l1 - l2;
    let xi = |p: usize, q: usize| f * (if p == 0 && q == 0 { dl * geo.g[0][0] } else { 0.0 } + l2 * geo.g[p][q]);
    let mut cov = vec![0.0; n * n * n]; // [k][i][j]
    for k in 0..n {
        for p in 0..n {
            for q in 0..n {
                let base = if p == 0 && q == 0 { dl * geo.g[0][0] } else { 0.0 } + l2 * geo.g[p][q];
                let dbase = if p == 0 && q == 0 { dl * geo.dg[k][0][0] } else { 0.0 } + l2 * geo.dg[k][p][q];
                let mut v = f * dbase + if k == 0 { f1 * base } else { 0.0 };
                for m in 0..n {
                    v -= geo.gamma[m][k][p] * xi(m, q) + geo.gamma[m][k][q] * xi(p, m);
                }
                cov[(k * n + p) * n + q] = v;
            }
        }
    }
    // raise all three indices, then contract
    let mut up = cov.clone();
    for slot in 0..3 {
        let mut next = vec![0.0; n * n * n];
        for k in 0..n {
            for p in 0..n {
                for q in 0..n {
                    let idx = [k, p, q];
                    let mut s = 0.0;
                    for m in 0..n {
                        let mut j = idx;
                        j[slot] = m;
                        s += geo.ginv[idx[slot]][m] * up[(j[0] * n + j[1]) * n + j[2]];
                    }
                    next[(k * n + p) * n + q] = s;
                }
            }
        }
        up = next;
    }
    cov.iter().zip(&up).map(|(a, b)| a * b).sum()
}

pub fn tensor_rayleigh(metric: &WarpedMetric, xi: &TestTensor) -> Result<SpectralEstimate, SpectralError> {
    tensor_rayleigh_with(metric, xi, &TensorOptions::default())
}

pub fn tensor_rayleigh_with(
    metric: &WarpedMetric,
    xi: &TestTensor,
    opts: &TensorOptions,
) -> Result<SpectralEstimate, SpectralError> {
    let grid = metric.grid();
    let n = metric.dimension();
    let f = &xi.profile;
    if f.len() != metric.len() {
        return Err(SpectralError::BadArgument("profile length does not match the metric grid".into()));
    }
    let (lo, hi) = support(f).ok_or(SpectralError::ZeroDenominator)?;
    if lo == 0 || hi + 2 >= metric.len() {
        return Err(SpectralError::SupportTouchesBoundary { lo: grid.r(lo), hi: grid.r(hi), r_max: grid.r_max() });
    }
    let kappa = match opts.connection {
        ConnectionModel::Warped => connection_weight(n),
        ConnectionModel::Zeroed => 0.0,
    };
    let mut f1 = vec![0.0; f.len()];
    d1(f, Parity::Even, grid.spacing(), &mut f1);
    let rot = rotation(metric);
    let density = |i: usize| {
        let fs = f1[i] / metric.a(i);
        fs * fs + kappa * f[i] * f[i] * rot[i] * rot[i]
    };

    if opts.oracle_nodes > 0 && n <= MAX_DIM {
        let chart = Chart::new(metric)?;
        let mut nodes: Vec<usize> = (lo..=hi).collect();
        nodes.sort_by(|&p, &q| f[q].abs().total_cmp(&f[p].abs()));
        let step = (nodes.len() / (2 * opts.oracle_nodes)).max(1);
        for &i in nodes.iter().step_by(step).take(opts.oracle_nodes) {
            let model = density(i);
            let oracle = chart_gradient_sq(&chart, n, i, f[i], f1[i]);
            if (model - oracle).abs() > opts.oracle_tol * oracle.abs().max(f64::MIN_POSITIVE) {
                return Err(SpectralError::OracleDisagreement { model, oracle, r: grid.r(i) });
            }
        }
    }

    let lw = log_density(metric);
    let shift = lw[lo..=hi].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for i in lo - 1..=hi + 1 {
        let w = (lw[i] - shift).exp();
        num += density(i) * w;
        den += f[i] * f[i] * w;
    }
    if den <= 0.0 {
        return Err(SpectralError::ZeroDenominator);
    }
    Ok(SpectralEstimate::new(num / den, SpectralKind::TensorRayleigh, metric))
}

/// Infimum of the tensor quotient over a spline family: smallest eigenvalue
/// of the generalized problem A c = lambda B c. The minimizing profile is
/// passed back through the chart check.
pub fn minimize_tensor_quotient(
    metric: &WarpedMetric,
    family: &SplineFamily,
    opts: &TensorOptions,
) -> Result<(SpectralEstimate, Vec<f64>), SpectralError> {
    let grid = metric.grid();
    if family.lo < grid.r(0) || family.hi > grid.r_max() - 3.0 * grid.spacing() {
        return Err(SpectralError::SupportTouchesBoundary { lo: family.lo, hi: family.hi, r_max: grid.r_max() });
    }
    let n = metric.dimension();
    let kappa = match opts.connection {
        ConnectionModel::Warped => connection_weight(n),
        ConnectionModel::Zeroed => 0.0,
    };
    let rot = rotation(metric);
    let lw = log_density(metric);
    let range = family.node_range(grid);
    let shift = lw[range.clone()].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let m = family.knots;
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut b = DMatrix::<f64>::zeros(m, m);
    for i in range {
        let r = grid.r(i);
        let w = (lw[i] - shift).exp();
        let ai = metric.a(i);
        let basis: Vec<(f64, f64)> = (0..m).map(|k| family.basis(k, r)).collect();
        for k in 0..m {
            for l in 0..m {
                let (vk, dk) = basis[k];
                let (vl, dl) = basis[l];
                a[(k, l)] += w * (dk * dl / (ai * ai) + kappa * rot[i] * rot[i] * vk * vl);
                b[(k, l)] += w * vk * vl;
            }
        }
    }
    let chol = b.cholesky().ok_or(SpectralError::ZeroDenominator)?;
    let linv = chol.l().try_inverse().ok_or(SpectralError::ZeroDenominator)?;
    let c = &linv * a * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let (k_min, lam) = eig.eigenvalues.iter().enumerate().fold((0, f64::INFINITY), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc });
    let coeffs: Vec<f64> = (linv.transpose() * eig.eigenvectors.column(k_min)).iter().cloned().collect();
    let profile = family.profile(grid, &coeffs);
    if opts.oracle_nodes > 0 {
        tensor_rayleigh_with(metric, &TestTensor::new(grid, profile.clone())?, opts)?;
    }
    Ok((SpectralEstimate::new(lam, SpectralKind::TensorRayleigh, metric), coeffs))
}

/// Quotients of `count` random spline tensors with random supports.
pub fn sample_tensor_quotients(
    metric: &WarpedMetric,
    count: usize,
    knots: usize,
    seed: u64,
    opts: &TensorOptions,
) -> Result<Vec<f64>, SpectralError> {
    let grid = metric.grid();
    let r_top = grid.r_max() - 4.0 * grid.spacing();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let lo = rng.gen_range(2.0 * grid.spacing()..0.6 * r_top);
        let hi = (lo + rng.gen_range(1.0..8.0)).min(r_top);
        let fam = SplineFamily::new(lo, hi, knots)?;
        let coeffs: Vec<f64> = (0..knots).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let profile = fam.profile(grid, &coeffs);
        if profile.iter().all(|&v| v == 0.0) {
            continue;
        }
        out.push(tensor_rayleigh_with(metric, &TestTensor::new(grid, profile)?, opts)?.value);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyp(n: usize, r_max: f64, dr: f64) -> WarpedMetric {
        WarpedMetric::hyperbolic(n, RadialGrid::with_radius(r_max, dr).unwrap()).unwrap()
    }

    fn bump(grid: &RadialGrid, lo: f64, hi: f64) -> Vec<f64> {
        grid.nodes()
            .iter()
            .map(|&r| if r > lo && r < hi { ((r - lo) * (hi - r)).powi(3) } else { 0.0 })
            .collect()
    }

    #[test]
    fn frame_form_is_unit_and_traceless() {
        for n in 3..9 {
            let (l1, l2) = TestTensor::frame_form(n);
            let k = (n - 1) as f64;
            assert!((l1 + k * l2).abs() < 1e-15);
            assert!((l1 * l1 + k * l2 * l2 - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn connection_weight_matches_chart() {
        for n in [3, 4, 6] {
            let g = RadialGrid::with_radius(8.0, 0.01).unwrap();
            let m = crate::geometry::perturb(n, g.clone(), 0.05, 2.0, &Default::default(), 0).unwrap();
            let xi = TestTensor::new(&g, bump(&g, 0.5, 4.0)).unwrap();
            let opts = TensorOptions { oracle_nodes: 12, oracle_tol: 1e-6, ..Default::default() };
            tensor_rayleigh_with(&m, &xi, &opts).unwrap();
        }
    }

    #[test]
    fn zeroed_connection_is_caught() {
        let g = RadialGrid::with_radius(8.0, 0.01).unwrap();
        let m = hyp(3, 8.0, 0.01);
        let xi = TestTensor::new(&g, bump(&g, 1.0, 4.0)).unwrap();
        let opts = TensorOptions { connection: ConnectionModel::Zeroed, ..Default::default() };
        assert!(matches!(tensor_rayleigh_with(&m, &xi, &opts), Err(SpectralError::OracleDisagreement { .. })));
    }

    #[test]
    fn boundary_support_rejected() {
        let g = RadialGrid::with_radius(4.0, 0.05).unwrap();
        let mut f = vec![0.0; g.len()];
        f[g.len() - 1] = 1.0;
        assert!(matches!(TestTensor::new(&g, f), Err(SpectralError::SupportTouchesBoundary { .. })));
    }

    #[test]
    fn quotient_homogeneous_and_above_function_bound() {
        let m = hyp(6, 12.0, 0.02);
        let g = m.grid().clone();
        let f = bump(&g, 2.0, 9.0);
        let q = tensor_rayleigh(&m, &TestTensor::new(&g, f.clone()).unwrap()).unwrap().value;
        let f3: Vec<f64> = f.iter().map(|v| -3.0 * v).collect();
        let q3 = tensor_rayleigh(&m, &TestTensor::new(&g, f3).unwrap()).unwrap().value;
        assert!((q - q3).abs() <= 1e-12 * q);
        assert!(q > 6.25 + 12.0, "{q}");
    }

    #[test]
    fn spline_minimum_below_samples() {
        let m = hyp(6, 20.0, 0.02);
        let fam = SplineFamily::new(10.0, 16.0, 10).unwrap();
        let (est, coeffs) = minimize_tensor_quotient(&m, &fam, &TensorOptions::default()).unwrap();
        assert_eq!(coeffs.len(), 10);
        // far out b_s/b ~ 1: the quotient sits just above (n-1)^2/4 + 2n
        assert!(est.value > 18.25 && est.value < 19.0, "{}", est.value);
        let qs = sample_tensor_quotients(&m, 10, 10, 7, &TensorOptions::default()).unwrap();
        assert!(qs.iter().all(|&q| q > 18.25));
    }
}
