//! Generic coordinate-chart Riemannian geometry by finite differences.
//!
//! The warped metric is written in polar coordinates (r, t1, ..., t_{n-1}) as
//! diag(a^2, b^2, b^2 sin^2 t1, ...). Nothing below uses that structure: the
//! metric is treated as a full symmetric matrix field and fed through the
//! textbook Christoffel/Riemann formulas. Radial derivatives of the sampled
//! warps are finite differences (seven-point, since the polar chart amplifies
//! errors by 1/r^2 near the origin). The angular dependence is an explicit
//! formula and is differentiated exactly with second-order jets; difference
//! quotients in the angles hit a roundoff floor of order 1e-16/(h^2 b^2).

use super::{CurvatureField, WarpedMetric};
use crate::error::GeometryError;
use crate::stencil::fornberg_weights;

pub const MAX_DIM: usize = 8;

pub type Mat = [[f64; MAX_DIM]; MAX_DIM];

const ZERO: Mat = [[0.0; MAX_DIM]; MAX_DIM];

/// Sample angles, away from the coordinate poles.
pub fn sample_angles(n: usize) -> [f64; MAX_DIM] {
    let mut th = [0.0; MAX_DIM];
    for (k, t) in th.iter_mut().enumerate().take(n).skip(1) {
        *t = 1.1 - 0.07 * k as f64;
    }
    th
}

/// Metric samples on the radial grid plus the chart formula.
pub struct Chart {
    n: usize,
    dr: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

pub struct NodeSample {
    pub g: Mat,
    pub ang: [Mat; MAX_DIM],
}

/// Chart-derived geometry at one point.
pub struct PointGeometry {
    pub n: usize,
    pub g: Mat,
    pub ginv: Mat,
    pub dg: [Mat; MAX_DIM],
    /// gamma[m][i][j] = Gamma^m_{ij}
    pub gamma: [Mat; MAX_DIM],
    /// riem[m][j][k][l] = R^m_{jkl}, R(d_k, d_l) d_j = R^m_{jkl} d_m
    pub riem: Vec<f64>,
}

impl PointGeometry {
    #[inline]
    pub fn r_up(&self, m: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n;
        self.riem[((m * n + j) * n + k) * n + l]
    }

    /// Sectional curvature of the coordinate plane (d_k, d_l).
    pub fn sectional(&self, k: usize, l: usize) -> f64 {
        let mut num = 0.0;
        for m in 0..self.n {
            num += self.g[k][m] * self.r_up(m, l, k, l);
        }
        num / (self.g[k][k] * self.g[l][l] - self.g[k][l] * self.g[k][l])
    }

    /// Ric(d_j, d_l).
    pub fn ricci(&self, j: usize, l: usize) -> f64 {
        (0..self.n).map(|m| self.r_up(m, l, m, j)).sum()
    }
}

impl Chart {
    pub fn new(metric: &WarpedMetric) -> Result<Self, GeometryError> {
        let n = metric.dimension();
        if n > MAX_DIM {
            return Err(GeometryError::UnsupportedDimension(n));
        }
        Ok(Self { n, dr: metric.grid().spacing(), a: metric.a_values(), b: metric.b_values() })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    fn warps(&self, node: isize) -> (f64, f64) {
        if node >= 0 {
            (self.a[node as usize], self.b[node as usize])
        } else {
            let j = (-node - 1) as usize;
            (self.a[j], -self.b[j])
        }
    }

    /// Metric matrix at radial node `node` (ghosts by parity) as jets in the
    /// angles `th`.
    pub fn metric_jet(&self, node: isize, th: &[f64; MAX_DIM]) -> [[Jet; MAX_DIM]; MAX_DIM] {
        let (a, b) = self.warps(node);
        let mut g = [[Jet::constant(0.0); MAX_DIM]; MAX_DIM];
        g[0][0] = Jet::constant(a * a);
        let mut w = Jet::constant(b * b);
        for k in 1..self.n {
            g[k][k] = w;
            let s = Jet::variable(th[k], k).sin();
            w = w.mul(&s.mul(&s));
        }
        g
    }

    fn values(jets: &[[Jet; MAX_DIM]; MAX_DIM]) -> Mat {
        let mut m = ZERO;
        for i in 0..MAX_DIM {
            for j in 0..MAX_DIM {
                m[i][j] = jets[i][j].v;
            }
        }
        m
    }

    fn combine(terms: &[(f64, Mat)], scale: f64) -> Mat {
        let mut out = ZERO;
        for (c, m) in terms {
            for i in 0..MAX_DIM {
                for j in 0..MAX_DIM {
                    out[i][j] += c * m[i][j];
                }
            }
        }
        for row in out.iter_mut() {
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
        out
    }

    /// Radial derivative of order `order` at node i from a seven-point
    /// window (centered where the grid allows, shifted at the outer end).
    fn radial_d<F: Fn(isize) -> Mat>(&self, f: &F, i: usize, order: usize) -> Mat {
        let j0 = (i as isize - 3).min(self.len() as isize - 7);
        let xs: Vec<f64> = (0..7).map(|k| (j0 + k) as f64 - i as f64).collect();
        let w = fornberg_weights(0.0, &xs, order);
        let terms: Vec<(f64, Mat)> = (0..7).map(|k| (w[order][k as usize], f(j0 + k))).collect();
        Self::combine(&terms, self.dr.powi(-(order as i32)))
    }

/// Metric value and angular gradient at one radial node.
    pub fn sample(&self, node: isize, th: &[f64; MAX_DIM]) -> NodeSample {
        let jets = self.metric_jet(node, th);
        let mut ang = [ZERO; MAX_DIM];
        for (k, m) in ang.iter_mut().enumerate().take(self.n).skip(1) {
            for p in 0..self.n {
                for q in 0..self.n {
                    m[p][q] = jets[p][q].d[k];
                }
            }
        }
        NodeSample { g: Self::values(&jets), ang }
    }

    /// Full chart geometry at radial node i and angles th.
    pub fn geometry_at(&self, i: usize, th: &[f64; MAX_DIM]) -> PointGeometry {
        let lo = (i as isize - 3).min(self.len() as isize - 7);
        let cache: Vec<NodeSample> = (lo..lo + 7).map(|j| self.sample(j, th)).collect();
        self.geometry_cached(i, th, &|j| &cache[(j - lo) as usize])
    }

    /// As [`Chart::geometry_at`], with neighbor samples supplied by the caller.
    pub fn geometry_cached<'c, F: Fn(isize) -> &'c NodeSample>(
        &self,
        i: usize,
        th: &[f64; MAX_DIM],
        samples: &F,
    ) -> PointGeometry {
        let n = self.n;
        let jets = self.metric_jet(i as isize, th);
        let g = Self::values(&jets);
        let mut dg = [ZERO; MAX_DIM];
        let mut ddg = vec![ZERO; n * n];
        let node_fn = |node: isize| samples(node).g;
        dg[0] = self.radial_d(&node_fn, i, 1);
        ddg[0] = self.radial_d(&node_fn, i, 2);
        for k in 1..n {
            for p in 0..n {
                for q in 0..n {
                    dg[k][p][q] = jets[p][q].d[k];
                }
            }
            let mixed_fn = |node: isize| samples(node).ang[k];
            let m = self.radial_d(&mixed_fn, i, 1);
            ddg[k] = m;
            ddg[k * n] = m;
            for l in 1..n {
                for p in 0..n {
                    for q in 0..n {
                        ddg[k * n + l][p][q] = jets[p][q].h[k][l];
                    }
                }
            }
        }
        let ginv = invert(&g, n);
        // d_k g^{ml} = -g^{mp} d_k g_pq g^{ql}
        let mut dginv = [ZERO; MAX_DIM];
        for k in 0..n {
            dginv[k] = neg_sandwich(&ginv, &dg[k], n);
        }
        let mut gamma = [ZERO; MAX_DIM];
        let mut dgamma = vec![0.0; n * n * n * n]; // [k][m][i][j]
        for m in 0..n {
            for i2 in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += ginv[m][l] * (dg[i2][l][j] + dg[j][l][i2] - dg[l][i2][j]);
                    }
                    gamma[m][i2][j] = 0.5 * s;
                    for k in 0..n {
                        let mut t = 0.0;
                        for l in 0..n {
                            t += dginv[k][m][l] * (dg[i2][l][j] + dg[j][l][i2] - dg[l][i2][j]);
                            t += ginv[m][l]
                                * (ddg[k * n + i2][l][j] + ddg[k * n + j][l][i2] - ddg[k * n + l][i2][j]);
                        }
                        dgamma[((k * n + m) * n + i2) * n + j] = 0.5 * t;
                    }
                }
            }
        }
        let dgm = |k: usize, m: usize, i2: usize, j: usize| dgamma[((k * n + m) * n + i2) * n + j];
        let mut riem = vec![0.0; n * n * n * n];
        for m in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut v = dgm(k, m, l, j) - dgm(l, m, k, j);
                        for p in 0..n {
                            v += gamma[m][k][p] * gamma[p][l][j] - gamma[m][l][p] * gamma[p][k][j];
                        }
                        riem[((m * n + j) * n + k) * n + l] = v;
                    }
                }
            }
        }
        PointGeometry { n, g, ginv, dg, gamma, riem }
    }
}

/// Value, gradient and Hessian with respect to the chart coordinates.
#[derive(Debug, Clone, Copy)]
pub struct Jet {
    pub v: f64,
    pub d: [f64; MAX_DIM],
    pub h: [[f64; MAX_DIM]; MAX_DIM],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Self { v, d: [0.0; MAX_DIM], h: ZERO }
    }

    pub fn variable(v: f64, k: usize) -> Self {
        let mut j = Self::constant(v);
        j.d[k] = 1.0;
        j
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let mut r = Jet::constant(self.v * o.v);
        for i in 0..MAX_DIM {
            r.d[i] = self.d[i] * o.v + self.v * o.d[i];
            for j in 0..MAX_DIM {
                r.h[i][j] = self.h[i][j] * o.v + self.v * o.h[i][j] + self.d[i] * o.d[j] + self.d[j] * o.d[i];
            }
        }
        r
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.v.sin_cos();
        let mut r = Jet::constant(s);
        for i in 0..MAX_DIM {
            r.d[i] = c * self.d[i];
            for j in 0..MAX_DIM {
                r.h[i][j] = c * self.h[i][j] - s * self.d[i] * self.d[j];
            }
        }
        r
    }
}

fn neg_sandwich(ginv: &Mat, d: &Mat, n: usize) -> Mat {
    let mut out = ZERO;
    for m in 0..n {
        for l in 0..n {
            let mut s = 0.0;
            for p in 0..n {
                for q in 0..n {
                    s += ginv[m][p] * d[p][q] * ginv[q][l];
                }
            }
            out[m][l] = -s;
        }
    }
    out
}

/// Gauss-Jordan inverse with partial pivoting of the leading n x n block.
pub fn invert(g: &Mat, n: usize) -> Mat {
    let mut a = *g;
    let mut inv = ZERO;
    for (i, row) in inv.iter_mut().enumerate().take(n) {
        row[i] = 1.0;
    }
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(c, p);
        inv.swap(c, p);
        let d = a[c][c];
        for j in 0..n {
            a[c][j] /= d;
            inv[c][j] /= d;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                if f != 0.0 {
                    for j in 0..n {
                        a[r][j] -= f * a[c][j];
                        inv[r][j] -= f * inv[c][j];
                    }
                }
            }
        }
    }
    inv
}

/// Curvature from the coordinate chart, independent of the warped-product
/// closed forms. Supported for n in {3, 4}.
pub fn curvature_oracle(metric: &WarpedMetric) -> Result<CurvatureField, GeometryError> {
    let n = metric.dimension();
    if !(n == 3 || n == 4) {
        return Err(GeometryError::UnsupportedDimension(n));
    }
    if metric.len() < crate::grid::MIN_NODES {
        return Err(GeometryError::GridTooCoarse(metric.len()));
    }
    let chart = Chart::new(metric)?;
    let th = sample_angles(n);
    let len = metric.len();
    let nm = (n - 1) as f64;
    let mut kr = Vec::with_capacity(len);
    let mut ks = Vec::with_capacity(len);
    let mut rr = Vec::with_capacity(len);
    let mut rt = Vec::with_capacity(len);
    // node -k-1 mirrors node k (a even, b odd, metric even)
    let samples: Vec<NodeSample> = (0..len as isize).map(|j| chart.sample(j, &th)).collect();
    let lookup = |j: isize| if j >= 0 { &samples[j as usize] } else { &samples[(-j - 1) as usize] };
    for i in 0..len {
        let pg = chart.geometry_cached(i, &th, &lookup);
        kr.push(pg.sectional(0, 1));
        ks.push(pg.sectional(1, 2));
        rr.push(pg.ricci(0, 0) / pg.g[0][0]);
        rt.push(pg.ricci(1, 1) / pg.g[1][1]);
    }
    let mut field = CurvatureField::from_deviations(
        n,
        kr.iter().map(|k| k + 1.0).collect(),
        ks.iter().map(|k| k + 1.0).collect(),
    );
    field.k_rad = kr;
    field.k_sph = ks;
    field.h_rad = rr.iter().map(|x| x + nm).collect();
    field.h_tan = rt.iter().map(|x| x + nm).collect();
    field.h_norm = field.h_rad.iter().zip(&field.h_tan).map(|(a, b)| (a * a + nm * b * b).sqrt()).collect();
    field.ric_rad = rr;
    field.ric_tan = rt;
    Ok(field)
}
