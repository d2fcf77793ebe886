//! Right-hand side of the radially gauged flow.
//!
//! The plain (a, b) reduction of the normalized flow is only weakly parabolic
//! and its semi-discretization has growing modes. We add the Lie derivative
//! along the radial DeTurck field W = f d/dr built against g_H:
//!
//!   f = a'/a^3 + (n-1) (coth r X - Y),
//!   X = (a^2 - p^2)/(a^2 p^2),  Y = beta'/(a^2 p),  p = 1 + beta.
//!
//! W vanishes on every constant multiple of g_H, so those solutions are
//! unchanged. f' is expanded by the product rule; differencing f itself
//! across the 1/r singularity destabilizes the origin.

use crate::geometry::{curvature_deviation, RadialBasis};
use crate::grid::RadialGrid;
use crate::stencil::{d1, d12, Parity};

/// Scratch space and grid constants for repeated evaluations.
#[derive(Debug, Clone)]
pub struct FlowKernel {
    pub n: usize,
    pub dr: f64,
    pub basis: RadialBasis,
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub x1: Vec<f64>,
    pub y1: Vec<f64>,
    pub l1: Vec<f64>,
    /// DeTurck coefficient f from the last evaluation.
    pub f: Vec<f64>,
    /// Copy the neighbour's rates to the outer node instead of holding it.
    pub free_outer: bool,
}

impl FlowKernel {
    pub fn new(n: usize, grid: &RadialGrid) -> Self {
        let len = grid.len();
        let z = vec![0.0; len];
        Self {
            n,
            dr: grid.spacing(),
            basis: RadialBasis::new(grid),
            a1: z.clone(),
            a2: z.clone(),
            b1: z.clone(),
            b2: z.clone(),
            x: z.clone(),
            y: z.clone(),
            x1: z.clone(),
            y1: z.clone(),
            l1: z.clone(),
            f: z,
            free_outer: false,
        }
    }

    /// Fills `f` for the given deviations and returns nothing else.
    pub fn gauge(&mut self, al: &[f64], be: &[f64]) {
        d12(al, Parity::Even, self.dr, &mut self.a1, &mut self.a2);
        d12(be, Parity::Even, self.dr, &mut self.b1, &mut self.b2);
        let nm = (self.n - 1) as f64;
        for i in 0..al.len() {
            let a = 1.0 + al[i];
            let p = 1.0 + be[i];
            let a2 = a * a;
            self.x[i] = (al[i] - be[i]) * (2.0 + al[i] + be[i]) / (a2 * p * p);
            self.y[i] = self.b1[i] / (a2 * p);
            self.f[i] = self.a1[i] / (a2 * a) + nm * (self.basis.coth[i] * self.x[i] - self.y[i]);
        }
    }

    /// Time derivatives of (alpha, beta, labels). The last node is held fixed
    /// unless `free_outer` is set.
    pub fn eval(
        &mut self,
        al: &[f64],
        be: &[f64],
        labels: &[f64],
        da: &mut [f64],
        db: &mut [f64],
        dl: &mut [f64],
    ) {
        self.gauge(al, be);
        d1(&self.x, Parity::Even, self.dr, &mut self.x1);
        d1(&self.y, Parity::Odd, self.dr, &mut self.y1);
        d1(labels, Parity::Odd, self.dr, &mut self.l1);
        let nm = (self.n - 1) as f64;
        let len = al.len();
        for i in 0..len - 1 {
            let a = 1.0 + al[i];
            let p = 1.0 + be[i];
            let (coth, csch2) = (self.basis.coth[i], self.basis.csch2[i]);
            let (kr, ks) = curvature_deviation(al[i], be[i], self.a1[i], self.b1[i], self.b2[i], coth, csch2);
            let h_rad = nm * kr;
            let h_tan = kr + (nm - 1.0) * ks;
            let inv_a = 1.0 / a;
            let inv_a3 = inv_a * inv_a * inv_a;
            let f = self.f[i];
            let fp = self.a2[i] * inv_a3 - 3.0 * self.a1[i] * self.a1[i] * inv_a3 * inv_a
                + nm * (-csch2 * self.x[i] + coth * self.x1[i] - self.y1[i]);
            da[i] = -a * h_rad + fp * a + f * self.a1[i];
            db[i] = -p * h_tan + f * (coth * p + self.b1[i]);
            dl[i] = f * self.l1[i];
        }
        let (pa, pb, pl) = if self.free_outer { (da[len - 2], db[len - 2], dl[len - 2]) } else { (0.0, 0.0, 0.0) };
        da[len - 1] = pa;
        db[len - 1] = pb;
        dl[len - 1] = pl;
    }
}

/// Stable explicit step for the current warps: dt_safety * 2 / max_i(4/(dr^2 a^2) + 2n/b^2).
/// Without the 2n/b^2 term this is dt_safety * dr^2 min(a^2) / 2; the extra
/// term is the stiffness of the cone mode at the first cell.
pub fn stable_dt(n: usize, grid: &RadialGrid, al: &[f64], be: &[f64], sinh: &[f64], dt_safety: f64) -> f64 {
    let dr2 = grid.spacing() * grid.spacing();
    let mut rho = 0.0_f64;
    for i in 0..al.len() {
        let a = 1.0 + al[i];
        let b = sinh[i] * (1.0 + be[i]);
        rho = rho.max(4.0 / (dr2 * a * a) + 2.0 * n as f64 / (b * b));
    }
    dt_safety * 2.0 / rho
}
