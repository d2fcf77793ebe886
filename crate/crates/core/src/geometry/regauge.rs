use super::WarpedMetric;
use crate::error::GeometryError;
use crate::grid::RadialGrid;
use crate::stencil::{ghost, Parity};

/// Cubic Lagrange interpolation of a grid field at radius r.
pub fn interpolate(f: &[f64], parity: Parity, dr: f64, r: f64) -> f64 {
    let n = f.len() as isize;
    let x = r / dr - 0.5;
    let i0 = (x.floor() as isize - 1).clamp(-2, n - 4);
    let t = x - i0 as f64;
    let v: [f64; 4] = std::array::from_fn(|k| ghost(f, i0 + k as isize, parity));
    // nodes at t = 0, 1, 2, 3
    let l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    let l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
    let l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
    let l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
    l0 * v[0] + l1 * v[1] + l2 * v[2] + l3 * v[3]
}

/// A metric re-expressed in radial arclength coordinates (a = 1).
#[derive(Debug, Clone)]
pub struct ArclengthGauge {
    pub metric: WarpedMetric,
    original_grid: RadialGrid,
    original_alpha: Vec<f64>,
    /// s(r_i) on the original grid
    arclength: Vec<f64>,
}

impl ArclengthGauge {
    pub fn new(metric: &WarpedMetric) -> Result<Self, GeometryError> {
        let grid = metric.grid();
        let dr = grid.spacing();
        let s = metric.arclength();
        let len = grid.len();
        let s_max = s[len - 1] + 0.5 * dr * metric.a(len - 1);
        let new_grid = RadialGrid::new(len, s_max / len as f64)?;
        let mut beta = Vec::with_capacity(len);
        for j in 0..len {
            let target = new_grid.r(j);
            // invert the monotone map s(r) by bisection
            let (mut lo, mut hi) = (0.0, grid.r_max());
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if interpolate(&s, Parity::Odd, dr, mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let r = 0.5 * (lo + hi);
            let b = r.sinh() * (1.0 + interpolate(metric.beta(), Parity::Even, dr, r));
            beta.push(b / target.sinh() - 1.0);
        }
        let m = WarpedMetric::from_deviation(metric.dimension(), new_grid, vec![0.0; len], beta)?;
        Ok(Self {
            metric: m,
            original_grid: grid.clone(),
            original_alpha: metric.alpha().to_vec(),
            arclength: s,
        })
    }

    /// Maps back onto the original grid.
    pub fn to_original(&self) -> Result<WarpedMetric, GeometryError> {
        let ds = self.metric.grid().spacing();
        let beta = (0..self.original_grid.len())
            .map(|i| {
                let s = self.arclength[i];
                let b = s.sinh() * (1.0 + interpolate(self.metric.beta(), Parity::Even, ds, s));
                b / self.original_grid.r(i).sinh() - 1.0
            })
            .collect();
        WarpedMetric::from_deviation(
            self.metric.dimension(),
            self.original_grid.clone(),
            self.original_alpha.clone(),
            beta,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::perturb::{perturb, Profile};

    #[test]
    fn interpolation_is_exact_on_cubics() {
        let dr = 0.1;
        let f: Vec<f64> = (0..30).map(|i| { let r = (i as f64 + 0.5) * dr; r * r * r - r }).collect();
        for r in [0.37, 1.234, 2.9] {
            assert!((interpolate(&f, Parity::Odd, dr, r) - (r * r * r - r)).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip_is_second_order() {
        let mut errs = vec![];
        for dr in [0.04, 0.02] {
            let g = RadialGrid::with_radius(8.0, dr).unwrap();
            let m = perturb(4, g, 0.1, 1.0, &Profile::default(), 0).unwrap();
            let gauge = ArclengthGauge::new(&m).unwrap();
            assert!(gauge.metric.alpha().iter().all(|&a| a == 0.0));
            let back = gauge.to_original().unwrap();
            let e = m.beta().iter().zip(back.beta()).fold(0.0_f64, |x, (p, q)| x.max((p - q).abs()));
            errs.push(e);
        }
        assert!(errs[1] < 1e-4, "{errs:?}");
        assert!(errs[1] < errs[0] / 3.0, "{errs:?}");
    }

    #[test]
    fn hyperbolic_is_fixed() {
        let g = RadialGrid::with_radius(6.0, 0.05).unwrap();
        let m = WarpedMetric::hyperbolic(3, g).unwrap();
        let gauge = ArclengthGauge::new(&m).unwrap();
        assert!(gauge.metric.beta().iter().all(|b| b.abs() < 1e-12));
    }
}
