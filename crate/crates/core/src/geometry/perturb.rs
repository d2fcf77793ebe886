use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::WarpedMetric;
use crate::error::GeometryError;
use crate::grid::RadialGrid;

/// Bump shape used by [`perturb`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Profile {
    GaussianBump { center: f64, width: f64 },
    PolynomialBump { center: f64, width: f64 },
    RandomMultibump { bumps: usize },
}

impl Default for Profile {
    fn default() -> Self {
        Profile::GaussianBump { center: 2.0, width: 1.0 }
    }
}

impl Profile {
    pub fn name(&self) -> &'static str {
        match self {
            Profile::GaussianBump { .. } => "gaussian-bump",
            Profile::PolynomialBump { .. } => "polynomial-bump",
            Profile::RandomMultibump { .. } => "random-multibump",
        }
    }
}

/// C-infinity step: 0 for x <= 0, 1 for x >= 1.
pub fn smooth_step(x: f64) -> f64 {
    fn psi(x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            (-1.0 / x).exp()
        }
    }
    let (p, q) = (psi(x), psi(1.0 - x));
    if p == 0.0 {
        0.0
    } else {
        p / (p + q)
    }
}

/// Taper that is 1 on [0, 0.7 r_max] and 0 past 0.9 r_max.
pub fn outer_taper(r: f64, r_max: f64) -> f64 {
    smooth_step((0.9 * r_max - r) / (0.2 * r_max))
}

fn even_gauss(r: f64, c: f64, w: f64) -> f64 {
    (-((r - c) / w).powi(2)).exp() + (-((r + c) / w).powi(2)).exp()
}

fn poly_bump(r: f64, c: f64, w: f64) -> f64 {
    let x = (r - c) / w;
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - x * x).powi(4)
    }
}

struct Bump {
    center: f64,
    width: f64,
    height_a: f64,
    height_b: f64,
}

/// a = 1 + eps q(r) E(r), b = sinh r (1 + eps p(r) E(r)).
///
/// E(r) = exp(-delta (sqrt(1 + r^2) - 1)) behaves like e^{delta} e^{-delta r}
/// but stays even at the origin. q and p carry a factor r^2/(1 + r^2) and the
/// outer taper so the pinned boundary sees the hyperbolic values.
pub fn perturb(
    n: usize,
    grid: RadialGrid,
    eps: f64,
    delta: f64,
    profile: &Profile,
    seed: u64,
) -> Result<WarpedMetric, GeometryError> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(GeometryError::BadParameter(format!("eps must be >= 0, got {eps}")));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(GeometryError::BadParameter(format!("delta must be > 0, got {delta}")));
    }
    if eps == 0.0 {
        return WarpedMetric::hyperbolic(n, grid);
    }
    let bumps = match *profile {
        Profile::GaussianBump { center, width } | Profile::PolynomialBump { center, width } => {
            if !(width > 0.0 && center >= 0.0) {
                return Err(GeometryError::BadParameter("bump needs width > 0, center >= 0".into()));
            }
            vec![Bump { center, width, height_a: 1.0, height_b: 1.0 }]
        }
        Profile::RandomMultibump { bumps } => {
            if bumps == 0 {
                return Err(GeometryError::BadParameter("random-multibump needs bumps >= 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let hi = (0.5 * grid.r_max()).clamp(1.5, 5.0);
            (0..bumps)
                .map(|_| Bump {
                    center: rng.gen_range(1.0..hi),
                    width: rng.gen_range(0.5..1.5),
                    height_a: rng.gen_range(-1.0..1.0),
                    height_b: rng.gen_range(-1.0..1.0),
                })
                .collect()
        }
    };
    let poly = matches!(profile, Profile::PolynomialBump { .. });
    let r_max = grid.r_max();
    let mut alpha = Vec::with_capacity(grid.len());
    let mut beta = Vec::with_capacity(grid.len());
    for r in grid.nodes() {
        let base = r * r / (1.0 + r * r) * (-delta * ((1.0 + r * r).sqrt() - 1.0)).exp() * outer_taper(r, r_max);
        let (mut sa, mut sb) = (1.0, 1.0);
        for bp in &bumps {
            let k = if poly { poly_bump(r, bp.center, bp.width) } else { even_gauss(r, bp.center, bp.width) };
            sa += bp.height_a * k;
            sb += bp.height_b * k;
        }
        alpha.push(eps * base * sa);
        beta.push(-0.5 * eps * base * sb);
    }
    WarpedMetric::from_deviation(n, grid, alpha, beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> RadialGrid {
        RadialGrid::with_radius(15.0, 0.05).unwrap()
    }

    #[test]
    fn zero_eps_is_hyperbolic_bitwise() {
        let p = perturb(6, grid(), 0.0, 3.0, &Profile::default(), 1).unwrap();
        let h = WarpedMetric::hyperbolic(6, grid()).unwrap();
        assert_eq!(p, h);
    }

    #[test]
    fn large_eps_loses_positivity() {
        let e = perturb(6, grid(), 10.0, 1.0, &Profile::default(), 1);
        assert!(matches!(e, Err(GeometryError::NonPositiveWarp { .. })));
    }

    #[test]
    fn taper_vanishes_near_boundary() {
        let p = perturb(6, grid(), 0.5, 0.5, &Profile::default(), 1).unwrap();
        let last = p.len() - 1;
        assert_eq!(p.alpha()[last], 0.0);
        assert_eq!(p.beta()[last], 0.0);
        assert_eq!(smooth_step(-1.0), 0.0);
        assert_eq!(smooth_step(2.0), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn random_profile_depends_on_seed_only() {
        let prof = Profile::RandomMultibump { bumps: 3 };
        let a = perturb(4, grid(), 0.01, 2.0, &prof, 7).unwrap();
        let b = perturb(4, grid(), 0.01, 2.0, &prof, 7).unwrap();
        let c = perturb(4, grid(), 0.01, 2.0, &prof, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn deviation_decays_at_order_delta() {
        let p = perturb(6, grid(), 0.01, 3.0, &Profile::default(), 0).unwrap();
        let g = p.grid();
        let (i, j) = (g.index_of(5.0), g.index_of(8.0));
        let rate = (p.alpha()[i] / p.alpha()[j]).ln() / (g.r(j) - g.r(i));
        assert!((rate - 3.0).abs() < 0.1, "rate {rate}");
    }
}
