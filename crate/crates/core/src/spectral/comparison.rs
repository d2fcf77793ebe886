use serde::{Deserialize, Serialize};

use crate::error::SpectralError;

/// Largest eps probed by the threshold search.
pub const EPS0_UPPER: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonProbe {
    pub n: usize,
    pub eps: f64,
    pub r: f64,
    pub margin: f64,
}

fn coth(x: f64) -> f64 {
    1.0 / x.tanh()
}

/// M(n, eps, r) = -(n-3)^2/4 - (n-3) s+ coth(s+ r) + (n-3)(n-1)/2 s- coth(s- r),
/// s+- = sqrt(1 +- eps).
pub fn comparison_margin(n: usize, eps: f64, r: f64) -> ComparisonProbe {
    let m = n as f64 - 3.0;
    let sp = (1.0 + eps).sqrt();
    let sm = (1.0 - eps).sqrt();
    let margin = -m * m / 4.0 - m * sp * coth(sp * r) + m * (n as f64 - 1.0) / 2.0 * sm * coth(sm * r);
    ComparisonProbe { n, eps, r, margin }
}

fn log_scan(r_max: f64, points: usize) -> Vec<f64> {
    let l = r_max.ln();
    (0..points).map(|k| (l * k as f64 / (points - 1) as f64).exp()).collect()
}

/// min over the scan of M - (n-3)^2/4 + delta.
fn worst_slack(n: usize, eps: f64, delta: f64, scan: &[f64]) -> f64 {
    let target = (n as f64 - 3.0).powi(2) / 4.0 - delta;
    scan.iter().map(|&r| comparison_margin(n, eps, r).margin - target).fold(f64::INFINITY, f64::min)
}

/// Largest eps in [0, EPS0_UPPER] for which M(n, eps, r) >= (n-3)^2/4 - delta
/// on 512 log-spaced radii in [1, r_max_scan].
pub fn find_epsilon0(n: usize, delta: f64, r_max_scan: f64) -> Result<f64, SpectralError> {
    find_epsilon0_with(n, delta, r_max_scan, 512)
}

pub fn find_epsilon0_with(n: usize, delta: f64, r_max_scan: f64, points: usize) -> Result<f64, SpectralError> {
    if n < 3 || !(delta > 0.0) || !(r_max_scan > 1.0) || points < 2 {
        return Err(SpectralError::BadArgument(format!(
            "need n >= 3, delta > 0, scan radius > 1, 2+ points (n={n}, delta={delta}, r={r_max_scan}, points={points})"
        )));
    }
    let scan = log_scan(r_max_scan, points);
    if worst_slack(n, 0.0, delta, &scan) < 0.0 {
        return Err(SpectralError::PredicateFailsAtZero { n, delta });
    }
    if worst_slack(n, EPS0_UPPER, delta, &scan) >= 0.0 {
        return Ok(EPS0_UPPER);
    }
    let (mut lo, mut hi) = (0.0, EPS0_UPPER);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if worst_slack(n, mid, delta, &scan) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_values() {
        let m = comparison_margin(6, 0.0, 1.0).margin;
        assert!((m - (-2.25 + 4.5 / 1.0_f64.tanh())).abs() < 1e-12);
        assert!((m - 3.6585).abs() < 5e-4);
        assert!((comparison_margin(6, 0.0, 60.0).margin - 2.25).abs() < 1e-12);
    }

    #[test]
    fn epsilon0_cases() {
        let e = find_epsilon0(6, 0.1, 200.0).unwrap();
        assert!((1e-3..EPS0_UPPER).contains(&e), "{e}");
        let scan = log_scan(200.0, 512);
        assert!(worst_slack(6, e, 0.1, &scan) >= 0.0);
        assert_eq!(find_epsilon0(3, 0.01, 200.0).unwrap(), EPS0_UPPER);
        assert!(find_epsilon0(2, 0.1, 200.0).is_err());
    }

    proptest! {
        #[test]
        fn dimension_three_vanishes(eps in 0.0..0.99f64, r in 1.0..100.0f64) {
            prop_assert_eq!(comparison_margin(3, eps, r).margin, 0.0);
        }

        #[test]
        fn zero_eps_dominates(n in 3usize..12, r in 1.0..200.0f64) {
            let m = (n as f64 - 3.0).powi(2) / 4.0;
            prop_assert!(comparison_margin(n, 0.0, r).margin >= m - 1e-12);
        }

        #[test]
        fn epsilon0_monotone_in_delta(n in 4usize..9, d in 0.01..1.0f64, dd in 0.0..1.0f64) {
            let a = find_epsilon0_with(n, d, 200.0, 128).unwrap();
            let b = find_epsilon0_with(n, d + dd, 200.0, 128).unwrap();
            prop_assert!(b >= a);
        }
    }
}
