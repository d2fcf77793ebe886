//! Least-squares lines.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub rms: f64,
    pub samples: usize,
}

/// Ordinary least squares y ~ slope x + intercept. None for fewer than two
/// distinct abscissae.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let m = x.len().min(y.len());
    if m < 2 {
        return None;
    }
    let mx = x[..m].iter().sum::<f64>() / m as f64;
    let my = y[..m].iter().sum::<f64>() / m as f64;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for i in 0..m {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = (0..m).map(|i| (y[i] - slope * x[i] - intercept).powi(2)).sum();
    Some(LineFit { slope, intercept, rms: (ss / m as f64).sqrt(), samples: m })
}

/// Least squares y ~ k x through the origin; returns (k, max relative deviation of y from k x).
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if sxx <= 0.0 || x.len() != y.len() {
        return None;
    }
    let k = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sxx;
    let dev = x.iter().zip(y).map(|(a, b)| ((b - k * a) / (k * a)).abs()).fold(0.0, f64::max);
    Some((k, dev))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 2.5).abs() < 1e-14 && (f.intercept + 1.0).abs() < 1e-14 && f.rms < 1e-14);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn origin_fit() {
        let (k, dev) = fit_through_origin(&[1.0, 2.0, 4.0], &[2.0, 4.0, 8.0]).unwrap();
        assert!((k - 2.0).abs() < 1e-14 && dev < 1e-14);
    }
}
