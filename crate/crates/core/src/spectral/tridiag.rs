use crate::error::SpectralError;

/// Number of eigenvalues below x of the symmetric tridiagonal matrix
/// (Sturm sequence via the LDL^T pivots).
fn count_below(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let e2 = if i > 0 { off[i - 1] * off[i - 1] } else { 0.0 };
        q = diag[i] - x - if i > 0 { e2 / q } else { 0.0 };
        if q == 0.0 {
            q = -f64::EPSILON * (diag[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest eigenvalue by bisection to absolute tolerance `tol`.
pub fn smallest_eigenvalue(diag: &[f64], off: &[f64], tol: f64, max_iter: usize) -> Result<f64, SpectralError> {
    if diag.is_empty() || off.len() + 1 != diag.len() {
        return Err(SpectralError::BadArgument("tridiagonal shape mismatch".into()));
    }
    // Gershgorin bracket
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..diag.len() {
        let rad = if i > 0 { off[i - 1].abs() } else { 0.0 } + off.get(i).map_or(0.0, |e| e.abs());
        lo = lo.min(diag[i] - rad);
        hi = hi.max(diag[i] + rad);
    }
    for _ in 0..max_iter {
        if hi - lo <= tol {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if count_below(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(SpectralError::NoConvergence(max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn second_difference_matrix() {
        // tridiag(-1, 2, -1) of size m: smallest eigenvalue 2 - 2 cos(pi/(m+1))
        let m = 50;
        let v = smallest_eigenvalue(&vec![2.0; m], &vec![-1.0; m - 1], 1e-12, 200).unwrap();
        assert!((v - (2.0 - 2.0 * (PI / (m + 1) as f64).cos())).abs() < 1e-11);
    }

    #[test]
    fn iteration_cap() {
        assert!(matches!(smallest_eigenvalue(&[1.0, 3.0], &[1.0], 1e-14, 3), Err(SpectralError::NoConvergence(3))));
    }
}
