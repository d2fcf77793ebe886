//! Finite-difference stencils on the cell-centered grid.
//!
//! Values left of the origin come from parity ghosts, the outer end uses
//! second-order one-sided formulas.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    #[inline]
    fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// Value at index i, reflecting negative indices through the origin.
#[inline]
pub fn ghost(f: &[f64], i: isize, parity: Parity) -> f64 {
    if i >= 0 {
        f[i as usize]
    } else {
        parity.sign() * f[(-i - 1) as usize]
    }
}

/// First derivative at every node.
pub fn d1(f: &[f64], parity: Parity, dr: f64, out: &mut [f64]) {
    let n = f.len();
    let inv = 0.5 / dr;
    out[0] = (f[1] - parity.sign() * f[0]) * inv;
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - f[i - 1]) * inv;
    }
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * inv;
}

/// First and second derivatives at every node.
pub fn d12(f: &[f64], parity: Parity, dr: f64, d1o: &mut [f64], d2o: &mut [f64]) {
    let n = f.len();
    let inv1 = 0.5 / dr;
    let inv2 = 1.0 / (dr * dr);
    let g = parity.sign() * f[0];
    d1o[0] = (f[1] - g) * inv1;
    d2o[0] = (f[1] - 2.0 * f[0] + g) * inv2;
    for i in 1..n - 1 {
        d1o[i] = (f[i + 1] - f[i - 1]) * inv1;
        d2o[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * inv2;
    }
    let (a, b, c, d) = (f[n - 1], f[n - 2], f[n - 3], f[n - 4]);
    d1o[n - 1] = (3.0 * a - 4.0 * b + c) * inv1;
    d2o[n - 1] = (2.0 * a - 5.0 * b + 4.0 * c - d) * inv2;
}

/// Value at r = 0 from a smooth even extension.
#[inline]
pub fn even_at_origin(f: &[f64]) -> f64 {
    (9.0 * f[0] - f[1]) / 8.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, dr: f64, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..n).map(|i| f((i as f64 + 0.5) * dr)).collect()
    }

    #[test]
    fn quadratics_are_exact() {
        let dr = 0.1;
        let f = sample(20, dr, |r| 3.0 * r * r + 1.0);
        let mut a = vec![0.0; 20];
        let mut b = vec![0.0; 20];
        d12(&f, Parity::Even, dr, &mut a, &mut b);
        for i in 0..20 {
            let r = (i as f64 + 0.5) * dr;
            assert!((a[i] - 6.0 * r).abs() < 1e-11, "d1 at {i}");
            assert!((b[i] - 6.0).abs() < 1e-9, "d2 at {i}");
        }
    }

    #[test]
    fn odd_ghost_differentiates_sine() {
        let dr = 0.01;
        let f = sample(100, dr, f64::sin);
        let mut a = vec![0.0; 100];
        d1(&f, Parity::Odd, dr, &mut a);
        assert!((a[0] - (0.5 * dr).cos()).abs() < 1e-4);
        assert_eq!(ghost(&f, -1, Parity::Odd), -f[0]);
        assert_eq!(ghost(&f, -2, Parity::Even), f[1]);
    }

    #[test]
    fn origin_extrapolation_is_second_order() {
        let f1 = sample(20, 0.1, |r| (r * r).cos());
        let f2 = sample(20, 0.05, |r| 1.0 + r * r);
        assert!((even_at_origin(&f1) - 1.0).abs() < 1e-3);
        // exact for even quadratics
        assert!((even_at_origin(&f2) - 1.0).abs() < 1e-12);
    }
}

/// Finite-difference weights at `x0` for derivatives 0..=m on nodes `xs`
/// (Fornberg 1988). `w[k][j]` multiplies f(xs[j]) in the k-th derivative.
pub fn fornberg_weights(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut w = vec![vec![0.0; n]; m + 1];
    w[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    w[k][i] = c1 * (k as f64 * w[k - 1][i - 1] - c5 * w[k][i - 1]) / c2;
                }
                w[0][i] = -c1 * c5 * w[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                w[k][j] = (c4 * w[k][j] - k as f64 * w[k - 1][j]) / c3;
            }
            w[0][j] *= c4 / c3;
        }
        c1 = c2;
    }
    w
}

#[cfg(test)]
mod fornberg_tests {
    use super::fornberg_weights;

    #[test]
    fn reproduces_classic_stencils() {
        let w = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!((w[1][0] + 0.5).abs() < 1e-15 && (w[1][2] - 0.5).abs() < 1e-15);
        assert!((w[2][0] - 1.0).abs() < 1e-15 && (w[2][1] + 2.0).abs() < 1e-15);
        let w = fornberg_weights(0.0, &[0.0, -1.0, -2.0], 1);
        assert!((w[1][0] - 1.5).abs() < 1e-14 && (w[1][1] + 2.0).abs() < 1e-14);
    }
}
