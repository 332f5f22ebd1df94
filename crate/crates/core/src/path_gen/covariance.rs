use nalgebra::DMatrix;

use crate::error::{check_hurst, Result};

/// Two-sided fBM covariance `½(|x|^{2H} + |y|^{2H} − |x−y|^{2H})`.
pub fn fbm_cov(x: f64, y: f64, hurst: f64) -> Result<f64> {
    check_hurst(hurst)?;
    Ok(cov_unchecked(x, y, hurst))
}

#[inline]
pub(crate) fn cov_unchecked(x: f64, y: f64, hurst: f64) -> f64 {
    let e = 2.0 * hurst;
    0.5 * (x.abs().powf(e) + y.abs().powf(e) - (x - y).abs().powf(e))
}

/// `cov((T_y B^H)_x, B^H_{xp})` where `(T_y B^H)_x = B^H_{y+x} − B^H_y`.
pub fn translated_cov(x: f64, xp: f64, y: f64, hurst: f64) -> Result<f64> {
    check_hurst(hurst)?;
    let e = 2.0 * hurst;
    let p = |u: f64| u.abs().powf(e);
    Ok(0.5 * (p(y + x) - p(y + x - xp) - p(y) + p(y - xp)))
}

/// Right-hand side `C·|x||xp|·|y|^{2H−2}` of the mixing bound for a given
/// constant `C`.
pub fn mixing_bound(x: f64, xp: f64, y: f64, hurst: f64, constant: f64) -> f64 {
    constant * x.abs() * xp.abs() * y.abs().powf(2.0 * hurst - 2.0)
}

/// Covariance matrix of `B^H` at the given points.
pub fn fbm_cov_matrix(points: &[f64], hurst: f64) -> Result<DMatrix<f64>> {
    check_hurst(hurst)?;
    let n = points.len();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        cov_unchecked(points[i], points[j], hurst)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_examples() {
        assert_eq!(fbm_cov(1.0, 1.0, 0.5).unwrap(), 1.0);
        assert_eq!(fbm_cov(1.0, -1.0, 0.5).unwrap(), 0.0);
        assert!((fbm_cov(2.0, 2.0, 0.25).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(fbm_cov(1.0, 1.0, 1.0).is_err());
        assert!(fbm_cov(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn translated_examples() {
        assert!(translated_cov(0.3, 0.2, 2.0, 0.5).unwrap().abs() < 1e-15);
        let direct = 0.5 * (1.1f64.sqrt() - 1.0 - 1.0 + 0.9f64.sqrt());
        let v = translated_cov(0.1, 0.1, 1.0, 0.25).unwrap();
        assert!((v - direct).abs() < 1e-16);
        assert!((v + 0.001255).abs() < 5e-6);
    }

    #[test]
    fn translated_matches_kernel_difference() {
        for &(x, xp, y, h) in &[(0.2, -0.3, 1.5, 0.3), (-0.4, 0.1, -2.0, 0.8)] {
            let lhs = translated_cov(x, xp, y, h).unwrap();
            let rhs = fbm_cov(y + x, xp, h).unwrap() - fbm_cov(y, xp, h).unwrap();
            assert!((lhs - rhs).abs() < 1e-14);
        }
    }

    #[test]
    fn brownian_disjoint_intervals_decorrelate() {
        // Same-side, disjoint (y, y+x) and (0, xp) under H = 1/2.
        for &(x, xp, y) in &[(0.3, 0.2, 2.0), (0.5, 0.5, 1.0), (-0.2, -0.4, -1.0)] {
            assert!(translated_cov(x, xp, y, 0.5).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn corrected_mixing_constant_holds() {
        // 2|1-2H| is the constant that the binomial expansion actually yields.
        for &h in &[0.05, 0.2, 0.45, 0.55, 0.8, 0.95] {
            for &y in &[-2.0, -0.5, 0.5, 3.0] {
                for i in -10..=10 {
                    for j in -10..=10 {
                        let x = i as f64 / 20.0 * f64::abs(y);
                        let xp = j as f64 / 20.0 * f64::abs(y);
                        let c = translated_cov(x, xp, y, h).unwrap().abs();
                        let b = mixing_bound(x, xp, y, h, 2.0 * (1.0 - 2.0 * h).abs());
                        assert!(c <= b * (1.0 + 1e-12) + 1e-15, "H={h} x={x} xp={xp} y={y}");
                    }
                }
            }
        }
    }

    #[test]
    fn half_constant_fails_at_corner() {
        // Counterexample to C = ½|1−2H|: y + x − xp = 0.
        let (x, xp, y, h) = (-0.5, 0.5, 1.0, 0.25);
        let c = translated_cov(x, xp, y, h).unwrap().abs();
        assert!((c - 0.5 * (2.0 * 0.5f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!(c > mixing_bound(x, xp, y, h, 0.5 * (1.0 - 2.0 * h).abs()));
    }

    #[test]
    fn small_grid_covariance_is_positive_definite() {
        for &h in &[0.1, 0.5, 0.9] {
            let pts: Vec<f64> = (1..=32)
                .flat_map(|i| [i as f64 / 8.0, -(i as f64) / 8.0])
                .collect();
            let m = fbm_cov_matrix(&pts, h).unwrap();
            assert_eq!(m, m.transpose());
            assert!(m.cholesky().is_some(), "H={h}");
        }
    }
}
