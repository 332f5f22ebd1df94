//! Least-squares lines through base-10 logarithms.

use crate::csv::fmt_float;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    /// Sum of squared residuals in log space.
    pub ssr: f64,
    pub n_points: usize,
}

impl RegressionFit {
    pub const CSV_HEADER: &'static str = "p,slope,intercept,ssr,n_points";

    pub fn csv_row(&self, p: f64) -> String {
        format!(
            "{},{},{},{},{}",
            fmt_float(p),
            fmt_float(self.slope),
            fmt_float(self.intercept),
            fmt_float(self.ssr),
            self.n_points
        )
    }
}

/// Ordinary (or weighted, with positive `weights`) least squares of
/// `log10 y` on `log10 x`.
pub fn fit_loglog(points: &[(f64, f64)], weights: Option<&[f64]>) -> Result<RegressionFit> {
    if points.len() < 2 {
        return Err(Error::param("points", "need at least 2 points"));
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::param(
            "points",
            format!("coordinates must be positive, got ({x}, {y})"),
        ));
    }
    let w: Vec<f64> = match weights {
        Some(w) if w.len() != points.len() => {
            return Err(Error::param("weights", "one weight per point"));
        }
        Some(w) if w.iter().any(|&v| !(v > 0.0 && v.is_finite())) => {
            return Err(Error::param("weights", "must be positive"));
        }
        Some(w) => w.to_vec(),
        None => vec![1.0; points.len()],
    };
    let lx: Vec<f64> = points.iter().map(|p| p.0.log10()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.log10()).collect();
    let sw: f64 = w.iter().sum();
    let mx = lx.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = ly.iter().zip(&w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = lx.iter().zip(&w).map(|(x, w)| w * (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::param("points", "x values must not all coincide"));
    }
    let sxy: f64 = lx
        .iter()
        .zip(&ly)
        .zip(&w)
        .map(|((x, y), w)| w * (x - mx) * (y - my))
        .sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr = if points.len() == 2 {
        0.0
    } else {
        lx.iter()
            .zip(&ly)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum()
    };
    Ok(RegressionFit {
        slope,
        intercept,
        ssr,
        n_points: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = [1e-3, 1e-2, 0.1, 1.0, 7.0]
            .iter()
            .map(|&x| (x, 10.0 * x * x))
            .collect();
        let f = fit_loglog(&pts, None).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!(f.ssr <= 1e-12);
        assert_eq!(f.n_points, 5);
    }

    #[test]
    fn two_points_have_no_residual() {
        let f = fit_loglog(&[(0.3, 0.7), (0.01, 2.0)], None).unwrap();
        assert_eq!(f.ssr, 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_loglog(&[(1.0, 1.0)], None).is_err());
        assert!(fit_loglog(&[(1.0, 1.0), (2.0, 0.0)], None).is_err());
        assert!(fit_loglog(&[(1.0, 1.0), (1.0, 2.0)], None).is_err());
        assert!(fit_loglog(&[(1.0, 1.0), (2.0, 2.0)], Some(&[1.0])).is_err());
    }

    #[test]
    fn weights_matter_only_off_the_line() {
        let pts = [(1.0, 1.0), (10.0, 12.0), (100.0, 90.0)];
        let a = fit_loglog(&pts, None).unwrap();
        let b = fit_loglog(&pts, Some(&[5.0, 1.0, 1.0])).unwrap();
        assert_ne!(a.slope, b.slope);
        let line = [(1.0, 3.0), (10.0, 30.0)];
        let c = fit_loglog(&line, Some(&[2.0, 0.5])).unwrap();
        assert!((c.slope - 1.0).abs() < 1e-14);
    }
}
