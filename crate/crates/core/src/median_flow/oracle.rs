//! Independent checks: forward Euler for the distribution flow `D`, and the
//! space-inverse property of the drift flows `G` and `H`.

use super::transforms::sign0;
use crate::error::{Error, Result};

/// Clamp margin keeping `D` inside `(0, 1)`.
pub const CLAMP_EPS: f64 = 1e-12;

/// `D_T(x)` for every `x` in `x_grid`, by forward Euler of
/// `dD = (D ∧ (1 − D)) dB`.
pub fn d_terminal(forward: &[f64], x_grid: &[f64]) -> Result<Vec<f64>> {
    if x_grid.is_empty() || x_grid.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::param("x_grid", "points must lie in (0, 1)"));
    }
    if x_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("x_grid", "must be strictly increasing"));
    }
    let mut clamped = false;
    let out = x_grid
        .iter()
        .map(|&x0| {
            let mut d = x0;
            for &db in forward {
                d += d.min(1.0 - d) * db;
                if !(d > 0.0 && d < 1.0) {
                    clamped = true;
                    d = d.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS);
                }
            }
            d
        })
        .collect();
    if clamped {
        log::warn!("Euler iterate left (0, 1); clamped to [{CLAMP_EPS:e}, 1 − {CLAMP_EPS:e}]");
    }
    Ok(out)
}

/// `D_T^{-1}(½)` by monotone linear interpolation over `x_grid`.
pub fn direct_d_oracle(forward: &[f64], x_grid: &[f64]) -> Result<f64> {
    let mut d = d_terminal(forward, x_grid)?;
    if d.windows(2).any(|w| w[1] < w[0]) {
        log::warn!("D_T is not monotone on the grid; repairing by sorting");
        d.sort_by(f64::total_cmp);
    }
    let j = d.partition_point(|&v| v < 0.5);
    if j == 0 || j == d.len() {
        log::warn!("½ is outside the range of D_T on the grid; returning the grid end");
        return Ok(if j == 0 {
            x_grid[0]
        } else {
            x_grid[x_grid.len() - 1]
        });
    }
    let (d0, d1) = (d[j - 1], d[j]);
    let (x0, x1) = (x_grid[j - 1], x_grid[j]);
    if d1 == d0 {
        return Ok(0.5 * (x0 + x1));
    }
    Ok(x0 + (x1 - x0) * (0.5 - d0) / (d1 - d0))
}

/// `i/(n+1)` for `i = 1..=n`.
pub fn interior_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

/// `max_x |H^T_T(G_T(x)) − x|` with `dG = ½ sign(G) dt + dB` run forward and
/// `dH = −½ sign(H) dt + dB̃^T` run on the reversed driver.
pub fn flow_inverse_check(forward: &[f64], dt: f64, xs: &[f64]) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    let half = 0.5 * dt;
    let err = xs
        .iter()
        .map(|&x| {
            let g = forward.iter().fold(x, |g, &db| g + half * sign0(g) + db);
            let h = forward
                .iter()
                .rev()
                .fold(g, |h, &db| h - half * sign0(h) - db);
            (h - x).abs()
        })
        .fold(0.0, f64::max);
    Ok(err)
}
