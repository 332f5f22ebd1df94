//! Exact fractional Gaussian noise by circulant embedding.

use std::sync::Arc;

use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_hurst, Error, Result};
use crate::rng::normal;

/// Eigenvalues below `-CLIP_REL * max` count towards the clipped mass.
pub const CLIP_REL: f64 = 1e-10;
/// Maximum tolerated share of clipped spectral mass.
pub const MAX_CLIPPED_SHARE: f64 = 1e-6;

/// Autocovariance of fGn with increments over cells of width `step`.
pub fn fgn_autocov(k: usize, hurst: f64, step: f64) -> f64 {
    let e = 2.0 * hurst;
    let k = k as f64;
    0.5 * step.powf(e) * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).abs().powf(e))
}

/// Precomputed square-root spectrum for `n` fGn increments; reusable across
/// any number of draws.
pub struct CirculantFbm {
    n: usize,
    sqrt_eig: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    clipped_mass: f64,
}

impl std::fmt::Debug for CirculantFbm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantFbm")
            .field("n", &self.n)
            .field("clipped_mass", &self.clipped_mass)
            .finish()
    }
}

impl CirculantFbm {
    pub fn new(n: usize, step: f64, hurst: f64) -> Result<Self> {
        check_hurst(hurst)?;
        if n == 0 {
            return Err(Error::param("n", "need at least one increment"));
        }
        let m = 2 * n;
        let mut c: Vec<Complex<f64>> = (0..m)
            .map(|k| {
                let lag = if k <= n { k } else { m - k };
                Complex::new(fgn_autocov(lag, hurst, step), 0.0)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        fft.process(&mut c);

        let max = c.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = c.iter().map(|z| z.re.abs()).sum();
        let mut clipped_mass = 0.0;
        let sqrt_eig = c
            .iter()
            .map(|z| {
                let lam = z.re;
                if lam < -CLIP_REL * max {
                    clipped_mass += -lam;
                }
                (lam.max(0.0) / m as f64).sqrt()
            })
            .collect();
        if clipped_mass > MAX_CLIPPED_SHARE * total {
            return Err(Error::EmbeddingFailure {
                clipped: clipped_mass,
                total,
            });
        }
        if clipped_mass > 0.0 {
            log::warn!("circulant embedding clipped spectral mass {clipped_mass:e} of {total:e}");
        }
        Ok(Self {
            n,
            sqrt_eig,
            fft,
            clipped_mass,
        })
    }

    pub fn increments(&self) -> usize {
        self.n
    }

    pub fn clipped_mass(&self) -> f64 {
        self.clipped_mass
    }

    /// One draw of `n` consecutive fGn increments.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut w: Vec<Complex<f64>> = self
            .sqrt_eig
            .iter()
            .map(|&s| Complex::new(s * normal(rng), s * normal(rng)))
            .collect();
        self.fft.process(&mut w);
        w.truncate(self.n);
        w.into_iter().map(|z| z.re).collect()
    }
}
