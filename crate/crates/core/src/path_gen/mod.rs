//! Two-sided fractional Brownian motion and standard Brownian motion on grids.

mod circulant;
mod covariance;

pub use circulant::{fgn_autocov, CirculantFbm, CLIP_REL, MAX_CLIPPED_SHARE};
pub use covariance::{fbm_cov, fbm_cov_matrix, mixing_bound, translated_cov};

use std::fmt::Write as _;

use crate::csv::fmt_float;
use crate::error::{check_hurst, Error, Result};
use crate::grid::{Grid, SampledPath};
use crate::rng::{normal, stream_rng};

/// Largest grid the dense (Cholesky) sampler accepts.
pub const DENSE_MAX_POINTS: usize = 4096;

/// Half-width `6·√T·(1 + safety)` of the space window needed for a Brownian
/// path observed up to `horizon`.
pub fn default_half_width(horizon: f64, safety: f64) -> f64 {
    6.0 * horizon.sqrt() * (1.0 + safety)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FbmMethod {
    /// Circulant embedding on uniform grids, dense factorization otherwise.
    #[default]
    Auto,
    Circulant,
    Dense,
}

/// A two-sided fBM sample on a grid around zero, anchored at `B^H_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FbmPath {
    pub path: SampledPath,
    pub hurst: f64,
    pub seed: u64,
}

impl FbmPath {
    /// Wraps given values; the value at the zero grid point must be exactly 0.
    pub fn from_values(grid: Grid, values: Vec<f64>, hurst: f64, seed: u64) -> Result<Self> {
        check_hurst(hurst)?;
        let zero = grid
            .index_of(0.0)
            .ok_or_else(|| Error::InvalidGrid("fBM grid must contain 0".into()))?;
        if values.get(zero).copied() != Some(0.0) {
            return Err(Error::InvalidGrid("fBM must vanish at 0".into()));
        }
        Ok(Self {
            path: SampledPath::new(grid, values)?,
            hurst,
            seed,
        })
    }

    /// The trivial field `B^H ≡ 0`, used to switch the fractional part off.
    pub fn zero(grid: Grid, hurst: f64) -> Result<Self> {
        let n = grid.len();
        Self::from_values(grid, vec![0.0; n], hurst, 0)
    }

    pub fn grid(&self) -> &Grid {
        &self.path.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.path.values
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.path.eval(x)
    }

    /// CSV dump with header `x,value`.
    pub fn to_csv(&self) -> String {
        dump_csv("x", &self.path)
    }
}

/// A standard Brownian path on a grid over `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BmPath {
    pub path: SampledPath,
    pub seed: u64,
}

impl BmPath {
    pub fn from_values(grid: Grid, values: Vec<f64>, seed: u64) -> Result<Self> {
        if grid.start() != 0.0 {
            return Err(Error::InvalidGrid(
                "Brownian time grid must start at 0".into(),
            ));
        }
        if values.first().copied() != Some(0.0) {
            return Err(Error::InvalidGrid("Brownian path must start at 0".into()));
        }
        Ok(Self {
            path: SampledPath::new(grid, values)?,
            seed,
        })
    }

    /// Builds the path from its increments.
    pub fn from_increments(grid: Grid, increments: &[f64], seed: u64) -> Result<Self> {
        let mut values = Vec::with_capacity(increments.len() + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for &d in increments {
            acc += d;
            values.push(acc);
        }
        Self::from_values(grid, values, seed)
    }

    pub fn grid(&self) -> &Grid {
        &self.path.grid
    }

    pub fn times(&self) -> &[f64] {
        self.path.grid.points()
    }

    pub fn values(&self) -> &[f64] {
        &self.path.values
    }

    /// CSV dump with header `t,value`.
    pub fn to_csv(&self) -> String {
        dump_csv("t", &self.path)
    }
}

fn dump_csv(axis: &str, path: &SampledPath) -> String {
    let mut s = format!("{axis},value\n");
    for (x, v) in path.grid.points().iter().zip(&path.values) {
        let _ = writeln!(s, "{},{}", fmt_float(*x), fmt_float(*v));
    }
    s
}

/// Brownian motion on an arbitrary grid starting at 0: independent Gaussian
/// increments with variance equal to the cell width.
pub fn sample_bm(grid: &Grid, seed: u64) -> Result<BmPath> {
    let mut rng = stream_rng(seed);
    let p = grid.points();
    let increments: Vec<f64> = p
        .windows(2)
        .map(|w| (w[1] - w[0]).sqrt() * normal(&mut rng))
        .collect();
    BmPath::from_increments(grid.clone(), &increments, seed)
}

/// Two-sided fBM on `grid` (which must contain 0), exact in law at the grid
/// points and a deterministic function of `(grid, hurst, seed)`.
pub fn sample_fbm(grid: &Grid, hurst: f64, seed: u64, method: FbmMethod) -> Result<FbmPath> {
    check_hurst(hurst)?;
    let zero = grid
        .index_of(0.0)
        .ok_or_else(|| Error::InvalidGrid("fBM grid must contain 0".into()))?;
    let method = match method {
        FbmMethod::Auto if grid.is_uniform() => FbmMethod::Circulant,
        FbmMethod::Auto => FbmMethod::Dense,
        m => m,
    };
    let values = match method {
        FbmMethod::Circulant => {
            let step = grid.step().ok_or_else(|| {
                Error::InvalidGrid("circulant embedding needs a uniform grid".into())
            })?;
            let gen = CirculantFbm::new(grid.cells(), step, hurst)?;
            anchored_fbm(&gen, zero, seed)
        }
        FbmMethod::Dense => dense_fbm(grid, zero, hurst, seed)?,
        FbmMethod::Auto => unreachable!(),
    };
    FbmPath::from_values(grid.clone(), values, hurst, seed)
}

/// Sampler for many fBM paths on one uniform grid, sharing the spectrum.
#[derive(Debug)]
pub struct FbmSampler {
    grid: Grid,
    zero: usize,
    hurst: f64,
    gen: CirculantFbm,
}

impl FbmSampler {
    pub fn new(grid: Grid, hurst: f64) -> Result<Self> {
        check_hurst(hurst)?;
        let zero = grid
            .index_of(0.0)
            .ok_or_else(|| Error::InvalidGrid("fBM grid must contain 0".into()))?;
        let step = grid
            .step()
            .ok_or_else(|| Error::InvalidGrid("circulant embedding needs a uniform grid".into()))?;
        let gen = CirculantFbm::new(grid.cells(), step, hurst)?;
        Ok(Self {
            grid,
            zero,
            hurst,
            gen,
        })
    }

    /// Symmetric grid `[-half_width, half_width]` with the given step.
    pub fn symmetric(half_width: f64, step: f64, hurst: f64) -> Result<Self> {
        let half_cells = (half_width / step).ceil().max(1.0) as usize;
        Self::new(Grid::symmetric(half_cells, step)?, hurst)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn sample(&self, seed: u64) -> FbmPath {
        let values = anchored_fbm(&self.gen, self.zero, seed);
        FbmPath {
            path: SampledPath {
                grid: self.grid.clone(),
                values,
            },
            hurst: self.hurst,
            seed,
        }
    }
}

fn anchored_fbm(gen: &CirculantFbm, zero: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed);
    let noise = gen.sample(&mut rng);
    let mut values = Vec::with_capacity(noise.len() + 1);
    values.push(0.0);
    let mut acc = 0.0;
    for d in noise {
        acc += d;
        values.push(acc);
    }
    let base = values[zero];
    for v in &mut values {
        *v -= base;
    }
    values
}

fn dense_fbm(grid: &Grid, zero: usize, hurst: f64, seed: u64) -> Result<Vec<f64>> {
    if grid.len() > DENSE_MAX_POINTS {
        return Err(Error::InvalidGrid(format!(
            "dense sampler is limited to {DENSE_MAX_POINTS} points, got {}",
            grid.len()
        )));
    }
    let pts: Vec<f64> = grid
        .points()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != zero)
        .map(|(_, &x)| x)
        .collect();
    let cov = fbm_cov_matrix(&pts, hurst)?;
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::Numerical("fBM covariance is not positive definite".into()))?;
    let mut rng = stream_rng(seed);
    let z = nalgebra::DVector::from_fn(pts.len(), |_, _| normal(&mut rng));
    let x = chol.l() * z;
    let mut values = Vec::with_capacity(grid.len());
    let mut it = x.iter();
    for i in 0..grid.len() {
        values.push(if i == zero { 0.0 } else { *it.next().unwrap() });
    }
    Ok(values)
}
