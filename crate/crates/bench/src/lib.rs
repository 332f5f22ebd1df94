//! Shared fixtures for the criterion benches.

use pvar_core::median_flow::{DriverKind, ForwardPath};
use pvar_core::{sample_bm, BmPath, FbmPath, FbmSampler, Grid};

pub const SEED: u64 = 7;

/// A Brownian path on `[0, 1]` with `steps` cells.
pub fn brownian(steps: usize) -> BmPath {
    sample_bm(&Grid::time(1.0, steps).unwrap(), SEED).unwrap()
}

/// A field on `[-half_width, half_width]` with the given spacing.
pub fn field(half_width: f64, step: f64, hurst: f64) -> FbmPath {
    FbmSampler::symmetric(half_width, step, hurst)
        .unwrap()
        .sample(SEED)
}

pub fn rademacher(dt: f64, steps: usize) -> ForwardPath {
    ForwardPath::sample(DriverKind::Rademacher, dt, steps, SEED).unwrap()
}
