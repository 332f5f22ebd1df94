//! Zero-energy part of a Brownian motion composed with a fractional field,
//! its p-variation, and a median flow driven by a reversed Brownian path.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod csv;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod median_flow;
pub mod path_gen;
pub mod pvariation;
pub mod rng;
pub mod stats;
pub mod zero_energy;

pub use error::{Error, Result};
pub use grid::{Grid, SampledPath};
pub use path_gen::{sample_bm, sample_fbm, BmPath, FbmMethod, FbmPath, FbmSampler};
pub use pvariation::{PVarEstimate, Partition, PartitionKind};
pub use zero_energy::{zero_energy_path, AntiderivativeGrid, RescaledPair, ZeroEnergyPath};
