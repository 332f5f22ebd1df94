//! Partitions, p-variation sums, and the two convergence statistics for the
//! zero-energy part: power sums along shrinking deterministic meshes and along
//! level-crossing times of the Brownian driver.

use std::fmt;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::csv::fmt_float;
use crate::error::{check_hurst, Error, Result};
use crate::grid::Grid;
use crate::path_gen::{BmPath, FbmPath, FbmSampler};
use crate::rng::{normal, stream_rng, substream, tag};
use crate::stats::{mean_se, MeanEstimate};
use crate::zero_energy::{zero_energy_path, AntiderivativeGrid};

/// Critical exponent `2/(1+H)`.
pub fn critical_exponent(hurst: f64) -> f64 {
    2.0 / (1.0 + hurst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionKind {
    Uniform,
    Dyadic,
    Crossing,
}

impl fmt::Display for PartitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PartitionKind::Uniform => "uniform",
            PartitionKind::Dyadic => "dyadic",
            PartitionKind::Crossing => "crossing",
        })
    }
}

/// Partition of `[0, t]` made of time-grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    kind: PartitionKind,
    /// Mesh for deterministic partitions, level for crossing partitions.
    param: f64,
    times: Vec<f64>,
    indices: Vec<usize>,
}

impl Partition {
    /// Every `mesh/step`-th point of a uniform time grid, up to `t`.
    pub fn uniform(grid: &Grid, mesh: f64, t: f64) -> Result<Self> {
        let step = grid.step().ok_or_else(|| {
            Error::MisalignedGrid("uniform partitions need a uniform grid".into())
        })?;
        if grid.start() != 0.0 {
            return Err(Error::MisalignedGrid("time grid must start at 0".into()));
        }
        if !(mesh > 0.0) {
            return Err(Error::param(
                "mesh",
                format!("must be positive, got {mesh}"),
            ));
        }
        if !(t > 0.0) || t > grid.end() * (1.0 + 1e-12) {
            return Err(Error::param(
                "t",
                format!("{t} is outside (0, {}]", grid.end()),
            ));
        }
        let stride = aligned_ratio(mesh, step).ok_or_else(|| {
            Error::MisalignedGrid(format!("mesh {mesh} is not a multiple of {step}"))
        })?;
        let cells = aligned_ratio(t, mesh)
            .ok_or_else(|| Error::MisalignedGrid(format!("t = {t} is not a multiple of {mesh}")))?;
        let indices: Vec<usize> = (0..=cells).map(|j| j * stride).collect();
        if *indices.last().unwrap() >= grid.len() {
            return Err(Error::MisalignedGrid(format!(
                "t = {t} lies beyond the grid"
            )));
        }
        let kind = if 2f64.powi(mesh.log2().round() as i32) == mesh {
            PartitionKind::Dyadic
        } else {
            PartitionKind::Uniform
        };
        Ok(Self::from_indices(grid, kind, mesh, indices))
    }

    /// Uniform partition with mesh `2^{-level}`.
    pub fn dyadic(grid: &Grid, level: i32, t: f64) -> Result<Self> {
        Self::uniform(grid, 2f64.powi(-level), t)
    }

    fn from_indices(grid: &Grid, kind: PartitionKind, param: f64, indices: Vec<usize>) -> Self {
        let times = indices.iter().map(|&i| grid.points()[i]).collect();
        Self {
            kind,
            param,
            times,
            indices,
        }
    }

    pub fn kind(&self) -> PartitionKind {
        self.kind
    }

    pub fn param(&self) -> f64 {
        self.param
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Positions of the partition points in the underlying time grid.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `a/b` when it is a positive integer up to rounding.
fn aligned_ratio(a: f64, b: f64) -> Option<usize> {
    let r = a / b;
    let k = r.round();
    (k >= 1.0 && (r - k).abs() <= 1e-9 * k).then_some(k as usize)
}

/// `τ_0 = 0` and `τ_{k+1}` the first grid time after `τ_k` at which the path
/// has moved by at least `delta` from `B_{τ_k}`.
pub fn crossing_times(bm: &BmPath, delta: f64) -> Result<Partition> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param(
            "delta",
            format!("must be positive, got {delta}"),
        ));
    }
    let b = bm.values();
    let mut indices = vec![0];
    let mut anchor = b[0];
    for (j, &x) in b.iter().enumerate().skip(1) {
        if (x - anchor).abs() >= delta {
            indices.push(j);
            anchor = x;
        }
    }
    Ok(Partition::from_indices(
        bm.grid(),
        PartitionKind::Crossing,
        delta,
        indices,
    ))
}

/// `Σ |x_{i+1} − x_i|^p`.
pub fn power_sum(values: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::param("p", format!("must be positive, got {p}")));
    }
    if values.len() < 2 {
        return Err(Error::param("partition", "needs at least 2 points"));
    }
    Ok(values.windows(2).map(|w| (w[1] - w[0]).abs().powf(p)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PVarEstimate {
    pub p: f64,
    pub value: f64,
    pub kind: PartitionKind,
    pub mesh_or_delta: f64,
    pub seed: u64,
}

impl PVarEstimate {
    pub const CSV_HEADER: &'static str = "seed,p,mesh_or_delta,partition_kind,value";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.seed,
            fmt_float(self.p),
            fmt_float(self.mesh_or_delta),
            self.kind,
            fmt_float(self.value)
        )
    }
}

pub fn estimates_to_csv(estimates: &[PVarEstimate]) -> String {
    let mut s = format!("{}\n", PVarEstimate::CSV_HEADER);
    for e in estimates {
        let _ = writeln!(s, "{}", e.csv_row());
    }
    s
}

/// p-variation sum of grid values `values` along `partition`.
pub fn p_variation(
    values: &[f64],
    partition: &Partition,
    p: f64,
    seed: u64,
) -> Result<PVarEstimate> {
    if partition.indices.last().is_some_and(|&i| i >= values.len()) {
        return Err(Error::MisalignedGrid(
            "partition exceeds the sampled path".into(),
        ));
    }
    let sampled: Vec<f64> = partition.indices.iter().map(|&i| values[i]).collect();
    Ok(PVarEstimate {
        p,
        value: power_sum(&sampled, p)?,
        kind: partition.kind,
        mesh_or_delta: partition.param,
        seed,
    })
}

/// Power sum along crossing times, restricted to `k` with `τ_k < t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingSum {
    pub value: f64,
    pub terms: usize,
    /// Some `τ_k < t` had no observed successor before the end of the path.
    pub truncated: bool,
}

/// `Σ_{k: τ_k < t} |A_{τ_{k+1}} − A_{τ_k}|^p` for precomputed `A` values.
pub fn crossing_sum(
    a_values: &[f64],
    bm: &BmPath,
    delta: f64,
    t: f64,
    p: f64,
) -> Result<CrossingSum> {
    if a_values.len() != bm.values().len() {
        return Err(Error::MisalignedGrid(
            "A and B live on different grids".into(),
        ));
    }
    if !(t > 0.0) || t > bm.grid().end() {
        return Err(Error::param(
            "t",
            format!("{t} is outside (0, {}]", bm.grid().end()),
        ));
    }
    let part = crossing_times(bm, delta)?;
    let times = bm.times();
    let idx = part.indices();
    let mut value = 0.0;
    let mut terms = 0;
    for w in idx.windows(2) {
        if times[w[0]] >= t {
            break;
        }
        value += (a_values[w[1]] - a_values[w[0]]).abs().powf(p);
        terms += 1;
    }
    let last = *idx.last().unwrap();
    let truncated = times[last] < t;
    if truncated {
        log::debug!(
            "crossing sum truncated at delta = {delta}: last crossing {} < t = {t}",
            times[last]
        );
    }
    Ok(CrossingSum {
        value,
        terms,
        truncated,
    })
}

/// Crossing-time statistic at the critical exponent of the field.
pub fn theorem2_statistic(fbm: &FbmPath, bm: &BmPath, delta: f64, t: f64) -> Result<CrossingSum> {
    let a = zero_energy_path(fbm, bm)?;
    crossing_sum(&a.a_values, bm, delta, t, critical_exponent(fbm.hurst))
}

/// One p-variation sum per mesh along uniform partitions of `[0, t]`.
pub fn theorem1_statistic(
    fbm: &FbmPath,
    bm: &BmPath,
    meshes: &[f64],
    p: f64,
    t: f64,
) -> Result<Vec<PVarEstimate>> {
    if meshes.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param("meshes", "must be strictly decreasing"));
    }
    let a = zero_energy_path(fbm, bm)?;
    meshes
        .iter()
        .map(|&m| {
            p_variation(
                &a.a_values,
                &Partition::uniform(bm.grid(), m, t)?,
                p,
                bm.seed,
            )
        })
        .collect()
}

/// Simulation settings for [`estimate_c`].
#[derive(Debug, Clone, PartialEq)]
pub struct CParams {
    pub dt: f64,
    pub dx: f64,
    pub master_seed: u64,
    /// Initial time cap; doubled (and logged) for paths still inside at the cap.
    pub time_cap: f64,
    /// Forces `B^H ≡ 0`.
    pub zero_fbm: bool,
}

impl Default for CParams {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            dx: 1e-3,
            master_seed: 0,
            time_cap: 8.0,
            zero_fbm: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CEstimate {
    pub estimate: MeanEstimate,
    /// Paths that needed a longer horizon.
    pub extended: usize,
}

/// Monte Carlo estimate of `E|A_τ|^{p_0}` with `τ` the exit time of `B` from
/// `(−1, 1)`.
pub fn estimate_c(hurst: f64, n_paths: usize, params: &CParams) -> Result<CEstimate> {
    check_hurst(hurst)?;
    if n_paths == 0 {
        return Err(Error::param("n_paths", "must be at least 1"));
    }
    if !(params.dt > 0.0) || params.dt > 0.01 {
        return Err(Error::param(
            "dt",
            format!("must lie in (0, 0.01], got {}", params.dt),
        ));
    }
    if !(params.dx > 0.0) {
        return Err(Error::param(
            "dx",
            format!("must be positive, got {}", params.dx),
        ));
    }
    if !(params.time_cap > 0.0) {
        return Err(Error::param("time_cap", "must be positive"));
    }
    let p0 = critical_exponent(hurst);
    let sampler = if params.zero_fbm {
        None
    } else {
        Some(FbmSampler::symmetric(
            1.0 + 10.0 * params.dt.sqrt(),
            params.dx,
            hurst,
        )?)
    };
    let out: Vec<(f64, bool)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let f = match &sampler {
                Some(s) => {
                    let fbm = s.sample(substream(params.master_seed, tag::FBM, i));
                    Some(AntiderivativeGrid::from_path(fbm.path)?)
                }
                None => None,
            };
            let (a, extended) = exit_zero_energy(
                f.as_ref(),
                substream(params.master_seed, tag::BM, i),
                params,
                i,
            )?;
            Ok((a.abs().powf(p0), extended))
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = out.iter().map(|v| v.0).collect();
    Ok(CEstimate {
        estimate: mean_se(&values),
        extended: out.iter().filter(|v| v.1).count(),
    })
}

/// `A` at the first grid time with `|B| ≥ 1`, simulated step by step.
fn exit_zero_energy(
    f: Option<&AntiderivativeGrid>,
    seed: u64,
    params: &CParams,
    index: u64,
) -> Result<(f64, bool)> {
    let mut rng = stream_rng(seed);
    let sd = params.dt.sqrt();
    let mut cap_steps = (params.time_cap / params.dt).ceil() as u64;
    let mut extended = false;
    let (mut b, mut ito, mut steps) = (0.0f64, 0.0, 0u64);
    let eval = |x: f64| -> Result<(f64, f64)> {
        match f {
            Some(f) => {
                f.grid().locate(x)?;
                Ok(f.eval_both_unchecked(x))
            }
            None => Ok((0.0, 0.0)),
        }
    };
    loop {
        let db = sd * normal(&mut rng);
        ito += eval(b)?.1 * db;
        b += db;
        steps += 1;
        if b.abs() >= 1.0 {
            break;
        }
        if steps >= cap_steps {
            cap_steps *= 2;
            extended = true;
            log::info!(
                "exit path {index} still inside at t = {}; extending horizon to {}",
                steps as f64 * params.dt,
                cap_steps as f64 * params.dt
            );
        }
    }
    Ok((eval(b)?.0 - ito, extended))
}
