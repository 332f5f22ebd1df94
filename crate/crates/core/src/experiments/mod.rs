//! Monte Carlo drivers, regression, and CSV emission for the experiments.
//!
//! Every realization draws its randomness from `(seed, stream tag, index)`, and
//! results are collected by index, so outputs do not depend on the number of
//! worker threads.

mod config;
mod regression;

pub use config::ExperimentConfig;
pub use regression::{fit_loglog, RegressionFit};

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::csv::fmt_float;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::median_flow::{cond_exp_with_map, s_psi_inv, FlowMap, ForwardPath, InnerEnsemble};
use crate::path_gen::{default_half_width, sample_bm, FbmSampler};
use crate::pvariation::{
    critical_exponent, crossing_sum, estimate_c, p_variation, CEstimate, CParams, PVarEstimate,
    Partition, PartitionKind,
};
use crate::rng::{stream_seed, substream, tag};
use crate::stats::{freedman_diaconis, iqr, mean_se, median, Binning, MeanEstimate};
use crate::zero_energy::zero_energy_values;

/// `key=value` sidecar text: the full config followed by run-specific entries.
pub fn metadata_text(cfg: &ExperimentConfig, extra: &[(String, String)]) -> String {
    let mut s = String::new();
    for k in ExperimentConfig::KEYS {
        let _ = writeln!(s, "{k}={}", cfg.get(k).unwrap());
    }
    for (k, v) in extra {
        let _ = writeln!(s, "{k}={v}");
    }
    s
}

/// Median and conditional-expectation values of one realization at one lag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianRow {
    pub seed: u64,
    pub horizon: f64,
    pub delta_tau: f64,
    pub m: f64,
    pub cond_exp: f64,
    pub abs_increment: f64,
}

impl MedianRow {
    pub const CSV_HEADER: &'static str = "seed,T,delta_tau,m_T,cond_exp,abs_increment";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.seed,
            fmt_float(self.horizon),
            fmt_float(self.delta_tau),
            fmt_float(self.m),
            fmt_float(self.cond_exp),
            fmt_float(self.abs_increment)
        )
    }
}

pub fn median_rows_csv(rows: &[MedianRow]) -> String {
    let mut s = format!("{}\n", MedianRow::CSV_HEADER);
    for r in rows {
        let _ = writeln!(s, "{}", r.csv_row());
    }
    s
}

fn horizon_steps(t: f64, dt: f64, key: &str) -> Result<usize> {
    let r = t / dt;
    let k = r.round();
    if k < 1.0 || (r - k).abs() > 1e-9 * k {
        return Err(Error::config(
            key,
            format!("{t} is not a positive multiple of {dt}"),
        ));
    }
    Ok(k as usize)
}

/// One realization: `m_T` and `E[m_{T+Δτ} | F_T]` for every configured lag.
fn realization_rows(
    cfg: &ExperimentConfig,
    inner: &InnerEnsemble,
    r: u64,
) -> Result<Vec<MedianRow>> {
    let steps = horizon_steps(cfg.horizon, cfg.grid_step, "grid_step")?;
    let seed = substream(cfg.seed, tag::DRIVER, r);
    let forward = ForwardPath::sample(cfg.driver, cfg.grid_step, steps, seed)?;
    let map = FlowMap::from_forward(&forward.increments)?;
    let m = s_psi_inv(map.eval(0.0));
    let inner_root = substream(cfg.seed, tag::INNER, r);
    cfg.delta_tau
        .iter()
        .enumerate()
        .map(|(d, &dtau)| {
            let ys = inner.starts(dtau, stream_seed(inner_root, d as u64))?;
            let ce = cond_exp_with_map(&map, &ys, inner.average_raw_f);
            Ok(MedianRow {
                seed,
                horizon: cfg.horizon,
                delta_tau: dtau,
                m,
                cond_exp: ce,
                abs_increment: (ce - m).abs(),
            })
        })
        .collect()
}

/// Per-realization medians and conditional expectations, realization-major.
pub fn median_experiment(cfg: &ExperimentConfig) -> Result<Vec<MedianRow>> {
    cfg.validate()?;
    let inner = cfg.inner();
    let per: Vec<Vec<MedianRow>> = (0..cfg.realizations as u64)
        .into_par_iter()
        .map(|r| realization_rows(cfg, &inner, r))
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementRow {
    pub seed: u64,
    pub p: f64,
    pub delta_tau: f64,
    pub estimate: MeanEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncrementsOutput {
    pub raw: Vec<MedianRow>,
    pub rows: Vec<IncrementRow>,
    pub fits: Vec<(f64, RegressionFit)>,
    pub warnings: Vec<String>,
}

impl IncrementsOutput {
    pub fn increments_csv(&self) -> String {
        let mut s = String::from("seed,p,delta_tau,mean_abs_incr_pow,ci_low,ci_high\n");
        for r in &self.rows {
            let (lo, hi) = r.estimate.ci95();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.seed,
                fmt_float(r.p),
                fmt_float(r.delta_tau),
                fmt_float(r.estimate.mean),
                fmt_float(lo),
                fmt_float(hi)
            );
        }
        s
    }

    pub fn fits_csv(&self) -> String {
        let mut s = format!("{}\n", RegressionFit::CSV_HEADER);
        for (p, f) in &self.fits {
            let _ = writeln!(s, "{}", f.csv_row(*p));
        }
        s
    }

    pub fn fit_for(&self, p: f64) -> Option<&RegressionFit> {
        self.fits.iter().find(|(q, _)| *q == p).map(|(_, f)| f)
    }
}

/// Mean `p`-th powers of single conditional increments per lag, with log-log fits.
pub fn single_increment_experiment(cfg: &ExperimentConfig) -> Result<IncrementsOutput> {
    let raw = median_experiment(cfg)?;
    let nd = cfg.delta_tau.len();
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let mut warnings = Vec::new();
    for &p in &cfg.p {
        let mut pts = Vec::with_capacity(nd);
        let mut weights = Vec::with_capacity(nd);
        for (d, &dtau) in cfg.delta_tau.iter().enumerate() {
            let v: Vec<f64> = raw
                .iter()
                .skip(d)
                .step_by(nd)
                .map(|r| r.abs_increment.powf(p))
                .collect();
            let est = mean_se(&v);
            rows.push(IncrementRow {
                seed: cfg.seed,
                p,
                delta_tau: dtau,
                estimate: est,
            });
            pts.push((dtau, est.mean));
            let (lo, hi) = est.ci95();
            weights.push(if hi > lo { 1.0 / (hi - lo) } else { 1.0 });
        }
        if pts.iter().any(|&(_, y)| !(y > 0.0)) {
            let msg = format!("p = {p}: some mean increments vanish; no fit reported");
            log::warn!("{msg}");
            warnings.push(msg);
            continue;
        }
        if pts.len() < 2 {
            warnings.push(format!("p = {p}: a fit needs at least two lags"));
            continue;
        }
        let w = cfg.weighted_fit.then_some(weights.as_slice());
        fits.push((p, fit_loglog(&pts, w)?));
    }
    Ok(IncrementsOutput {
        raw,
        rows,
        fits,
        warnings,
    })
}

/// `Σ_i |E[m_{t_{i+1}} | F_{t_i}] − m_{t_i}|^p` along one forward path, for
/// each exponent in `ps`.
pub fn conditional_pvariation(
    forward: &[f64],
    dt: f64,
    ps: &[f64],
    inner: &InnerEnsemble,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut map = FlowMap::identity();
    let mut sums = vec![0.0; ps.len()];
    for (i, &db) in forward.iter().enumerate() {
        let m = s_psi_inv(map.eval(0.0));
        let ys = inner.starts(dt, stream_seed(seed, i as u64))?;
        let incr = (cond_exp_with_map(&map, &ys, inner.average_raw_f) - m).abs();
        for (s, &p) in sums.iter_mut().zip(ps) {
            *s += incr.powf(p);
        }
        map.push_forward(db)?;
    }
    Ok(sums)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistRow {
    pub seed: u64,
    pub p: f64,
    pub mesh: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistCell {
    pub p: f64,
    pub mesh: f64,
    pub binning: Binning,
    pub median: f64,
    pub iqr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramOutput {
    pub rows: Vec<HistRow>,
    pub cells: Vec<HistCell>,
}

impl HistogramOutput {
    pub fn csv(&self) -> String {
        let mut s = String::from("seed,p,mesh,value\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                r.seed,
                fmt_float(r.p),
                fmt_float(r.mesh),
                fmt_float(r.value)
            );
        }
        s
    }

    /// Binning and summary per `(p, mesh)` cell, as sidecar entries.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for c in &self.cells {
            let key = format!("cell[p={},mesh={}]", fmt_float(c.p), fmt_float(c.mesh));
            out.push((
                key,
                format!(
                    "bins={} width={} lo={} hi={} median={} iqr={}",
                    c.binning.bins,
                    fmt_float(c.binning.width),
                    fmt_float(c.binning.lo),
                    fmt_float(c.binning.hi),
                    fmt_float(c.median),
                    fmt_float(c.iqr)
                ),
            ));
        }
        out
    }

    pub fn cell(&self, p: f64, mesh: f64) -> Option<&HistCell> {
        self.cells.iter().find(|c| c.p == p && c.mesh == mesh)
    }
}

/// Conditional p-variation at `T` over many trajectories, for every mesh.
pub fn pvar_histogram_experiment(cfg: &ExperimentConfig) -> Result<HistogramOutput> {
    cfg.validate()?;
    let inner = cfg.hist_inner();
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for (j, &mesh) in cfg.hist_meshes.iter().enumerate() {
        let steps = horizon_steps(cfg.horizon, mesh, "hist_meshes")?;
        let root = stream_seed(cfg.seed, j as u64);
        let per: Vec<(u64, Vec<f64>)> = (0..cfg.hist_paths as u64)
            .into_par_iter()
            .map(|r| {
                let seed = substream(root, tag::DRIVER, r);
                let f = ForwardPath::sample(cfg.driver, mesh, steps, seed)?;
                let sums = conditional_pvariation(
                    &f.increments,
                    mesh,
                    &cfg.hist_p,
                    &inner,
                    substream(root, tag::INNER, r),
                )?;
                Ok((seed, sums))
            })
            .collect::<Result<_>>()?;
        for (k, &p) in cfg.hist_p.iter().enumerate() {
            let vals: Vec<f64> = per.iter().map(|(_, s)| s[k]).collect();
            rows.extend(per.iter().map(|(seed, s)| HistRow {
                seed: *seed,
                p,
                mesh,
                value: s[k],
            }));
            cells.push(HistCell {
                p,
                mesh,
                binning: freedman_diaconis(&vals),
                median: median(&vals),
                iqr: iqr(&vals),
            });
        }
    }
    Ok(HistogramOutput { rows, cells })
}

/// Field window and grids shared by the fBM-driven statistics.
fn fbm_sampler(cfg: &ExperimentConfig, horizon: f64) -> Result<FbmSampler> {
    FbmSampler::symmetric(
        default_half_width(horizon, cfg.window_safety),
        cfg.space_step,
        cfg.hurst,
    )
}

/// Crossing-time sums at `p₀` for every path and level; also the number of
/// truncated sums.
pub fn theorem2_mc(cfg: &ExperimentConfig, paths: usize) -> Result<(Vec<PVarEstimate>, usize)> {
    let t = cfg.thm_t;
    let horizon = 2.0 * t;
    let steps = horizon_steps(horizon, cfg.thm2_dt, "thm2_dt")?;
    let grid = Grid::time(horizon, steps)?;
    let sampler = fbm_sampler(cfg, horizon)?;
    let p0 = critical_exponent(cfg.hurst);
    let per: Vec<Vec<(PVarEstimate, bool)>> = (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let fbm = sampler.sample(substream(cfg.seed, tag::FBM, i));
            let bm = sample_bm(&grid, substream(cfg.seed, tag::BM, i))?;
            let f = crate::zero_energy::AntiderivativeGrid::from_path(fbm.path)?;
            let (a, _, _) = zero_energy_values(&f, &bm.path)?;
            cfg.thm2_deltas
                .iter()
                .map(|&d| {
                    let s = crossing_sum(&a, &bm, d, t, p0)?;
                    Ok((
                        PVarEstimate {
                            p: p0,
                            value: s.value,
                            kind: PartitionKind::Crossing,
                            mesh_or_delta: d,
                            seed: bm.seed,
                        },
                        s.truncated,
                    ))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let flat: Vec<(PVarEstimate, bool)> = per.into_iter().flatten().collect();
    let truncated = flat.iter().filter(|x| x.1).count();
    if truncated > 0 {
        log::info!("{truncated} crossing sums truncated at horizon {horizon}");
    }
    Ok((flat.into_iter().map(|x| x.0).collect(), truncated))
}

/// p-variation sums of `A` on `[0, t]` along uniform meshes, for every path,
/// exponent and mesh (path-major, then exponent, then mesh).
pub fn theorem1_mc(
    cfg: &ExperimentConfig,
    dt: f64,
    meshes: &[f64],
    ps: &[f64],
    paths: usize,
) -> Result<Vec<PVarEstimate>> {
    if meshes.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::config("meshes", "must be strictly decreasing"));
    }
    let t = cfg.thm_t;
    let steps = horizon_steps(t, dt, "dt")?;
    let grid = Grid::time(t, steps)?;
    let parts: Vec<Partition> = meshes
        .iter()
        .map(|&m| Partition::uniform(&grid, m, t))
        .collect::<Result<_>>()
        .map_err(|e| Error::config("meshes", e.to_string()))?;
    let sampler = fbm_sampler(cfg, t)?;
    let per: Vec<Vec<PVarEstimate>> = (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let fbm = sampler.sample(substream(cfg.seed, tag::FBM, i));
            let bm = sample_bm(&grid, substream(cfg.seed, tag::BM, i))?;
            let f = crate::zero_energy::AntiderivativeGrid::from_path(fbm.path)?;
            let (a, _, _) = zero_energy_values(&f, &bm.path)?;
            let mut out = Vec::with_capacity(ps.len() * parts.len());
            for &p in ps {
                for part in &parts {
                    out.push(p_variation(&a, part, p, bm.seed)?);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

/// Mean over paths of the estimates sharing `(p, mesh_or_delta)`, in first-seen order.
pub fn summarize(estimates: &[PVarEstimate]) -> Vec<(f64, f64, MeanEstimate)> {
    let mut keys: Vec<(f64, f64)> = Vec::new();
    for e in estimates {
        if !keys.contains(&(e.p, e.mesh_or_delta)) {
            keys.push((e.p, e.mesh_or_delta));
        }
    }
    keys.into_iter()
        .map(|(p, m)| {
            let v: Vec<f64> = estimates
                .iter()
                .filter(|e| e.p == p && e.mesh_or_delta == m)
                .map(|e| e.value)
                .collect();
            (p, m, mean_se(&v))
        })
        .collect()
}

/// `seed,p,mesh,value` summary lines with the MC mean as value.
pub fn summary_csv(seed: u64, summary: &[(f64, f64, MeanEstimate)]) -> String {
    let mut s = String::from("seed,p,mesh,value\n");
    for (p, m, e) in summary {
        let _ = writeln!(
            s,
            "{seed},{},{},{}",
            fmt_float(*p),
            fmt_float(*m),
            fmt_float(e.mean)
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremOutput {
    pub c: CEstimate,
    pub crossing: Vec<PVarEstimate>,
    pub truncated: usize,
    pub refinement: Vec<PVarEstimate>,
}

impl TheoremOutput {
    pub fn metadata(&self) -> Vec<(String, String)> {
        vec![
            ("c_estimate".into(), fmt_float(self.c.estimate.mean)),
            ("c_se".into(), fmt_float(self.c.estimate.se)),
            ("c_paths_extended".into(), self.c.extended.to_string()),
            ("crossing_horizon_rule".into(), "2t".into()),
            ("crossing_truncated".into(), self.truncated.to_string()),
        ]
    }
}

/// The constant, the crossing-time statistic and the mesh-refinement statistic.
pub fn fbm_theorem_experiment(cfg: &ExperimentConfig) -> Result<TheoremOutput> {
    cfg.validate()?;
    let c = estimate_c(
        cfg.hurst,
        cfg.c_paths,
        &CParams {
            dt: cfg.c_dt,
            dx: cfg.c_dx,
            master_seed: stream_seed(cfg.seed, 0xC0),
            ..CParams::default()
        },
    )?;
    let (crossing, truncated) = theorem2_mc(cfg, cfg.thm_paths)?;
    let refinement = theorem1_mc(
        cfg,
        cfg.thm1_dt,
        &cfg.thm1_meshes,
        &cfg.thm1_exponents(),
        cfg.thm_paths,
    )?;
    Ok(TheoremOutput {
        c,
        crossing,
        truncated,
        refinement,
    })
}
