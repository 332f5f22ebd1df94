use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use pvar_core::experiments::{
    fbm_theorem_experiment, fit_loglog, median_experiment, median_rows_csv, metadata_text,
    pvar_histogram_experiment, single_increment_experiment, summarize, summary_csv, theorem1_mc,
    ExperimentConfig, RegressionFit,
};
use pvar_core::path_gen::{default_half_width, FbmSampler};
use pvar_core::pvariation::estimates_to_csv;
use pvar_core::rng::{substream, tag};
use pvar_core::{sample_bm, zero_energy_path, Error, Grid};

mod fit_input;
mod output;

use output::{sibling, write_atomic, write_csv};

#[derive(Parser)]
#[command(
    name = "pvar",
    version,
    about = "Zero-energy p-variation and median-flow experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    /// Output CSV; defaults to a file under `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any config key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a fractional Brownian field (or, with --brownian, a Brownian path).
    GenFbm {
        #[command(flatten)]
        common: Common,
        #[arg(long = "H")]
        hurst: Option<String>,
        #[arg(long = "T")]
        horizon: Option<String>,
        #[arg(long)]
        space_step: Option<String>,
        #[arg(long)]
        grid_step: Option<String>,
        #[arg(long)]
        brownian: bool,
    },
    /// Zero-energy part, martingale part and F(B) along one path.
    ZeroEnergy {
        #[command(flatten)]
        common: Common,
        #[arg(long = "H")]
        hurst: Option<String>,
        #[arg(long = "T")]
        horizon: Option<String>,
        #[arg(long)]
        grid_step: Option<String>,
        #[arg(long)]
        space_step: Option<String>,
    },
    /// p-variation of the zero-energy part along uniform meshes.
    Pvar {
        #[command(flatten)]
        common: Common,
        #[arg(long = "H")]
        hurst: Option<String>,
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        meshes: Option<String>,
        #[arg(long)]
        paths: Option<String>,
        #[arg(long)]
        dt: Option<String>,
        #[arg(long)]
        t: Option<String>,
    },
    /// Crossing-time sums, the exit constant and the mesh-refinement sums.
    Crossing {
        #[command(flatten)]
        common: Common,
        #[arg(long = "H")]
        hurst: Option<String>,
        #[arg(long)]
        t: Option<String>,
        #[arg(long)]
        paths: Option<String>,
        #[arg(long)]
        deltas: Option<String>,
        #[arg(long)]
        c_paths: Option<String>,
    },
    /// Medians and conditional expectations per realization.
    Median {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        median: MedianFlags,
    },
    /// Single-increment means, confidence intervals and log-log fits.
    Increments {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        median: MedianFlags,
        #[arg(long)]
        p: Option<String>,
    },
    /// Conditional p-variation values for histograms.
    Histogram {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        meshes: Option<String>,
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        paths: Option<String>,
    },
    /// Log-log least-squares fits of `x,y` points or of an increments table.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Label for plain `x,y` input.
        #[arg(long)]
        p: Option<f64>,
        /// Weight increments rows by inverse CI width.
        #[arg(long)]
        weighted: bool,
    },
}

#[derive(Args)]
struct MedianFlags {
    #[arg(long = "T")]
    horizon: Option<String>,
    #[arg(long)]
    delta_tau: Option<String>,
    #[arg(long)]
    realizations: Option<String>,
    #[arg(long)]
    inner_n: Option<String>,
    #[arg(long)]
    driver: Option<String>,
}

impl MedianFlags {
    fn overrides(&self) -> Vec<(&'static str, Option<&String>)> {
        vec![
            ("T", self.horizon.as_ref()),
            ("delta_tau", self.delta_tau.as_ref()),
            ("realizations", self.realizations.as_ref()),
            ("inner_n", self.inner_n.as_ref()),
            ("driver", self.driver.as_ref()),
        ]
    }
}

fn config_error(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        reason: reason.into(),
    }
}

/// Defaults, then the config file, then `--seed`, subcommand flags and `--set`.
fn resolve(common: &Common, flags: &[(&'static str, Option<&String>)]) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error("config", format!("{}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    if let Some(s) = &common.seed {
        cfg.set("seed", s)?;
    }
    for (key, v) in flags {
        if let Some(v) = v {
            cfg.set(key, v)?;
        }
    }
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| config_error(kv, "expected `key=value`"))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_path(common: &Common, cfg: &ExperimentConfig, name: &str) -> PathBuf {
    common
        .out
        .clone()
        .unwrap_or_else(|| Path::new(&cfg.out_dir).join(name))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenFbm {
            common,
            hurst,
            horizon,
            space_step,
            grid_step,
            brownian,
        } => {
            let cfg = resolve(
                &common,
                &[
                    ("H", hurst.as_ref()),
                    ("T", horizon.as_ref()),
                    ("space_step", space_step.as_ref()),
                    ("grid_step", grid_step.as_ref()),
                ],
            )?;
            if brownian {
                let steps = (cfg.horizon / cfg.grid_step).round() as usize;
                let grid = Grid::time(cfg.horizon, steps)?;
                let bm = sample_bm(&grid, substream(cfg.seed, tag::BM, 0))?;
                let path = out_path(&common, &cfg, "bm.csv");
                write_csv(&path, &bm.to_csv(), &metadata_text(&cfg, &[]))?;
            } else {
                let half = default_half_width(cfg.horizon, cfg.window_safety);
                let sampler = FbmSampler::symmetric(half, cfg.space_step, cfg.hurst)?;
                let fbm = sampler.sample(substream(cfg.seed, tag::FBM, 0));
                let path = out_path(&common, &cfg, "fbm.csv");
                let extra = [("half_width".to_string(), half.to_string())];
                write_csv(&path, &fbm.to_csv(), &metadata_text(&cfg, &extra))?;
            }
        }
        Command::ZeroEnergy {
            common,
            hurst,
            horizon,
            grid_step,
            space_step,
        } => {
            let cfg = resolve(
                &common,
                &[
                    ("H", hurst.as_ref()),
                    ("T", horizon.as_ref()),
                    ("grid_step", grid_step.as_ref()),
                    ("space_step", space_step.as_ref()),
                ],
            )?;
            let half = default_half_width(cfg.horizon, cfg.window_safety);
            let fbm = FbmSampler::symmetric(half, cfg.space_step, cfg.hurst)?.sample(substream(
                cfg.seed,
                tag::FBM,
                0,
            ));
            let steps = (cfg.horizon / cfg.grid_step).round() as usize;
            let bm = sample_bm(
                &Grid::time(cfg.horizon, steps)?,
                substream(cfg.seed, tag::BM, 0),
            )?;
            let z = zero_energy_path(&fbm, &bm)?;
            let path = out_path(&common, &cfg, "zero_energy.csv");
            write_csv(&path, &z.to_csv(), &metadata_text(&cfg, &[]))?;
        }
        Command::Pvar {
            common,
            hurst,
            p,
            meshes,
            paths,
            dt,
            t,
        } => {
            let cfg = resolve(
                &common,
                &[
                    ("H", hurst.as_ref()),
                    ("pvar_p", p.as_ref()),
                    ("pvar_meshes", meshes.as_ref()),
                    ("pvar_paths", paths.as_ref()),
                    ("pvar_dt", dt.as_ref()),
                    ("thm_t", t.as_ref()),
                ],
            )?;
            let est = theorem1_mc(
                &cfg,
                cfg.pvar_dt,
                &cfg.pvar_meshes,
                &[cfg.pvar_p],
                cfg.pvar_paths,
            )?;
            let path = out_path(&common, &cfg, "pvar.csv");
            write_csv(&path, &estimates_to_csv(&est), &metadata_text(&cfg, &[]))?;
            print!("{}", summary_csv(cfg.seed, &summarize(&est)));
        }
        Command::Crossing {
            common,
            hurst,
            t,
            paths,
            deltas,
            c_paths,
        } => {
            let cfg = resolve(
                &common,
                &[
                    ("H", hurst.as_ref()),
                    ("thm_t", t.as_ref()),
                    ("thm_paths", paths.as_ref()),
                    ("thm2_deltas", deltas.as_ref()),
                    ("c_paths", c_paths.as_ref()),
                ],
            )?;
            let out = fbm_theorem_experiment(&cfg)?;
            let meta = metadata_text(&cfg, &out.metadata());
            let path = out_path(&common, &cfg, "crossing.csv");
            write_csv(&path, &estimates_to_csv(&out.crossing), &meta)?;
            write_csv(
                &sibling(&path, "refinement"),
                &estimates_to_csv(&out.refinement),
                &meta,
            )?;
            println!(
                "c = {} ± {} (t = {})",
                out.c.estimate.mean, out.c.estimate.se, cfg.thm_t
            );
            print!("{}", summary_csv(cfg.seed, &summarize(&out.crossing)));
        }
        Command::Median { common, median } => {
            let cfg = resolve(&common, &median.overrides())?;
            let rows = median_experiment(&cfg)?;
            let path = out_path(&common, &cfg, "median.csv");
            write_csv(&path, &median_rows_csv(&rows), &metadata_text(&cfg, &[]))?;
        }
        Command::Increments { common, median, p } => {
            let mut flags = median.overrides();
            flags.push(("p", p.as_ref()));
            let cfg = resolve(&common, &flags)?;
            let out = single_increment_experiment(&cfg)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            let extra: Vec<(String, String)> = out
                .warnings
                .iter()
                .enumerate()
                .map(|(i, w)| (format!("warning_{i}"), w.clone()))
                .collect();
            let meta = metadata_text(&cfg, &extra);
            let path = out_path(&common, &cfg, "increments.csv");
            write_csv(&path, &out.increments_csv(), &meta)?;
            write_csv(&sibling(&path, "fits"), &out.fits_csv(), &meta)?;
            write_csv(&sibling(&path, "raw"), &median_rows_csv(&out.raw), &meta)?;
        }
        Command::Histogram {
            common,
            meshes,
            p,
            paths,
        } => {
            let cfg = resolve(
                &common,
                &[
                    ("hist_meshes", meshes.as_ref()),
                    ("hist_p", p.as_ref()),
                    ("hist_paths", paths.as_ref()),
                ],
            )?;
            let out = pvar_histogram_experiment(&cfg)?;
            let path = out_path(&common, &cfg, "histogram.csv");
            write_csv(&path, &out.csv(), &metadata_text(&cfg, &out.metadata()))?;
        }
        Command::Fit {
            input,
            out,
            p,
            weighted,
        } => {
            let text = std::fs::read_to_string(&input)
                .map_err(|e| config_error("input", format!("{}: {e}", input.display())))?;
            let sets = fit_input::parse(&text, p.unwrap_or(f64::NAN))?;
            let mut csv = format!("{}\n", RegressionFit::CSV_HEADER);
            for set in &sets {
                let w = if weighted {
                    set.weights.as_deref()
                } else {
                    None
                };
                let fit = fit_loglog(&set.points, w)?;
                csv.push_str(&fit.csv_row(set.p));
                csv.push('\n');
            }
            match out {
                Some(path) => write_atomic(&path, &csv)?,
                None => print!("{csv}"),
            }
        }
    }
    Ok(())
}

/// 2 for configuration or parameter errors, 3 for numerical failures.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(e) if e.is_numerical() => 3,
        Some(_) => 2,
        None => 1,
    }
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("PVAR_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| config_error("PVAR_THREADS", format!("`{v}` is not a thread count")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("building the worker pool")?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match init_threads().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
