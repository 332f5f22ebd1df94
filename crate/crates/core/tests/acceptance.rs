//! Exit criteria. Runs every criterion at its pinned tolerance, prints one
//! PASS/FAIL line each and fails if any criterion fails.
//!
//! `cargo test -p pvar-core --test acceptance`

use std::f64::consts::E;
use std::time::Instant;

use pvar_core::experiments::{
    median_rows_csv, pvar_histogram_experiment, single_increment_experiment, summarize,
    summary_csv, theorem1_mc, theorem2_mc, ExperimentConfig,
};
use pvar_core::median_flow::{
    derivative_f, direct_d_oracle, euler_f, flow_inverse_check, interior_grid, median,
    reversed_driver, DriverKind, DriverSequence, ForwardPath,
};
use pvar_core::path_gen::{fbm_cov_matrix, mixing_bound, translated_cov};
use pvar_core::pvariation::{critical_exponent, estimate_c, estimates_to_csv, CParams};
use pvar_core::rng::{stream_seed, substream, tag};
use pvar_core::stats::{ks_distance, mean_se};
use pvar_core::zero_energy::{rescale_pair, scaling_check};
use pvar_core::{sample_bm, sample_fbm, zero_energy_path, FbmMethod, Grid};
use rayon::prelude::*;

/// Master seed of every acceptance run.
const SEED: u64 = 20261015;

/// Relative tolerance for identities that hold up to rounding.
const EXACT_REL: f64 = 1e-10;
const MIXING_GRID_POINTS: usize = 10_000;
const CROSS_PATHS: usize = 500;
const CROSS_C_PATHS: usize = 4000;
const CROSS_DT: f64 = 1e-4;
const CROSS_REL: f64 = 0.10;
const REFINE_PATHS: usize = 200;
const REFINE_DT: f64 = 1.0 / 262_144.0;
const REFINE_STABLE_REL: f64 = 0.10;
const DERIV_DRIVERS: u64 = 10_000;
const DERIV_DT: f64 = 1e-3;
const DERIV_REL: f64 = 0.05;
const SLOPE_TOL: f64 = 0.08;
const REFERENCE_SLOPES: [(f64, f64); 3] = [(1.0, 0.7455), (4.0 / 3.0, 0.9920), (2.0, 1.4820)];
const KS_PATHS: u64 = 500;
const KS_HORIZON: f64 = 0.25;
const KS_DT: f64 = 1e-4;
const KS_MAX: f64 = 0.05;

type Criterion = (u32, &'static str, fn() -> (bool, String));

struct Report {
    failed: Vec<&'static str>,
}

impl Report {
    fn line(&mut self, id: u32, name: &'static str, pass: bool, detail: String) {
        println!(
            "{} [{id}] {name}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
        if !pass {
            self.failed.push(name);
        }
    }
}

fn info(msg: String) {
    println!("INFO {msg}");
}

fn exact_identities() -> (bool, String) {
    let mut worst = [0.0f64; 6];
    let space = Grid::symmetric(640, 1.0 / 64.0).unwrap();
    let time = Grid::time(1.0, 1024).unwrap();
    for (i, h) in [0.25, 0.5, 0.75].into_iter().enumerate() {
        let i = i as u64;
        let fbm = sample_fbm(&space, h, substream(SEED, tag::FBM, i), FbmMethod::Auto).unwrap();
        let bm = sample_bm(&time, substream(SEED, tag::BM, i)).unwrap();
        let z = zero_energy_path(&fbm, &bm).unwrap();
        for k in 0..z.a_values.len() {
            let lhs = z.a_values[k] + z.martingale_values[k];
            let err = (lhs - z.f_of_b[k]).abs() / (1.0 + z.f_of_b[k].abs());
            worst[0] = worst[0].max(err);
        }
        let p0 = critical_exponent(h);
        let dt = 1.0 / 1024.0;
        for &(ia, ib) in &[(0usize, 1024usize), (64, 320), (500, 1000), (7, 8)] {
            let (a, b) = (ia as f64 * dt, ib as f64 * dt);
            let pair = rescale_pair(&fbm, &bm, (a, b)).unwrap();
            let lhs = (z.a_values[ib] - z.a_values[ia]).abs().powf(p0);
            let rhs = (b - a) * pair.g().unwrap();
            worst[1] = worst[1].max((lhs - rhs).abs() / lhs.max(f64::MIN_POSITIVE));
        }
        let scale = 1.0 + z.max_abs();
        for d in [0.5, 0.25, 2.0] {
            worst[2] = worst[2].max(scaling_check(&fbm, &bm, d).unwrap() / scale);
        }
    }
    for i in 0..20u64 {
        let f = ForwardPath::sample(
            DriverKind::Gaussian,
            1e-3,
            1000,
            substream(SEED, tag::DRIVER, i),
        )
        .unwrap();
        let drv = reversed_driver(&f);
        // Partial sums of the reversed driver against B_{T−u} − B_T.
        let b: Vec<f64> = std::iter::once(0.0)
            .chain(f.increments.iter().scan(0.0, |s, d| {
                *s += d;
                Some(*s)
            }))
            .collect();
        let n = f.len();
        let mut acc = 0.0;
        for (u, e) in drv.increments.iter().enumerate() {
            acc += e;
            let want = b[n - u - 1] - b[n];
            worst[3] = worst[3].max((acc - want).abs() / (1.0 + want.abs()));
        }
        // Far from 0 the two drift flows are exact inverses.
        let inv = flow_inverse_check(&f.increments, f.dt, &[50.0, -50.0]).unwrap();
        worst[3] = worst[3].max(inv / 51.0);

        for x0 in [-1.5, 0.0, 0.3] {
            let whole = euler_f(&drv, x0, n).unwrap().x;
            let head = euler_f(&drv, x0, 400).unwrap().x;
            let tail = DriverSequence::new(drv.increments[400..].to_vec(), drv.dt, 0).unwrap();
            let split = euler_f(&tail, head, n - 400).unwrap().x;
            worst[4] = worst[4].max((whole - split).abs() / (1.0 + whole.abs()));
        }
        let m = median(&drv).unwrap().m;
        let mn = median(&drv.negated()).unwrap().m;
        worst[5] = worst[5].max((m + mn - 1.0).abs());
    }
    let pass = worst.iter().all(|&w| w <= EXACT_REL);
    (
        pass,
        format!(
            "decomposition {:.1e}, increment {:.1e}, scaling {:.1e}, reversed driver {:.1e}, \
             composition {:.1e}, median symmetry {:.1e} (tol {EXACT_REL:e})",
            worst[0], worst[1], worst[2], worst[3], worst[4], worst[5]
        ),
    )
}

/// `(H, y, x, x')` with `max(|x|, |x'|) ≤ |y|/2`.
fn mixing_grid() -> Vec<(f64, f64, f64, f64)> {
    let hs = [0.1, 0.3, 0.7, 0.9];
    let ys = [-2.0, -0.5, 0.75, 3.0];
    let side = 25;
    let mut out = Vec::with_capacity(MIXING_GRID_POINTS);
    for &h in &hs {
        for &y in &ys {
            for i in 0..side {
                for j in 0..side {
                    let x = (i as f64 / (side - 1) as f64 - 0.5) * f64::abs(y);
                    let xp = (j as f64 / (side - 1) as f64 - 0.5) * f64::abs(y);
                    out.push((h, y, x, xp));
                }
            }
        }
    }
    assert_eq!(out.len(), MIXING_GRID_POINTS);
    out
}

fn analytic_properties() -> (bool, String) {
    let grid = mixing_grid();
    let ratio = |constant: &dyn Fn(f64) -> f64| {
        grid.iter()
            .map(|&(h, y, x, xp)| {
                let c = translated_cov(x, xp, y, h).unwrap().abs();
                let b = mixing_bound(x, xp, y, h, constant(h));
                if b == 0.0 {
                    if c <= 1e-15 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    c / b
                }
            })
            .fold(0.0, f64::max)
    };
    let stated = ratio(&|h| 0.5 * (1.0 - 2.0 * h).abs());
    let corrected = ratio(&|h| 2.0 * (1.0 - 2.0 * h).abs());
    let violations = grid
        .iter()
        .filter(|&&(h, y, x, xp)| {
            translated_cov(x, xp, y, h).unwrap().abs()
                > mixing_bound(x, xp, y, h, 0.5 * (1.0 - 2.0 * h).abs()) * (1.0 + 1e-12) + 1e-15
        })
        .count();
    info(format!(
        "mixing bound with constant 2|1-2H|: max |cov|/bound = {corrected:.3} on the same grid"
    ));
    let psd = [0.1, 0.5, 0.9].iter().all(|&h| {
        let pts: Vec<f64> = (1..=40)
            .flat_map(|i| [i as f64 / 10.0, -(i as f64) / 10.0])
            .collect();
        fbm_cov_matrix(&pts, h).unwrap().cholesky().is_some()
    });
    (
        violations == 0 && psd,
        format!(
            "constant ½|1-2H|: {violations}/{MIXING_GRID_POINTS} grid points violate, \
             max |cov|/bound = {stated:.3}; covariance PSD on small grids: {psd}"
        ),
    )
}

fn crossing_constant() -> (bool, String) {
    let cfg = ExperimentConfig {
        seed: SEED,
        hurst: 0.5,
        thm_t: 1.0,
        thm2_dt: CROSS_DT,
        thm2_deltas: vec![0.4, 0.2, 0.1],
        ..ExperimentConfig::default()
    };
    assert!(cfg
        .thm2_deltas
        .iter()
        .all(|d| CROSS_DT <= d * d / 100.0 + 1e-18));
    let (est, truncated) = theorem2_mc(&cfg, CROSS_PATHS).unwrap();
    let summary = summarize(&est);
    let c = estimate_c(
        0.5,
        CROSS_C_PATHS,
        &CParams {
            master_seed: stream_seed(SEED, 0xC0),
            ..CParams::default()
        },
    )
    .unwrap();
    let target = c.estimate.mean * cfg.thm_t;
    let finest = summary.iter().find(|s| s.1 == 0.1).unwrap().2;
    let rel = (finest.mean - target).abs() / target;
    let means: Vec<String> = summary
        .iter()
        .map(|(_, d, e)| format!("δ={d}: {:.4}±{:.4}", e.mean, e.se))
        .collect();
    (
        rel <= CROSS_REL,
        format!(
            "{}; ĉ·t = {:.4}±{:.4}; relative gap at δ=0.1 {:.2}% (tol {}%); truncated sums {truncated}",
            means.join(", "),
            target,
            c.estimate.se,
            100.0 * rel,
            100.0 * CROSS_REL
        ),
    )
}

fn refinement_trichotomy() -> (bool, String) {
    let cfg = ExperimentConfig {
        seed: SEED,
        hurst: 0.5,
        ..ExperimentConfig::default()
    };
    let meshes: Vec<f64> = (4..=10).map(|k| 2f64.powi(-k)).collect();
    let p0 = critical_exponent(0.5);
    let est = theorem1_mc(&cfg, REFINE_DT, &meshes, &[1.1, p0, 1.7], REFINE_PATHS).unwrap();
    let summary = summarize(&est);
    let series = |p: f64| -> Vec<f64> {
        summary
            .iter()
            .filter(|s| s.0 == p)
            .map(|s| s.2.mean)
            .collect()
    };
    let (low, crit, high) = (series(1.1), series(p0), series(1.7));
    let max_step = crit
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / w[0])
        .fold(0.0, f64::max);
    let stable = max_step <= REFINE_STABLE_REL;
    let increasing = low.windows(2).all(|w| w[1] > w[0]);
    let decreasing = high.windows(2).all(|w| w[1] < w[0]);
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.4}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    (
        stable && increasing && decreasing,
        format!(
            "p=4/3 [{}] max step change {:.2}% (tol {}%); p=1.1 [{}] increasing {increasing}; \
             p=1.7 [{}] decreasing {decreasing}",
            fmt(&crit),
            100.0 * max_step,
            100.0 * REFINE_STABLE_REL,
            fmt(&low),
            fmt(&high)
        ),
    )
}

fn derivative_oracle() -> (bool, String) {
    let steps = (1.0 / DERIV_DT).round() as usize;
    let sq: Vec<f64> = (0..DERIV_DRIVERS)
        .into_par_iter()
        .map(|i| {
            let f = ForwardPath::sample(
                DriverKind::Rademacher,
                DERIV_DT,
                steps,
                substream(SEED, tag::DRIVER, i),
            )
            .unwrap();
            derivative_f(&reversed_driver(&f), 0.0, 1.0)
                .unwrap()
                .powi(2)
        })
        .collect();
    let est = mean_se(&sq);
    let rel = (est.mean - E).abs() / E;
    let bound = 1.5f64.exp();
    // Law of the discrete derivative: E f² = cosh(2√Δt)^n / e.
    let discrete = (2.0 * DERIV_DT.sqrt()).cosh().powi(steps as i32) / E;
    info(format!(
        "derivative oracle: discrete-walk expectation {discrete:.4}; estimate is {:.2} SE from it; \
         relative SE of the mean {:.1}%",
        (est.mean - discrete) / est.se,
        100.0 * est.se / est.mean
    ));
    (
        rel <= DERIV_REL && est.mean < bound,
        format!(
            "E f² = {:.4}±{:.4} over {DERIV_DRIVERS} drivers; e = {E:.5}; relative gap {:.2}% \
             (tol {}%); below e^1.5 = {bound:.4}: {}",
            est.mean,
            est.se,
            100.0 * rel,
            100.0 * DERIV_REL,
            est.mean < bound
        ),
    )
}

fn increment_slopes() -> (bool, String) {
    let cfg = ExperimentConfig {
        seed: SEED,
        ..ExperimentConfig::default()
    };
    assert_eq!(cfg.grid_step, 1e-5);
    assert_eq!(cfg.delta_tau, vec![1e-2, 1e-3, 1e-4, 1e-5]);
    assert_eq!((cfg.realizations, cfg.inner_n), (200, 1000));
    let out = single_increment_experiment(&cfg).unwrap();
    let slopes: Vec<(f64, f64)> = out.fits.iter().map(|(p, f)| (*p, f.slope)).collect();
    let mut pass = slopes.len() == cfg.p.len();
    let mut parts = Vec::new();
    for &(p, want) in &REFERENCE_SLOPES {
        let got = out.fit_for(p).map(|f| f.slope).unwrap_or(f64::NAN);
        let ok = (got - want).abs() <= SLOPE_TOL;
        pass &= ok;
        parts.push(format!(
            "p={p:.3}: {got:.4} vs {want} ({})",
            if ok { "ok" } else { "off" }
        ));
    }
    let increasing = slopes.windows(2).all(|w| w[1].1 > w[0].1);
    pass &= increasing;
    let all: Vec<String> = slopes
        .iter()
        .map(|(p, s)| format!("{p:.3}→{s:.4}"))
        .collect();
    (
        pass,
        format!(
            "{} (tol ±{SLOPE_TOL}); slopes [{}] strictly increasing {increasing}",
            parts.join(", "),
            all.join(", ")
        ),
    )
}

fn histogram_trends() -> (bool, String) {
    let cfg = ExperimentConfig {
        seed: SEED,
        ..ExperimentConfig::default()
    };
    let out = pvar_histogram_experiment(&cfg).unwrap();
    let cell = |p: f64, m: f64| out.cell(p, m).unwrap();
    let (coarse, fine) = (1e-2, 1e-4);
    let p0 = 4.0 / 3.0;
    let iqr_shrinks = cell(p0, fine).iqr < cell(p0, coarse).iqr;
    let med = |p: f64| -> Vec<f64> { cfg.hist_meshes.iter().map(|&m| cell(p, m).median).collect() };
    let (m12, m15) = (med(1.2), med(1.5));
    let up = m12.windows(2).all(|w| w[1] > w[0]);
    let down = m15.windows(2).all(|w| w[1] < w[0]);
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.5}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    (
        iqr_shrinks && up && down,
        format!(
            "p=4/3 IQR {:.5} → {:.5}; p=1.2 medians [{}] increasing {up}; \
             p=1.5 medians [{}] decreasing {down}",
            cell(p0, coarse).iqr,
            cell(p0, fine).iqr,
            fmt(&m12),
            fmt(&m15)
        ),
    )
}

fn cross_scheme() -> (bool, String) {
    let steps = (KS_HORIZON / KS_DT).round() as usize;
    let grid = interior_grid(999);
    let oracle_master = stream_seed(SEED, 0x0AC1E);
    let draw = |master: u64, i: u64| {
        ForwardPath::sample(
            DriverKind::Rademacher,
            KS_DT,
            steps,
            substream(master, tag::DRIVER, i),
        )
        .unwrap()
    };
    let pairs: Vec<(f64, f64, f64)> = (0..KS_PATHS)
        .into_par_iter()
        .map(|i| {
            let f = draw(SEED, i);
            let flow = median(&reversed_driver(&f)).unwrap().m;
            let matched = direct_d_oracle(&f.increments, &grid).unwrap();
            let indep = direct_d_oracle(&draw(oracle_master, i).increments, &grid).unwrap();
            (flow, matched, indep)
        })
        .collect();
    let flow: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let matched: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let indep: Vec<f64> = pairs.iter().map(|p| p.2).collect();
    let mean_gap = pairs.iter().map(|p| (p.0 - p.1).abs()).sum::<f64>() / KS_PATHS as f64;
    info(format!(
        "median schemes on shared drivers: KS {:.4}, mean |m_flow − m_oracle| {mean_gap:.2e}",
        ks_distance(&flow, &matched)
    ));
    let ks = ks_distance(&flow, &indep);
    (
        ks <= KS_MAX,
        format!("KS distance {ks:.4} over {KS_PATHS}+{KS_PATHS} medians with independent seeds (tol {KS_MAX})"),
    )
}

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        seed: SEED,
        grid_step: 1e-4,
        delta_tau: vec![1e-2, 1e-3],
        realizations: 12,
        inner_n: 40,
        hist_paths: 16,
        hist_meshes: vec![1e-2, 1e-3],
        thm_paths: 8,
        c_paths: 40,
        thm1_dt: 2f64.powi(-14),
        thm1_meshes: (4..=8).map(|k| 2f64.powi(-k)).collect(),
        ..ExperimentConfig::default()
    }
}

fn all_outputs(cfg: &ExperimentConfig) -> String {
    let inc = single_increment_experiment(cfg).unwrap();
    let hist = pvar_histogram_experiment(cfg).unwrap();
    let (cross, _) = theorem2_mc(cfg, cfg.thm_paths).unwrap();
    let refine = theorem1_mc(
        cfg,
        cfg.thm1_dt,
        &cfg.thm1_meshes,
        &cfg.thm1_exponents(),
        cfg.thm_paths,
    )
    .unwrap();
    let c = estimate_c(
        cfg.hurst,
        cfg.c_paths,
        &CParams {
            master_seed: cfg.seed,
            ..CParams::default()
        },
    )
    .unwrap();
    [
        median_rows_csv(&inc.raw),
        inc.increments_csv(),
        inc.fits_csv(),
        hist.csv(),
        estimates_to_csv(&cross),
        estimates_to_csv(&refine),
        summary_csv(cfg.seed, &summarize(&refine)),
        format!("{:?}\n", c),
    ]
    .concat()
}

fn determinism() -> (bool, String) {
    let cfg = small_config();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| all_outputs(&cfg))
    };
    let a = run(1);
    let b = run(1);
    let c = run(3);
    let pass = a == b && a == c;
    (
        pass,
        format!(
            "{} bytes of CSV; rerun identical {}; 1 vs 3 threads identical {}",
            a.len(),
            a == b,
            a == c
        ),
    )
}

fn main() {
    let mut report = Report { failed: Vec::new() };
    let criteria: [Criterion; 9] = [
        (1, "exact identities", exact_identities),
        (2, "analytic covariance properties", analytic_properties),
        (
            3,
            "crossing-time sum against the exit constant",
            crossing_constant,
        ),
        (4, "mesh-refinement trichotomy", refinement_trichotomy),
        (5, "flow derivative second moment", derivative_oracle),
        (6, "single-increment regression slopes", increment_slopes),
        (
            7,
            "conditional p-variation histogram trends",
            histogram_trends,
        ),
        (8, "median cross-scheme agreement", cross_scheme),
        (
            9,
            "determinism across reruns and thread counts",
            determinism,
        ),
    ];
    for (id, name, run) in criteria {
        let t0 = Instant::now();
        let (pass, detail) = run();
        report.line(
            id,
            name,
            pass,
            format!("{detail} [{:.1}s]", t0.elapsed().as_secs_f64()),
        );
    }
    if !report.failed.is_empty() {
        eprintln!(
            "{} acceptance criteria failed: {}",
            report.failed.len(),
            report.failed.join(", ")
        );
        std::process::exit(1);
    }
}
