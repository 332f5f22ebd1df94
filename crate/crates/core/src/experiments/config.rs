//! Flat `key = value` experiment configuration.

use std::fmt::Write as _;

use crate::csv::fmt_float;
use crate::error::{Error, Result};
use crate::median_flow::{DriverKind, InnerEnsemble};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub hurst: f64,
    pub horizon: f64,
    pub grid_step: f64,
    pub delta_tau: Vec<f64>,
    pub p: Vec<f64>,
    pub realizations: usize,
    pub inner_n: usize,
    pub inner_steps: usize,
    pub antithetic: bool,
    pub average_raw_f: bool,
    pub driver: DriverKind,
    pub weighted_fit: bool,

    pub hist_meshes: Vec<f64>,
    pub hist_p: Vec<f64>,
    pub hist_paths: usize,
    pub hist_inner_n: usize,
    pub hist_inner_steps: usize,

    pub space_step: f64,
    pub window_safety: f64,
    pub thm_t: f64,
    pub thm_paths: usize,
    pub thm1_dt: f64,
    pub thm1_meshes: Vec<f64>,
    /// Empty means `p₀ − 0.2, p₀, p₀ + 0.3`.
    pub thm1_p: Vec<f64>,
    pub thm2_dt: f64,
    pub thm2_deltas: Vec<f64>,
    pub c_paths: usize,
    pub c_dt: f64,
    pub c_dx: f64,

    pub pvar_dt: f64,
    pub pvar_meshes: Vec<f64>,
    pub pvar_p: f64,
    pub pvar_paths: usize,

    pub oracle_points: usize,
    pub out_dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            hurst: 0.5,
            horizon: 1.0,
            grid_step: 1e-5,
            delta_tau: vec![1e-2, 1e-3, 1e-4, 1e-5],
            p: vec![1.0, 1.2, 4.0 / 3.0, 1.5, 2.0],
            realizations: 200,
            inner_n: 1000,
            inner_steps: 100,
            antithetic: true,
            average_raw_f: false,
            driver: DriverKind::Rademacher,
            weighted_fit: false,
            hist_meshes: vec![1e-2, 1e-3, 1e-4],
            hist_p: vec![1.2, 4.0 / 3.0, 1.5],
            hist_paths: 500,
            hist_inner_n: 2,
            hist_inner_steps: 1,
            space_step: 1e-3,
            window_safety: 0.1,
            thm_t: 1.0,
            thm_paths: 200,
            thm1_dt: 2f64.powi(-18),
            thm1_meshes: (4..=10).map(|k| 2f64.powi(-k)).collect(),
            thm1_p: Vec::new(),
            thm2_dt: 1e-4,
            thm2_deltas: vec![0.4, 0.2, 0.1],
            c_paths: 4000,
            c_dt: 1e-4,
            c_dx: 1e-3,
            pvar_dt: 1e-4,
            pvar_meshes: vec![2e-2, 1e-2, 5e-3],
            pvar_p: 4.0 / 3.0,
            pvar_paths: 100,
            oracle_points: 999,
            out_dir: "out".into(),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| Error::config(key, format!("cannot parse `{v}`: {e}")))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| num::<f64>(key, x.trim())).collect()
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::config(
            key,
            format!("expected true or false, got `{v}`"),
        )),
    }
}

fn join(xs: &[f64]) -> String {
    xs.iter()
        .map(|&x| fmt_float(x))
        .collect::<Vec<_>>()
        .join(",")
}

impl ExperimentConfig {
    /// Every recognised key, in dump order.
    pub const KEYS: &'static [&'static str] = &[
        "seed",
        "H",
        "T",
        "grid_step",
        "delta_tau",
        "p",
        "realizations",
        "inner_n",
        "inner_steps",
        "antithetic",
        "average_raw_F",
        "driver",
        "weighted_fit",
        "hist_meshes",
        "hist_p",
        "hist_paths",
        "hist_inner_n",
        "hist_inner_steps",
        "space_step",
        "window_safety",
        "thm_t",
        "thm_paths",
        "thm1_dt",
        "thm1_meshes",
        "thm1_p",
        "thm2_dt",
        "thm2_deltas",
        "c_paths",
        "c_dt",
        "c_dx",
        "pvar_dt",
        "pvar_meshes",
        "pvar_p",
        "pvar_paths",
        "oracle_points",
        "out_dir",
    ];

    /// Parses a config file on top of the defaults and validates the result.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::config(line, format!("line {}: expected `key = value`", no + 1))
            })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "seed" => self.seed = num(key, v)?,
            "H" => self.hurst = num(key, v)?,
            "T" => self.horizon = num(key, v)?,
            "grid_step" => self.grid_step = num(key, v)?,
            "delta_tau" => self.delta_tau = list(key, v)?,
            "p" => self.p = list(key, v)?,
            "realizations" => self.realizations = num(key, v)?,
            "inner_n" => self.inner_n = num(key, v)?,
            "inner_steps" => self.inner_steps = num(key, v)?,
            "antithetic" => self.antithetic = flag(key, v)?,
            "average_raw_F" => self.average_raw_f = flag(key, v)?,
            "driver" => self.driver = v.parse().map_err(|e: String| Error::config(key, e))?,
            "weighted_fit" => self.weighted_fit = flag(key, v)?,
            "hist_meshes" => self.hist_meshes = list(key, v)?,
            "hist_p" => self.hist_p = list(key, v)?,
            "hist_paths" => self.hist_paths = num(key, v)?,
            "hist_inner_n" => self.hist_inner_n = num(key, v)?,
            "hist_inner_steps" => self.hist_inner_steps = num(key, v)?,
            "space_step" => self.space_step = num(key, v)?,
            "window_safety" => self.window_safety = num(key, v)?,
            "thm_t" => self.thm_t = num(key, v)?,
            "thm_paths" => self.thm_paths = num(key, v)?,
            "thm1_dt" => self.thm1_dt = num(key, v)?,
            "thm1_meshes" => self.thm1_meshes = list(key, v)?,
            "thm1_p" => self.thm1_p = list(key, v)?,
            "thm2_dt" => self.thm2_dt = num(key, v)?,
            "thm2_deltas" => self.thm2_deltas = list(key, v)?,
            "c_paths" => self.c_paths = num(key, v)?,
            "c_dt" => self.c_dt = num(key, v)?,
            "c_dx" => self.c_dx = num(key, v)?,
            "pvar_dt" => self.pvar_dt = num(key, v)?,
            "pvar_meshes" => self.pvar_meshes = list(key, v)?,
            "pvar_p" => self.pvar_p = num(key, v)?,
            "pvar_paths" => self.pvar_paths = num(key, v)?,
            "oracle_points" => self.oracle_points = num(key, v)?,
            "out_dir" => self.out_dir = v.to_string(),
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "seed" => self.seed.to_string(),
            "H" => fmt_float(self.hurst),
            "T" => fmt_float(self.horizon),
            "grid_step" => fmt_float(self.grid_step),
            "delta_tau" => join(&self.delta_tau),
            "p" => join(&self.p),
            "realizations" => self.realizations.to_string(),
            "inner_n" => self.inner_n.to_string(),
            "inner_steps" => self.inner_steps.to_string(),
            "antithetic" => self.antithetic.to_string(),
            "average_raw_F" => self.average_raw_f.to_string(),
            "driver" => format!("{:?}", self.driver).to_lowercase(),
            "weighted_fit" => self.weighted_fit.to_string(),
            "hist_meshes" => join(&self.hist_meshes),
            "hist_p" => join(&self.hist_p),
            "hist_paths" => self.hist_paths.to_string(),
            "hist_inner_n" => self.hist_inner_n.to_string(),
            "hist_inner_steps" => self.hist_inner_steps.to_string(),
            "space_step" => fmt_float(self.space_step),
            "window_safety" => fmt_float(self.window_safety),
            "thm_t" => fmt_float(self.thm_t),
            "thm_paths" => self.thm_paths.to_string(),
            "thm1_dt" => fmt_float(self.thm1_dt),
            "thm1_meshes" => join(&self.thm1_meshes),
            "thm1_p" => join(&self.thm1_p),
            "thm2_dt" => fmt_float(self.thm2_dt),
            "thm2_deltas" => join(&self.thm2_deltas),
            "c_paths" => self.c_paths.to_string(),
            "c_dt" => fmt_float(self.c_dt),
            "c_dx" => fmt_float(self.c_dx),
            "pvar_dt" => fmt_float(self.pvar_dt),
            "pvar_meshes" => join(&self.pvar_meshes),
            "pvar_p" => fmt_float(self.pvar_p),
            "pvar_paths" => self.pvar_paths.to_string(),
            "oracle_points" => self.oracle_points.to_string(),
            "out_dir" => self.out_dir.clone(),
            _ => return None,
        })
    }

    /// `key = value` dump that parses back to the same config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for k in Self::KEYS {
            let _ = writeln!(s, "{k} = {}", self.get(k).unwrap());
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |key: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::config(key, format!("must be positive, got {x}")))
            }
        };
        let count = |key: &str, n: usize| {
            if n >= 1 {
                Ok(())
            } else {
                Err(Error::config(key, "must be at least 1"))
            }
        };
        let plist = |key: &str, xs: &[f64], allow_empty: bool| {
            if xs.is_empty() && !allow_empty {
                return Err(Error::config(key, "must not be empty"));
            }
            if let Some(x) = xs.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
                return Err(Error::config(
                    key,
                    format!("values must be positive, got {x}"),
                ));
            }
            let mut s = xs.to_vec();
            s.sort_by(f64::total_cmp);
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::config(key, "values must be distinct"));
            }
            Ok(())
        };
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(Error::config(
                "H",
                format!("must lie in (0, 1), got {}", self.hurst),
            ));
        }
        pos("T", self.horizon)?;
        for (k, x) in [
            ("grid_step", self.grid_step),
            ("space_step", self.space_step),
            ("thm_t", self.thm_t),
            ("thm1_dt", self.thm1_dt),
            ("thm2_dt", self.thm2_dt),
            ("c_dt", self.c_dt),
            ("c_dx", self.c_dx),
            ("pvar_dt", self.pvar_dt),
            ("pvar_p", self.pvar_p),
        ] {
            pos(k, x)?;
        }
        for (k, x) in [
            ("grid_step", self.grid_step),
            ("thm1_dt", self.thm1_dt),
            ("thm2_dt", self.thm2_dt),
            ("pvar_dt", self.pvar_dt),
        ] {
            if x >= 1.0 {
                return Err(Error::config(k, format!("must be below 1, got {x}")));
            }
        }
        if !(self.window_safety >= 0.0) {
            return Err(Error::config("window_safety", "must be non-negative"));
        }
        for (k, n) in [
            ("realizations", self.realizations),
            ("inner_steps", self.inner_steps),
            ("hist_paths", self.hist_paths),
            ("hist_inner_steps", self.hist_inner_steps),
            ("thm_paths", self.thm_paths),
            ("c_paths", self.c_paths),
            ("pvar_paths", self.pvar_paths),
            ("oracle_points", self.oracle_points),
        ] {
            count(k, n)?;
        }
        for (k, n) in [
            ("inner_n", self.inner_n),
            ("hist_inner_n", self.hist_inner_n),
        ] {
            if n < 2 {
                return Err(Error::config(k, format!("must be at least 2, got {n}")));
            }
        }
        plist("delta_tau", &self.delta_tau, false)?;
        plist("p", &self.p, false)?;
        plist("hist_meshes", &self.hist_meshes, false)?;
        plist("hist_p", &self.hist_p, false)?;
        plist("thm1_meshes", &self.thm1_meshes, false)?;
        plist("thm1_p", &self.thm1_p, true)?;
        plist("thm2_deltas", &self.thm2_deltas, false)?;
        plist("pvar_meshes", &self.pvar_meshes, false)?;
        if self.hist_meshes.iter().any(|&m| m >= 1.0) {
            return Err(Error::config("hist_meshes", "values must be below 1"));
        }
        Ok(())
    }

    pub fn inner(&self) -> InnerEnsemble {
        InnerEnsemble {
            n: self.inner_n,
            steps: self.inner_steps,
            antithetic: self.antithetic,
            average_raw_f: self.average_raw_f,
            kind: self.driver,
        }
    }

    pub fn hist_inner(&self) -> InnerEnsemble {
        InnerEnsemble {
            n: self.hist_inner_n,
            steps: self.hist_inner_steps,
            antithetic: true,
            average_raw_f: self.average_raw_f,
            kind: self.driver,
        }
    }

    /// Exponents for the mesh-refinement statistic.
    pub fn thm1_exponents(&self) -> Vec<f64> {
        if self.thm1_p.is_empty() {
            let p0 = crate::pvariation::critical_exponent(self.hurst);
            vec![p0 - 0.2, p0, p0 + 0.3]
        } else {
            self.thm1_p.clone()
        }
    }
}
