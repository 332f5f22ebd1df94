//! The zero-energy part `A_t = F(B_t) − ∫_0^t F'(B_s) dB_s` of `F(B)`, where
//! `F` is the antiderivative of a sampled fBM.
//!
//! `B^H` is read as the piecewise-linear interpolant of its samples and `F`
//! as the exact integral of that interpolant, so `F` is C¹ with `F' = B^H`.
//! Under this convention the decomposition `F(B) = A + M` and the scaling
//! identities hold to rounding error on the discrete paths.

use std::fmt::Write as _;

use crate::csv::fmt_float;
use crate::error::{Error, Result};
use crate::grid::{Grid, SampledPath};
use crate::path_gen::{BmPath, FbmPath};

/// `F(x) = ∫_0^x B^H` tabulated at the knots of the source grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AntiderivativeGrid {
    source: SampledPath,
    f_values: Vec<f64>,
}

impl AntiderivativeGrid {
    /// Integrates any piecewise-linear path whose grid contains 0.
    pub fn from_path(source: SampledPath) -> Result<Self> {
        let zero = source
            .grid
            .index_of(0.0)
            .ok_or_else(|| Error::InvalidGrid("antiderivative grid must contain 0".into()))?;
        let p = source.grid.points();
        let v = &source.values;
        let mut f = vec![0.0; p.len()];
        for j in zero + 1..p.len() {
            f[j] = f[j - 1] + 0.5 * (v[j - 1] + v[j]) * (p[j] - p[j - 1]);
        }
        for j in (0..zero).rev() {
            f[j] = f[j + 1] - 0.5 * (v[j] + v[j + 1]) * (p[j + 1] - p[j]);
        }
        Ok(Self {
            source,
            f_values: f,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.source.grid
    }

    pub fn source(&self) -> &SampledPath {
        &self.source
    }

    /// `F` at the knots.
    pub fn values(&self) -> &[f64] {
        &self.f_values
    }

    pub fn eval_f(&self, x: f64) -> Result<f64> {
        self.source.grid.locate(x)?;
        Ok(self.eval_both_unchecked(x).0)
    }

    pub fn eval_fprime(&self, x: f64) -> Result<f64> {
        self.source.eval(x)
    }

    /// `(F(x), F'(x))` without the domain check.
    #[inline]
    pub(crate) fn eval_both_unchecked(&self, x: f64) -> (f64, f64) {
        let i = self.source.grid.locate_unchecked(x);
        let p = self.source.grid.points();
        let v = &self.source.values;
        let d = x - p[i];
        if d == 0.0 {
            return (self.f_values[i], v[i]);
        }
        let slope = (v[i + 1] - v[i]) / (p[i + 1] - p[i]);
        (
            self.f_values[i] + d * (v[i] + 0.5 * slope * d),
            v[i] + slope * d,
        )
    }

    /// Errors unless every value of `bm` lies inside the tabulated domain.
    pub fn check_covers(&self, bm: &SampledPath) -> Result<()> {
        let (lo, hi) = bm.range();
        let g = &self.source.grid;
        for x in [lo, hi] {
            if !g.contains(x) {
                return Err(Error::OutOfDomain {
                    x,
                    lo: g.start(),
                    hi: g.end(),
                });
            }
        }
        Ok(())
    }
}

/// Trapezoidal antiderivative of a sampled fBM.
pub fn antiderivative(fbm: &FbmPath) -> AntiderivativeGrid {
    AntiderivativeGrid::from_path(fbm.path.clone()).expect("FbmPath grids contain 0")
}

pub fn eval_f(f: &AntiderivativeGrid, x: f64) -> Result<f64> {
    f.eval_f(x)
}

pub fn eval_fprime(fbm: &FbmPath, x: f64) -> Result<f64> {
    fbm.eval(x)
}

/// Left-point Itô sum `Σ F'(B_{t_i})(B_{t_{i+1}} − B_{t_i})` over grid indices
/// `[from, to]`.
pub fn ito_sum_between(
    f: &AntiderivativeGrid,
    bm: &SampledPath,
    from: usize,
    to: usize,
) -> Result<f64> {
    if from > to || to >= bm.len() {
        return Err(Error::param("t", format!("bad index range [{from}, {to}]")));
    }
    let b = &bm.values[from..=to];
    for &x in b {
        f.source.grid.locate(x)?;
    }
    Ok(b.windows(2)
        .map(|w| f.eval_both_unchecked(w[0]).1 * (w[1] - w[0]))
        .sum())
}

/// Itô sum over `[0, t]`; `t` must be a time grid point.
pub fn ito_sum(f: &AntiderivativeGrid, bm: &BmPath, t: f64) -> Result<f64> {
    let idx = bm
        .grid()
        .index_of(t)
        .ok_or_else(|| Error::param("t", format!("{t} is not a time grid point")))?;
    ito_sum_between(f, &bm.path, 0, idx)
}

/// `A`, the Itô part `M` and `F(B)` on the whole time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroEnergyPath {
    pub grid: Grid,
    pub a_values: Vec<f64>,
    pub martingale_values: Vec<f64>,
    pub f_of_b: Vec<f64>,
    pub bm_seed: u64,
    pub fbm_seed: u64,
}

impl ZeroEnergyPath {
    /// CSV with header `t,A,martingale,F_of_B`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,A,martingale,F_of_B\n");
        for i in 0..self.a_values.len() {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                fmt_float(self.grid.points()[i]),
                fmt_float(self.a_values[i]),
                fmt_float(self.martingale_values[i]),
                fmt_float(self.f_of_b[i])
            );
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.a_values.iter().fold(0.0, |m, a| m.max(a.abs()))
    }
}

/// Builds `A` along a Brownian path given as raw samples.
pub fn zero_energy_values(
    f: &AntiderivativeGrid,
    bm: &SampledPath,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    f.check_covers(bm)?;
    let n = bm.len();
    let mut a = Vec::with_capacity(n);
    let mut m = Vec::with_capacity(n);
    let mut fb = Vec::with_capacity(n);
    let mut acc = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for &b in &bm.values {
        let (fx, fpx) = f.eval_both_unchecked(b);
        if let Some((b0, fp0)) = prev {
            acc += fp0 * (b - b0);
        }
        a.push(fx - acc);
        m.push(acc);
        fb.push(fx);
        prev = Some((b, fpx));
    }
    Ok((a, m, fb))
}

pub fn zero_energy_path(fbm: &FbmPath, bm: &BmPath) -> Result<ZeroEnergyPath> {
    let f = antiderivative(fbm);
    let (a, m, fb) = zero_energy_values(&f, &bm.path)?;
    Ok(ZeroEnergyPath {
        grid: bm.grid().clone(),
        a_values: a,
        martingale_values: m,
        f_of_b: fb,
        bm_seed: bm.seed,
        fbm_seed: fbm.seed,
    })
}

/// `ξ_I = (B^(I), B^(H,I))` for `I = [a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledPair {
    pub interval: (f64, f64),
    /// `(B_{(b−a)t+a} − B_a)/√(b−a)` on `[0, 1]`.
    pub bm_part: SampledPath,
    /// `(B^H_{√(b−a)x + B_a} − B^H_{B_a})/(b−a)^{H/2}`.
    pub fbm_part: SampledPath,
    pub hurst: f64,
    pub length: f64,
    pub b_at_start: f64,
}

impl RescaledPair {
    /// `A_1` of the pair, built with the same discrete construction as `A`.
    pub fn zero_energy_at_one(&self) -> Result<f64> {
        let f = AntiderivativeGrid::from_path(self.fbm_part.clone())?;
        let (a, _, _) = zero_energy_values(&f, &self.bm_part)?;
        Ok(*a.last().unwrap())
    }

    /// `g(ξ_I) = |A_1(ξ_I)|^{2/(1+H)}`.
    pub fn g(&self) -> Result<f64> {
        Ok(self
            .zero_energy_at_one()?
            .abs()
            .powf(2.0 / (1.0 + self.hurst)))
    }
}

pub fn rescale_pair(fbm: &FbmPath, bm: &BmPath, interval: (f64, f64)) -> Result<RescaledPair> {
    let (a, b) = interval;
    let ia = bm
        .grid()
        .index_of(a)
        .ok_or_else(|| Error::param("I", format!("{a} is not a time grid point")))?;
    let ib = bm
        .grid()
        .index_of(b)
        .ok_or_else(|| Error::param("I", format!("{b} is not a time grid point")))?;
    if ib <= ia {
        return Err(Error::param("I", "interval must be non-degenerate"));
    }
    let len = b - a;
    let root = len.sqrt();
    let h = fbm.hurst;
    let t = bm.times();
    let bv = bm.values();
    let b_a = bv[ia];

    let times: Vec<f64> = t[ia..=ib].iter().map(|&s| (s - a) / len).collect();
    let vals: Vec<f64> = bv[ia..=ib].iter().map(|&x| (x - b_a) / root).collect();
    let bm_part = SampledPath::new(Grid::from_points(times)?, vals)?;

    let fbm_at = fbm.eval(b_a)?;
    let scale = len.powf(h / 2.0);
    let mut knots = Vec::with_capacity(fbm.grid().len() + 1);
    let mut values = Vec::with_capacity(fbm.grid().len() + 1);
    let mut zero_done = false;
    for (&x, &v) in fbm.grid().points().iter().zip(fbm.values()) {
        let y = (x - b_a) / root;
        if !zero_done && y >= 0.0 {
            if y > 0.0 {
                knots.push(0.0);
                values.push(0.0);
            }
            zero_done = true;
        }
        knots.push(y);
        values.push(if y == 0.0 { 0.0 } else { (v - fbm_at) / scale });
    }
    let fbm_part = SampledPath::new(Grid::from_points(knots)?, values)?;
    // Every B value of the window maps inside the rescaled space domain.
    fbm_part.grid.locate(bm_part.range().0)?;
    fbm_part.grid.locate(bm_part.range().1)?;

    Ok(RescaledPair {
        interval,
        bm_part,
        fbm_part,
        hurst: h,
        length: len,
        b_at_start: b_a,
    })
}

/// Requires `δ = 2^k` so that scaled grids are exactly representable.
pub(crate) fn check_dyadic(delta: f64) -> Result<i32> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param(
            "delta",
            format!("must be positive, got {delta}"),
        ));
    }
    let k = delta.log2().round();
    if 2f64.powi(k as i32) != delta {
        return Err(Error::MisalignedGrid(format!(
            "delta = {delta} is not a power of two"
        )));
    }
    Ok(k as i32)
}

/// `B^(δ)_t = B_{tδ²}/δ` on the time grid scaled by `1/δ²`.
pub fn rescale_brownian(bm: &BmPath, delta: f64) -> Result<BmPath> {
    check_dyadic(delta)?;
    let grid = bm.grid().scaled(1.0 / (delta * delta));
    let values = bm.values().iter().map(|&x| x / delta).collect();
    BmPath::from_values(grid, values, bm.seed)
}

/// `B^(H,δ)_x = δ^{−H} B^H_{xδ}` on the space grid scaled by `1/δ`.
pub fn rescale_fbm(fbm: &FbmPath, delta: f64) -> Result<FbmPath> {
    check_dyadic(delta)?;
    let grid = fbm.grid().scaled(1.0 / delta);
    let factor = delta.powf(-fbm.hurst);
    let values = fbm.values().iter().map(|&v| v * factor).collect();
    FbmPath::from_values(grid, values, fbm.hurst, fbm.seed)
}

/// `max_t |A_t(B, B^H) − δ^{1+H} A_{t/δ²}(B^(δ), B^(H,δ))|`.
pub fn scaling_check(fbm: &FbmPath, bm: &BmPath, delta: f64) -> Result<f64> {
    check_dyadic(delta)?;
    let base = zero_energy_path(fbm, bm)?;
    let scaled = zero_energy_path(&rescale_fbm(fbm, delta)?, &rescale_brownian(bm, delta)?)?;
    let k = delta.powf(1.0 + fbm.hurst);
    Ok(base
        .a_values
        .iter()
        .zip(&scaled.a_values)
        .map(|(a, s)| (a - k * s).abs())
        .fold(0.0, f64::max))
}
