//! Euler recursion `F ← F + (1 + |F|)·ΔB̃` for the reversed flow, the median it
//! encodes, and its space derivative.

use super::driver::{steps_for, DriverSequence};
use super::transforms::{s_psi_inv, sign0};
use crate::error::{Error, Result};

/// Magnitude beyond which the recursion is treated as having overflowed.
pub const OVERFLOW_GUARD: f64 = 1e300;

/// One step of the flow with driver increment `e`.
#[inline]
pub fn flow_step(x: f64, e: f64) -> f64 {
    x + (1.0 + x.abs()) * e
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowState {
    pub x: f64,
    pub steps: usize,
}

/// Runs `steps` steps of the recursion from `x0`.
pub fn euler_f(driver: &DriverSequence, x0: f64, steps: usize) -> Result<FlowState> {
    if steps > driver.len() {
        return Err(Error::param(
            "steps",
            format!("{steps} exceeds driver length {}", driver.len()),
        ));
    }
    let mut x = x0;
    for &e in &driver.increments[..steps] {
        x = flow_step(x, e);
        if !(x.abs() <= OVERFLOW_GUARD) {
            return Err(Error::Numerical(format!("flow overflow: |F| = {x:e}")));
        }
    }
    Ok(FlowState { x, steps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MedianMethod {
    ReversedFlow,
    DirectOracle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianSample {
    pub horizon: f64,
    pub m: f64,
    pub seed: u64,
    pub method: MedianMethod,
}

/// `m_T = (s∘ψ)^{-1}(F^T_T(0))` over the whole driver.
pub fn median(driver: &DriverSequence) -> Result<MedianSample> {
    let f = euler_f(driver, 0.0, driver.len())?;
    Ok(MedianSample {
        horizon: driver.horizon(),
        m: s_psi_inv(f.x),
        seed: driver.seed,
        method: MedianMethod::ReversedFlow,
    })
}

/// Space derivative `f^T_t(x0) = exp(N_t − ½[N]_t)` along the Euler trajectory,
/// with `N` driven by `sign(F)` (and `sign(0) = 0`) and `[N]_t = t`.
pub fn derivative_f(driver: &DriverSequence, x0: f64, t: f64) -> Result<f64> {
    let steps = steps_for(t, driver.dt)?;
    if steps > driver.len() {
        return Err(Error::param("T", format!("{t} exceeds the driver horizon")));
    }
    let mut x = x0;
    let mut n = 0.0;
    for &e in &driver.increments[..steps] {
        n += sign0(x) * e;
        x = flow_step(x, e);
        if !(x.abs() <= OVERFLOW_GUARD) {
            return Err(Error::Numerical(format!("flow overflow: |F| = {x:e}")));
        }
    }
    Ok((n - 0.5 * steps as f64 * driver.dt).exp())
}

#[cfg(test)]
mod tests {
    use super::super::driver::{DriverKind, ForwardPath};
    use super::*;
    use crate::rng::{stream_rng, substream, tag};
    use rand::Rng;

    fn driver(seed: u64, dt: f64, steps: usize) -> DriverSequence {
        ForwardPath::sample(DriverKind::Rademacher, dt, steps, seed)
            .unwrap()
            .reversed(steps)
            .unwrap()
    }

    #[test]
    fn trivial_drivers() {
        let z = DriverSequence::zero(100, 0.01).unwrap();
        assert_eq!(euler_f(&z, 0.3, 100).unwrap().x, 0.3);
        assert_eq!(median(&z).unwrap().m, 0.5);
        let d = DriverSequence::new(vec![0.1], 0.01, 0).unwrap();
        assert_eq!(euler_f(&d, 0.0, 1).unwrap().x, 0.1);
        assert!(euler_f(&d, 0.0, 2).is_err());
    }

    #[test]
    fn zero_driver_derivative() {
        let z = DriverSequence::zero(1000, 1e-3).unwrap();
        let f = derivative_f(&z, 0.0, 1.0).unwrap();
        assert!((f - (-0.5f64).exp()).abs() < 1e-12);
        assert!((f - 0.606531).abs() < 1e-6);
    }

    #[test]
    fn overflow_is_reported() {
        let d = DriverSequence::new(vec![0.9; 5000], 0.81, 0).unwrap();
        assert!(matches!(euler_f(&d, 0.0, 5000), Err(Error::Numerical(_))));
    }

    #[test]
    fn composition_is_exact() {
        let dt = 1e-3;
        let f = ForwardPath::sample(DriverKind::Rademacher, dt, 1200, 5).unwrap();
        let t1 = 1000;
        let long = f.reversed(1200).unwrap();
        let short = f.reversed(t1).unwrap();
        let inner = euler_f(&long, 0.0, 200).unwrap().x;
        let whole = euler_f(&long, 0.0, 1200).unwrap().x;
        assert_eq!(whole, euler_f(&short, inner, t1).unwrap().x);
    }

    #[test]
    fn median_symmetry() {
        for seed in 0..20 {
            let d = driver(seed, 1e-3, 1000);
            let m = median(&d).unwrap().m;
            let n = median(&d.negated()).unwrap().m;
            assert!(m > 0.0 && m < 1.0);
            assert!((n - (1.0 - m)).abs() <= 1e-15, "{m} {n}");
            assert_eq!(
                euler_f(&d.negated(), 0.0, 1000).unwrap().x,
                -euler_f(&d, 0.0, 1000).unwrap().x
            );
        }
    }

    #[test]
    fn monotone_in_start() {
        let d = driver(3, 1e-3, 1000);
        let mut prev = f64::NEG_INFINITY;
        for i in -50..=50 {
            let x = euler_f(&d, i as f64 * 0.37, 1000).unwrap().x;
            assert!(x > prev);
            prev = x;
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let dt = 1e-3;
        let h = 1e-6;
        let mut rng = stream_rng(11);
        for i in 0..100 {
            let d = driver(substream(1, tag::DRIVER, i), dt, 1000);
            let x0: f64 = rng.random_range(-2.0..2.0);
            let fd = (euler_f(&d, x0 + h, 1000).unwrap().x - euler_f(&d, x0 - h, 1000).unwrap().x)
                / (2.0 * h);
            let f = derivative_f(&d, x0, 1.0).unwrap();
            assert!(f > 0.0);
            assert!((fd - f).abs() <= 1e-3 * f, "driver {i}: fd {fd} vs {f}");
        }
    }

    #[test]
    fn derivative_moments_respect_bound() {
        let dt = 1e-3;
        let n = 2000;
        for p in [1.5, 2.0] {
            let v: Vec<f64> = (0..n)
                .map(|i| {
                    derivative_f(&driver(substream(2, tag::DRIVER, i), dt, 1000), 0.0, 1.0)
                        .unwrap()
                        .powf(p)
                })
                .collect();
            let est = crate::stats::mean_se(&v);
            assert!(
                est.mean <= (p * (p - 0.5)).exp() * (1.0 + 5.0 * est.se),
                "{p}: {est:?}"
            );
        }
    }
}
