//! Conditional expectation `E[m_{T₁+Δt} | F_{T₁}]` by nested simulation.

use super::driver::{check_dt, DriverKind, DriverSequence};
use super::flow::{flow_step, median};
use super::flow_map::FlowMap;
use super::transforms::s_psi_inv;
use crate::error::{Error, Result};
use crate::rng::{normal, sign, stream_rng};

/// Inner ensemble used to integrate out the increments on `[T₁, T₁ + Δt]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerEnsemble {
    pub n: usize,
    /// Fine steps per inner path.
    pub steps: usize,
    /// Use every inner path together with its negation.
    pub antithetic: bool,
    /// Average the flow values before mapping back to `(0, 1)`.
    pub average_raw_f: bool,
    pub kind: DriverKind,
}

impl Default for InnerEnsemble {
    fn default() -> Self {
        Self {
            n: 1000,
            steps: 100,
            antithetic: true,
            average_raw_f: false,
            kind: DriverKind::Rademacher,
        }
    }
}

impl InnerEnsemble {
    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::param(
                "inner_n",
                format!("must be at least 2, got {}", self.n),
            ));
        }
        if self.steps < 1 {
            return Err(Error::param("inner_steps", "must be at least 1"));
        }
        Ok(())
    }

    /// Starting values `y_j = F^{T₂}_{Δt}(0)`.
    pub fn starts(&self, delta_t: f64, seed: u64) -> Result<Vec<f64>> {
        self.validate()?;
        if delta_t == 0.0 {
            return Ok(vec![0.0; self.n]);
        }
        let h = delta_t / self.steps as f64;
        check_dt(h)?;
        let sd = h.sqrt();
        let mut rng = stream_rng(seed);
        let mut draw = || {
            (0..self.steps).fold(0.0, |y, _| {
                let e = match self.kind {
                    DriverKind::Rademacher => sd * sign(&mut rng),
                    DriverKind::Gaussian => sd * normal(&mut rng),
                    DriverKind::Zero => 0.0,
                };
                flow_step(y, e)
            })
        };
        let mut ys = Vec::with_capacity(self.n);
        if self.antithetic {
            for _ in 0..self.n / 2 {
                let y = draw();
                ys.push(y);
                ys.push(-y);
            }
            if self.n % 2 == 1 {
                ys.push(draw());
            }
        } else {
            ys.extend((0..self.n).map(|_| draw()));
        }
        Ok(ys)
    }
}

/// Averages the pushed-forward starting values through `map`.
pub fn cond_exp_with_map(map: &FlowMap, starts: &[f64], average_raw_f: bool) -> f64 {
    let n = starts.len() as f64;
    if average_raw_f {
        s_psi_inv(starts.iter().map(|&y| map.eval(y)).sum::<f64>() / n)
    } else {
        starts.iter().map(|&y| s_psi_inv(map.eval(y))).sum::<f64>() / n
    }
}

/// Estimate of `E[m_{T₁+Δt} | F_{T₁}]` given the forward increments on `[0, T₁]`.
pub fn cond_exp_median(
    forward: &[f64],
    dt: f64,
    delta_t: f64,
    inner: &InnerEnsemble,
    seed: u64,
) -> Result<f64> {
    inner.validate()?;
    if !(delta_t >= 0.0) {
        return Err(Error::param(
            "delta_tau",
            format!("must be non-negative, got {delta_t}"),
        ));
    }
    if delta_t == 0.0 {
        let driver = DriverSequence::new(super::driver::reversed_increments(forward), dt, seed)?;
        return Ok(median(&driver)?.m);
    }
    let map = FlowMap::from_forward(forward)?;
    let ys = inner.starts(delta_t, seed)?;
    Ok(cond_exp_with_map(&map, &ys, inner.average_raw_f))
}
