//! Brownian drivers: forward increments stored once, reversed views per horizon.

use crate::error::{Error, Result};
use crate::rng::{normal, sign, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriverKind {
    /// `±√Δt` with probability ½ each.
    #[default]
    Rademacher,
    Gaussian,
    /// All increments zero.
    Zero,
}

impl std::str::FromStr for DriverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "rademacher" => Ok(Self::Rademacher),
            "gaussian" => Ok(Self::Gaussian),
            "zero" => Ok(Self::Zero),
            _ => Err(format!(
                "unknown driver kind `{s}` (rademacher, gaussian, zero)"
            )),
        }
    }
}

/// Forward increments `ΔB_0, ΔB_1, …` of one trajectory on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPath {
    pub increments: Vec<f64>,
    pub dt: f64,
    pub kind: DriverKind,
    pub seed: u64,
}

impl ForwardPath {
    pub fn sample(kind: DriverKind, dt: f64, steps: usize, seed: u64) -> Result<Self> {
        check_dt(dt)?;
        let sd = dt.sqrt();
        let mut rng = stream_rng(seed);
        let increments = (0..steps)
            .map(|_| match kind {
                DriverKind::Rademacher => sd * sign(&mut rng),
                DriverKind::Gaussian => sd * normal(&mut rng),
                DriverKind::Zero => 0.0,
            })
            .collect();
        Ok(Self {
            increments,
            dt,
            kind,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.increments.len() as f64 * self.dt
    }

    /// Reversed driver for the horizon made of the first `steps` increments.
    pub fn reversed(&self, steps: usize) -> Result<DriverSequence> {
        if steps > self.len() {
            return Err(Error::param(
                "steps",
                format!("{steps} exceeds the {} stored increments", self.len()),
            ));
        }
        Ok(DriverSequence {
            increments: reversed_increments(&self.increments[..steps]),
            dt: self.dt,
            seed: self.seed,
        })
    }

    /// Number of steps spanning `t`, which must be a multiple of `dt`.
    pub fn steps_for(&self, t: f64) -> Result<usize> {
        steps_for(t, self.dt)
    }
}

pub(crate) fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt < 1.0) {
        return Err(Error::param("dt", format!("must lie in (0, 1), got {dt}")));
    }
    Ok(())
}

pub(crate) fn steps_for(t: f64, dt: f64) -> Result<usize> {
    if !(t >= 0.0) {
        return Err(Error::param("T", format!("must be non-negative, got {t}")));
    }
    let r = t / dt;
    let k = r.round();
    if (r - k).abs() > 1e-9 * k.max(1.0) {
        return Err(Error::MisalignedGrid(format!(
            "T = {t} is not a multiple of dt = {dt}"
        )));
    }
    Ok(k as usize)
}

/// `[a, b, c] ↦ [−c, −b, −a]`.
pub fn reversed_increments(forward: &[f64]) -> Vec<f64> {
    forward.iter().rev().map(|&d| -d).collect()
}

/// Increments of the time-reversed driver `B̃^T_u = B_{T−u} − B_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverSequence {
    pub increments: Vec<f64>,
    pub dt: f64,
    pub seed: u64,
}

impl DriverSequence {
    pub fn new(increments: Vec<f64>, dt: f64, seed: u64) -> Result<Self> {
        check_dt(dt)?;
        if increments.iter().any(|d| !d.is_finite()) {
            return Err(Error::param("increments", "must be finite"));
        }
        Ok(Self {
            increments,
            dt,
            seed,
        })
    }

    /// All-zero driver of the given length.
    pub fn zero(steps: usize, dt: f64) -> Result<Self> {
        Self::new(vec![0.0; steps], dt, 0)
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.increments.len() as f64 * self.dt
    }

    /// The driver with every increment negated.
    pub fn negated(&self) -> Self {
        Self {
            increments: self.increments.iter().map(|d| -d).collect(),
            ..self.clone()
        }
    }

    /// Whether every increment is exactly `±√Δt`.
    pub fn is_rademacher(&self) -> bool {
        let sd = self.dt.sqrt();
        self.increments.iter().all(|d| d.abs() == sd)
    }
}

/// Reversed driver of a forward path.
pub fn reversed_driver(forward: &ForwardPath) -> DriverSequence {
    forward
        .reversed(forward.len())
        .expect("full length is always valid")
}
