//! Grids and piecewise-linear sampled paths.

use crate::error::{Error, Result};

/// Strictly increasing set of sample locations (times or space points).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    step: Option<f64>,
}

impl Grid {
    /// `cells + 1` equally spaced points starting at `start`.
    pub fn uniform(start: f64, step: f64, cells: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "step must be positive, got {step}"
            )));
        }
        if cells < 1 {
            return Err(Error::InvalidGrid("a grid needs at least 2 points".into()));
        }
        let points = (0..=cells).map(|i| start + i as f64 * step).collect();
        Ok(Self {
            points,
            step: Some(step),
        })
    }

    /// Uniform grid on `[0, horizon]` with `cells` cells.
    pub fn time(horizon: f64, cells: usize) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        Self::uniform(0.0, horizon / cells.max(1) as f64, cells)
    }

    /// Uniform grid on `[-half_cells*step, half_cells*step]`; the point at
    /// index `half_cells` is exactly zero and the grid is exactly symmetric.
    pub fn symmetric(half_cells: usize, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "step must be positive, got {step}"
            )));
        }
        if half_cells < 1 {
            return Err(Error::InvalidGrid(
                "a symmetric grid needs at least 3 points".into(),
            ));
        }
        let h = half_cells as i64;
        let points = (-h..=h).map(|i| i as f64 * step).collect();
        Ok(Self {
            points,
            step: Some(step),
        })
    }

    /// Arbitrary strictly increasing points. The result is flagged non-uniform.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid("a grid needs at least 2 points".into()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidGrid("grid points must be finite".into()));
        }
        if let Some(w) = points.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "points must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self { points, step: None })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn cells(&self) -> usize {
        self.points.len() - 1
    }

    pub fn is_uniform(&self) -> bool {
        self.step.is_some()
    }

    /// Step of a uniform grid.
    pub fn step(&self) -> Option<f64> {
        self.step
    }

    pub fn start(&self) -> f64 {
        self.points[0]
    }

    pub fn end(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Largest cell width.
    pub fn mesh(&self) -> f64 {
        match self.step {
            Some(h) => h,
            None => self
                .points
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(0.0, f64::max),
        }
    }

    /// Index of a point that is exactly on the grid.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let i = self.points.partition_point(|&p| p < x);
        (i < self.points.len() && self.points[i] == x).then_some(i)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.start() && x <= self.end()
    }

    /// Index `i` of the cell `[p_i, p_{i+1}]` containing `x`, preferring the
    /// cell that starts at `x` when `x` is a grid point.
    pub fn locate(&self, x: f64) -> Result<usize> {
        if !self.contains(x) {
            return Err(Error::OutOfDomain {
                x,
                lo: self.start(),
                hi: self.end(),
            });
        }
        Ok(self.locate_unchecked(x))
    }

    #[inline]
    pub(crate) fn locate_unchecked(&self, x: f64) -> usize {
        let last = self.points.len() - 2;
        match self.step {
            Some(h) => {
                let guess = ((x - self.points[0]) / h).floor();
                let mut i = if guess <= 0.0 {
                    0
                } else {
                    (guess as usize).min(last)
                };
                // floor() can land one cell off at exact knots.
                if i > 0 && x < self.points[i] {
                    i -= 1;
                } else if i < last && x >= self.points[i + 1] {
                    i += 1;
                }
                i
            }
            None => self
                .points
                .partition_point(|&p| p <= x)
                .saturating_sub(1)
                .min(last),
        }
    }

    /// Grid with every point multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            points: self.points.iter().map(|p| p * factor).collect(),
            step: self.step.map(|h| h * factor),
        }
    }
}

/// Values of a scalar process on a grid, read between grid points by linear
/// interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl SampledPath {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidGrid(format!(
                "{} grid points but {} values",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let i = self.grid.locate(x)?;
        Ok(self.eval_in_cell(i, x))
    }

    #[inline]
    pub(crate) fn eval_in_cell(&self, i: usize, x: f64) -> f64 {
        let p = self.grid.points();
        let d = x - p[i];
        if d == 0.0 {
            return self.values[i];
        }
        let slope = (self.values[i + 1] - self.values[i]) / (p[i + 1] - p[i]);
        self.values[i] + slope * d
    }

    /// Smallest and largest value.
    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}
