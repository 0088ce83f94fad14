//! Uniform time grids.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Default resolution: points per bare oscillator period.
pub const DEFAULT_STEPS_PER_PERIOD: usize = 2000;

/// Uniform grid t_i = i * dt, i = 0..=steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, t_end: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter { name: "dt", reason: format!("must be > 0, got {dt}") });
        }
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidParameter { name: "T", reason: format!("must be >= 0, got {t_end}") });
        }
        let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
        Ok(Self { dt, steps })
    }

    pub fn from_steps(dt: f64, steps: usize) -> Self {
        Self { dt, steps }
    }

    /// `per_period` points per period 2*pi/omega, up to `t_end`.
    pub fn per_period(omega: f64, per_period: usize, t_end: f64) -> Result<Self> {
        Self::new(2.0 * PI / (omega * per_period as f64), t_end)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of intervals.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of samples (steps + 1).
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.steps)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.t(i))
    }

    /// Grid index of time `t`, if `t` lies on the grid (to 1e-9 of a step).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = t / self.dt;
        let i = x.round();
        ((x - i).abs() < 1e-9 && i >= 0.0 && (i as usize) <= self.steps).then_some(i as usize)
    }

    /// Same grid with the step halved (same end time).
    pub fn refined(&self) -> Self {
        Self { dt: 0.5 * self.dt, steps: 2 * self.steps }
    }

    pub fn same_as(&self, other: &TimeGrid) -> Result<()> {
        if self.steps == other.steps && (self.dt - other.dt).abs() <= 1e-15 * self.dt {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "dt {} x {} vs dt {} x {}",
                self.dt, self.steps, other.dt, other.steps
            )))
        }
    }
}
