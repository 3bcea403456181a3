//! Uniform time grid on [0, T].

use crate::error::{Error, Result};

/// Uniform discretization of `[0, T]` with `steps + 1` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if steps < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 steps, got {steps}"
            )));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn num_nodes(&self) -> usize {
        self.steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// t_n. The last node is exactly `horizon`.
    pub fn node(&self, n: usize) -> f64 {
        debug_assert!(n <= self.steps);
        if n == self.steps {
            self.horizon
        } else {
            n as f64 * self.dt()
        }
    }

    /// Grid with the same horizon and doubled step count.
    pub fn refined(&self) -> Self {
        Self {
            horizon: self.horizon,
            steps: self.steps * 2,
        }
    }

    /// Index of the cell containing `t`, clamped to `[0, steps-1]`.
    pub fn cell_of(&self, t: f64) -> usize {
        let i = (t / self.dt()).floor() as isize;
        i.clamp(0, self.steps as isize - 1) as usize
    }
}
