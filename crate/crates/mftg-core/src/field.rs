//! Grid-indexed coefficient fields per regime.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Values v(t_n, s) on a time grid for every regime, interpolated piecewise
/// linearly in time between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeField {
    grid: TimeGrid,
    states: usize,
    /// Node-major layout: values[n * states + s].
    values: Vec<f64>,
}

impl RegimeField {
    pub fn from_values(grid: TimeGrid, states: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_nodes() * states {
            return Err(Error::InvalidInput(format!(
                "field needs {} values, got {}",
                grid.num_nodes() * states,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite field value".into()));
        }
        Ok(Self {
            grid,
            states,
            values,
        })
    }

    pub fn from_fn(grid: TimeGrid, states: usize, f: impl Fn(f64, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.num_nodes() * states);
        for n in 0..grid.num_nodes() {
            let t = grid.node(n);
            for s in 0..states {
                values.push(f(t, s));
            }
        }
        Self::from_values(grid, states, values)
    }

    pub fn constant(grid: TimeGrid, states: usize, value: f64) -> Self {
        Self {
            grid,
            states,
            values: vec![value; grid.num_nodes() * states],
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn at_node(&self, n: usize, s: usize) -> f64 {
        self.values[n * self.states + s]
    }

    pub fn set_node(&mut self, n: usize, s: usize, v: f64) {
        self.values[n * self.states + s] = v;
    }

    /// Piecewise-linear evaluation; exact at grid nodes.
    pub fn eval(&self, t: f64, s: usize) -> f64 {
        let dt = self.grid.dt();
        let cell = self.grid.cell_of(t);
        let t0 = self.grid.node(cell);
        let w = ((t - t0) / dt).clamp(0.0, 1.0);
        let a = self.at_node(cell, s);
        let b = self.at_node(cell + 1, s);
        a + w * (b - a)
    }

    /// Minimum value over all nodes of one regime-indexed component.
    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_exact_at_nodes() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let f = RegimeField::from_fn(grid, 2, |t, s| t * t + s as f64).unwrap();
        for n in 0..=10 {
            let t = grid.node(n);
            assert_eq!(f.eval(t, 0), f.at_node(n, 0));
            assert_eq!(f.eval(t, 1), f.at_node(n, 1));
        }
    }

    #[test]
    fn interpolation_is_linear_between_nodes() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let f = RegimeField::from_fn(grid, 1, |t, _| 3.0 * t).unwrap();
        assert!((f.eval(0.3, 0) - 0.9).abs() < 1e-14);
        assert!((f.eval(0.999, 0) - 2.997).abs() < 1e-12);
    }

    #[test]
    fn rejects_nan() {
        let grid = TimeGrid::new(1.0, 2).unwrap();
        assert!(RegimeField::from_values(grid, 1, vec![0.0, f64::NAN, 1.0]).is_err());
    }
}
