//! Finite regime set, switching generators and control-dependent rate families.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Generator of a finite-state continuous-time Markov chain.
///
/// Off-diagonal entries are switching intensities; diagonals are filled at
/// construction so that every row sums to zero exactly. Labels are opaque
/// strings mapped to dense indices.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeGenerator {
    labels: Vec<String>,
    rates: RateMatrix,
}

#[derive(Debug, Clone, PartialEq)]
enum RateMatrix {
    Constant(Vec<f64>),
    /// One matrix per grid node, used as piecewise-constant in time.
    PerNode {
        grid: TimeGrid,
        mats: Vec<Vec<f64>>,
    },
}

impl RegimeGenerator {
    /// Build a generator from labels and the off-diagonal rate matrix.
    /// Diagonal entries of `offdiag` are ignored and recomputed.
    pub fn new(labels: Vec<String>, offdiag: Vec<Vec<f64>>) -> Result<Self> {
        let mat = fill_diagonal(labels.len(), &offdiag)?;
        if labels.is_empty() {
            return Err(Error::InvalidInput("empty regime set".into()));
        }
        Ok(Self {
            labels,
            rates: RateMatrix::Constant(mat),
        })
    }

    /// Single-regime generator (1x1 zero matrix).
    pub fn single(label: impl Into<String>) -> Self {
        Self {
            labels: vec![label.into()],
            rates: RateMatrix::Constant(vec![0.0]),
        }
    }

    /// Time-dependent generator: one off-diagonal matrix per grid node.
    pub fn per_node(
        labels: Vec<String>,
        grid: TimeGrid,
        offdiag_per_node: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if offdiag_per_node.len() != grid.num_nodes() {
            return Err(Error::InvalidInput(format!(
                "need one rate matrix per node: got {}, expected {}",
                offdiag_per_node.len(),
                grid.num_nodes()
            )));
        }
        let mats = offdiag_per_node
            .iter()
            .map(|m| fill_diagonal(labels.len(), m))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            labels,
            rates: RateMatrix::PerNode { grid, mats },
        })
    }

    pub fn num_states(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.rates, RateMatrix::Constant(_))
    }

    /// q(s, s') at time t.
    pub fn rate(&self, t: f64, s: usize, sp: usize) -> f64 {
        let n = self.num_states();
        match &self.rates {
            RateMatrix::Constant(m) => m[s * n + sp],
            RateMatrix::PerNode { grid, mats } => {
                let cell = grid.cell_of(t);
                mats[cell][s * n + sp]
            }
        }
    }

    /// Constant-rate matrix in row-major order; `None` when time-dependent.
    pub fn constant_matrix(&self) -> Option<&[f64]> {
        match &self.rates {
            RateMatrix::Constant(m) => Some(m),
            RateMatrix::PerNode { .. } => None,
        }
    }

    /// Total exit rate -q(s,s) from state s at time t.
    pub fn exit_rate(&self, t: f64, s: usize) -> f64 {
        -self.rate(t, s, s)
    }

    /// Switching coupling sum_{s'} (v(s') - v(s)) q(s, s').
    pub fn switching_sum(&self, t: f64, s: usize, v: impl Fn(usize) -> f64) -> f64 {
        let n = self.num_states();
        let vs = v(s);
        let mut acc = 0.0;
        for sp in 0..n {
            if sp != s {
                acc += (v(sp) - vs) * self.rate(t, s, sp);
            }
        }
        acc
    }
}

fn fill_diagonal(n: usize, offdiag: &[Vec<f64>]) -> Result<Vec<f64>> {
    if offdiag.len() != n || offdiag.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput(format!("rate matrix must be {n}x{n}")));
    }
    let mut mat = vec![0.0; n * n];
    for s in 0..n {
        let mut row_sum = 0.0;
        for sp in 0..n {
            if sp == s {
                continue;
            }
            let rate = offdiag[s][sp];
            if rate < 0.0 || !rate.is_finite() {
                return Err(Error::NegativeRate {
                    from: s,
                    to: sp,
                    rate,
                });
            }
            mat[s * n + sp] = rate;
            row_sum += rate;
        }
        mat[s * n + s] = -row_sum;
    }
    Ok(mat)
}

/// Coefficients of a control-dependent switching-rate family
///
///   q(s,s')(u) = sum_j [ b2[j] (u_j - ubar_j)^2 + b2_bar[j] ubar_j^2
///              + b1[j] (u_j - ubar_j) + b1_bar[j] ubar_j + bo_bar[j] ]
///
/// where the `b1` coefficients are zero-mean random draws realized once per
/// simulated path. Entries are stored per (player, from-state, to-state);
/// diagonals are implied by the generator convention and never stored.
#[derive(Debug, Clone)]
pub struct ControlledSwitchRates {
    players: usize,
    states: usize,
    b2: Vec<f64>,
    b2_bar: Vec<f64>,
    b1_bar: Vec<f64>,
    bo_bar: Vec<f64>,
    /// Standard deviation of the zero-mean b1 draw, one per player.
    b1_std: Vec<f64>,
}

/// Realized b1 coefficients for one path, indexed like the other families.
#[derive(Debug, Clone)]
pub struct SwitchDraw {
    pub b1: Vec<f64>,
}

impl ControlledSwitchRates {
    pub fn new(
        players: usize,
        states: usize,
        b2: Vec<f64>,
        b2_bar: Vec<f64>,
        b1_bar: Vec<f64>,
        bo_bar: Vec<f64>,
        b1_std: Vec<f64>,
    ) -> Result<Self> {
        let len = players * states * states;
        for (name, v) in [
            ("b2", &b2),
            ("b2_bar", &b2_bar),
            ("b1_bar", &b1_bar),
            ("bo_bar", &bo_bar),
        ] {
            if v.len() != len {
                return Err(Error::InvalidInput(format!(
                    "{name} must have {len} entries (players x states x states)"
                )));
            }
        }
        if b1_std.len() != players || b1_std.iter().any(|s| *s < 0.0) {
            return Err(Error::InvalidInput(
                "b1_std must hold one nonnegative value per player".into(),
            ));
        }
        // Quadratic rate coefficients must be nonnegative off the diagonal so
        // the controlled intensity stays a rate.
        for j in 0..players {
            for s in 0..states {
                for sp in 0..states {
                    if sp == s {
                        continue;
                    }
                    for (name, v) in [("b2", &b2), ("b2_bar", &b2_bar), ("bo_bar", &bo_bar)] {
                        let val = v[Self::idx_of(states, j, s, sp)];
                        if val < 0.0 {
                            return Err(Error::HypothesisViolation(format!(
                                "{name}[player {j}][{s}->{sp}] = {val} must be >= 0"
                            )));
                        }
                    }
                }
            }
        }
        Ok(Self {
            players,
            states,
            b2,
            b2_bar,
            b1_bar,
            bo_bar,
            b1_std,
        })
    }

    fn idx_of(states: usize, j: usize, s: usize, sp: usize) -> usize {
        (j * states + s) * states + sp
    }

    fn idx(&self, j: usize, s: usize, sp: usize) -> usize {
        Self::idx_of(self.states, j, s, sp)
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn b2(&self, j: usize, s: usize, sp: usize) -> f64 {
        self.b2[self.idx(j, s, sp)]
    }

    pub fn b2_bar(&self, j: usize, s: usize, sp: usize) -> f64 {
        self.b2_bar[self.idx(j, s, sp)]
    }

    pub fn b1_bar(&self, j: usize, s: usize, sp: usize) -> f64 {
        self.b1_bar[self.idx(j, s, sp)]
    }

    pub fn bo_bar(&self, j: usize, s: usize, sp: usize) -> f64 {
        self.bo_bar[self.idx(j, s, sp)]
    }

    pub fn b1_std(&self, j: usize) -> f64 {
        self.b1_std[j]
    }

    /// Draw the per-path b1 coefficients (zero off the diagonal positions is
    /// not enforced; diagonal slots are simply never read).
    pub fn draw(&self, rng: &mut impl rand::Rng) -> SwitchDraw {
        use rand_distr::{Distribution, Normal};
        let mut b1 = vec![0.0; self.players * self.states * self.states];
        for j in 0..self.players {
            if self.b1_std[j] == 0.0 {
                continue;
            }
            let normal = Normal::new(0.0, self.b1_std[j]).expect("validated std");
            for s in 0..self.states {
                for sp in 0..self.states {
                    if sp != s {
                        b1[self.idx(j, s, sp)] = normal.sample(rng);
                    }
                }
            }
        }
        SwitchDraw { b1 }
    }

    /// Controlled rate q(s,s')(u) for s' != s, clamped at zero.
    /// `controls[j] = (u_j - ubar_j, ubar_j)`.
    pub fn rate(&self, draw: &SwitchDraw, s: usize, sp: usize, controls: &[(f64, f64)]) -> f64 {
        debug_assert_ne!(s, sp);
        let mut acc = 0.0;
        for (j, &(v, ub)) in controls.iter().enumerate() {
            let i = self.idx(j, s, sp);
            acc += self.b2[i] * v * v
                + self.b2_bar[i] * ub * ub
                + draw.b1[i] * v
                + self.b1_bar[i] * ub
                + self.bo_bar[i];
        }
        acc.max(0.0)
    }
}
