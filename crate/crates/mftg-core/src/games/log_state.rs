//! Logarithmic-cost games on multiplicative state dynamics.
//!
//! Log-state game: dx = (b1 x ln x + sum_j b2_j x u_j) dt + x (sigma dB + jumps),
//! costs -q_i(T) ln x_T + int (-q_i ln x + r_i u_i^{2k}) dt. The equilibrium
//! control is state-independent and the guess functional is
//! f_i = -alpha_i ln x + delta_i.
//!
//! Log-square game: same drift, no noise, costs q_i(T) ln^2 x_T +
//! int (q_i ln^2 x + r_i u_i^2) dt with guess alpha_i ln^2 x.

use super::{require, Coeff, ComponentDesc, GameDefinition, InitialState, Layout};
use crate::error::Result;
use crate::field::RegimeField;
use crate::grid::TimeGrid;
use crate::jump::JumpSpec;
use crate::regime::RegimeGenerator;

/// Minimum admissible initial state for the "x0 >> e" hypothesis.
pub const MIN_LOG_X0: f64 = 10.0 * std::f64::consts::E;

#[derive(Debug, Clone)]
pub struct LogPlayer {
    pub q: Coeff,
    pub q_terminal: Coeff,
    pub r: Coeff,
    pub b2: Coeff,
}

#[derive(Debug, Clone)]
pub struct LogStateSpec {
    pub players: Vec<LogPlayer>,
    pub b1: Coeff,
    pub sigma: Coeff,
    pub k: u32,
    pub jumps: JumpSpec,
    pub x0: f64,
    pub s0: usize,
    pub gen: RegimeGenerator,
    pub grid: TimeGrid,
}

#[derive(Debug, Clone)]
pub struct LogStateGame {
    pub spec: LogStateSpec,
    pub layout: Layout,
}

pub fn build_log_state(spec: LogStateSpec) -> Result<GameDefinition> {
    let states = spec.gen.num_states();
    require(!spec.players.is_empty(), "log_state needs at least one player")?;
    require(
        spec.x0 >= MIN_LOG_X0,
        format!("log_state requires x0 >> e (x0 >= {MIN_LOG_X0:.2}), got {}", spec.x0),
    )?;
    require(spec.k >= 1, "log_state exponent k must be an integer >= 1")?;
    require(spec.s0 < states, "initial regime out of range")?;
    spec.b1.validate(states, "b1")?;
    spec.sigma.validate(states, "sigma")?;
    for (i, p) in spec.players.iter().enumerate() {
        p.q.validate(states, "q")?;
        p.q_terminal.validate(states, "q_terminal")?;
        p.r.validate(states, "r")?;
        p.b2.validate(states, "b2")?;
        require(p.q.all(|v| v >= 0.0), format!("player {i}: q_i >= 0 required"))?;
        require(
            p.q_terminal.all(|v| v >= 0.0),
            format!("player {i}: q_i(T) >= 0 required"),
        )?;
        require(p.r.all(|v| v > 0.0), format!("player {i}: r_i > delta > 0 required"))?;
    }
    // moment_log finite is guaranteed by JumpSpec construction
    let mut components = Vec::new();
    for i in 0..spec.players.len() {
        components.push(ComponentDesc {
            name: format!("alpha_{i}"),
            alpha_like: true,
        });
        components.push(ComponentDesc {
            name: format!("delta_{i}"),
            alpha_like: false,
        });
    }
    let layout = Layout { states, components };
    Ok(GameDefinition::LogState(LogStateGame { spec, layout }))
}

impl LogStateGame {
    fn alpha_idx(&self, i: usize, s: usize) -> usize {
        self.layout.idx(2 * i, s)
    }

    fn delta_idx(&self, i: usize, s: usize) -> usize {
        self.layout.idx(2 * i + 1, s)
    }

    /// Equilibrium control of player i: [alpha_i b2_i / (2k r_i)]^{1/(2k-1)},
    /// independent of the state.
    pub fn gain(&self, alpha_is: f64, i: usize, s: usize) -> f64 {
        let p = &self.spec.players[i];
        let k = f64::from(self.spec.k);
        super::sroot(
            alpha_is * p.b2.get(s) / (2.0 * k * p.r.get(s)),
            2 * self.spec.k - 1,
        )
    }

    pub fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        let spec = &self.spec;
        let states = self.layout.states;
        let n = spec.players.len();
        let k = spec.k;
        let jlog = spec.jumps.moment_log();
        for s in 0..states {
            let gains: Vec<f64> = (0..n).map(|j| self.gain(y[self.alpha_idx(j, s)], j, s)).collect();
            for i in 0..n {
                let p = &spec.players[i];
                let a = y[self.alpha_idx(i, s)];
                let sw_a = spec.gen.switching_sum(t, s, |sp| y[self.alpha_idx(i, sp)]);
                out[self.alpha_idx(i, s)] = -p.q.get(s) - a * spec.b1.get(s) - sw_a;

                let sw_d = spec.gen.switching_sum(t, s, |sp| y[self.delta_idx(i, sp)]);
                let sig2 = spec.sigma.get(s) * spec.sigma.get(s);
                let own = (2.0 * f64::from(k) - 1.0)
                    * p.r.get(s)
                    * gains[i].powi(2 * k as i32);
                let cross: f64 = (0..n)
                    .filter(|j| *j != i)
                    .map(|j| spec.players[j].b2.get(s) * gains[j])
                    .sum();
                out[self.delta_idx(i, s)] = -a * (0.5 * sig2 - jlog) - sw_d + own + a * cross;
            }
        }
        Ok(())
    }

    pub fn terminal(&self) -> Vec<f64> {
        let states = self.layout.states;
        let mut v = vec![0.0; self.layout.dim()];
        for (i, p) in self.spec.players.iter().enumerate() {
            for s in 0..states {
                v[self.alpha_idx(i, s)] = p.q_terminal.get(s);
            }
        }
        v
    }

    pub fn value(&self, fields: &[RegimeField], init: &InitialState) -> Result<Vec<f64>> {
        Ok((0..self.spec.players.len())
            .map(|i| {
                -fields[2 * i].at_node(0, init.s0) * init.x0.ln()
                    + fields[2 * i + 1].at_node(0, init.s0)
            })
            .collect())
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct LogSquareSpec {
    pub players: Vec<LogPlayer>,
    pub b1: Coeff,
    pub x0: f64,
    pub s0: usize,
    pub gen: RegimeGenerator,
    pub grid: TimeGrid,
}

#[derive(Debug, Clone)]
pub struct LogSquareGame {
    pub spec: LogSquareSpec,
    pub layout: Layout,
}

pub fn build_log_square(spec: LogSquareSpec) -> Result<GameDefinition> {
    let states = spec.gen.num_states();
    require(!spec.players.is_empty(), "log_square needs at least one player")?;
    require(
        spec.x0 >= MIN_LOG_X0,
        format!("log_square requires x0 >> e (x0 >= {MIN_LOG_X0:.2}), got {}", spec.x0),
    )?;
    require(spec.s0 < states, "initial regime out of range")?;
    spec.b1.validate(states, "b1")?;
    for (i, p) in spec.players.iter().enumerate() {
        p.q.validate(states, "q")?;
        p.q_terminal.validate(states, "q_terminal")?;
        p.r.validate(states, "r")?;
        p.b2.validate(states, "b2")?;
        require(p.q.all(|v| v >= 0.0), format!("player {i}: q_i >= 0 required"))?;
        require(
            p.q_terminal.all(|v| v >= 0.0),
            format!("player {i}: q_i(T) >= 0 required"),
        )?;
        require(p.r.all(|v| v > 0.0), format!("player {i}: r_i > delta > 0 required"))?;
    }
    let components = (0..spec.players.len())
        .map(|i| ComponentDesc {
            name: format!("alpha_{i}"),
            alpha_like: true,
        })
        .collect();
    let layout = Layout { states, components };
    Ok(GameDefinition::LogSquare(LogSquareGame { spec, layout }))
}

impl LogSquareGame {
    /// Equilibrium control is u_i = gain_coeff * ln x.
    pub fn gain_coeff(&self, alpha_is: f64, i: usize, s: usize) -> f64 {
        let p = &self.spec.players[i];
        -alpha_is * p.b2.get(s) / p.r.get(s)
    }

    pub fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        let spec = &self.spec;
        let states = self.layout.states;
        let n = spec.players.len();
        for s in 0..states {
            for i in 0..n {
                let p = &spec.players[i];
                let a = y[self.layout.idx(i, s)];
                let sw = spec.gen.switching_sum(t, s, |sp| y[self.layout.idx(i, sp)]);
                let cross: f64 = (0..n)
                    .filter(|j| *j != i)
                    .map(|j| {
                        let pj = &spec.players[j];
                        y[self.layout.idx(j, s)] * pj.b2.get(s) * pj.b2.get(s) / pj.r.get(s)
                    })
                    .sum();
                let b2 = p.b2.get(s);
                out[self.layout.idx(i, s)] = -p.q.get(s) - 2.0 * spec.b1.get(s) * a
                    + 2.0 * a * cross
                    + a * a * b2 * b2 / p.r.get(s)
                    - sw;
            }
        }
        Ok(())
    }

    pub fn terminal(&self) -> Vec<f64> {
        let states = self.layout.states;
        let mut v = vec![0.0; self.layout.dim()];
        for (i, p) in self.spec.players.iter().enumerate() {
            for s in 0..states {
                v[self.layout.idx(i, s)] = p.q_terminal.get(s);
            }
        }
        v
    }

    pub fn value(&self, fields: &[RegimeField], init: &InitialState) -> Result<Vec<f64>> {
        let l = init.x0.ln();
        Ok((0..self.spec.players.len())
            .map(|i| fields[i].at_node(0, init.s0) * l * l)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_regime() -> RegimeGenerator {
        RegimeGenerator::single("s")
    }

    fn grid() -> TimeGrid {
        TimeGrid::new(1.0, 100).unwrap()
    }

    fn player(q: f64, q_t: f64, r: f64, b2: f64) -> LogPlayer {
        LogPlayer {
            q: Coeff::constant(q, 1),
            q_terminal: Coeff::constant(q_t, 1),
            r: Coeff::constant(r, 1),
            b2: Coeff::constant(b2, 1),
        }
    }

    #[test]
    fn rejects_small_x0() {
        let spec = LogStateSpec {
            players: vec![player(1.0, 0.0, 1.0, 1.0)],
            b1: Coeff::constant(0.0, 1),
            sigma: Coeff::constant(0.0, 1),
            k: 1,
            jumps: JumpSpec::disabled(),
            x0: 5.0,
            s0: 0,
            gen: single_regime(),
            grid: grid(),
        };
        assert!(build_log_state(spec).is_err());
    }

    #[test]
    fn rejects_nonpositive_r() {
        let spec = LogSquareSpec {
            players: vec![player(1.0, 0.0, 0.0, 1.0)],
            b1: Coeff::constant(0.0, 1),
            x0: 50.0,
            s0: 0,
            gen: single_regime(),
            grid: grid(),
        };
        assert!(build_log_square(spec).is_err());
    }

    #[test]
    fn state_independent_gain_k1() {
        let spec = LogStateSpec {
            players: vec![player(1.0, 0.0, 2.0, 3.0)],
            b1: Coeff::constant(0.0, 1),
            sigma: Coeff::constant(0.0, 1),
            k: 1,
            jumps: JumpSpec::disabled(),
            x0: 50.0,
            s0: 0,
            gen: single_regime(),
            grid: grid(),
        };
        let def = build_log_state(spec).unwrap();
        if let GameDefinition::LogState(g) = &def {
            // u* = alpha b2 / (2 r) for k = 1
            assert!((g.gain(1.2, 0, 0) - 1.2 * 3.0 / 4.0).abs() < 1e-14);
        } else {
            panic!("wrong variant");
        }
    }
}
