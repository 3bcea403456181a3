//! Quadratic-quadratic game: quadratic control costs, state linear in the
//! quadratic control expenditure
//!
//!   dx = sum_j [ q_j (u_j - ubar_j)^2 + qbar_j ubar_j^2
//!        + eps1_j (u_j - ubar_j) + epsbar1_j ubar_j ] dt + sigma dB + jumps,
//!
//! cost_i = q_i(T) x_T + int r_i (u_i - ubar_i)^2 + rbar_i ubar_i^2
//!        + epsbar2_i ubar_i dt.
//!
//! The guess alpha_i x makes alpha regime-coupled only:
//! alphadot_i = - sum_{s'} (alpha_i(s') - alpha_i(s)) q(s,s'), which also has
//! the matrix-exponential solution alpha(t) = exp((T - t) Q) q_T.
//! The eps1 coefficients are zero-mean draws realized once per path.

use super::{require, Coeff, ComponentDesc, GameDefinition, InitialState, Layout};
use crate::error::Result;
use crate::field::RegimeField;
use crate::grid::TimeGrid;
use crate::jump::JumpSpec;
use crate::regime::RegimeGenerator;

#[derive(Debug, Clone)]
pub struct QuadraticPlayer {
    /// Quadratic drift coefficient on (u - ubar)^2.
    pub q: Coeff,
    /// Quadratic drift coefficient on ubar^2.
    pub q_bar: Coeff,
    pub r: Coeff,
    pub r_bar: Coeff,
    /// Standard deviation of the zero-mean eps1 draw.
    pub eps1_std: f64,
    pub eps_bar_1: Coeff,
    pub eps_bar_2: Coeff,
    pub q_terminal: Coeff,
}

#[derive(Debug, Clone)]
pub struct QuadraticSpec {
    pub players: Vec<QuadraticPlayer>,
    pub sigma: Coeff,
    pub jumps: JumpSpec,
    pub x0: f64,
    pub s0: usize,
    pub gen: RegimeGenerator,
    pub grid: TimeGrid,
}

#[derive(Debug, Clone)]
pub struct QuadraticGame {
    pub spec: QuadraticSpec,
    pub layout: Layout,
}

pub fn build_quadratic_quadratic(spec: QuadraticSpec) -> Result<GameDefinition> {
    let states = spec.gen.num_states();
    require(!spec.players.is_empty(), "quadratic_quadratic needs at least one player")?;
    require(spec.s0 < states, "initial regime out of range")?;
    spec.sigma.validate(states, "sigma")?;
    for (i, p) in spec.players.iter().enumerate() {
        for (name, c) in [
            ("q", &p.q),
            ("q_bar", &p.q_bar),
            ("r", &p.r),
            ("r_bar", &p.r_bar),
            ("eps_bar_1", &p.eps_bar_1),
            ("eps_bar_2", &p.eps_bar_2),
            ("q_terminal", &p.q_terminal),
        ] {
            c.validate(states, name)?;
        }
        require(p.r.all(|v| v > 0.0), format!("player {i}: r_i > delta > 0 required"))?;
        require(
            p.r_bar.all(|v| v > 0.0),
            format!("player {i}: r_bar_i > delta > 0 required"),
        )?;
        require(p.q.all(|v| v >= 0.0), format!("player {i}: q_i >= 0 required"))?;
        require(p.q_bar.all(|v| v >= 0.0), format!("player {i}: q_bar_i >= 0 required"))?;
        require(
            p.eps1_std >= 0.0 && p.eps1_std.is_finite(),
            format!("player {i}: eps1_std must be nonnegative (E eps1 = 0 by construction)"),
        )?;
    }
    let components = (0..spec.players.len())
        .map(|i| ComponentDesc {
            name: format!("alpha_{i}"),
            alpha_like: true,
        })
        .collect();
    let layout = Layout { states, components };
    Ok(GameDefinition::QuadraticQuadratic(QuadraticGame {
        spec,
        layout,
    }))
}

impl QuadraticGame {
    pub fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        let states = self.layout.states;
        for s in 0..states {
            for i in 0..self.spec.players.len() {
                out[self.layout.idx(i, s)] =
                    -self.spec.gen.switching_sum(t, s, |sp| y[self.layout.idx(i, sp)]);
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

    /// Centered feedback slope m_i = alpha_i / (2 (r_i + alpha_i q_i)):
    /// u_i - ubar_i = -m_i eps1_i for the path's realized draw.
    pub fn centered_slope(&self, alpha_is: f64, i: usize, s: usize) -> f64 {
        let p = &self.spec.players[i];
        alpha_is / (2.0 * (p.r.get(s) + alpha_is * p.q.get(s)))
    }

    /// Deterministic mean control ubar_i*.
    pub fn mean_control(&self, alpha_is: f64, i: usize, s: usize) -> f64 {
        let p = &self.spec.players[i];
        -(p.eps_bar_2.get(s) + alpha_is * p.eps_bar_1.get(s))
            / (2.0 * (p.r_bar.get(s) + alpha_is * p.q_bar.get(s)))
    }

    /// Expected-cost integrand G_i(t, s) of the equilibrium value, with the
    /// eps1 second moments replaced by their variances.
    pub fn value_integrand(&self, alpha: &[RegimeField], t: f64, s: usize, i: usize) -> f64 {
        let n = self.spec.players.len();
        let a_i = alpha[i].eval(t, s);
        let p_i = &self.spec.players[i];
        let mut g = 0.0;
        for j in 0..n {
            let p_j = &self.spec.players[j];
            let a_j = alpha[j].eval(t, s);
            let m_j = self.centered_slope(a_j, j, s);
            let w_j = -self.mean_control(a_j, j, s); // + (eps2+a eps1)/(2(rbar+a qbar))
            let var_j = p_j.eps1_std * p_j.eps1_std;
            if j != i {
                g += a_i * (p_j.q.get(s) * m_j * m_j * var_j + p_j.q_bar.get(s) * w_j * w_j);
                g -= a_i * (m_j * var_j + p_j.eps_bar_1.get(s) * w_j);
            }
        }
        let var_i = p_i.eps1_std * p_i.eps1_std;
        g -= a_i * a_i * var_i / (4.0 * (p_i.r.get(s) + a_i * p_i.q.get(s)));
        let num = p_i.eps_bar_2.get(s) + a_i * p_i.eps_bar_1.get(s);
        g -= num * num / (4.0 * (p_i.r_bar.get(s) + a_i * p_i.q_bar.get(s)));
        g
    }

    /// E L_i* = alpha_i(0, s0) x0 + int E_s [G_i(t, s(t))] dt, with the regime
    /// marginal solved by a forward pass.
    pub fn value(&self, fields: &[RegimeField], init: &InitialState) -> Result<Vec<f64>> {
        let grid = &self.spec.grid;
        let marginal = crate::solver::regime_marginal(&self.spec.gen, init.s0, grid)?;
        let states = self.layout.states;
        let n = self.spec.players.len();
        let mut values = Vec::with_capacity(n);
        for i in 0..n {
            let mut integral = 0.0;
            let mut prev = 0.0;
            for node in 0..grid.num_nodes() {
                let t = grid.node(node);
                let mut g = 0.0;
                for s in 0..states {
                    g += marginal.at_node(node, s) * self.value_integrand(fields, t, s, i);
                }
                if node > 0 {
                    integral += 0.5 * (prev + g) * grid.dt();
                }
                prev = g;
            }
            values.push(fields[i].at_node(0, init.s0) * init.x0 + integral);
        }
        Ok(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn player_zero_eps(states: usize, q_t: Vec<f64>) -> QuadraticPlayer {
        QuadraticPlayer {
            q: Coeff::constant(0.5, states),
            q_bar: Coeff::constant(0.5, states),
            r: Coeff::constant(1.0, states),
            r_bar: Coeff::constant(1.0, states),
            eps1_std: 0.0,
            eps_bar_1: Coeff::constant(0.0, states),
            eps_bar_2: Coeff::constant(0.0, states),
            q_terminal: Coeff::per_regime(q_t),
        }
    }

    #[test]
    fn zero_incentives_zero_controls_and_plain_value() {
        let spec = QuadraticSpec {
            players: vec![player_zero_eps(1, vec![2.0])],
            sigma: Coeff::constant(0.4, 1),
            jumps: JumpSpec::disabled(),
            x0: 3.0,
            s0: 0,
            gen: RegimeGenerator::single("s"),
            grid: TimeGrid::new(1.0, 50).unwrap(),
        };
        let def = build_quadratic_quadratic(spec).unwrap();
        if let GameDefinition::QuadraticQuadratic(g) = &def {
            assert_eq!(g.mean_control(2.0, 0, 0), 0.0);
            let fields = vec![RegimeField::constant(g.spec.grid, 1, 2.0)];
            let v = g.value(&fields, &InitialState::deterministic(3.0, 0)).unwrap();
            assert!((v[0] - 6.0).abs() < 1e-12, "E L = alpha(0) x0 = 6, got {}", v[0]);
        } else {
            panic!("wrong variant");
        }
    }

    #[test]
    fn equal_terminals_give_constant_rhs_zero() {
        let gen = RegimeGenerator::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 0.7], vec![0.4, 0.0]],
        )
        .unwrap();
        let spec = QuadraticSpec {
            players: vec![player_zero_eps(2, vec![1.0, 1.0])],
            sigma: Coeff::constant(0.0, 2),
            jumps: JumpSpec::disabled(),
            x0: 1.0,
            s0: 0,
            gen,
            grid: TimeGrid::new(1.0, 10).unwrap(),
        };
        let def = build_quadratic_quadratic(spec).unwrap();
        let y = def.terminal();
        let mut out = vec![9.0; y.len()];
        def.rhs(1.0, &y, &mut out).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-15));
    }
}
