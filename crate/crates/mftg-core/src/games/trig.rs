//! Cotangent-drift and hyperbolic-cotangent-drift games.
//!
//! Both share the guess functional
//! alpha_i s2((x-xbar)/4) + abar_i s2(xbar/4) + delta_i with s2 = sin^2
//! (cotangent) or sinh^2 (hyperbolic). The two coefficient systems differ
//! exactly in the sign of the (2 + sigma^2) alpha / 8 and abar / 4 terms.

use super::{require, Coeff, ComponentDesc, GameDefinition, InitialState, Layout};
use crate::error::Result;
use crate::field::RegimeField;
use crate::grid::TimeGrid;
use crate::regime::RegimeGenerator;

#[derive(Debug, Clone)]
pub struct TrigPlayer {
    pub q: Coeff,
    pub q_bar: Coeff,
    pub b2: Coeff,
    pub b2_bar: Coeff,
}

#[derive(Debug, Clone)]
pub struct TrigSpec {
    pub players: Vec<TrigPlayer>,
    pub sigma: Coeff,
    /// Conditional mean of the initial state.
    pub xbar0: f64,
    /// Particles start from xbar0 +/- spread.
    pub spread: f64,
    pub s0: usize,
    pub gen: RegimeGenerator,
    pub grid: TimeGrid,
}

#[derive(Debug, Clone)]
pub struct TrigGame {
    pub spec: TrigSpec,
    pub hyperbolic: bool,
    pub layout: Layout,
}

pub fn build_cotangent(spec: TrigSpec) -> Result<GameDefinition> {
    let g = build_trig(spec, false)?;
    Ok(GameDefinition::Cotangent(g))
}

pub fn build_hyperbolic_cotangent(spec: TrigSpec) -> Result<GameDefinition> {
    let g = build_trig(spec, true)?;
    Ok(GameDefinition::HyperbolicCotangent(g))
}

fn build_trig(spec: TrigSpec, hyperbolic: bool) -> Result<TrigGame> {
    let states = spec.gen.num_states();
    let name = if hyperbolic { "hyperbolic_cotangent" } else { "cotangent" };
    require(!spec.players.is_empty(), format!("{name} needs at least one player"))?;
    require(spec.s0 < states, "initial regime out of range")?;
    spec.sigma.validate(states, "sigma")?;
    if hyperbolic {
        require(spec.xbar0 != 0.0, "hyperbolic_cotangent requires xbar0 != 0")?;
    } else {
        require(
            spec.xbar0 > 0.0 && spec.xbar0 < std::f64::consts::PI,
            "cotangent requires xbar0 in (0, pi)",
        )?;
    }
    require(spec.spread >= 0.0, "spread must be nonnegative")?;
    for (i, p) in spec.players.iter().enumerate() {
        p.q.validate(states, "q")?;
        p.q_bar.validate(states, "q_bar")?;
        p.b2.validate(states, "b2")?;
        p.b2_bar.validate(states, "b2_bar")?;
        if !hyperbolic {
            require(p.q.all(|v| v > 0.0), format!("player {i}: q_i > 0 required"))?;
            require(p.q_bar.all(|v| v > 0.0), format!("player {i}: q_bar_i > 0 required"))?;
        } else {
            require(p.q.all(|v| v >= 0.0), format!("player {i}: q_i >= 0 required"))?;
            require(p.q_bar.all(|v| v >= 0.0), format!("player {i}: q_bar_i >= 0 required"))?;
        }
    }
    let mut components = Vec::new();
    for i in 0..spec.players.len() {
        components.push(ComponentDesc {
            name: format!("alpha_{i}"),
            alpha_like: true,
        });
        components.push(ComponentDesc {
            name: format!("alpha_bar_{i}"),
            alpha_like: true,
        });
        components.push(ComponentDesc {
            name: format!("delta_{i}"),
            alpha_like: false,
        });
    }
    let layout = Layout { states, components };
    Ok(TrigGame {
        spec,
        hyperbolic,
        layout,
    })
}

impl TrigGame {
    pub fn alpha_idx(&self, i: usize, s: usize) -> usize {
        self.layout.idx(3 * i, s)
    }

    pub fn alpha_bar_idx(&self, i: usize, s: usize) -> usize {
        self.layout.idx(3 * i + 1, s)
    }

    pub fn delta_idx(&self, i: usize, s: usize) -> usize {
        self.layout.idx(3 * i + 2, s)
    }

    /// +1 for the cotangent system, -1 for the hyperbolic system (the sign
    /// of the (2 + sigma^2) alpha / 8 and abar / 4 terms flips).
    fn sign(&self) -> f64 {
        if self.hyperbolic {
            -1.0
        } else {
            1.0
        }
    }

    pub fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        let spec = &self.spec;
        let states = self.layout.states;
        let n = spec.players.len();
        let s1 = self.sign();
        for s in 0..states {
            let sig = spec.sigma.get(s);
            let sig_term = 2.0 + sig * sig;
            for i in 0..n {
                let p = &spec.players[i];
                let a = y[self.alpha_idx(i, s)];
                let ab = y[self.alpha_bar_idx(i, s)];

                let cross_a: f64 = (0..n)
                    .filter(|j| *j != i)
                    .map(|j| {
                        let b = spec.players[j].b2.get(s);
                        y[self.alpha_idx(j, s)] * b * b
                    })
                    .sum();
                let sw_a = spec.gen.switching_sum(t, s, |sp| y[self.alpha_idx(i, sp)]);
                let b2 = p.b2.get(s);
                out[self.alpha_idx(i, s)] = -p.q.get(s)
                    + s1 * sig_term * a / 8.0
                    + a * a * b2 * b2 / 16.0
                    + a / 8.0 * cross_a
                    - sw_a;

                let cross_ab: f64 = (0..n)
                    .filter(|j| *j != i)
                    .map(|j| {
                        let b = spec.players[j].b2_bar.get(s);
                        y[self.alpha_bar_idx(j, s)] * b * b
                    })
                    .sum();
                let sw_ab = spec.gen.switching_sum(t, s, |sp| y[self.alpha_bar_idx(i, sp)]);
                let b2b = p.b2_bar.get(s);
                out[self.alpha_bar_idx(i, s)] = -p.q_bar.get(s)
                    + s1 * ab / 4.0
                    + ab * ab * b2b * b2b / 16.0
                    + ab / 8.0 * cross_ab
                    - sw_ab;

                let sw_d = spec.gen.switching_sum(t, s, |sp| y[self.delta_idx(i, sp)]);
                out[self.delta_idx(i, s)] = -a / 16.0 * sig_term - ab / 8.0 - sw_d;
            }
        }
        Ok(())
    }

    /// All terminal conditions are zero.
    pub fn terminal(&self) -> Vec<f64> {
        vec![0.0; self.layout.dim()]
    }

    fn tan_like(&self, x: f64) -> f64 {
        if self.hyperbolic {
            x.tanh()
        } else {
            x.tan()
        }
    }

    fn sin_sq_like(&self, x: f64) -> f64 {
        if self.hyperbolic {
            x.sinh() * x.sinh()
        } else {
            x.sin() * x.sin()
        }
    }

    pub fn cos_sq_like(&self, x: f64) -> f64 {
        if self.hyperbolic {
            x.cosh() * x.cosh()
        } else {
            x.cos() * x.cos()
        }
    }

    /// Centered control u_i - ubar_i at displacement zeta = x - xbar.
    pub fn centered_control(&self, fields: &[RegimeField], t: f64, s: usize, i: usize, zeta: f64) -> f64 {
        let a = fields[3 * i].eval(t, s);
        -self.spec.players[i].b2.get(s) * a / 4.0 * self.tan_like(zeta / 4.0)
    }

    /// Mean control ubar_i at the conditional mean xbar.
    pub fn mean_control(&self, fields: &[RegimeField], t: f64, s: usize, i: usize, xbar: f64) -> f64 {
        let ab = fields[3 * i + 1].eval(t, s);
        -ab / 4.0 * self.spec.players[i].b2_bar.get(s) * self.tan_like(xbar / 4.0)
    }

    /// Closed-form mean-field drift: 1/2 cot(xbar/2) + sum_j b2bar_j ubar_j
    /// (coth for the hyperbolic variant). `scales` multiplies each player's
    /// mean control.
    pub fn meanfield_drift(
        &self,
        fields: &[RegimeField],
        t: f64,
        s: usize,
        xbar: f64,
        scales: &[f64],
    ) -> f64 {
        let half = xbar / 2.0;
        let cot = if self.hyperbolic {
            half.cosh() / half.sinh()
        } else {
            half.cos() / half.sin()
        };
        let mut drift = 0.5 * cot;
        for (j, p) in self.spec.players.iter().enumerate() {
            drift += p.b2_bar.get(s) * scales[j] * self.mean_control(fields, t, s, j, xbar);
        }
        drift
    }

    /// Running cost of player i as printed:
    /// ((u-ubar)^2 - q) c2(zeta/4) + q + (ubar^2 - qbar) c2(xbar/4) + qbar,
    /// with c2 = cos^2 / cosh^2 and sign conventions of each variant.
    pub fn running_cost(
        &self,
        s: usize,
        i: usize,
        zeta: f64,
        xbar: f64,
        centered_u: f64,
        mean_u: f64,
    ) -> f64 {
        let p = &self.spec.players[i];
        let q = p.q.get(s);
        let qb = p.q_bar.get(s);
        if self.hyperbolic {
            (centered_u * centered_u + q) * self.cos_sq_like(zeta / 4.0) - q
                + (mean_u * mean_u + qb) * self.cos_sq_like(xbar / 4.0)
                - qb
        } else {
            (centered_u * centered_u - q) * self.cos_sq_like(zeta / 4.0) + q
                + (mean_u * mean_u - qb) * self.cos_sq_like(xbar / 4.0)
                + qb
        }
    }

    pub fn value(&self, fields: &[RegimeField], init: &InitialState) -> Result<Vec<f64>> {
        let s0 = init.s0;
        let zeta_part = self.sin_sq_like(init.spread / 4.0);
        let xbar_part = self.sin_sq_like(init.x0 / 4.0);
        Ok((0..self.spec.players.len())
            .map(|i| {
                fields[3 * i].at_node(0, s0) * zeta_part
                    + fields[3 * i + 1].at_node(0, s0) * xbar_part
                    + fields[3 * i + 2].at_node(0, s0)
            })
            .collect())
    }
}
