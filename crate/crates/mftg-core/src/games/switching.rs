//! Control-dependent switching game: no state, cost driven entirely by the
//! endogenous regime chain
//!
//!   q(s,s')(u) = sum_j [ b2 (u_j - ubar_j)^2 + b2_bar ubar_j^2
//!              + b1 (u_j - ubar_j) + b1_bar ubar_j + bo_bar ],
//!
//! with zero-mean random b1 realized once per path. The guess V_i(t, s)
//! satisfies a coupled ratio system; generator-convention sums
//! sum_{s'} V(s') c_{ss'} are evaluated as sum_{s' != s} (V(s') - V(s)) c_{ss'}.

use super::{require, Coeff, ComponentDesc, GameDefinition, InitialState, Layout};
use crate::error::{Error, Result};
use crate::field::RegimeField;
use crate::grid::TimeGrid;
use crate::regime::{ControlledSwitchRates, SwitchDraw};

#[derive(Debug, Clone)]
pub struct SwitchingPlayer {
    pub r: Coeff,
    pub r_bar: Coeff,
    pub eps: Coeff,
    pub q_terminal: Coeff,
}

#[derive(Debug, Clone)]
pub struct SwitchingSpec {
    pub players: Vec<SwitchingPlayer>,
    pub rates: ControlledSwitchRates,
    pub s0: usize,
    pub grid: TimeGrid,
}

/// The V system depends on the realized b1 draw, so a definition is built
/// per draw; the zero draw gives the nominal system.
#[derive(Debug, Clone)]
pub struct SwitchingGame {
    pub spec: SwitchingSpec,
    pub draw: SwitchDraw,
    pub layout: Layout,
}

pub fn build_controlled_switching(spec: SwitchingSpec) -> Result<GameDefinition> {
    build_controlled_switching_with_draw(
        spec.clone(),
        SwitchDraw {
            b1: vec![0.0; spec.players.len() * spec.rates.states() * spec.rates.states()],
        },
    )
}

pub fn build_controlled_switching_with_draw(
    spec: SwitchingSpec,
    draw: SwitchDraw,
) -> Result<GameDefinition> {
    let states = spec.rates.states();
    let n = spec.players.len();
    require(n > 0, "controlled_switching needs at least one player")?;
    require(
        spec.rates.players() == n,
        "rate family player count must match the player list",
    )?;
    require(spec.s0 < states, "initial regime out of range")?;
    if draw.b1.len() != n * states * states {
        return Err(Error::InvalidInput("draw size mismatch".into()));
    }
    for (i, p) in spec.players.iter().enumerate() {
        p.r.validate(states, "r")?;
        p.r_bar.validate(states, "r_bar")?;
        p.eps.validate(states, "eps")?;
        p.q_terminal.validate(states, "q_terminal")?;
        require(p.r.all(|v| v > 0.0), format!("player {i}: r_i > 0 required"))?;
        require(
            p.r_bar.all(|v| v > 0.0),
            format!("player {i}: r_bar_i > 0 required"),
        )?;
    }
    let components = (0..n)
        .map(|i| ComponentDesc {
            name: format!("v_{i}"),
            alpha_like: true,
        })
        .collect();
    let layout = Layout { states, components };
    Ok(GameDefinition::ControlledSwitching(SwitchingGame {
        spec,
        draw,
        layout,
    }))
}

/// Per-player ratio pieces at one (t, s): numerators, denominators and the
/// resulting centered/mean feedback parts.
#[derive(Debug, Clone, Copy)]
pub struct RatioParts {
    pub num: f64,
    pub den: f64,
    pub num_bar: f64,
    pub den_bar: f64,
}

impl RatioParts {
    pub fn centered_control(&self) -> f64 {
        -0.5 * self.num / self.den
    }

    pub fn mean_control(&self) -> f64 {
        -0.5 * self.num_bar / self.den_bar
    }
}

impl SwitchingGame {
    /// Generator-convention weighted sum sum_{s' != s} (V_i(s') - V_i(s)) c(s, s').
    fn vsum(&self, y: &[f64], i: usize, s: usize, c: impl Fn(usize) -> f64) -> f64 {
        let states = self.layout.states;
        let vi_s = y[self.layout.idx(i, s)];
        (0..states)
            .filter(|sp| *sp != s)
            .map(|sp| (y[self.layout.idx(i, sp)] - vi_s) * c(sp))
            .sum()
    }

    pub fn ratio_parts(&self, y: &[f64], j: usize, s: usize) -> RatioParts {
        let rates = &self.spec.rates;
        let p = &self.spec.players[j];
        RatioParts {
            num: self.vsum(y, j, s, |sp| self.draw.b1[(j * self.layout.states + s) * self.layout.states + sp]),
            den: p.r.get(s) + self.vsum(y, j, s, |sp| rates.b2(j, s, sp)),
            num_bar: p.eps.get(s) + self.vsum(y, j, s, |sp| rates.b1_bar(j, s, sp)),
            den_bar: p.r_bar.get(s) + self.vsum(y, j, s, |sp| rates.b2_bar(j, s, sp)),
        }
    }

    pub fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        let states = self.layout.states;
        let n = self.spec.players.len();
        let rates = &self.spec.rates;
        for s in 0..states {
            let parts: Vec<RatioParts> = (0..n).map(|j| self.ratio_parts(y, j, s)).collect();
            for (j, rp) in parts.iter().enumerate() {
                if rp.den <= 0.0 || rp.den_bar <= 0.0 {
                    let _ = j;
                    return Err(Error::DenominatorSignFlip(t));
                }
            }
            for i in 0..n {
                let base_rate = self.vsum(y, i, s, |sp| {
                    (0..n).map(|j| rates.bo_bar(j, s, sp)).sum::<f64>()
                });
                let own = 0.25 * parts[i].num * parts[i].num / parts[i].den
                    + 0.25 * parts[i].num_bar * parts[i].num_bar / parts[i].den_bar;
                let mut cross = 0.0;
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    let ratio_j = parts[j].num / parts[j].den;
                    let ratio_bar_j = parts[j].num_bar / parts[j].den_bar;
                    let vi_b2j = self.vsum(y, i, s, |sp| rates.b2(j, s, sp));
                    let vi_b2bj = self.vsum(y, i, s, |sp| rates.b2_bar(j, s, sp));
                    let vi_b1j = self.vsum(y, i, s, |sp| {
                        self.draw.b1[(j * states + s) * states + sp]
                    });
                    let vi_b1bj = self.vsum(y, i, s, |sp| rates.b1_bar(j, s, sp));
                    cross += -0.25 * vi_b2j * ratio_j * ratio_j
                        - 0.25 * vi_b2bj * ratio_bar_j * ratio_bar_j
                        + 0.5 * vi_b1j * ratio_j
                        + 0.5 * vi_b1bj * ratio_bar_j;
                }
                out[self.layout.idx(i, s)] = -base_rate + own + cross;
            }
        }
        let _ = t;
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

    /// Feedback of player i at (t, s) from solved fields: (centered, mean).
    pub fn feedback(&self, fields: &[RegimeField], t: f64, s: usize, i: usize) -> (f64, f64) {
        let states = self.layout.states;
        let mut y = vec![0.0; self.layout.dim()];
        for c in 0..self.layout.components.len() {
            for sp in 0..states {
                y[self.layout.idx(c, sp)] = fields[c].eval(t, sp);
            }
        }
        let rp = self.ratio_parts(&y, i, s);
        (rp.centered_control(), rp.mean_control())
    }

    pub fn value(&self, fields: &[RegimeField], init: &InitialState) -> Result<Vec<f64>> {
        Ok((0..self.spec.players.len())
            .map(|i| fields[i].at_node(0, init.s0))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(players: usize, states: usize, v: f64) -> Vec<f64> {
        vec![v; players * states * states]
    }

    fn base_spec(states: usize, bo: f64) -> SwitchingSpec {
        SwitchingSpec {
            players: vec![SwitchingPlayer {
                r: Coeff::constant(1.0, states),
                r_bar: Coeff::constant(1.0, states),
                eps: Coeff::constant(0.0, states),
                q_terminal: Coeff::per_regime((0..states).map(|s| 1.0 + s as f64).collect()),
            }],
            rates: ControlledSwitchRates::new(
                1,
                states,
                flat(1, states, 0.0),
                flat(1, states, 0.0),
                flat(1, states, 0.0),
                flat(1, states, bo),
                vec![0.0],
            )
            .unwrap(),
            s0: 0,
            grid: TimeGrid::new(1.0, 50).unwrap(),
        }
    }

    #[test]
    fn no_incentives_zero_feedback() {
        // eps = 0 and all b1 zero: u* = 0, V'_i keeps only the bo_bar term
        let def = build_controlled_switching(base_spec(2, 0.3)).unwrap();
        if let GameDefinition::ControlledSwitching(g) = &def {
            let y = vec![2.0, 1.0]; // V(s0)=2, V(s1)=1
            let rp = g.ratio_parts(&y, 0, 0);
            assert_eq!(rp.centered_control(), 0.0);
            assert_eq!(rp.mean_control(), 0.0);
            let mut out = vec![0.0; 2];
            g.rhs(0.5, &y, &mut out).unwrap();
            // V'(s0) = -(V(s1)-V(s0)) * 0.3 = 0.3
            assert!((out[0] - 0.3).abs() < 1e-14);
            assert!((out[1] - (-0.3)).abs() < 1e-14);
        } else {
            panic!("wrong variant");
        }
    }

    #[test]
    fn single_regime_rhs_is_zero() {
        let def = build_controlled_switching(base_spec(1, 0.0)).unwrap();
        if let GameDefinition::ControlledSwitching(g) = &def {
            let y = vec![5.0];
            let mut out = vec![1.0];
            g.rhs(0.1, &y, &mut out).unwrap();
            assert_eq!(out[0], 0.0);
        } else {
            panic!("wrong variant");
        }
    }
}
