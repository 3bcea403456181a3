//! Geometric Gauss-Volterra game: power costs q_i x^k / k + r_i u_i^{2k} / k
//! on the sqrt-drift dynamics
//!
//!   dx = (2 b sqrt(x) + x Sigma2) dt
//!      + 2x [sigma dB + sigma_o dB_o + jumps + sigma_gv dB_gv + sigma_ogv dB_ogv],
//!   b  = b1 sqrt(x) + sum_j b2_j u_j,
//!   Sigma2 = sigma^2 + sigma_o^2 + sigma_cogv^2 + sigma_ocogv^2
//!          + int mu^2 d nu + int mu_o^2 d nu_o.
//!
//! Guess functional alpha_i x^k / k; equilibrium u_i* = gain_i sqrt(x) with
//! gain_i = (-alpha_i b2_i / r_i)^{1/(2k-1)}.
//!
//! The completed-square term in the alpha equation is implemented with the
//! coefficient (2k-1) r_i gain_i^{2k}: this is the value that annuls the
//! one-shot bracket at u_i* (and for k = 1 reproduces the scalar
//! Hamilton-Jacobi solution alphadot = -q - alpha Sigma2 - 2 b1 alpha
//! + alpha^2 b^2 / r), making the quoted equilibrium cost verifiable by
//! simulation.

use super::{require, sroot, Coeff, ComponentDesc, GameDefinition, InitialState, Layout};
use crate::error::Result;
use crate::field::RegimeField;
use crate::grid::TimeGrid;
use crate::jump::JumpSpec;
use crate::noise::kernel::effective_gv_variance_fast;
use crate::regime::RegimeGenerator;

#[derive(Debug, Clone)]
pub struct GeometricPlayer {
    pub q: Coeff,
    pub q_terminal: Coeff,
    pub r: Coeff,
    pub b2: Coeff,
}

#[derive(Debug, Clone)]
pub struct GeometricSpec {
    pub players: Vec<GeometricPlayer>,
    pub b1: Coeff,
    pub k: u32,
    pub sigma: Coeff,
    pub sigma_o: Coeff,
    pub sigma_gv: Coeff,
    pub sigma_o_gv: Coeff,
    /// Hurst parameter of the fBm kernel driving both Gauss-Volterra noises;
    /// required when either sigma_gv or sigma_o_gv is nonzero.
    pub hurst: Option<f64>,
    pub jumps: JumpSpec,
    pub jumps_common: JumpSpec,
    pub x0: f64,
    pub s0: usize,
    pub gen: RegimeGenerator,
    pub grid: TimeGrid,
}

#[derive(Debug, Clone)]
pub struct GeometricGame {
    pub spec: GeometricSpec,
    pub layout: Layout,
    /// Floor applied to t in sigma_cogv(t) = sigma_gv^2 2H t^{2H-1} so the
    /// H < 1/2 endpoint divergence cannot poison the terminal RK4 stage.
    pub t_floor: f64,
}

pub fn build_geometric_gv(spec: GeometricSpec) -> Result<GameDefinition> {
    let states = spec.gen.num_states();
    require(!spec.players.is_empty(), "geometric_gv needs at least one player")?;
    require(spec.x0 > 0.0, "geometric_gv requires x0 > 0")?;
    require(spec.k >= 1, "geometric_gv exponent k must be an integer >= 1")?;
    require(spec.s0 < states, "initial regime out of range")?;
    for c in [&spec.b1, &spec.sigma, &spec.sigma_o, &spec.sigma_gv, &spec.sigma_o_gv] {
        c.validate(states, "noise coefficient")?;
    }
    let gv_used = !spec.sigma_gv.all(|v| v == 0.0) || !spec.sigma_o_gv.all(|v| v == 0.0);
    if gv_used {
        let h = spec
            .hurst
            .ok_or_else(|| crate::error::Error::HypothesisViolation(
                "Gauss-Volterra volatility set but no Hurst parameter given".into(),
            ))?;
        require(h > 0.0 && h < 1.0, "Hurst parameter must lie in (0,1)")?;
    }
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
    let t_floor = spec.grid.dt() * 0.1;
    Ok(GameDefinition::GeometricGv(GeometricGame {
        spec,
        layout,
        t_floor,
    }))
}

impl GeometricGame {
    /// Feedback gain: u_i* = gain * sqrt(x).
    pub fn gain(&self, alpha_is: f64, i: usize, s: usize) -> f64 {
        let p = &self.spec.players[i];
        sroot(-alpha_is * p.b2.get(s) / p.r.get(s), 2 * self.spec.k - 1)
    }

    /// Sigma2(t, s): total second-order noise load entering the drift.
    pub fn sigma2_total(&self, t: f64, s: usize) -> f64 {
        let spec = &self.spec;
        let sig = spec.sigma.get(s);
        let sig_o = spec.sigma_o.get(s);
        let mut total = sig * sig + sig_o * sig_o + spec.jumps.moment_square()
            + spec.jumps_common.moment_square();
        if let Some(h) = spec.hurst {
            let tc = t.max(self.t_floor);
            let sgv = spec.sigma_gv.get(s);
            if sgv != 0.0 {
                total += effective_gv_variance_fast(h, sgv, tc).unwrap_or(0.0);
            }
            let sogv = spec.sigma_o_gv.get(s);
            if sogv != 0.0 {
                total += effective_gv_variance_fast(h, sogv, tc).unwrap_or(0.0);
            }
        }
        total
    }

    pub fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        let spec = &self.spec;
        let states = self.layout.states;
        let n = spec.players.len();
        let k = f64::from(spec.k);
        let two_k = 2 * spec.k as i32;
        for s in 0..states {
            let sigma2 = self.sigma2_total(t, s);
            let gains: Vec<f64> = (0..n)
                .map(|j| self.gain(y[self.layout.idx(j, s)], j, s))
                .collect();
            for i in 0..n {
                let p = &spec.players[i];
                let a = y[self.layout.idx(i, s)];
                let sw = spec.gen.switching_sum(t, s, |sp| y[self.layout.idx(i, sp)]);
                let own = (2.0 * k - 1.0) * p.r.get(s) * gains[i].powi(two_k);
                let cross: f64 = (0..n)
                    .filter(|j| *j != i)
                    .map(|j| spec.players[j].b2.get(s) * gains[j])
                    .sum();
                out[self.layout.idx(i, s)] = -p.q.get(s)
                    - k * a * sigma2
                    - 2.0 * k * spec.b1.get(s) * a
                    - 2.0 * k * (k - 1.0) * a * sigma2
                    + own
                    - 2.0 * k * a * cross
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
        let k = f64::from(self.spec.k);
        let xk = init.x0.powi(self.spec.k as i32);
        Ok((0..self.spec.players.len())
            .map(|i| fields[i].at_node(0, init.s0) * xk / k)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_one(k: u32, b2: f64, r: f64) -> GeometricSpec {
        GeometricSpec {
            players: vec![GeometricPlayer {
                q: Coeff::constant(1.0, 1),
                q_terminal: Coeff::constant(0.0, 1),
                r: Coeff::constant(r, 1),
                b2: Coeff::constant(b2, 1),
            }],
            b1: Coeff::constant(0.0, 1),
            k,
            sigma: Coeff::constant(0.0, 1),
            sigma_o: Coeff::constant(0.0, 1),
            sigma_gv: Coeff::constant(0.0, 1),
            sigma_o_gv: Coeff::constant(0.0, 1),
            hurst: None,
            jumps: JumpSpec::disabled(),
            jumps_common: JumpSpec::disabled(),
            x0: 50.0,
            s0: 0,
            gen: RegimeGenerator::single("s"),
            grid: TimeGrid::new(1.0, 100).unwrap(),
        }
    }

    #[test]
    fn signed_root_in_gain() {
        // b2 < 0, alpha > 0: gain positive and gain^{2k-1} = -alpha b2 / r
        let def = build_geometric_gv(spec_one(2, -1.5, 2.0)).unwrap();
        if let GameDefinition::GeometricGv(g) = &def {
            let alpha = 0.8;
            let gain = g.gain(alpha, 0, 0);
            assert!(gain > 0.0);
            assert!(
                (gain.powi(3) - (-alpha * -1.5 / 2.0)).abs() < 1e-12,
                "gain^3 = {}",
                gain.powi(3)
            );
        } else {
            panic!("wrong variant");
        }
    }

    #[test]
    fn rejects_negative_x0() {
        let mut s = spec_one(1, 1.0, 1.0);
        s.x0 = -1.0;
        assert!(build_geometric_gv(s).is_err());
    }

    #[test]
    fn gv_requested_without_hurst_rejected() {
        let mut s = spec_one(1, 1.0, 1.0);
        s.sigma_gv = Coeff::constant(1.0, 1);
        assert!(build_geometric_gv(s).is_err());
    }
}
