//! Delayed/trend cooperative game in the single-regime explicit mode.
//!
//! State carries a trend ybar(t) = int_{-tau}^0 e^{lambda t'} xbar(t+t') dt'
//! and the delayed mean zbar(t) = xbar(t - tau). The beta equation
//!
//!   betadot = -omega beta - (rho - 1) rbar1^{-1/(rho-1)} beta^{rho/(rho-1)},
//!   beta(T) = 1,
//!   omega = rho/(1-rho) b2bar^2/(4 sigmabar^2) + rho (b11 + b13 e^{lambda tau})
//!
//! is completely solvable:
//!   beta(t) = ((1 - c/omega) e^{-omega (T-t)/(rho-1)} + c/omega)^{1-rho},
//!   c = (1 - rho) rbar1^{1/(1-rho)}.
//!
//! Only the beta_Bo = 0 regime is implemented; the common-noise beta_Bo
//! process has no stated evolution equation.

use super::{require, Coeff, ComponentDesc, GameDefinition, InitialState, Layout};
use crate::error::{Error, Result};
use crate::field::RegimeField;
use crate::grid::TimeGrid;
use crate::regime::RegimeGenerator;

#[derive(Debug, Clone)]
pub struct DelaySpec {
    pub q: Coeff,
    pub q_terminal: Coeff,
    pub r1: Coeff,
    pub r1_bar: f64,
    pub b1: Coeff,
    pub b2: Coeff,
    pub eps: Coeff,
    pub sigma: f64,
    pub sigma_bar: f64,
    pub b2_bar: f64,
    pub b11_bar: f64,
    pub b13_bar: f64,
    pub rho: f64,
    pub lambda: f64,
    pub tau: f64,
    /// Constant initial history: xbar(t) = xbar0 on [-tau, 0].
    pub xbar0: f64,
    pub spread: f64,
    pub s0: usize,
    pub gen: RegimeGenerator,
    pub grid: TimeGrid,
}

#[derive(Debug, Clone)]
pub struct DelayGame {
    pub spec: DelaySpec,
    pub layout: Layout,
    pub eta_bar: f64,
    /// b12_bar is pinned by the matching identity
    /// b12_bar = b13_bar e^{lambda tau} (b11_bar + lambda + b13_bar e^{lambda tau}).
    pub b12_bar: f64,
    pub omega: f64,
    pub c: f64,
}

pub fn build_delayed_trend(spec: DelaySpec) -> Result<GameDefinition> {
    let states = spec.gen.num_states();
    require(states == 1, "delayed_trend explicit mode requires a single regime")?;
    require(spec.s0 == 0, "initial regime out of range")?;
    require(
        spec.rho < 1.0 && spec.rho != 0.0,
        format!("delayed_trend requires rho < 1 and rho != 0, got {}", spec.rho),
    )?;
    require(spec.tau > 0.0, "delay tau must be positive")?;
    require(spec.tau < spec.grid.horizon(), "delay tau must be below the horizon")?;
    require(spec.lambda >= 0.0, "trend decay lambda must be nonnegative")?;
    require(spec.sigma != 0.0, "sigma must be nonzero (enters u2* as 1/sigma^2)")?;
    require(spec.sigma_bar != 0.0, "sigma_bar must be nonzero")?;
    require(spec.xbar0 > 0.0, "xbar0 must be positive (power utility of xbar + eta ybar)")?;
    require(spec.spread >= 0.0, "spread must be nonnegative")?;
    spec.q.validate(states, "q")?;
    spec.q_terminal.validate(states, "q_terminal")?;
    spec.r1.validate(states, "r1")?;
    spec.b1.validate(states, "b1")?;
    spec.b2.validate(states, "b2")?;
    spec.eps.validate(states, "eps")?;
    require(spec.q.all(|v| v >= 0.0), "q >= 0 required")?;
    require(spec.q_terminal.all(|v| v >= 0.0), "q_terminal >= 0 required")?;
    require(spec.r1.all(|v| v > 0.0), "r1 > 0 required")?;
    require(
        spec.r1_bar > 0.0 && spec.r1_bar.is_finite(),
        "r1_bar must be positive and finite",
    )?;

    let eta_bar = spec.b13_bar * (spec.lambda * spec.tau).exp();
    let b12_bar = eta_bar * (spec.b11_bar + spec.lambda + eta_bar);
    let omega = spec.rho / (1.0 - spec.rho) * spec.b2_bar * spec.b2_bar
        / (4.0 * spec.sigma_bar * spec.sigma_bar)
        + spec.rho * (spec.b11_bar + eta_bar);
    if !(omega > 0.0) {
        return Err(Error::OmegaNonpositive(omega));
    }
    let c = (1.0 - spec.rho) * spec.r1_bar.powf(1.0 / (1.0 - spec.rho));
    if !c.is_finite() {
        return Err(Error::HypothesisViolation(format!(
            "c = (1-rho) rbar1^(1/(1-rho)) is not finite (rbar1 = {}, rho = {})",
            spec.r1_bar, spec.rho
        )));
    }

    let layout = Layout {
        states,
        components: vec![
            ComponentDesc {
                name: "alpha".into(),
                alpha_like: true,
            },
            ComponentDesc {
                name: "beta".into(),
                alpha_like: false,
            },
        ],
    };
    Ok(GameDefinition::DelayedTrend(DelayGame {
        spec,
        layout,
        eta_bar,
        b12_bar,
        omega,
        c,
    }))
}

impl DelayGame {
    pub fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        let spec = &self.spec;
        let s = 0usize;
        let a = y[0];
        let b1 = spec.b1.get(s);
        let b2 = spec.b2.get(s);
        out[0] = -2.0 * b1 * a - spec.q.get(s) + a * a / spec.r1.get(s)
            + b2 * b2 * spec.eps.get(s) * a;

        let beta = y[1];
        if beta <= 0.0 {
            return Err(Error::BlowUp {
                time: t,
                component: "beta".into(),
                bound: 0.0,
            });
        }
        let rho = spec.rho;
        let power = beta.powf(rho / (rho - 1.0));
        out[1] = -self.omega * beta
            - (rho - 1.0) * spec.r1_bar.powf(-1.0 / (rho - 1.0)) * power;
        Ok(())
    }

    pub fn terminal(&self) -> Vec<f64> {
        vec![self.spec.q_terminal.get(0), 1.0]
    }

    /// Initial trend for the constant history: ybar(0) = xbar0 (1 - e^{-lambda tau})/lambda.
    pub fn ybar0(&self) -> f64 {
        if self.spec.lambda == 0.0 {
            self.spec.xbar0 * self.spec.tau
        } else {
            self.spec.xbar0 * (1.0 - (-self.spec.lambda * self.spec.tau).exp()) / self.spec.lambda
        }
    }

    /// u1 = (alpha/r1) zeta + (xbar + eta ybar) (beta/rbar1)^{1/(rho-1)}.
    pub fn u1_centered(&self, fields: &[RegimeField], t: f64, zeta: f64) -> f64 {
        fields[0].eval(t, 0) / self.spec.r1.get(0) * zeta
    }

    pub fn u1_mean(&self, fields: &[RegimeField], t: f64, xbar: f64, ybar: f64) -> f64 {
        let beta = fields[1].eval(t, 0);
        (xbar + self.eta_bar * ybar) * (beta / self.spec.r1_bar).powf(1.0 / (self.spec.rho - 1.0))
    }

    /// u2 centered part from the one-shot completion: -b2 eps / sigma^2.
    pub fn u2_centered(&self) -> f64 {
        -self.spec.b2.get(0) * self.spec.eps.get(0) / (self.spec.sigma * self.spec.sigma)
    }

    /// u2 mean part in the beta_Bo = 0 mode (beta cancels):
    /// -(xbar + eta ybar) b2bar / (2 (rho-1) sigmabar^2 xbar).
    pub fn u2_mean(&self, xbar: f64, ybar: f64) -> Result<f64> {
        if xbar == 0.0 {
            return Err(Error::MeanfieldSingularity(f64::NAN));
        }
        Ok(-(xbar + self.eta_bar * ybar) * self.spec.b2_bar
            / (2.0 * (self.spec.rho - 1.0) * self.spec.sigma_bar * self.spec.sigma_bar * xbar))
    }

    /// Equilibrium payoff: -alpha(0) var(x0) + beta(0) (xbar0 + eta ybar0)^rho / rho.
    /// Deterministic initial histories have var(x0) = 0; a two-point spread
    /// contributes spread^2.
    pub fn value(&self, fields: &[RegimeField], init: &InitialState) -> Result<Vec<f64>> {
        let w = self.spec.xbar0 + self.eta_bar * self.ybar0();
        let var0 = init.spread * init.spread;
        Ok(vec![
            -fields[0].at_node(0, 0) * var0
                + fields[1].at_node(0, 0) * w.powf(self.spec.rho) / self.spec.rho,
        ])
    }
}
