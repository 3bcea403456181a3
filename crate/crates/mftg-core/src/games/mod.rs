//! One constructor per solved game class. Each builder validates the class
//! hypotheses and produces a [`GameDefinition`]: the backward coefficient
//! system, terminal conditions, equilibrium feedback maps, cost evaluators
//! and (where available) the closed-form mean-field ODE.

mod delay;
mod fenchel;
mod geometric;
mod gv_power;
mod log_state;
mod quadratic;
mod switching;
mod trig;

pub use delay::{build_delayed_trend, DelayGame, DelaySpec};
pub use fenchel::{build_legendre_fenchel, FenchelGame, FenchelPlayer, FenchelSpec};
pub use geometric::{build_geometric_gv, GeometricGame, GeometricPlayer, GeometricSpec};
pub use gv_power::{
    build_gv_power_adversarial, build_gv_power_cooperative, build_gv_power_nash, AdvBlock,
    GvAdversarialGame, GvAdversarialSpec, GvBlock, GvCoopGame, GvPowerGame, GvPowerSpec,
};
pub use log_state::{
    build_log_square, build_log_state, LogPlayer, LogSquareGame, LogSquareSpec, LogStateGame,
    LogStateSpec,
};
pub use quadratic::{build_quadratic_quadratic, QuadraticGame, QuadraticPlayer, QuadraticSpec};
pub use switching::{
    build_controlled_switching, build_controlled_switching_with_draw, SwitchingGame,
    SwitchingPlayer, SwitchingSpec,
};
pub use trig::{build_cotangent, build_hyperbolic_cotangent, TrigGame, TrigPlayer, TrigSpec};

use crate::error::{Error, Result};
use crate::field::RegimeField;
use crate::grid::TimeGrid;
use crate::regime::RegimeGenerator;

/// Signed odd root: sroot(x, m) = sign(x) |x|^{1/m} for odd m.
///
/// This is the convention behind every fractional feedback gain of the form
/// (-b alpha / r)^{1/(2k-1)}; even powers of such gains are formed as
/// `sroot(..).powi(2k)` so negative-r (adversarial) coefficients stay
/// sign-correct without complex arithmetic.
pub fn sroot(x: f64, m: u32) -> f64 {
    debug_assert!(m % 2 == 1, "sroot wants an odd root index");
    if m == 1 {
        return x;
    }
    x.signum() * x.abs().powf(1.0 / f64::from(m))
}

/// Coefficient constant in time, one value per regime.
#[derive(Debug, Clone, PartialEq)]
pub struct Coeff(Vec<f64>);

impl Coeff {
    pub fn constant(v: f64, states: usize) -> Self {
        Self(vec![v; states])
    }

    pub fn per_regime(v: Vec<f64>) -> Self {
        Self(v)
    }

    pub fn get(&self, s: usize) -> f64 {
        self.0[s]
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn validate(&self, states: usize, name: &str) -> Result<()> {
        if self.0.len() != states {
            return Err(Error::InvalidInput(format!(
                "coefficient `{name}` needs {states} regime values, got {}",
                self.0.len()
            )));
        }
        if self.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "coefficient `{name}` has a non-finite value"
            )));
        }
        Ok(())
    }

    pub fn all(&self, pred: impl Fn(f64) -> bool) -> bool {
        self.0.iter().all(|v| pred(*v))
    }
}

/// Description of one stacked coefficient component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentDesc {
    pub name: String,
    /// Alpha-type components are expected nonnegative under the positivity
    /// hypotheses and are flagged by the positivity report.
    pub alpha_like: bool,
}

/// Layout of the stacked coefficient vector: `components x regimes`,
/// index = comp * states + regime.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub states: usize,
    pub components: Vec<ComponentDesc>,
}

impl Layout {
    pub fn dim(&self) -> usize {
        self.components.len() * self.states
    }

    pub fn idx(&self, comp: usize, s: usize) -> usize {
        comp * self.states + s
    }

    pub fn component_index(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c.name == name)
    }
}

/// Initial condition shared by the simulators. Mean-field games start each
/// particle at `x0 +/- spread` (antithetic halves), so conditional initial
/// moments are exact: E (x0 - xbar0)^{2k} = spread^{2k}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialState {
    pub x0: f64,
    pub spread: f64,
    pub s0: usize,
}

impl InitialState {
    pub fn deterministic(x0: f64, s0: usize) -> Self {
        Self {
            x0,
            spread: 0.0,
            s0,
        }
    }
}

/// A fully built game: spec, hypothesis checks passed, coefficient system
/// and evaluators ready for the backward solver and the simulator.
#[derive(Debug, Clone)]
pub enum GameDefinition {
    LogState(LogStateGame),
    LogSquare(LogSquareGame),
    LegendreFenchel(FenchelGame),
    GeometricGv(GeometricGame),
    ControlledSwitching(SwitchingGame),
    QuadraticQuadratic(QuadraticGame),
    Cotangent(TrigGame),
    HyperbolicCotangent(TrigGame),
    DelayedTrend(DelayGame),
    GvPowerNash(GvPowerGame),
    GvPowerCooperative(GvCoopGame),
    GvPowerAdversarial(GvAdversarialGame),
}

impl GameDefinition {
    pub fn variant_name(&self) -> &'static str {
        match self {
            Self::LogState(_) => "log_state",
            Self::LogSquare(_) => "log_square",
            Self::LegendreFenchel(_) => "legendre_fenchel",
            Self::GeometricGv(_) => "geometric_gv",
            Self::ControlledSwitching(_) => "controlled_switching",
            Self::QuadraticQuadratic(_) => "quadratic_quadratic",
            Self::Cotangent(_) => "cotangent",
            Self::HyperbolicCotangent(_) => "hyperbolic_cotangent",
            Self::DelayedTrend(_) => "delayed_trend",
            Self::GvPowerNash(_) => "gv_power_nash",
            Self::GvPowerCooperative(_) => "gv_power_cooperative",
            Self::GvPowerAdversarial(_) => "gv_power_adversarial",
        }
    }

    pub fn layout(&self) -> &Layout {
        match self {
            Self::LogState(g) => &g.layout,
            Self::LogSquare(g) => &g.layout,
            Self::LegendreFenchel(g) => &g.layout,
            Self::GeometricGv(g) => &g.layout,
            Self::ControlledSwitching(g) => &g.layout,
            Self::QuadraticQuadratic(g) => &g.layout,
            Self::Cotangent(g) | Self::HyperbolicCotangent(g) => &g.layout,
            Self::DelayedTrend(g) => &g.layout,
            Self::GvPowerNash(g) => &g.layout,
            Self::GvPowerCooperative(g) => &g.layout,
            Self::GvPowerAdversarial(g) => &g.layout,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        match self {
            Self::LogState(g) => &g.spec.grid,
            Self::LogSquare(g) => &g.spec.grid,
            Self::LegendreFenchel(g) => &g.spec.grid,
            Self::GeometricGv(g) => &g.spec.grid,
            Self::ControlledSwitching(g) => &g.spec.grid,
            Self::QuadraticQuadratic(g) => &g.spec.grid,
            Self::Cotangent(g) | Self::HyperbolicCotangent(g) => &g.spec.grid,
            Self::DelayedTrend(g) => &g.spec.grid,
            Self::GvPowerNash(g) => &g.spec.grid,
            Self::GvPowerCooperative(g) => &g.spec.grid,
            Self::GvPowerAdversarial(g) => &g.spec.grid,
        }
    }

    /// Regime generator of the exogenous chain; `None` for the
    /// control-dependent switching game, whose chain is endogenous.
    pub fn generator(&self) -> Option<&RegimeGenerator> {
        match self {
            Self::LogState(g) => Some(&g.spec.gen),
            Self::LogSquare(g) => Some(&g.spec.gen),
            Self::LegendreFenchel(g) => Some(&g.spec.gen),
            Self::GeometricGv(g) => Some(&g.spec.gen),
            Self::ControlledSwitching(_) => None,
            Self::QuadraticQuadratic(g) => Some(&g.spec.gen),
            Self::Cotangent(g) | Self::HyperbolicCotangent(g) => Some(&g.spec.gen),
            Self::DelayedTrend(g) => Some(&g.spec.gen),
            Self::GvPowerNash(g) => Some(&g.spec.gen),
            Self::GvPowerCooperative(g) => Some(&g.spec.gen),
            Self::GvPowerAdversarial(g) => Some(&g.spec.gen),
        }
    }

    /// Number of player slots reported by verification (blocks count once).
    pub fn num_players(&self) -> usize {
        match self {
            Self::LogState(g) => g.spec.players.len(),
            Self::LogSquare(g) => g.spec.players.len(),
            Self::LegendreFenchel(g) => g.spec.players.len(),
            Self::GeometricGv(g) => g.spec.players.len(),
            Self::ControlledSwitching(g) => g.spec.players.len(),
            Self::QuadraticQuadratic(g) => g.spec.players.len(),
            Self::Cotangent(g) | Self::HyperbolicCotangent(g) => g.spec.players.len(),
            Self::DelayedTrend(_) => 1,
            Self::GvPowerNash(g) => g.spec.blocks.len(),
            Self::GvPowerCooperative(_) => 1,
            Self::GvPowerAdversarial(g) => g.spec.blocks.len(),
        }
    }

    /// Right-hand side of the backward coefficient system, all regimes
    /// stacked. Errors signal runtime guards (denominator sign flips).
    pub fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        match self {
            Self::LogState(g) => g.rhs(t, y, out),
            Self::LogSquare(g) => g.rhs(t, y, out),
            Self::LegendreFenchel(g) => g.rhs(t, y, out),
            Self::GeometricGv(g) => g.rhs(t, y, out),
            Self::ControlledSwitching(g) => g.rhs(t, y, out),
            Self::QuadraticQuadratic(g) => g.rhs(t, y, out),
            Self::Cotangent(g) | Self::HyperbolicCotangent(g) => g.rhs(t, y, out),
            Self::DelayedTrend(g) => g.rhs(t, y, out),
            Self::GvPowerNash(g) => g.rhs(t, y, out),
            Self::GvPowerCooperative(g) => g.rhs(t, y, out),
            Self::GvPowerAdversarial(g) => g.rhs(t, y, out),
        }
    }

    /// Terminal condition vector in layout order.
    pub fn terminal(&self) -> Vec<f64> {
        match self {
            Self::LogState(g) => g.terminal(),
            Self::LogSquare(g) => g.terminal(),
            Self::LegendreFenchel(g) => g.terminal(),
            Self::GeometricGv(g) => g.terminal(),
            Self::ControlledSwitching(g) => g.terminal(),
            Self::QuadraticQuadratic(g) => g.terminal(),
            Self::Cotangent(g) | Self::HyperbolicCotangent(g) => g.terminal(),
            Self::DelayedTrend(g) => g.terminal(),
            Self::GvPowerNash(g) => g.terminal(),
            Self::GvPowerCooperative(g) => g.terminal(),
            Self::GvPowerAdversarial(g) => g.terminal(),
        }
    }

    /// Analytic equilibrium value per player (per block for block games),
    /// evaluated from solved coefficient fields.
    pub fn value(&self, fields: &[RegimeField], init: &InitialState) -> Result<Vec<f64>> {
        match self {
            Self::LogState(g) => g.value(fields, init),
            Self::LogSquare(g) => g.value(fields, init),
            Self::LegendreFenchel(g) => g.value(fields, init),
            Self::GeometricGv(g) => g.value(fields, init),
            Self::ControlledSwitching(g) => g.value(fields, init),
            Self::QuadraticQuadratic(g) => g.value(fields, init),
            Self::Cotangent(g) | Self::HyperbolicCotangent(g) => g.value(fields, init),
            Self::DelayedTrend(g) => g.value(fields, init),
            Self::GvPowerNash(g) => g.value(fields, init),
            Self::GvPowerCooperative(g) => g.value(fields, init),
            Self::GvPowerAdversarial(g) => g.value(fields, init),
        }
    }
}

pub(crate) fn require(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::HypothesisViolation(msg.into()))
    }
}
