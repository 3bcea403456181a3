//! Shared instance builders for the integration and acceptance suites.

#![allow(dead_code)]

use mftg_core::games::*;
use mftg_core::jump::JumpSpec;
use mftg_core::regime::{ControlledSwitchRates, RegimeGenerator};
use mftg_core::TimeGrid;

pub fn two_regime_table() -> RegimeGenerator {
    RegimeGenerator::new(
        vec!["s_low".into(), "s_high".into()],
        vec![vec![0.0, 0.7], vec![0.4, 0.0]],
    )
    .unwrap()
}

pub fn grid(n: usize) -> TimeGrid {
    TimeGrid::new(1.0, n).unwrap()
}

/// Two-player log-state game on two regimes with jumps; exercises every term
/// of the alpha/delta system.
pub fn log_state_instance(n: usize) -> GameDefinition {
    build_log_state(LogStateSpec {
        players: vec![
            LogPlayer {
                q: Coeff::constant(1.0, 2),
                q_terminal: Coeff::per_regime(vec![0.5, 0.2]),
                r: Coeff::constant(1.0, 2),
                b2: Coeff::constant(1.0, 2),
            },
            LogPlayer {
                q: Coeff::constant(0.8, 2),
                q_terminal: Coeff::per_regime(vec![0.3, 0.4]),
                r: Coeff::constant(1.5, 2),
                b2: Coeff::constant(0.8, 2),
            },
        ],
        b1: Coeff::constant(0.2, 2),
        sigma: Coeff::constant(0.3, 2),
        k: 1,
        jumps: JumpSpec::exponential(5.0, 5.0).unwrap(),
        x0: 50.0,
        s0: 0,
        gen: two_regime_table(),
        grid: grid(n),
    })
    .unwrap()
}

/// Single-player log-state game with constant coefficients (grid-search oracle).
pub fn log_state_single(n: usize) -> GameDefinition {
    build_log_state(LogStateSpec {
        players: vec![LogPlayer {
            q: Coeff::constant(1.0, 1),
            q_terminal: Coeff::constant(0.5, 1),
            r: Coeff::constant(1.0, 1),
            b2: Coeff::constant(1.0, 1),
        }],
        b1: Coeff::constant(0.0, 1),
        sigma: Coeff::constant(0.4, 1),
        k: 1,
        jumps: JumpSpec::exponential(5.0, 5.0).unwrap(),
        x0: 50.0,
        s0: 0,
        gen: RegimeGenerator::single("s"),
        grid: grid(n),
    })
    .unwrap()
}

pub fn log_square_instance(n: usize) -> GameDefinition {
    build_log_square(LogSquareSpec {
        players: vec![
            LogPlayer {
                q: Coeff::constant(1.0, 2),
                q_terminal: Coeff::per_regime(vec![0.6, 0.3]),
                r: Coeff::constant(2.0, 2),
                b2: Coeff::constant(1.0, 2),
            },
            LogPlayer {
                q: Coeff::constant(0.7, 2),
                q_terminal: Coeff::per_regime(vec![0.2, 0.5]),
                r: Coeff::constant(1.0, 2),
                b2: Coeff::constant(0.6, 2),
            },
        ],
        b1: Coeff::constant(0.3, 2),
        x0: 40.0,
        s0: 0,
        gen: two_regime_table(),
        grid: grid(n),
    })
    .unwrap()
}

pub fn geometric_instance(n: usize) -> GameDefinition {
    build_geometric_gv(GeometricSpec {
        players: vec![
            GeometricPlayer {
                q: Coeff::constant(1.0, 2),
                q_terminal: Coeff::per_regime(vec![0.5, 0.3]),
                r: Coeff::constant(1.0, 2),
                b2: Coeff::constant(1.0, 2),
            },
            GeometricPlayer {
                q: Coeff::constant(1.0, 2),
                q_terminal: Coeff::per_regime(vec![0.4, 0.6]),
                r: Coeff::constant(2.0, 2),
                b2: Coeff::constant(0.5, 2),
            },
        ],
        b1: Coeff::constant(0.1, 2),
        k: 2,
        sigma: Coeff::constant(0.2, 2),
        sigma_o: Coeff::constant(0.15, 2),
        sigma_gv: Coeff::constant(0.3, 2),
        sigma_o_gv: Coeff::constant(0.2, 2),
        hurst: Some(0.8),
        jumps: JumpSpec::exponential(5.0, 5.0).unwrap(),
        jumps_common: JumpSpec::exponential(2.0, 5.0).unwrap(),
        x0: 2.0,
        s0: 0,
        gen: two_regime_table(),
        grid: grid(n),
    })
    .unwrap()
}

pub fn quadratic_instance(n: usize) -> GameDefinition {
    build_quadratic_quadratic(QuadraticSpec {
        players: vec![
            QuadraticPlayer {
                q: Coeff::constant(0.5, 2),
                q_bar: Coeff::constant(0.4, 2),
                r: Coeff::constant(1.0, 2),
                r_bar: Coeff::constant(1.2, 2),
                eps1_std: 0.5,
                eps_bar_1: Coeff::constant(0.2, 2),
                eps_bar_2: Coeff::constant(0.3, 2),
                q_terminal: Coeff::per_regime(vec![1.0, 0.0]),
            },
            QuadraticPlayer {
                q: Coeff::constant(0.3, 2),
                q_bar: Coeff::constant(0.6, 2),
                r: Coeff::constant(1.5, 2),
                r_bar: Coeff::constant(1.0, 2),
                eps1_std: 0.3,
                eps_bar_1: Coeff::constant(0.1, 2),
                eps_bar_2: Coeff::constant(0.2, 2),
                q_terminal: Coeff::per_regime(vec![0.5, 0.8]),
            },
        ],
        sigma: Coeff::constant(0.4, 2),
        jumps: JumpSpec::exponential(5.0, 5.0).unwrap(),
        x0: 1.0,
        s0: 0,
        gen: two_regime_table(),
        grid: grid(n),
    })
    .unwrap()
}

pub fn trig_spec(hyperbolic: bool, n: usize) -> TrigSpec {
    TrigSpec {
        players: vec![
            TrigPlayer {
                q: Coeff::constant(1.0, 2),
                q_bar: Coeff::constant(0.9, 2),
                b2: Coeff::constant(1.0, 2),
                b2_bar: Coeff::constant(0.8, 2),
            },
            TrigPlayer {
                q: Coeff::constant(0.8, 2),
                q_bar: Coeff::constant(0.7, 2),
                b2: Coeff::constant(0.7, 2),
                b2_bar: Coeff::constant(0.5, 2),
            },
        ],
        sigma: Coeff::constant(0.2, 2),
        xbar0: if hyperbolic { 1.0 } else { 1.8 },
        spread: if hyperbolic { 0.5 } else { 0.6 },
        s0: 0,
        gen: two_regime_table(),
        grid: grid(n),
    }
}

pub fn cotangent_instance(n: usize) -> GameDefinition {
    build_cotangent(trig_spec(false, n)).unwrap()
}

pub fn hyperbolic_instance(n: usize) -> GameDefinition {
    build_hyperbolic_cotangent(trig_spec(true, n)).unwrap()
}

/// Two-block Nash game with mixed exponents, jumps and Gauss-Volterra noise
/// (sigma_gv constant across regimes so the per-regime effective variance
/// matches the simulated fractional increments).
pub fn gv_nash_instance(n: usize) -> GameDefinition {
    build_gv_power_nash(GvPowerSpec {
        blocks: vec![
            GvBlock {
                count: 1,
                q: Coeff::constant(1.0, 2),
                q_bar: Coeff::constant(0.8, 2),
                q_terminal: Coeff::per_regime(vec![1.0, 0.5]),
                q_bar_terminal: Coeff::per_regime(vec![0.8, 0.4]),
                r: Coeff::constant(1.0, 2),
                r_bar: Coeff::constant(1.2, 2),
                b2: Coeff::constant(1.0, 2),
                b2_bar: Coeff::constant(0.8, 2),
                k: 1,
                k_bar: 1,
            },
            GvBlock {
                count: 1,
                q: Coeff::constant(0.8, 2),
                q_bar: Coeff::constant(1.0, 2),
                q_terminal: Coeff::per_regime(vec![0.6, 0.9]),
                q_bar_terminal: Coeff::per_regime(vec![0.5, 0.7]),
                r: Coeff::constant(1.5, 2),
                r_bar: Coeff::constant(1.0, 2),
                b2: Coeff::constant(0.7, 2),
                b2_bar: Coeff::constant(0.6, 2),
                k: 2,
                k_bar: 1,
            },
        ],
        b1: Coeff::constant(0.1, 2),
        b1_bar: Coeff::constant(-0.2, 2),
        sigma: Coeff::constant(0.25, 2),
        sigma_gv: Coeff::constant(0.3, 2),
        hurst: Some(0.8),
        jumps: JumpSpec::exponential(5.0, 5.0).unwrap(),
        xbar0: 1.0,
        spread: 0.7,
        s0: 0,
        gen: two_regime_table(),
        grid: grid(n),
    })
    .unwrap()
}

/// Symmetric 2-player spec shared by the Nash/cooperative dominance pair.
pub fn symmetric_pair_spec(n: usize) -> GvPowerSpec {
    GvPowerSpec {
        blocks: vec![GvBlock {
            count: 2,
            q: Coeff::constant(1.0, 1),
            q_bar: Coeff::constant(1.0, 1),
            q_terminal: Coeff::constant(1.0, 1),
            q_bar_terminal: Coeff::constant(1.0, 1),
            r: Coeff::constant(1.0, 1),
            r_bar: Coeff::constant(1.0, 1),
            b2: Coeff::constant(1.0, 1),
            b2_bar: Coeff::constant(1.0, 1),
            k: 1,
            k_bar: 1,
        }],
        b1: Coeff::constant(0.1, 1),
        b1_bar: Coeff::constant(0.05, 1),
        sigma: Coeff::constant(0.3, 1),
        sigma_gv: Coeff::constant(0.0, 1),
        hurst: None,
        jumps: JumpSpec::disabled(),
        xbar0: 1.0,
        spread: 0.5,
        s0: 0,
        gen: RegimeGenerator::single("s"),
        grid: grid(n),
    }
}

/// Hand-computed adversarial instance: one defender (r = 1), one attacker
/// (r = -2), k = kbar = 1, aggregate 1/2 > 0.
pub fn adversarial_instance(n: usize) -> GameDefinition {
    build_gv_power_adversarial(GvAdversarialSpec {
        blocks: vec![
            AdvBlock {
                count: 1,
                r: Coeff::constant(1.0, 1),
                r_bar: Coeff::constant(1.0, 1),
                b2: Coeff::constant(1.0, 1),
                b2_bar: Coeff::constant(1.0, 1),
            },
            AdvBlock {
                count: 1,
                r: Coeff::constant(-2.0, 1),
                r_bar: Coeff::constant(-2.0, 1),
                b2: Coeff::constant(1.0, 1),
                b2_bar: Coeff::constant(1.0, 1),
            },
        ],
        q: Coeff::constant(1.0, 1),
        q_bar: Coeff::constant(1.0, 1),
        q_terminal: Coeff::constant(1.0, 1),
        q_bar_terminal: Coeff::constant(1.0, 1),
        k: 1,
        k_bar: 1,
        b1: Coeff::constant(0.0, 1),
        b1_bar: Coeff::constant(0.0, 1),
        sigma: Coeff::constant(0.2, 1),
        sigma_gv: Coeff::constant(0.0, 1),
        hurst: None,
        jumps: JumpSpec::disabled(),
        xbar0: 1.0,
        spread: 0.5,
        s0: 0,
        gen: RegimeGenerator::single("s"),
        grid: grid(n),
    })
    .unwrap()
}

pub fn delay_instance(n: usize) -> GameDefinition {
    build_delayed_trend(DelaySpec {
        q: Coeff::constant(0.5, 1),
        q_terminal: Coeff::constant(0.2, 1),
        r1: Coeff::constant(1.0, 1),
        r1_bar: 1.0,
        b1: Coeff::constant(0.1, 1),
        b2: Coeff::constant(0.3, 1),
        eps: Coeff::constant(1.0, 1),
        sigma: 1.0,
        sigma_bar: 1.0,
        b2_bar: 0.0,
        b11_bar: 0.3,
        b13_bar: 0.2,
        rho: 0.5,
        lambda: 0.4,
        tau: 0.25,
        xbar0: 1.0,
        spread: 0.2,
        s0: 0,
        gen: RegimeGenerator::single("s"),
        grid: grid(n),
    })
    .unwrap()
}

pub fn switching_instance(n: usize, b1_std: f64) -> GameDefinition {
    let states = 2;
    let players = 2;
    let flat = |v: f64| vec![v; players * states * states];
    // off-diagonal baseline rates 0.6/0.35 split across the two players
    let mut bo = vec![0.0; players * states * states];
    let idx = |j: usize, s: usize, sp: usize| (j * states + s) * states + sp;
    bo[idx(0, 0, 1)] = 0.3;
    bo[idx(1, 0, 1)] = 0.3;
    bo[idx(0, 1, 0)] = 0.2;
    bo[idx(1, 1, 0)] = 0.15;
    let mut b2 = flat(0.0);
    b2[idx(0, 0, 1)] = 0.5;
    b2[idx(1, 0, 1)] = 0.4;
    b2[idx(0, 1, 0)] = 0.3;
    b2[idx(1, 1, 0)] = 0.6;
    let mut b2_bar = flat(0.0);
    b2_bar[idx(0, 0, 1)] = 0.4;
    b2_bar[idx(1, 0, 1)] = 0.2;
    b2_bar[idx(0, 1, 0)] = 0.5;
    b2_bar[idx(1, 1, 0)] = 0.3;
    let mut b1_bar = flat(0.0);
    b1_bar[idx(0, 0, 1)] = 0.1;
    b1_bar[idx(1, 1, 0)] = -0.1;
    let rates = ControlledSwitchRates::new(
        players,
        states,
        b2,
        b2_bar,
        b1_bar,
        bo,
        vec![b1_std; players],
    )
    .unwrap();
    build_controlled_switching(SwitchingSpec {
        players: vec![
            SwitchingPlayer {
                r: Coeff::constant(1.0, 2),
                r_bar: Coeff::constant(1.0, 2),
                eps: Coeff::constant(0.4, 2),
                q_terminal: Coeff::per_regime(vec![1.0, 0.3]),
            },
            SwitchingPlayer {
                r: Coeff::constant(1.5, 2),
                r_bar: Coeff::constant(1.2, 2),
                eps: Coeff::constant(-0.3, 2),
                q_terminal: Coeff::per_regime(vec![0.4, 0.9]),
            },
        ],
        rates,
        s0: 0,
        grid: grid(n),
    })
    .unwrap()
}

pub fn fenchel_instance(n: usize) -> GameDefinition {
    build_legendre_fenchel(FenchelSpec {
        players: vec![
            FenchelPlayer {
                q: Coeff::constant(1.0, 2),
                q_terminal: Coeff::per_regime(vec![0.5, 0.2]),
                b2: Coeff::constant(1.0, 2),
            },
            FenchelPlayer {
                q: Coeff::constant(0.7, 2),
                q_terminal: Coeff::per_regime(vec![0.3, 0.4]),
                b2: Coeff::constant(0.6, 2),
            },
        ],
        r: vec![
            vec![Coeff::constant(1.0, 2), Coeff::constant(0.4, 2)],
            vec![Coeff::constant(0.5, 2), Coeff::constant(1.2, 2)],
        ],
        b1: Coeff::constant(0.1, 2),
        sigma1: Coeff::constant(0.2, 2),
        sigma2: Coeff::constant(0.3, 2),
        loss: "power".into(),
        k: 1,
        kappa: 1.0,
        x0: 1.5,
        s0: 0,
        gen: two_regime_table(),
        grid: grid(n),
    })
    .unwrap()
}
