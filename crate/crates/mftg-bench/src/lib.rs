//! Shared bench instances.

use mftg_core::games::*;
use mftg_core::jump::JumpSpec;
use mftg_core::regime::RegimeGenerator;
use mftg_core::TimeGrid;

fn two_regimes() -> RegimeGenerator {
    RegimeGenerator::new(
        vec!["s_low".into(), "s_high".into()],
        vec![vec![0.0, 0.7], vec![0.4, 0.0]],
    )
    .unwrap()
}

pub fn gv_nash_bench_instance(steps: usize) -> GameDefinition {
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
        gen: two_regimes(),
        grid: TimeGrid::new(1.0, steps).unwrap(),
    })
    .unwrap()
}

pub fn quadratic_bench_instance(steps: usize) -> GameDefinition {
    build_quadratic_quadratic(QuadraticSpec {
        players: vec![QuadraticPlayer {
            q: Coeff::constant(0.5, 2),
            q_bar: Coeff::constant(0.4, 2),
            r: Coeff::constant(1.0, 2),
            r_bar: Coeff::constant(1.2, 2),
            eps1_std: 0.5,
            eps_bar_1: Coeff::constant(0.2, 2),
            eps_bar_2: Coeff::constant(0.3, 2),
            q_terminal: Coeff::per_regime(vec![1.0, 0.0]),
        }],
        sigma: Coeff::constant(0.4, 2),
        jumps: JumpSpec::exponential(5.0, 5.0).unwrap(),
        x0: 1.0,
        s0: 0,
        gen: two_regimes(),
        grid: TimeGrid::new(1.0, steps).unwrap(),
    })
    .unwrap()
}
