//! Backward-solver cross-checks against independent oracles: closed-form
//! Riccati solutions, matrix exponentials, fine-step refinement integrators
//! and generator-consistency finite differences.

mod common;

use mftg_core::games::*;
use mftg_core::jump::JumpSpec;
use mftg_core::regime::RegimeGenerator;
use mftg_core::solver::{integrate_backward, qq_alpha_explicit};
use mftg_core::{RegimeField, TimeGrid};

fn single(label: &str) -> RegimeGenerator {
    RegimeGenerator::single(label)
}

// ---------------------------------------------------------------------------
// log-state

#[test]
fn log_state_alpha_linear_when_uncoupled() {
    // b1 = 0, q = 1, q(T) = 0: alphadot = -1 backward gives alpha(t) = T - t
    let def = build_log_state(LogStateSpec {
        players: vec![LogPlayer {
            q: Coeff::constant(1.0, 1),
            q_terminal: Coeff::constant(0.0, 1),
            r: Coeff::constant(1.0, 1),
            b2: Coeff::constant(1.0, 1),
        }],
        b1: Coeff::constant(0.0, 1),
        sigma: Coeff::constant(0.0, 1),
        k: 1,
        jumps: JumpSpec::disabled(),
        x0: 50.0,
        s0: 0,
        gen: single("s"),
        grid: TimeGrid::new(1.0, 100).unwrap(),
    })
    .unwrap();
    let sol = integrate_backward(&def, def.grid()).unwrap();
    let alpha = sol.field("alpha_0").unwrap();
    for n in 0..=100 {
        let t = n as f64 / 100.0;
        assert!((alpha.eval(t, 0) - (1.0 - t)).abs() < 1e-12);
    }
}

#[test]
fn log_state_delta_matches_quadrature_oracle() {
    // I = 1, k = 1, constants, b1 = 0 so alpha(t) = q (T - t) + q_T is linear
    // and delta(0) has the closed quadrature
    //   delta(0) = I1 (sigma^2/2 - jlog) - I2 b^2/(4 r)
    // with I1 = int alpha, I2 = int alpha^2. Frozen from an independent
    // high-resolution quadrature: -0.161255509618066 for
    // q=1, q_T=0.5, sigma=0.4, r=1, b=1, jumps (c=5, decay=5).
    let def = build_log_state(LogStateSpec {
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
        gen: single("s"),
        grid: TimeGrid::new(1.0, 2000).unwrap(),
    })
    .unwrap();
    let sol = integrate_backward(&def, def.grid()).unwrap();
    let delta0 = sol.field("delta_0").unwrap().at_node(0, 0);
    assert!(
        (delta0 - (-0.161255509618066)).abs() < 1e-8,
        "delta(0) = {delta0}"
    );
}

#[test]
fn log_state_k1_reduction_terms() {
    // for k = 1 the completed-square and cross terms must equal
    // b^2 alpha^2 / (4 r) and (alpha/2) sum b_j^2 alpha_j / r_j
    let def = common::log_state_instance(100);
    let y = def.terminal();
    let mut out = vec![0.0; y.len()];
    def.rhs(1.0, &y, &mut out).unwrap();
    if let GameDefinition::LogState(g) = &def {
        let s = 0;
        let jlog = g.spec.jumps.moment_log();
        let sig = g.spec.sigma.get(s);
        for i in 0..2 {
            let p = &g.spec.players[i];
            let a = p.q_terminal.get(s);
            let own = p.b2.get(s).powi(2) * a * a / (4.0 * p.r.get(s));
            let j = 1 - i;
            let pj = &g.spec.players[j];
            let aj = pj.q_terminal.get(s);
            let cross = 0.5 * a * pj.b2.get(s).powi(2) * aj / pj.r.get(s);
            let sw = g.spec.gen.switching_sum(1.0, s, |sp| {
                // delta terminal is zero in every regime
                let _ = sp;
                0.0
            });
            let expected = -a * (0.5 * sig * sig - jlog) - sw + own + cross;
            let delta_dot = out[def.layout().idx(2 * i + 1, s)];
            assert!(
                (delta_dot - expected).abs() < 1e-13,
                "player {i}: {delta_dot} vs {expected}"
            );
        }
    } else {
        panic!("wrong variant");
    }
}

// ---------------------------------------------------------------------------
// log-square

#[test]
fn log_square_scalar_riccati_closed_form() {
    // alphadot = -1 - 0.6 alpha + alpha^2/2, alpha(1) = 0.5:
    // frozen partial-fraction closed form alpha(0) = 1.531297398601926
    let def = build_log_square(LogSquareSpec {
        players: vec![LogPlayer {
            q: Coeff::constant(1.0, 1),
            q_terminal: Coeff::constant(0.5, 1),
            r: Coeff::constant(2.0, 1),
            b2: Coeff::constant(1.0, 1),
        }],
        b1: Coeff::constant(0.3, 1),
        x0: 40.0,
        s0: 0,
        gen: single("s"),
        grid: TimeGrid::new(1.0, 1000).unwrap(),
    })
    .unwrap();
    let sol = integrate_backward(&def, def.grid()).unwrap();
    let a0 = sol.fields[0].at_node(0, 0);
    assert!((a0 - 1.531297398601926).abs() < 1e-8, "alpha(0) = {a0}");
}

#[test]
fn log_square_symmetric_terminal_kills_switching() {
    // equal terminals across regimes, couplings zero: alpha regime-constant
    let def = build_log_square(LogSquareSpec {
        players: vec![LogPlayer {
            q: Coeff::constant(1.0, 2),
            q_terminal: Coeff::constant(0.4, 2),
            r: Coeff::constant(1.0, 2),
            b2: Coeff::constant(0.0, 2),
        }],
        b1: Coeff::constant(0.0, 2),
        x0: 40.0,
        s0: 0,
        gen: common::two_regime_table(),
        grid: TimeGrid::new(1.0, 200).unwrap(),
    })
    .unwrap();
    let sol = integrate_backward(&def, def.grid()).unwrap();
    for n in 0..=200 {
        let d = (sol.fields[0].at_node(n, 0) - sol.fields[0].at_node(n, 1)).abs();
        assert!(d < 1e-12, "regime asymmetry {d} at node {n}");
    }
}

// ---------------------------------------------------------------------------
// Legendre-Fenchel

#[test]
fn fenchel_delta_closed_form() {
    // sigma1 = 0, no switching: delta identically zero
    let mut spec = match common::fenchel_instance(100) {
        GameDefinition::LegendreFenchel(g) => g.spec,
        _ => unreachable!(),
    };
    spec.sigma1 = Coeff::constant(0.0, 2);
    spec.gen = RegimeGenerator::new(
        vec!["a".into(), "b".into()],
        vec![vec![0.0, 0.0], vec![0.0, 0.0]],
    )
    .unwrap();
    let def = build_legendre_fenchel(spec).unwrap();
    let sol = integrate_backward(&def, def.grid()).unwrap();
    assert!(sol.field("delta_0").unwrap().max_abs() < 1e-14);
    assert!(sol.field("delta_1").unwrap().max_abs() < 1e-14);
}

// ---------------------------------------------------------------------------
// geometric Gauss-Volterra

#[test]
fn geometric_k1_scalar_hamilton_jacobi_closed_form() {
    // k=1, q=1, q_T=0, b1=0, b2=1, r=1, no noise: the scalar equation
    // alphadot = -1 + alpha^2 (the one-shot bracket at u* annuls exactly)
    // has alpha(0) = tanh(1); verified independently by simulating the
    // controlled dynamics, whose cost under the feedback equals alpha(0) x0.
    let def = build_geometric_gv(GeometricSpec {
        players: vec![GeometricPlayer {
            q: Coeff::constant(1.0, 1),
            q_terminal: Coeff::constant(0.0, 1),
            r: Coeff::constant(1.0, 1),
            b2: Coeff::constant(1.0, 1),
        }],
        b1: Coeff::constant(0.0, 1),
        k: 1,
        sigma: Coeff::constant(0.0, 1),
        sigma_o: Coeff::constant(0.0, 1),
        sigma_gv: Coeff::constant(0.0, 1),
        sigma_o_gv: Coeff::constant(0.0, 1),
        hurst: None,
        jumps: JumpSpec::disabled(),
        jumps_common: JumpSpec::disabled(),
        x0: 50.0,
        s0: 0,
        gen: single("s"),
        grid: TimeGrid::new(1.0, 1000).unwrap(),
    })
    .unwrap();
    let sol = integrate_backward(&def, def.grid()).unwrap();
    let a0 = sol.fields[0].at_node(0, 0);
    assert!((a0 - 1f64.tanh()).abs() < 1e-10, "alpha(0) = {a0}");
}

#[test]
fn geometric_matches_fine_step_backward_euler_oracle() {
    // I = 1, k = 1, constants, GV via the H = 0.8 fast path: RK4 alpha(0)
    // against an independent N = 1e6 backward Euler integrator
    let spec = GeometricSpec {
        players: vec![GeometricPlayer {
            q: Coeff::constant(1.0, 1),
            q_terminal: Coeff::constant(0.5, 1),
            r: Coeff::constant(1.0, 1),
            b2: Coeff::constant(1.0, 1),
        }],
        b1: Coeff::constant(0.1, 1),
        k: 1,
        sigma: Coeff::constant(0.2, 1),
        sigma_o: Coeff::constant(0.0, 1),
        sigma_gv: Coeff::constant(0.4, 1),
        sigma_o_gv: Coeff::constant(0.0, 1),
        hurst: Some(0.8),
        jumps: JumpSpec::disabled(),
        jumps_common: JumpSpec::disabled(),
        x0: 50.0,
        s0: 0,
        gen: single("s"),
        grid: TimeGrid::new(1.0, 1000).unwrap(),
    };
    let def = build_geometric_gv(spec).unwrap();
    let sol = integrate_backward(&def, def.grid()).unwrap();
    let a0 = sol.fields[0].at_node(0, 0);

    // independent oracle: explicit backward Euler at N = 1e6 on the same rhs
    // expression written out directly
    let n = 1_000_000usize;
    let dt = 1.0 / n as f64;
    let mut a = 0.5f64;
    let (q, b1, b2, r, sig, sgv, h) = (1.0, 0.1, 1.0, 1.0, 0.2, 0.4, 0.8);
    for i in (0..n).rev() {
        let t = (i as f64 + 1.0) * dt;
        let tc: f64 = t.max(1e-4 * 0.1);
        let sigma2 = sig * sig + sgv * sgv * 2.0 * h * tc.powf(2.0 * h - 1.0);
        let gain: f64 = -a * b2 / r;
        let adot = -q - a * sigma2 - 2.0 * b1 * a + r * gain * gain;
        a -= dt * adot;
    }
    assert!((a0 - a).abs() < 1e-6, "rk4 {a0} vs euler oracle {a}");
}

// ---------------------------------------------------------------------------
// controlled switching

#[test]
fn switching_linear_case_matches_matrix_exponential() {
    // all b and eps zero except bo_bar: Vdot_i = -sum (V(s')-V(s)) bo(ss'),
    // a two-state linear system with the closed-form exponential
    let def = {
        use mftg_core::regime::ControlledSwitchRates;
        let states = 2;
        let flat = vec![0.0; states * states];
        let mut bo = vec![0.0; states * states];
        bo[1] = 0.6; // s0 -> s1
        bo[2] = 0.35; // s1 -> s0
        let rates = ControlledSwitchRates::new(
            1,
            states,
            flat.clone(),
            flat.clone(),
            flat,
            bo,
            vec![0.0],
        )
        .unwrap();
        build_controlled_switching(SwitchingSpec {
            players: vec![SwitchingPlayer {
                r: Coeff::constant(1.0, 2),
                r_bar: Coeff::constant(1.0, 2),
                eps: Coeff::constant(0.0, 2),
                q_terminal: Coeff::per_regime(vec![1.0, 0.0]),
            }],
            rates,
            s0: 0,
            grid: TimeGrid::new(1.0, 1000).unwrap(),
        })
        .unwrap()
    };
    let sol = integrate_backward(&def, def.grid()).unwrap();
    // closed form of exp(tau Q) for the 2-state generator (a, b) = (0.6, 0.35)
    let (a, b) = (0.6, 0.35);
    for node in [0usize, 250, 700, 1000] {
        let tau = 1.0 - node as f64 / 1000.0;
        let dec = (-(a + b) * tau).exp();
        let want0 = (b + a * dec) / (a + b); // row s0 applied to terminal (1, 0)
        let want1 = b * (1.0 - dec) / (a + b);
        assert!((sol.fields[0].at_node(node, 0) - want0).abs() < 1e-8);
        assert!((sol.fields[0].at_node(node, 1) - want1).abs() < 1e-8);
    }
}

// ---------------------------------------------------------------------------
// quadratic-quadratic

#[test]
fn qq_backward_matches_closed_form_exponential() {
    let def = common::quadratic_instance(1000);
    let sol = integrate_backward(&def, def.grid()).unwrap();
    // player 0 terminal (1, 0): frozen closed form of the 2-state chain
    let a0 = sol.fields[0].at_node(0, 0);
    let a1 = sol.fields[0].at_node(0, 1);
    assert!((a0 - 0.575463416898778).abs() < 1e-9, "alpha(0,s0) = {a0}");
    assert!((a1 - 0.242592333200698).abs() < 1e-9, "alpha(0,s1) = {a1}");
    // and the matrix-exponential fast path agrees everywhere
    let gen = def.generator().unwrap();
    let explicit = qq_alpha_explicit(gen, &[1.0, 0.0], def.grid()).unwrap();
    let mut worst = 0.0f64;
    for n in 0..=1000 {
        for s in 0..2 {
            worst = worst.max((explicit.at_node(n, s) - sol.fields[0].at_node(n, s)).abs());
        }
    }
    assert!(worst < 1e-8, "explicit vs RK4 deviation {worst}");
}

#[test]
fn qq_zero_incentives_value_is_alpha_x0() {
    let mut spec = match common::quadratic_instance(400) {
        GameDefinition::QuadraticQuadratic(g) => g.spec,
        _ => unreachable!(),
    };
    for p in spec.players.iter_mut() {
        p.eps1_std = 0.0;
        p.eps_bar_1 = Coeff::constant(0.0, 2);
        p.eps_bar_2 = Coeff::constant(0.0, 2);
    }
    let x0 = spec.x0;
    let def = build_quadratic_quadratic(spec).unwrap();
    let sol = integrate_backward(&def, def.grid()).unwrap();
    let init = InitialState::deterministic(x0, 0);
    let vals = def.value(&sol.fields, &init).unwrap();
    for (i, v) in vals.iter().enumerate() {
        let want = sol.fields[i].at_node(0, 0) * x0;
        assert!((v - want).abs() < 1e-12, "player {i}: {v} vs {want}");
    }
}

// ---------------------------------------------------------------------------
// trigonometric

#[test]
fn cotangent_linear_closed_form() {
    // single regime, sigma = 0, b = 0: alphadot = -q + alpha/4 with zero
    // terminal has alpha(t) = 4q (1 - e^{(t-T)/4})
    let mut spec = common::trig_spec(false, 1000);
    spec.players.truncate(1);
    spec.players[0].b2 = Coeff::constant(0.0, 2);
    spec.players[0].b2_bar = Coeff::constant(0.0, 2);
    spec.players[0].q = Coeff::constant(1.0, 2);
    spec.players[0].q_bar = Coeff::constant(1.0, 2);
    spec.sigma = Coeff::constant(0.0, 2);
    spec.gen = RegimeGenerator::new(
        vec!["a".into(), "b".into()],
        vec![vec![0.0, 0.0], vec![0.0, 0.0]],
    )
    .unwrap();
    let def = build_cotangent(spec).unwrap();
    let sol = integrate_backward(&def, def.grid()).unwrap();
    for node in [0usize, 333, 789] {
        let t = node as f64 / 1000.0;
        let want = 4.0 * (1.0 - ((t - 1.0) / 4.0).exp());
        let got = sol.fields[0].at_node(node, 0);
        assert!((got - want).abs() < 1e-8, "t={t}: {got} vs {want}");
    }
    assert!((sol.fields[0].at_node(0, 0) - 0.884796867714380).abs() < 1e-9);
}

#[test]
fn hyperbolic_linear_closed_form() {
    // alphadot = -q - alpha/4: alpha(t) = 4q (e^{(T-t)/4} - 1)
    let mut spec = common::trig_spec(true, 1000);
    spec.players.truncate(1);
    spec.players[0].b2 = Coeff::constant(0.0, 2);
    spec.players[0].b2_bar = Coeff::constant(0.0, 2);
    spec.players[0].q = Coeff::constant(1.0, 2);
    spec.players[0].q_bar = Coeff::constant(1.0, 2);
    spec.sigma = Coeff::constant(0.0, 2);
    spec.gen = RegimeGenerator::new(
        vec!["a".into(), "b".into()],
        vec![vec![0.0, 0.0], vec![0.0, 0.0]],
    )
    .unwrap();
    let def = build_hyperbolic_cotangent(spec).unwrap();
    let sol = integrate_backward(&def, def.grid()).unwrap();
    let a0 = sol.fields[0].at_node(0, 0);
    assert!((a0 - 1.136101666750966).abs() < 1e-9, "alpha(0) = {a0}");
}

// ---------------------------------------------------------------------------
// Gauss-Volterra power family

#[test]
fn gv_nash_k1_scalar_riccati_closed_form() {
    // single player, k = kbar = 1, q = 1, q_T = 1, b1 = 0.2, sigma = 0.5,
    // r = b2 = 1: alphadot = -1 - 0.65 alpha + alpha^2, alpha(1) = 1;
    // frozen closed forms alpha(0) = 1.321949056946325 and (for the barred
    // system with qb = 1, b1b = 0.1, rb = 2) abar(0) = 1.447430974798347.
    let def = build_gv_power_nash(GvPowerSpec {
        blocks: vec![GvBlock {
            count: 1,
            q: Coeff::constant(1.0, 1),
            q_bar: Coeff::constant(1.0, 1),
            q_terminal: Coeff::constant(1.0, 1),
            q_bar_terminal: Coeff::constant(1.0, 1),
            r: Coeff::constant(1.0, 1),
            r_bar: Coeff::constant(2.0, 1),
            b2: Coeff::constant(1.0, 1),
            b2_bar: Coeff::constant(1.0, 1),
            k: 1,
            k_bar: 1,
        }],
        b1: Coeff::constant(0.2, 1),
        b1_bar: Coeff::constant(0.1, 1),
        sigma: Coeff::constant(0.5, 1),
        sigma_gv: Coeff::constant(0.0, 1),
        hurst: None,
        jumps: JumpSpec::disabled(),
        xbar0: 1.0,
        spread: 0.5,
        s0: 0,
        gen: single("s"),
        grid: TimeGrid::new(1.0, 1000).unwrap(),
    })
    .unwrap();
    let sol = integrate_backward(&def, def.grid()).unwrap();
    let a0 = sol.fields[0].at_node(0, 0);
    let ab0 = sol.fields[1].at_node(0, 0);
    assert!((a0 - 1.321949056946325).abs() < 1e-8, "alpha(0) = {a0}");
    assert!((ab0 - 1.447430974798347).abs() < 1e-8, "abar(0) = {ab0}");
}

#[test]
fn adversarial_matches_refinement_oracle() {
    // hand-computed aggregate 1/2: with q = q_T = 1, sigma = 0, b1 = 0 the
    // equation is alphadot = -1 + alpha^2/2, alpha(1) = 1; frozen closed form
    let mut spec = match common::adversarial_instance(1000) {
        GameDefinition::GvPowerAdversarial(g) => g.spec,
        _ => unreachable!(),
    };
    spec.sigma = Coeff::constant(0.0, 1);
    let def = build_gv_power_adversarial(spec).unwrap();
    let sol = integrate_backward(&def, def.grid()).unwrap();
    let a0 = sol.fields[0].at_node(0, 0);
    assert!((a0 - 1.300957694985476).abs() < 1e-8, "alpha_ad(0) = {a0}");
}

#[test]
fn adversarial_without_attackers_reduces_to_cooperative() {
    // I_minus empty and shared q: the adversarial system equals the
    // cooperative system for one defender
    let adv = build_gv_power_adversarial(GvAdversarialSpec {
        blocks: vec![AdvBlock {
            count: 1,
            r: Coeff::constant(1.0, 1),
            r_bar: Coeff::constant(1.0, 1),
            b2: Coeff::constant(1.0, 1),
            b2_bar: Coeff::constant(1.0, 1),
        }],
        q: Coeff::constant(1.0, 1),
        q_bar: Coeff::constant(1.0, 1),
        q_terminal: Coeff::constant(1.0, 1),
        q_bar_terminal: Coeff::constant(1.0, 1),
        k: 1,
        k_bar: 1,
        b1: Coeff::constant(0.1, 1),
        b1_bar: Coeff::constant(0.1, 1),
        sigma: Coeff::constant(0.3, 1),
        sigma_gv: Coeff::constant(0.0, 1),
        hurst: None,
        jumps: JumpSpec::disabled(),
        xbar0: 1.0,
        spread: 0.5,
        s0: 0,
        gen: single("s"),
        grid: TimeGrid::new(1.0, 400).unwrap(),
    })
    .unwrap();
    let coop = build_gv_power_cooperative(GvPowerSpec {
        blocks: vec![GvBlock {
            count: 1,
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
        b1_bar: Coeff::constant(0.1, 1),
        sigma: Coeff::constant(0.3, 1),
        sigma_gv: Coeff::constant(0.0, 1),
        hurst: None,
        jumps: JumpSpec::disabled(),
        xbar0: 1.0,
        spread: 0.5,
        s0: 0,
        gen: single("s"),
        grid: TimeGrid::new(1.0, 400).unwrap(),
    })
    .unwrap();
    let sa = integrate_backward(&adv, adv.grid()).unwrap();
    let sc = integrate_backward(&coop, coop.grid()).unwrap();
    for n in [0usize, 100, 399] {
        assert!((sa.fields[0].at_node(n, 0) - sc.fields[0].at_node(n, 0)).abs() < 1e-12);
        assert!((sa.fields[1].at_node(n, 0) - sc.fields[1].at_node(n, 0)).abs() < 1e-12);
    }
}

#[test]
fn symmetric_cooperative_riccati_oracle() {
    // symmetric 2-player, k = kbar = 1: the aggregate Riccati
    //   alphadot = -2 q - 2 b1 a - a sigma^2 + 2 b^2 a^2 / r, alpha(T) = 2 q_T
    // matched against a fine-step backward Euler refinement oracle
    let spec = common::symmetric_pair_spec(1000);
    let def = build_gv_power_cooperative(spec).unwrap();
    let sol = integrate_backward(&def, def.grid()).unwrap();
    let a0 = sol.fields[0].at_node(0, 0);
    let euler = |n: usize| {
        let dt = 1.0 / n as f64;
        let mut a = 2.0f64;
        for _ in 0..n {
            let adot = -2.0 - 2.0 * 0.1 * a - a * 0.09 + 2.0 * a * a;
            a -= dt * adot;
        }
        a
    };
    // Richardson-extrapolated backward Euler kills the O(dt) term
    let oracle = 2.0 * euler(2_000_000) - euler(1_000_000);
    assert!((a0 - oracle).abs() < 1e-8, "rk4 {a0} vs oracle {oracle}");
}

// ---------------------------------------------------------------------------
// generator-consistency spot checks: the coefficient rhs must agree with the
// guess-functional drift identity at random states

#[test]
fn generator_consistency_log_state() {
    let def = common::log_state_instance(100);
    let g = match &def {
        GameDefinition::LogState(g) => g,
        _ => unreachable!(),
    };
    let layout = def.layout();
    let t = 0.37;
    // coefficient values and their time-derivatives from the rhs
    let y: Vec<f64> = (0..layout.dim()).map(|i| 0.3 + 0.1 * i as f64).collect();
    let mut dy = vec![0.0; layout.dim()];
    def.rhs(t, &y, &mut dy).unwrap();
    for s in 0..2 {
        for x in [31.0f64, 57.3] {
            let gains: Vec<f64> = (0..2)
                .map(|j| g.gain(y[layout.idx(2 * j, s)], j, s))
                .collect();
            for i in 0..2 {
                let p = &g.spec.players[i];
                let a = y[layout.idx(2 * i, s)];
                // f = -alpha ln x + delta; identity:
                // df/dt + G f + running = 0 at u = u*
                let dfdt = -dy[layout.idx(2 * i, s)] * x.ln() + dy[layout.idx(2 * i + 1, s)];
                let drift = g.spec.b1.get(s) * x * x.ln()
                    + x * (0..2)
                        .map(|j| g.spec.players[j].b2.get(s) * gains[j])
                        .sum::<f64>();
                let sig = g.spec.sigma.get(s);
                let f_x = -a / x;
                let f_xx = a / (x * x);
                // jump part: f(x(1+theta)) - f(x) + alpha theta integrated
                let jump = -a * g.spec.jumps.moment_log();
                let sw = g.spec.gen.switching_sum(t, s, |sp| {
                    -y[layout.idx(2 * i, sp)] * x.ln() + y[layout.idx(2 * i + 1, sp)]
                });
                let running = -p.q.get(s) * x.ln() + p.r.get(s) * gains[i].powi(2);
                let total =
                    dfdt + f_x * drift + 0.5 * sig * sig * x * x * f_xx + jump + sw + running;
                assert!(
                    total.abs() < 1e-9 * (1.0 + running.abs()),
                    "identity residual {total} at s={s} x={x} player {i}"
                );
            }
        }
    }
}

#[test]
fn generator_consistency_log_square() {
    let def = common::log_square_instance(100);
    let g = match &def {
        GameDefinition::LogSquare(g) => g,
        _ => unreachable!(),
    };
    let layout = def.layout();
    let t = 0.61;
    let y: Vec<f64> = (0..layout.dim()).map(|i| 0.4 + 0.07 * i as f64).collect();
    let mut dy = vec![0.0; layout.dim()];
    def.rhs(t, &y, &mut dy).unwrap();
    for s in 0..2 {
        for x in [33.0f64, 48.0] {
            let coeffs: Vec<f64> = (0..2)
                .map(|j| g.gain_coeff(y[layout.idx(j, s)], j, s))
                .collect();
            for i in 0..2 {
                let p = &g.spec.players[i];
                let a = y[layout.idx(i, s)];
                let dfdt = dy[layout.idx(i, s)] * x.ln() * x.ln();
                let drift = g.spec.b1.get(s) * x * x.ln()
                    + x * x.ln()
                        * (0..2)
                            .map(|j| g.spec.players[j].b2.get(s) * coeffs[j])
                            .sum::<f64>();
                let f_x = 2.0 * a * x.ln() / x;
                let sw = g
                    .spec
                    .gen
                    .switching_sum(t, s, |sp| y[layout.idx(i, sp)] * x.ln() * x.ln());
                let running =
                    p.q.get(s) * x.ln() * x.ln() + p.r.get(s) * (coeffs[i] * x.ln()).powi(2);
                let total = dfdt + f_x * drift + sw + running;
                assert!(
                    total.abs() < 1e-9 * (1.0 + running.abs()),
                    "identity residual {total} at s={s} x={x} player {i}"
                );
            }
        }
    }
}

#[test]
fn generator_consistency_gv_nash() {
    let def = common::gv_nash_instance(100);
    let g = match &def {
        GameDefinition::GvPowerNash(g) => g,
        _ => unreachable!(),
    };
    let layout = def.layout();
    let t = 0.45;
    let y: Vec<f64> = (0..layout.dim()).map(|i| 0.5 + 0.09 * i as f64).collect();
    let mut dy = vec![0.0; layout.dim()];
    def.rhs(t, &y, &mut dy).unwrap();
    for s in 0..2 {
        let (zeta, xbar) = (0.8f64, 1.3f64);
        let gains: Vec<f64> = (0..2).map(|b| g.gain(y[layout.idx(2 * b, s)], b, s)).collect();
        let bars: Vec<f64> = (0..2)
            .map(|b| g.bar_gain(y[layout.idx(2 * b + 1, s)], b, s))
            .collect();
        let drift_zeta = (g.spec.b1.get(s)
            + (0..2)
                .map(|c| g.spec.blocks[c].b2.get(s) * gains[c])
                .sum::<f64>())
            * zeta;
        let drift_xbar = (g.spec.b1_bar.get(s)
            + (0..2)
                .map(|c| g.spec.blocks[c].b2_bar.get(s) * bars[c])
                .sum::<f64>())
            * xbar;
        let sig = g.spec.sigma.get(s);
        let sgv = g.spec.sigma_gv.get(s);
        let load = sig * sig + sgv * sgv * 2.0 * 0.8 * t.powf(0.6);
        for b in 0..2 {
            let blk = &g.spec.blocks[b];
            let (tk, tkb) = (2 * blk.k as i32, 2 * blk.k_bar as i32);
            let a = y[layout.idx(2 * b, s)];
            let ab = y[layout.idx(2 * b + 1, s)];
            let dfdt = dy[layout.idx(2 * b, s)] * zeta.powi(tk) / f64::from(tk as u32)
                + dy[layout.idx(2 * b + 1, s)] * xbar.powi(tkb) / f64::from(tkb as u32);
            let f_zeta = a * zeta.powi(tk - 1);
            let f_xbar = ab * xbar.powi(tkb - 1);
            let second = 0.5
                * load
                * zeta.powi(2)
                * a
                * f64::from(tk as u32 - 1)
                * zeta.powi(tk - 2);
            let jump = a * g.spec.jumps.moment_power(blk.k).unwrap() * zeta.powi(tk)
                / f64::from(tk as u32);
            let sw = g.spec.gen.switching_sum(t, s, |sp| {
                y[layout.idx(2 * b, sp)] * zeta.powi(tk) / f64::from(tk as u32)
                    + y[layout.idx(2 * b + 1, sp)] * xbar.powi(tkb) / f64::from(tkb as u32)
            });
            let running = blk.q.get(s) * zeta.powi(tk) / f64::from(tk as u32)
                + blk.r.get(s) * (gains[b] * zeta).powi(tk) / f64::from(tk as u32)
                + blk.q_bar.get(s) * xbar.powi(tkb) / f64::from(tkb as u32)
                + blk.r_bar.get(s) * (bars[b] * xbar).powi(tkb) / f64::from(tkb as u32);
            let total = dfdt + f_zeta * drift_zeta + f_xbar * drift_xbar + second + jump + sw
                + running;
            assert!(
                total.abs() < 1e-9 * (1.0 + running.abs()),
                "identity residual {total} at s={s} block {b}"
            );
        }
    }
}

// ---------------------------------------------------------------------------
// determinism and blow-up diagnostics

#[test]
fn solves_are_bitwise_deterministic() {
    let def = common::gv_nash_instance(300);
    let a = integrate_backward(&def, def.grid()).unwrap();
    let b = integrate_backward(&def, def.grid()).unwrap();
    assert_eq!(a.fields, b.fields);
}

#[test]
fn blow_up_reports_escape_time() {
    // tiny r with huge gain forces the power term through the escape bound
    let def = build_gv_power_nash(GvPowerSpec {
        blocks: vec![GvBlock {
            count: 1,
            q: Coeff::constant(1.0, 1),
            q_bar: Coeff::constant(1.0, 1),
            q_terminal: Coeff::constant(5.0, 1),
            q_bar_terminal: Coeff::constant(1.0, 1),
            r: Coeff::constant(1e-4, 1),
            r_bar: Coeff::constant(1.0, 1),
            b2: Coeff::constant(-40.0, 1),
            b2_bar: Coeff::constant(0.0, 1),
            k: 1,
            k_bar: 1,
        }],
        b1: Coeff::constant(0.0, 1),
        b1_bar: Coeff::constant(0.0, 1),
        sigma: Coeff::constant(0.0, 1),
        sigma_gv: Coeff::constant(0.0, 1),
        hurst: None,
        jumps: JumpSpec::disabled(),
        xbar0: 1.0,
        spread: 0.5,
        s0: 0,
        gen: single("s"),
        grid: TimeGrid::new(1.0, 1000).unwrap(),
    })
    .unwrap();
    // b2 < 0 with alpha > 0 makes the gain positive and r tiny amplifies the
    // power term: -b2 alpha / r = 40 alpha / 1e-4, alphadot ~ +r gain^2 blows
    let err = integrate_backward(&def, def.grid());
    match err {
        Err(mftg_core::Error::BlowUp { time, component, .. }) => {
            assert!(time < 1.0);
            assert!(component.starts_with("alpha"));
        }
        other => panic!("expected BlowUp, got {other:?}"),
    }
}

#[test]
fn positivity_report_flags_synthetic_negative() {
    use mftg_core::solver::{positivity_report, SolveDiagnostics, SolvedCoefficients};
    let def = common::log_state_instance(10);
    let grid = *def.grid();
    let mut fields = vec![
        RegimeField::constant(grid, 2, 1.0),
        RegimeField::constant(grid, 2, 0.5),
        RegimeField::constant(grid, 2, 0.2),
        RegimeField::constant(grid, 2, 0.1),
    ];
    fields[2].set_node(3, 1, -0.5); // alpha_1 dips negative
    let sol = SolvedCoefficients {
        layout: def.layout().clone(),
        grid,
        fields,
        diagnostics: SolveDiagnostics {
            steps: 10,
            max_abs: 1.0,
            component_min: vec![1.0, 0.5, -0.5, 0.1],
            terminal_residual: 0.0,
            refinement_change: 0.0,
            refined: false,
            fast_path: false,
        },
    };
    let report = positivity_report(&sol);
    assert!(!report.clean());
    let flagged: Vec<_> = report
        .components
        .iter()
        .filter(|c| c.2)
        .map(|c| c.0.clone())
        .collect();
    assert_eq!(flagged, vec!["alpha_1".to_string()]);
}

#[test]
fn scalar_riccati_tangent_substitution_oracle() {
    // alphadot = -1 - alpha + alpha^2, alpha(T) = 0: the gv-power system with
    // q = 1, q_T = 0, b1 = 0.5, sigma = 0, b2 = r = 1 reduces to exactly this
    // equation; frozen partial-fraction (tangent-substitution) closed form
    let def = build_gv_power_nash(GvPowerSpec {
        blocks: vec![GvBlock {
            count: 1,
            q: Coeff::constant(1.0, 1),
            q_bar: Coeff::constant(1.0, 1),
            q_terminal: Coeff::constant(0.0, 1),
            q_bar_terminal: Coeff::constant(1.0, 1),
            r: Coeff::constant(1.0, 1),
            r_bar: Coeff::constant(1.0, 1),
            b2: Coeff::constant(1.0, 1),
            b2_bar: Coeff::constant(1.0, 1),
            k: 1,
            k_bar: 1,
        }],
        b1: Coeff::constant(0.5, 1),
        b1_bar: Coeff::constant(0.0, 1),
        sigma: Coeff::constant(0.0, 1),
        sigma_gv: Coeff::constant(0.0, 1),
        hurst: None,
        jumps: JumpSpec::disabled(),
        xbar0: 1.0,
        spread: 0.5,
        s0: 0,
        gen: single("s"),
        grid: TimeGrid::new(1.0, 1000).unwrap(),
    })
    .unwrap();
    let sol = integrate_backward(&def, def.grid()).unwrap();
    let a0 = sol.fields[0].at_node(0, 0);
    assert!((a0 - 1.129153409436193).abs() < 1e-8, "alpha(0) = {a0}");
}

#[test]
fn identical_players_solve_identically() {
    // permuting identical players permutes solution components identically
    let mk = |perm: bool| {
        let p1 = LogPlayer {
            q: Coeff::constant(1.0, 2),
            q_terminal: Coeff::per_regime(vec![0.5, 0.2]),
            r: Coeff::constant(1.0, 2),
            b2: Coeff::constant(1.0, 2),
        };
        let p2 = LogPlayer {
            q: Coeff::constant(0.8, 2),
            q_terminal: Coeff::per_regime(vec![0.3, 0.4]),
            r: Coeff::constant(1.5, 2),
            b2: Coeff::constant(0.8, 2),
        };
        let players = if perm { vec![p2.clone(), p1.clone()] } else { vec![p1, p2] };
        build_log_state(LogStateSpec {
            players,
            b1: Coeff::constant(0.2, 2),
            sigma: Coeff::constant(0.3, 2),
            k: 1,
            jumps: JumpSpec::disabled(),
            x0: 50.0,
            s0: 0,
            gen: common::two_regime_table(),
            grid: TimeGrid::new(1.0, 300).unwrap(),
        })
        .unwrap()
    };
    let a = integrate_backward(&mk(false), &TimeGrid::new(1.0, 300).unwrap()).unwrap();
    let b = integrate_backward(&mk(true), &TimeGrid::new(1.0, 300).unwrap()).unwrap();
    // player 0 of the original equals player 1 of the permuted game
    assert_eq!(a.fields[0], b.fields[2]);
    assert_eq!(a.fields[1], b.fields[3]);
    assert_eq!(a.fields[2], b.fields[0]);
}

#[test]
fn delay_rejects_infinite_consumption_constant() {
    // rbar -> huge makes c = (1-rho) rbar^{1/(1-rho)} overflow; the
    // finiteness guard rejects instead of evaluating the explicit formula
    let mut spec = match common::delay_instance(100) {
        GameDefinition::DelayedTrend(g) => g.spec,
        _ => unreachable!(),
    };
    spec.r1_bar = 1e308;
    assert!(matches!(
        build_delayed_trend(spec),
        Err(mftg_core::Error::HypothesisViolation(_))
    ));
}

#[test]
fn delay_alpha_vanishes_without_variance_penalty() {
    // q = q_T = 0 makes alpha identically zero: the payoff carries no
    // variance penalty
    let mut spec = match common::delay_instance(200) {
        GameDefinition::DelayedTrend(g) => g.spec,
        _ => unreachable!(),
    };
    spec.q = Coeff::constant(0.0, 1);
    spec.q_terminal = Coeff::constant(0.0, 1);
    let def = build_delayed_trend(spec).unwrap();
    let sol = integrate_backward(&def, def.grid()).unwrap();
    assert!(sol.field("alpha").unwrap().max_abs() < 1e-14);
}
