//! Build a GameDefinition from a parsed RunConfig, with per-variant
//! required-field validation.

use crate::config::*;
use crate::CliError;
use mftg_core::games::*;
use mftg_core::jump::JumpSpec;
use mftg_core::regime::{ControlledSwitchRates, RegimeGenerator};
use mftg_core::TimeGrid;

fn missing(variant: &str, field: &str) -> CliError {
    CliError::MissingField {
        variant: variant.to_string(),
        field: field.to_string(),
    }
}

fn coeff(c: &Option<CoeffToml>, states: usize, variant: &str, field: &str) -> Result<Coeff, CliError> {
    match c {
        None => Err(missing(variant, field)),
        Some(CoeffToml::Scalar(v)) => Ok(Coeff::constant(*v, states)),
        Some(CoeffToml::PerRegime(v)) => {
            if v.len() != states {
                return Err(CliError::Invalid(format!(
                    "{variant}: `{field}` has {} regime values, expected {states}",
                    v.len()
                )));
            }
            Ok(Coeff::per_regime(v.clone()))
        }
    }
}

fn coeff_or(c: &Option<CoeffToml>, default: f64, states: usize, variant: &str, field: &str) -> Result<Coeff, CliError> {
    if c.is_none() {
        return Ok(Coeff::constant(default, states));
    }
    coeff(c, states, variant, field)
}

fn jumps(cfg: &Option<JumpConfig>) -> Result<JumpSpec, CliError> {
    match cfg {
        None => Ok(JumpSpec::disabled()),
        Some(j) => Ok(JumpSpec::new(j.coeff, j.decay, j.atoms.clone())?),
    }
}

pub struct BuiltGame {
    pub def: GameDefinition,
}

pub fn generator(cfg: &RunConfig) -> Result<(RegimeGenerator, usize), CliError> {
    match &cfg.regimes {
        None => Ok((RegimeGenerator::single("base"), 0)),
        Some(r) => {
            let gen = RegimeGenerator::new(r.states.clone(), r.rates.clone())?;
            let s0 = match &r.initial {
                None => 0,
                Some(label) => gen.index_of(label).ok_or_else(|| {
                    CliError::Invalid(format!("initial regime `{label}` not in the state list"))
                })?,
            };
            Ok((gen, s0))
        }
    }
}

pub fn build(cfg: &RunConfig) -> Result<BuiltGame, CliError> {
    let (gen, s0) = generator(cfg)?;
    let states = gen.num_states();
    let grid = TimeGrid::new(cfg.grid.horizon, cfg.grid.steps)?;
    let v = cfg.variant.as_str();
    if cfg.players.is_empty() && v != "delayed_trend" {
        return Err(missing(v, "player"));
    }

    let def = match v {
        "log_state" | "log_square" => {
            let players = cfg
                .players
                .iter()
                .map(|p| {
                    Ok(LogPlayer {
                        q: coeff(&p.q, states, v, "q")?,
                        q_terminal: coeff(&p.q_terminal, states, v, "q_terminal")?,
                        r: coeff(&p.r, states, v, "r")?,
                        b2: coeff(&p.b2, states, v, "b2")?,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let b1 = coeff_or(&cfg.dynamics.b1, 0.0, states, v, "b1")?;
            if v == "log_state" {
                build_log_state(LogStateSpec {
                    players,
                    b1,
                    sigma: coeff_or(&cfg.noise.sigma, 0.0, states, v, "sigma")?,
                    k: cfg.dynamics.k.ok_or_else(|| missing(v, "dynamics.k"))?,
                    jumps: jumps(&cfg.noise.jumps)?,
                    x0: cfg.init.x0,
                    s0,
                    gen,
                    grid,
                })?
            } else {
                build_log_square(LogSquareSpec {
                    players,
                    b1,
                    x0: cfg.init.x0,
                    s0,
                    gen,
                    grid,
                })?
            }
        }
        "legendre_fenchel" => {
            let f = cfg.fenchel.as_ref().ok_or_else(|| missing(v, "fenchel"))?;
            let n = cfg.players.len();
            let mut r = Vec::with_capacity(n);
            for p in &cfg.players {
                let row = p.r_row.as_ref().ok_or_else(|| missing(v, "player.r_row"))?;
                if row.len() != n {
                    return Err(CliError::Invalid(format!(
                        "legendre_fenchel: r_row must have {n} entries"
                    )));
                }
                r.push(
                    row.iter()
                        .map(|c| coeff(&Some(c.clone()), states, v, "r_row"))
                        .collect::<Result<Vec<_>, CliError>>()?,
                );
            }
            build_legendre_fenchel(FenchelSpec {
                players: cfg
                    .players
                    .iter()
                    .map(|p| {
                        Ok(FenchelPlayer {
                            q: coeff(&p.q, states, v, "q")?,
                            q_terminal: coeff(&p.q_terminal, states, v, "q_terminal")?,
                            b2: coeff(&p.b2, states, v, "b2")?,
                        })
                    })
                    .collect::<Result<Vec<_>, CliError>>()?,
                r,
                b1: coeff_or(&cfg.dynamics.b1, 0.0, states, v, "b1")?,
                sigma1: coeff(&Some(f.sigma1.clone()), states, v, "fenchel.sigma1")?,
                sigma2: coeff(&Some(f.sigma2.clone()), states, v, "fenchel.sigma2")?,
                loss: f.loss.clone(),
                k: f.k,
                kappa: f.kappa,
                x0: cfg.init.x0,
                s0,
                gen,
                grid,
            })?
        }
        "geometric_gv" => build_geometric_gv(GeometricSpec {
            players: cfg
                .players
                .iter()
                .map(|p| {
                    Ok(GeometricPlayer {
                        q: coeff(&p.q, states, v, "q")?,
                        q_terminal: coeff(&p.q_terminal, states, v, "q_terminal")?,
                        r: coeff(&p.r, states, v, "r")?,
                        b2: coeff(&p.b2, states, v, "b2")?,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?,
            b1: coeff_or(&cfg.dynamics.b1, 0.0, states, v, "b1")?,
            k: cfg.dynamics.k.ok_or_else(|| missing(v, "dynamics.k"))?,
            sigma: coeff_or(&cfg.noise.sigma, 0.0, states, v, "sigma")?,
            sigma_o: coeff_or(&cfg.noise.sigma_o, 0.0, states, v, "sigma_o")?,
            sigma_gv: coeff_or(&cfg.noise.sigma_gv, 0.0, states, v, "sigma_gv")?,
            sigma_o_gv: coeff_or(&cfg.noise.sigma_o_gv, 0.0, states, v, "sigma_o_gv")?,
            hurst: cfg.noise.hurst,
            jumps: jumps(&cfg.noise.jumps)?,
            jumps_common: jumps(&cfg.noise.jumps_common)?,
            x0: cfg.init.x0,
            s0,
            gen,
            grid,
        })?,
        "controlled_switching" => {
            let n = cfg.players.len();
            let mut b2 = Vec::new();
            let mut b2_bar = Vec::new();
            let mut b1_bar = Vec::new();
            let mut bo_bar = Vec::new();
            let mut b1_std = Vec::new();
            let flatten = |m: &Option<Vec<Vec<f64>>>, field: &str| -> Result<Vec<f64>, CliError> {
                let m = m.as_ref().ok_or_else(|| missing(v, field))?;
                if m.len() != states || m.iter().any(|r| r.len() != states) {
                    return Err(CliError::Invalid(format!(
                        "controlled_switching: `{field}` must be a {states}x{states} matrix"
                    )));
                }
                Ok(m.iter().flatten().copied().collect())
            };
            for p in &cfg.players {
                b2.extend(flatten(&p.switch_b2, "player.switch_b2")?);
                b2_bar.extend(flatten(&p.switch_b2_bar, "player.switch_b2_bar")?);
                b1_bar.extend(flatten(&p.switch_b1_bar, "player.switch_b1_bar")?);
                bo_bar.extend(flatten(&p.switch_bo_bar, "player.switch_bo_bar")?);
                b1_std.push(p.switch_b1_std.unwrap_or(0.0));
            }
            let rates = ControlledSwitchRates::new(n, states, b2, b2_bar, b1_bar, bo_bar, b1_std)?;
            build_controlled_switching(SwitchingSpec {
                players: cfg
                    .players
                    .iter()
                    .map(|p| {
                        Ok(SwitchingPlayer {
                            r: coeff(&p.r, states, v, "r")?,
                            r_bar: coeff(&p.r_bar, states, v, "r_bar")?,
                            eps: coeff_or(&p.eps, 0.0, states, v, "eps")?,
                            q_terminal: coeff(&p.q_terminal, states, v, "q_terminal")?,
                        })
                    })
                    .collect::<Result<Vec<_>, CliError>>()?,
                rates,
                s0,
                grid,
            })?
        }
        "quadratic_quadratic" => build_quadratic_quadratic(QuadraticSpec {
            players: cfg
                .players
                .iter()
                .map(|p| {
                    Ok(QuadraticPlayer {
                        q: coeff(&p.q, states, v, "q")?,
                        q_bar: coeff(&p.q_bar, states, v, "q_bar")?,
                        r: coeff(&p.r, states, v, "r")?,
                        r_bar: coeff(&p.r_bar, states, v, "r_bar")?,
                        eps1_std: p.eps1_std.unwrap_or(0.0),
                        eps_bar_1: coeff_or(&p.eps_bar_1, 0.0, states, v, "eps_bar_1")?,
                        eps_bar_2: coeff_or(&p.eps_bar_2, 0.0, states, v, "eps_bar_2")?,
                        q_terminal: coeff(&p.q_terminal, states, v, "q_terminal")?,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?,
            sigma: coeff_or(&cfg.noise.sigma, 0.0, states, v, "sigma")?,
            jumps: jumps(&cfg.noise.jumps)?,
            x0: cfg.init.x0,
            s0,
            gen,
            grid,
        })?,
        "cotangent" | "hyperbolic_cotangent" => {
            let spec = TrigSpec {
                players: cfg
                    .players
                    .iter()
                    .map(|p| {
                        Ok(TrigPlayer {
                            q: coeff(&p.q, states, v, "q")?,
                            q_bar: coeff(&p.q_bar, states, v, "q_bar")?,
                            b2: coeff(&p.b2, states, v, "b2")?,
                            b2_bar: coeff(&p.b2_bar, states, v, "b2_bar")?,
                        })
                    })
                    .collect::<Result<Vec<_>, CliError>>()?,
                sigma: coeff_or(&cfg.noise.sigma, 0.0, states, v, "sigma")?,
                xbar0: cfg.init.x0,
                spread: cfg.init.spread,
                s0,
                gen,
                grid,
            };
            if v == "cotangent" {
                build_cotangent(spec)?
            } else {
                build_hyperbolic_cotangent(spec)?
            }
        }
        "delayed_trend" => {
            let d = cfg.delay.as_ref().ok_or_else(|| missing(v, "delay"))?;
            let p = cfg.players.first().ok_or_else(|| missing(v, "player"))?;
            build_delayed_trend(DelaySpec {
                q: coeff(&p.q, states, v, "q")?,
                q_terminal: coeff(&p.q_terminal, states, v, "q_terminal")?,
                r1: coeff(&p.r, states, v, "r")?,
                r1_bar: d.r1_bar,
                b1: coeff_or(&cfg.dynamics.b1, 0.0, states, v, "b1")?,
                b2: coeff(&p.b2, states, v, "b2")?,
                eps: coeff_or(&p.eps, 0.0, states, v, "eps")?,
                sigma: d.sigma,
                sigma_bar: d.sigma_bar,
                b2_bar: d.b2_bar,
                b11_bar: d.b11_bar,
                b13_bar: d.b13_bar,
                rho: d.rho,
                lambda: d.lambda,
                tau: d.tau,
                xbar0: cfg.init.x0,
                spread: cfg.init.spread,
                s0,
                gen,
                grid,
            })?
        }
        "gv_power_nash" | "gv_power_cooperative" => {
            let blocks = cfg
                .players
                .iter()
                .map(|p| {
                    Ok(GvBlock {
                        count: p.count.unwrap_or(1),
                        q: coeff(&p.q, states, v, "q")?,
                        q_bar: coeff(&p.q_bar, states, v, "q_bar")?,
                        q_terminal: coeff(&p.q_terminal, states, v, "q_terminal")?,
                        q_bar_terminal: coeff(&p.q_bar_terminal, states, v, "q_bar_terminal")?,
                        r: coeff(&p.r, states, v, "r")?,
                        r_bar: coeff(&p.r_bar, states, v, "r_bar")?,
                        b2: coeff(&p.b2, states, v, "b2")?,
                        b2_bar: coeff(&p.b2_bar, states, v, "b2_bar")?,
                        k: p.k.ok_or_else(|| missing(v, "player.k"))?,
                        k_bar: p.k_bar.ok_or_else(|| missing(v, "player.k_bar"))?,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let spec = GvPowerSpec {
                blocks,
                b1: coeff_or(&cfg.dynamics.b1, 0.0, states, v, "b1")?,
                b1_bar: coeff_or(&cfg.dynamics.b1_bar, 0.0, states, v, "b1_bar")?,
                sigma: coeff_or(&cfg.noise.sigma, 0.0, states, v, "sigma")?,
                sigma_gv: coeff_or(&cfg.noise.sigma_gv, 0.0, states, v, "sigma_gv")?,
                hurst: cfg.noise.hurst,
                jumps: jumps(&cfg.noise.jumps)?,
                xbar0: cfg.init.x0,
                spread: cfg.init.spread,
                s0,
                gen,
                grid,
            };
            if v == "gv_power_nash" {
                build_gv_power_nash(spec)?
            } else {
                build_gv_power_cooperative(spec)?
            }
        }
        "gv_power_adversarial" => {
            let agg = cfg.aggregate.as_ref().ok_or_else(|| missing(v, "aggregate"))?;
            build_gv_power_adversarial(GvAdversarialSpec {
                blocks: cfg
                    .players
                    .iter()
                    .map(|p| {
                        Ok(AdvBlock {
                            count: p.count.unwrap_or(1),
                            r: coeff(&p.r, states, v, "r")?,
                            r_bar: coeff(&p.r_bar, states, v, "r_bar")?,
                            b2: coeff(&p.b2, states, v, "b2")?,
                            b2_bar: coeff(&p.b2_bar, states, v, "b2_bar")?,
                        })
                    })
                    .collect::<Result<Vec<_>, CliError>>()?,
                q: coeff(&Some(agg.q.clone()), states, v, "aggregate.q")?,
                q_bar: coeff(&Some(agg.q_bar.clone()), states, v, "aggregate.q_bar")?,
                q_terminal: coeff(&Some(agg.q_terminal.clone()), states, v, "aggregate.q_terminal")?,
                q_bar_terminal: coeff(
                    &Some(agg.q_bar_terminal.clone()),
                    states,
                    v,
                    "aggregate.q_bar_terminal",
                )?,
                k: agg.k,
                k_bar: agg.k_bar,
                b1: coeff_or(&cfg.dynamics.b1, 0.0, states, v, "b1")?,
                b1_bar: coeff_or(&cfg.dynamics.b1_bar, 0.0, states, v, "b1_bar")?,
                sigma: coeff_or(&cfg.noise.sigma, 0.0, states, v, "sigma")?,
                sigma_gv: coeff_or(&cfg.noise.sigma_gv, 0.0, states, v, "sigma_gv")?,
                hurst: cfg.noise.hurst,
                jumps: jumps(&cfg.noise.jumps)?,
                xbar0: cfg.init.x0,
                spread: cfg.init.spread,
                s0,
                gen,
                grid,
            })?
        }
        other => {
            return Err(CliError::Invalid(format!(
                "unknown game variant `{other}`"
            )))
        }
    };
    Ok(BuiltGame { def })
}
