//! Verification suites: value consistency, Nash-deviation dominance, saddle
//! inequalities and cooperative dominance. All comparisons use common random
//! numbers (identical RNG streams across arms) and clustered standard errors
//! grouped by common-noise path.

use super::{estimate, estimate_cost, simulate, McEstimate, PathEnsemble, SimOptions};
use crate::error::{Error, Result};
use crate::games::{GameDefinition, InitialState};
use crate::rng::{RngFactory, StreamTag};
use crate::solver::{integrate_backward, SolvedCoefficients};

/// Tolerance in standard-error units for all Monte-Carlo gates.
pub const SE_GATE: f64 = 3.0;
/// Absolute tolerance when an estimate carries no Monte-Carlo error.
pub const EXACT_GATE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ValueCheck {
    pub player: usize,
    pub mc: McEstimate,
    pub analytic: f64,
    /// |mc - analytic| in SE units (infinite if se = 0 and the gap exceeds
    /// the exact gate).
    pub z: f64,
    pub pass: bool,
}

fn gate(diff: f64, se: f64, scale: f64) -> (f64, bool) {
    if se > 0.0 {
        let z = diff.abs() / se;
        (z, z <= SE_GATE)
    } else {
        let ok = diff.abs() <= EXACT_GATE * scale.abs().max(1.0);
        (if ok { 0.0 } else { f64::INFINITY }, ok)
    }
}

/// Initial state implied by a game spec (mean, spread, starting regime).
pub fn initial_state(def: &GameDefinition) -> InitialState {
    match def {
        GameDefinition::LogState(g) => InitialState::deterministic(g.spec.x0, g.spec.s0),
        GameDefinition::LogSquare(g) => InitialState::deterministic(g.spec.x0, g.spec.s0),
        GameDefinition::LegendreFenchel(g) => InitialState::deterministic(g.spec.x0, g.spec.s0),
        GameDefinition::GeometricGv(g) => InitialState::deterministic(g.spec.x0, g.spec.s0),
        GameDefinition::ControlledSwitching(g) => InitialState::deterministic(0.0, g.spec.s0),
        GameDefinition::QuadraticQuadratic(g) => InitialState::deterministic(g.spec.x0, g.spec.s0),
        GameDefinition::Cotangent(g) | GameDefinition::HyperbolicCotangent(g) => InitialState {
            x0: g.spec.xbar0,
            spread: g.spec.spread,
            s0: g.spec.s0,
        },
        GameDefinition::DelayedTrend(g) => InitialState {
            x0: g.spec.xbar0,
            spread: g.spec.spread,
            s0: g.spec.s0,
        },
        GameDefinition::GvPowerNash(g) => InitialState {
            x0: g.spec.xbar0,
            spread: g.spec.spread,
            s0: g.spec.s0,
        },
        GameDefinition::GvPowerCooperative(g) => InitialState {
            x0: g.spec.xbar0,
            spread: g.spec.spread,
            s0: g.spec.s0,
        },
        GameDefinition::GvPowerAdversarial(g) => InitialState {
            x0: g.spec.xbar0,
            spread: g.spec.spread,
            s0: g.spec.s0,
        },
    }
}

/// Simulated mean cost against the guess-functional value, per player.
pub fn value_consistency(
    def: &GameDefinition,
    sol: &SolvedCoefficients,
    opts: &SimOptions,
) -> Result<Vec<ValueCheck>> {
    let ens = simulate(def, sol, opts)?;
    let init = initial_state(def);
    let analytic = analytic_values(def, sol, opts, &init)?;
    Ok((0..ens.costs.len())
        .map(|p| {
            let mc = estimate_cost(&ens, p);
            let (z, pass) = gate(mc.mean - analytic[p], mc.se, analytic[p]);
            ValueCheck {
                player: p,
                mc,
                analytic: analytic[p],
                z,
                pass,
            }
        })
        .collect())
}

/// Game value per player. For the controlled-switching game with random b1
/// the V system is draw-dependent, so the analytic value is the average of
/// V(0, s0) over the same per-path draws the simulator realizes.
fn analytic_values(
    def: &GameDefinition,
    sol: &SolvedCoefficients,
    opts: &SimOptions,
    init: &InitialState,
) -> Result<Vec<f64>> {
    if let GameDefinition::ControlledSwitching(g) = def {
        let randomized = (0..g.spec.players.len()).any(|j| g.spec.rates.b1_std(j) > 0.0);
        if randomized {
            let factory = RngFactory::new(opts.seed);
            let mut acc = vec![0.0; g.spec.players.len()];
            for r in 0..opts.common_paths {
                let mut drng = factory.stream(r as u64, StreamTag::CoeffDraw);
                let draw = g.spec.rates.draw(&mut drng);
                let per_draw = crate::games::build_controlled_switching_with_draw(
                    g.spec.clone(),
                    draw,
                )?;
                let solved = integrate_backward(&per_draw, &g.spec.grid)?;
                let vals = per_draw.value(&solved.fields, init)?;
                for (a, v) in acc.iter_mut().zip(vals) {
                    *a += v;
                }
            }
            for a in acc.iter_mut() {
                *a /= opts.common_paths as f64;
            }
            return Ok(acc);
        }
    }
    def.value(&sol.fields, init)
}

#[derive(Debug, Clone)]
pub struct DeviationCheck {
    pub scale: f64,
    pub delta: McEstimate,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct DeviationReport {
    pub player: usize,
    pub baseline: McEstimate,
    pub checks: Vec<DeviationCheck>,
}

impl DeviationReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn paired_delta(a: &PathEnsemble, b: &PathEnsemble, player: usize) -> McEstimate {
    let diffs: Vec<f64> = a.costs[player]
        .iter()
        .zip(&b.costs[player])
        .map(|(x, y)| x - y)
        .collect();
    estimate(&diffs, &a.clusters)
}

/// Unilateral gain-scaling test: re-simulate with player `player`'s feedback
/// scaled by each gamma (others at equilibrium), common random numbers.
/// Passes when every cost increment is >= -3 SE.
pub fn deviation_test(
    def: &GameDefinition,
    sol: &SolvedCoefficients,
    player: usize,
    gammas: &[f64],
    opts: &SimOptions,
) -> Result<DeviationReport> {
    let base = simulate(def, sol, opts)?;
    let baseline = estimate_cost(&base, player);
    let mut checks = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let mut scales = opts.resolved_scales(def.num_players());
        scales[player] *= gamma;
        let opts_dev = SimOptions {
            scales,
            ..opts.clone()
        };
        let dev = simulate(def, sol, &opts_dev)?;
        let delta = paired_delta(&dev, &base, player);
        let pass = if (gamma - 1.0).abs() < 1e-15 {
            delta.mean == 0.0
        } else {
            delta.mean >= -SE_GATE * delta.se.max(1e-300)
        };
        checks.push(DeviationCheck {
            scale: gamma,
            delta,
            pass,
        });
    }
    Ok(DeviationReport {
        player,
        baseline,
        checks,
    })
}

#[derive(Debug, Clone)]
pub struct SaddleCheck {
    pub scale: f64,
    /// Cost change when the named team deviates.
    pub delta: McEstimate,
    pub team: &'static str,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct SaddleReport {
    pub value: McEstimate,
    pub checks: Vec<SaddleCheck>,
}

impl SaddleReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Saddle-point inequalities for the adversarial game: a deviating defender
/// team cannot lower the cost, a deviating attacker team cannot raise it.
pub fn saddle_test(
    def: &GameDefinition,
    sol: &SolvedCoefficients,
    gammas: &[f64],
    opts: &SimOptions,
) -> Result<SaddleReport> {
    let adv = match def {
        GameDefinition::GvPowerAdversarial(g) => g,
        _ => {
            return Err(Error::InvalidInput(
                "saddle_test requires an adversarial game".into(),
            ))
        }
    };
    let n_blocks = adv.spec.blocks.len();
    let defenders: Vec<usize> = (0..n_blocks)
        .filter(|b| adv.spec.blocks[*b].r.get(0) > 0.0)
        .collect();
    let attackers: Vec<usize> = (0..n_blocks)
        .filter(|b| adv.spec.blocks[*b].r.get(0) < 0.0)
        .collect();
    let base_opts = SimOptions {
        scales: vec![1.0; n_blocks],
        ..opts.clone()
    };
    let base = simulate(def, sol, &base_opts)?;
    let value = estimate_cost(&base, 0);
    let mut checks = Vec::new();
    for &gamma in gammas {
        for (team, members, sign) in [
            ("defender", &defenders, 1.0),
            ("attacker", &attackers, -1.0),
        ] {
            let mut scales = vec![1.0; n_blocks];
            for &b in members.iter() {
                scales[b] = gamma;
            }
            let dev = simulate(def, sol, &SimOptions {
                scales,
                ..opts.clone()
            })?;
            let delta = paired_delta(&dev, &base, 0);
            // defender deviation must not lower cost, attacker must not raise
            let pass = sign * delta.mean >= -SE_GATE * delta.se.max(1e-300);
            checks.push(SaddleCheck {
                scale: gamma,
                delta,
                team,
                pass,
            });
        }
    }
    Ok(SaddleReport { value, checks })
}

#[derive(Debug, Clone)]
pub struct DominanceReport {
    pub nash_total: McEstimate,
    pub coop_total: McEstimate,
    /// coop - nash paired difference.
    pub delta: McEstimate,
    pub pass: bool,
}

/// Total simulated cost under the cooperative optimum must not exceed the
/// total under the Nash equilibrium (within 3 SE, common random numbers).
pub fn cooperative_dominance(
    nash_def: &GameDefinition,
    nash_sol: &SolvedCoefficients,
    coop_def: &GameDefinition,
    coop_sol: &SolvedCoefficients,
    opts: &SimOptions,
) -> Result<DominanceReport> {
    let nash = simulate(nash_def, nash_sol, opts)?;
    let coop = simulate(coop_def, coop_sol, opts)?;
    let counts: Vec<f64> = match nash_def {
        GameDefinition::GvPowerNash(g) => {
            g.spec.blocks.iter().map(|b| b.count as f64).collect()
        }
        _ => vec![1.0; nash.costs.len()],
    };
    let n = nash.costs[0].len();
    let nash_tot: Vec<f64> = (0..n)
        .map(|i| {
            nash.costs
                .iter()
                .zip(&counts)
                .map(|(c, w)| w * c[i])
                .sum::<f64>()
        })
        .collect();
    let coop_tot = coop.costs[0].clone();
    let diffs: Vec<f64> = coop_tot.iter().zip(&nash_tot).map(|(c, nv)| c - nv).collect();
    let delta = estimate(&diffs, &nash.clusters);
    let nash_total = estimate(&nash_tot, &nash.clusters);
    let coop_total = estimate(&coop_tot, &coop.clusters);
    let pass = delta.mean <= SE_GATE * delta.se.max(1e-300)
        || delta.mean <= EXACT_GATE * nash_total.mean.abs().max(1.0);
    Ok(DominanceReport {
        nash_total,
        coop_total,
        delta,
        pass,
    })
}
