//! Continuous-time Markov chain sampling: homogeneous, grid-inhomogeneous
//! and control-dependent regimes.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::regime::{ControlledSwitchRates, RegimeGenerator, SwitchDraw};
use rand::Rng;
use rand_distr::{Distribution, Exp};

/// Right-continuous piecewise-constant regime path on [0, T].
#[derive(Debug, Clone)]
pub struct RegimePath {
    pub initial: usize,
    /// (switch time, new state), strictly increasing times.
    pub events: Vec<(f64, usize)>,
}

impl RegimePath {
    pub fn constant(s0: usize) -> Self {
        Self {
            initial: s0,
            events: Vec::new(),
        }
    }

    pub fn state_at(&self, t: f64) -> usize {
        let mut s = self.initial;
        for &(tau, sp) in &self.events {
            if tau <= t {
                s = sp;
            } else {
                break;
            }
        }
        s
    }

    /// States at every grid node (right-continuous projection).
    pub fn at_nodes(&self, grid: &TimeGrid) -> Vec<usize> {
        let mut out = Vec::with_capacity(grid.num_nodes());
        let mut s = self.initial;
        let mut ev = self.events.iter().peekable();
        for n in 0..grid.num_nodes() {
            let t = grid.node(n);
            while let Some(&&(tau, sp)) = ev.peek() {
                if tau <= t {
                    s = sp;
                    ev.next();
                } else {
                    break;
                }
            }
            out.push(s);
        }
        out
    }

    /// Completed holding intervals as (state, duration), including the final
    /// censored segment up to `horizon` (flagged false).
    pub fn holdings(&self, horizon: f64) -> Vec<(usize, f64, bool)> {
        let mut out = Vec::new();
        let mut s = self.initial;
        let mut start = 0.0;
        for &(tau, sp) in &self.events {
            out.push((s, tau - start, true));
            s = sp;
            start = tau;
        }
        out.push((s, horizon - start, false));
        out
    }

    /// Fraction of [0, horizon] spent in `state`.
    pub fn occupancy(&self, state: usize, horizon: f64) -> f64 {
        self.holdings(horizon)
            .iter()
            .filter(|(s, _, _)| *s == state)
            .map(|(_, d, _)| d)
            .sum::<f64>()
            / horizon
    }
}

/// Exact jump-time simulation of the regime chain: exponential holding with
/// rate -q(s,s), embedded chain proportional to the off-diagonal rates.
/// Time-dependent generators fall back to thinning against the maximal exit
/// rate over the grid.
pub fn sample_ctmc(
    gen: &RegimeGenerator,
    s0: usize,
    grid: &TimeGrid,
    rng: &mut impl Rng,
) -> Result<RegimePath> {
    if s0 >= gen.num_states() {
        return Err(Error::Domain(format!(
            "initial regime {s0} out of range (S = {})",
            gen.num_states()
        )));
    }
    let horizon = grid.horizon();
    let mut path = RegimePath::constant(s0);
    if gen.num_states() == 1 {
        return Ok(path);
    }

    if gen.is_constant() {
        let mut t = 0.0;
        let mut s = s0;
        loop {
            let exit = gen.exit_rate(0.0, s);
            if exit <= 0.0 {
                break;
            }
            t += Exp::new(exit).expect("positive rate").sample(rng);
            if t >= horizon {
                break;
            }
            let target = pick_target(gen, 0.0, s, exit, rng);
            path.events.push((t, target));
            s = target;
        }
        return Ok(path);
    }

    // inhomogeneous: thinning against the maximal exit rate over the grid
    let mut bound = 0.0f64;
    for n in 0..grid.num_nodes() {
        for s in 0..gen.num_states() {
            bound = bound.max(gen.exit_rate(grid.node(n), s));
        }
    }
    if bound <= 0.0 {
        return Ok(path);
    }
    let exp = Exp::new(bound).expect("positive bound");
    let mut t = 0.0;
    let mut s = s0;
    loop {
        t += exp.sample(rng);
        if t >= horizon {
            break;
        }
        let exit = gen.exit_rate(t, s);
        if rng.gen::<f64>() * bound < exit {
            let target = pick_target(gen, t, s, exit, rng);
            path.events.push((t, target));
            s = target;
        }
    }
    Ok(path)
}

fn pick_target(
    gen: &RegimeGenerator,
    t: f64,
    s: usize,
    exit: f64,
    rng: &mut impl Rng,
) -> usize {
    let u = rng.gen::<f64>() * exit;
    let mut acc = 0.0;
    let mut target = s;
    for sp in 0..gen.num_states() {
        if sp == s {
            continue;
        }
        acc += gen.rate(t, s, sp);
        target = sp;
        if u < acc {
            break;
        }
    }
    target
}

/// Control-dependent chain via thinning. The dominating rate is estimated by
/// scanning the feedback on the grid and inflated by a safety factor; when an
/// evaluated rate still exceeds the bound, the bound is doubled and the path
/// resampled, at most `MAX_RETRIES` times.
pub fn sample_ctmc_controlled<F>(
    rates: &ControlledSwitchRates,
    draw: &SwitchDraw,
    feedback: F,
    s0: usize,
    grid: &TimeGrid,
    rng: &mut impl Rng,
) -> Result<RegimePath>
where
    F: Fn(f64, usize) -> Vec<(f64, f64)>,
{
    const MAX_RETRIES: usize = 10;
    const SAFETY: f64 = 1.5;

    let states = rates.states();
    if s0 >= states {
        return Err(Error::Domain(format!("initial regime {s0} out of range")));
    }
    if states == 1 {
        return Ok(RegimePath::constant(s0));
    }

    let mut bound = 0.0f64;
    for n in 0..grid.num_nodes() {
        let t = grid.node(n);
        for s in 0..states {
            let controls = feedback(t, s);
            let total: f64 = (0..states)
                .filter(|sp| *sp != s)
                .map(|sp| rates.rate(draw, s, sp, &controls))
                .sum();
            bound = bound.max(total);
        }
    }
    let mut bound = (bound * SAFETY).max(1e-12);

    'retry: for retry in 0..=MAX_RETRIES {
        let mut path = RegimePath::constant(s0);
        let exp = Exp::new(bound).expect("positive bound");
        let mut t = 0.0;
        let mut s = s0;
        loop {
            t += exp.sample(rng);
            if t >= grid.horizon() {
                return Ok(path);
            }
            let controls = feedback(t, s);
            let per_target: Vec<f64> = (0..states)
                .map(|sp| {
                    if sp == s {
                        0.0
                    } else {
                        rates.rate(draw, s, sp, &controls)
                    }
                })
                .collect();
            let total: f64 = per_target.iter().sum();
            if total > bound {
                if retry == MAX_RETRIES {
                    return Err(Error::DominatingRateExceeded {
                        rate: total,
                        bound,
                        retries: retry,
                    });
                }
                bound *= 2.0;
                continue 'retry;
            }
            if rng.gen::<f64>() * bound < total {
                let u = rng.gen::<f64>() * total;
                let mut acc = 0.0;
                for (sp, r) in per_target.iter().enumerate() {
                    acc += r;
                    if u < acc {
                        path.events.push((t, sp));
                        s = sp;
                        break;
                    }
                }
            }
        }
    }
    unreachable!("retry loop always returns")
}
