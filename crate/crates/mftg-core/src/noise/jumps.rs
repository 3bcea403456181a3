//! Compound-Poisson event sampling for the compensated jump processes.

use crate::grid::TimeGrid;
use crate::jump::JumpSpec;
use rand::Rng;
use rand_distr::{Distribution, Exp};

/// Sorted jump events (time, mark theta) on [0, T]. The simulator pairs the
/// events with the analytic compensator drift - (int mu d nu) dt.
pub fn sample_jumps(jump: &JumpSpec, grid: &TimeGrid, rng: &mut impl Rng) -> Vec<(f64, f64)> {
    let lambda = jump.total_intensity();
    if lambda <= 0.0 {
        return Vec::new();
    }
    let exp = Exp::new(lambda).expect("positive intensity");
    let horizon = grid.horizon();
    let mut events = Vec::new();
    let mut t = 0.0;
    loop {
        t += exp.sample(rng);
        if t >= horizon {
            break;
        }
        events.push((t, sample_mark(jump, rng)));
    }
    events
}

fn sample_mark(jump: &JumpSpec, rng: &mut impl Rng) -> f64 {
    let lambda = jump.total_intensity();
    let density_mass = if jump.density_coeff() > 0.0 {
        jump.density_coeff() / jump.density_decay()
    } else {
        0.0
    };
    let u = rng.gen::<f64>() * lambda;
    if u < density_mass {
        Exp::new(jump.density_decay())
            .expect("positive decay")
            .sample(rng)
    } else {
        let mut acc = density_mass;
        for &(loc, mass) in jump.atom_list() {
            acc += mass;
            if u < acc {
                return loc;
            }
        }
        jump.atom_list().last().map(|a| a.0).unwrap_or(0.0)
    }
}
