//! Power-cost mean-field games driven by Brownian, jump and Gauss-Volterra
//! noise on the centered state:
//!
//!   dx = [b1 (x - xbar) + sum_j b2_j (u_j - ubar_j) + b1bar xbar
//!        + sum_j b2bar_j ubar_j] dt
//!        + (x - xbar) [sigma dB + int theta dN~ + sigma_gv dB_gv],
//!
//! per-player costs q_i zeta^{2k_i}/(2k_i) + r_i (u_i - ubar_i)^{2k_i}/(2k_i)
//! + qbar_i xbar^{2kbar_i}/(2kbar_i) + rbar_i ubar_i^{2kbar_i}/(2kbar_i).
//!
//! Symmetric players are grouped into blocks (count + shared coefficients);
//! the coefficient system has one (alpha, alphabar) pair per block. The
//! noncooperative, fully cooperative and adversarial (two-team minmax)
//! versions share this module.

use super::{require, sroot, Coeff, ComponentDesc, GameDefinition, InitialState, Layout};
use crate::error::{Error, Result};
use crate::field::RegimeField;
use crate::grid::TimeGrid;
use crate::jump::{JumpSpec, MAX_POWER};
use crate::noise::kernel::effective_gv_variance_fast;
use crate::regime::RegimeGenerator;

#[derive(Debug, Clone)]
pub struct GvBlock {
    pub count: usize,
    pub q: Coeff,
    pub q_bar: Coeff,
    pub q_terminal: Coeff,
    pub q_bar_terminal: Coeff,
    pub r: Coeff,
    pub r_bar: Coeff,
    pub b2: Coeff,
    pub b2_bar: Coeff,
    pub k: u32,
    pub k_bar: u32,
}

#[derive(Debug, Clone)]
pub struct GvPowerSpec {
    pub blocks: Vec<GvBlock>,
    pub b1: Coeff,
    pub b1_bar: Coeff,
    pub sigma: Coeff,
    pub sigma_gv: Coeff,
    pub hurst: Option<f64>,
    pub jumps: JumpSpec,
    pub xbar0: f64,
    pub spread: f64,
    pub s0: usize,
    pub gen: RegimeGenerator,
    pub grid: TimeGrid,
}

fn validate_common(spec: &GvPowerSpec, name: &str, strict_q: bool) -> Result<()> {
    let states = spec.gen.num_states();
    require(!spec.blocks.is_empty(), format!("{name} needs at least one player block"))?;
    require(spec.s0 < states, "initial regime out of range")?;
    require(spec.spread >= 0.0, "spread must be nonnegative")?;
    for c in [&spec.b1, &spec.b1_bar, &spec.sigma, &spec.sigma_gv] {
        c.validate(states, "drift/noise coefficient")?;
    }
    if !spec.sigma_gv.all(|v| v == 0.0) {
        let h = spec.hurst.ok_or_else(|| {
            Error::HypothesisViolation("sigma_gv set but no Hurst parameter given".into())
        })?;
        require(h > 0.0 && h < 1.0, "Hurst parameter must lie in (0,1)")?;
    }
    for (b, blk) in spec.blocks.iter().enumerate() {
        require(blk.count >= 1, format!("block {b}: count >= 1 required"))?;
        require(
            blk.k >= 1 && blk.k <= MAX_POWER && blk.k_bar >= 1 && blk.k_bar <= MAX_POWER,
            format!("block {b}: exponents must be integers in 1..={MAX_POWER}"),
        )?;
        for (nm, c) in [
            ("q", &blk.q),
            ("q_bar", &blk.q_bar),
            ("q_terminal", &blk.q_terminal),
            ("q_bar_terminal", &blk.q_bar_terminal),
            ("r", &blk.r),
            ("r_bar", &blk.r_bar),
            ("b2", &blk.b2),
            ("b2_bar", &blk.b2_bar),
        ] {
            c.validate(states, nm)?;
        }
        if strict_q {
            require(blk.q.all(|v| v > 0.0), format!("block {b}: q_i > 0 required"))?;
            require(blk.q_bar.all(|v| v > 0.0), format!("block {b}: q_bar_i > 0 required"))?;
        }
        require(
            blk.q_terminal.all(|v| v >= 0.0) && blk.q_bar_terminal.all(|v| v >= 0.0),
            format!("block {b}: terminal weights must be >= 0"),
        )?;
    }
    Ok(())
}

/// sigma^2 + sigma_cogv^2 at (t, s); the cogv part uses the fBm fast path.
fn noise_load(spec: &GvPowerSpec, t_floor: f64, t: f64, s: usize) -> f64 {
    let sig = spec.sigma.get(s);
    let mut load = sig * sig;
    if let Some(h) = spec.hurst {
        let sgv = spec.sigma_gv.get(s);
        if sgv != 0.0 {
            load += effective_gv_variance_fast(h, sgv, t.max(t_floor)).unwrap_or(0.0);
        }
    }
    load
}

// ---------------------------------------------------------------------------
// Noncooperative (Nash)

#[derive(Debug, Clone)]
pub struct GvPowerGame {
    pub spec: GvPowerSpec,
    pub layout: Layout,
    pub t_floor: f64,
}

pub fn build_gv_power_nash(spec: GvPowerSpec) -> Result<GameDefinition> {
    validate_common(&spec, "gv_power_nash", true)?;
    for (b, blk) in spec.blocks.iter().enumerate() {
        require(
            blk.r.all(|v| v > 0.0) && blk.r_bar.all(|v| v > 0.0),
            format!("block {b}: r_i, r_bar_i > delta > 0 required"),
        )?;
        // moment_power(k) finite is guaranteed by JumpSpec construction
        spec.jumps.moment_power(blk.k)?;
    }
    let states = spec.gen.num_states();
    let mut components = Vec::new();
    for b in 0..spec.blocks.len() {
        components.push(ComponentDesc {
            name: format!("alpha_{b}"),
            alpha_like: true,
        });
        components.push(ComponentDesc {
            name: format!("alpha_bar_{b}"),
            alpha_like: true,
        });
    }
    let layout = Layout { states, components };
    let t_floor = spec.grid.dt() * 0.1;
    Ok(GameDefinition::GvPowerNash(GvPowerGame {
        spec,
        layout,
        t_floor,
    }))
}

impl GvPowerGame {
    pub fn alpha_idx(&self, b: usize, s: usize) -> usize {
        self.layout.idx(2 * b, s)
    }

    pub fn alpha_bar_idx(&self, b: usize, s: usize) -> usize {
        self.layout.idx(2 * b + 1, s)
    }

    /// Centered feedback gain of block b: u - ubar = gain * (x - xbar).
    pub fn gain(&self, alpha_bs: f64, b: usize, s: usize) -> f64 {
        let blk = &self.spec.blocks[b];
        sroot(-blk.b2.get(s) * alpha_bs / blk.r.get(s), 2 * blk.k - 1)
    }

    /// Mean feedback gain of block b: ubar = bar_gain * xbar.
    pub fn bar_gain(&self, alpha_bar_bs: f64, b: usize, s: usize) -> f64 {
        let blk = &self.spec.blocks[b];
        sroot(
            -blk.b2_bar.get(s) * alpha_bar_bs / blk.r_bar.get(s),
            2 * blk.k_bar - 1,
        )
    }

    pub fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        let spec = &self.spec;
        let states = self.layout.states;
        let nb = spec.blocks.len();
        for s in 0..states {
            let load = noise_load(spec, self.t_floor, t, s);
            let gains: Vec<f64> = (0..nb).map(|b| self.gain(y[self.alpha_idx(b, s)], b, s)).collect();
            let bar_gains: Vec<f64> = (0..nb)
                .map(|b| self.bar_gain(y[self.alpha_bar_idx(b, s)], b, s))
                .collect();
            for b in 0..nb {
                let blk = &spec.blocks[b];
                let k = f64::from(blk.k);
                let kb = f64::from(blk.k_bar);
                let a = y[self.alpha_idx(b, s)];
                let ab = y[self.alpha_bar_idx(b, s)];

                // sum over opponents j != i with i in block b
                let mut cross = 0.0;
                let mut cross_bar = 0.0;
                for c in 0..nb {
                    let w = if c == b {
                        spec.blocks[c].count as f64 - 1.0
                    } else {
                        spec.blocks[c].count as f64
                    };
                    cross += w * spec.blocks[c].b2.get(s) * gains[c];
                    cross_bar += w * spec.blocks[c].b2_bar.get(s) * bar_gains[c];
                }

                let jmp = self.spec.jumps.moment_power(blk.k)?;
                let sw_a = spec.gen.switching_sum(t, s, |sp| y[self.alpha_idx(b, sp)]);
                out[self.alpha_idx(b, s)] = -blk.q.get(s)
                    - 2.0 * k * a * spec.b1.get(s)
                    - a * k * (2.0 * k - 1.0) * load
                    - a * jmp
                    - sw_a
                    + (2.0 * k - 1.0) * blk.r.get(s) * gains[b].powi(2 * blk.k as i32)
                    - 2.0 * k * a * cross;

                let sw_ab = spec.gen.switching_sum(t, s, |sp| y[self.alpha_bar_idx(b, sp)]);
                out[self.alpha_bar_idx(b, s)] = -blk.q_bar.get(s)
                    - 2.0 * kb * ab * spec.b1_bar.get(s)
                    - sw_ab
                    + (2.0 * kb - 1.0) * blk.r_bar.get(s) * bar_gains[b].powi(2 * blk.k_bar as i32)
                    - 2.0 * kb * ab * cross_bar;
            }
        }
        Ok(())
    }

    pub fn terminal(&self) -> Vec<f64> {
        let states = self.layout.states;
        let mut v = vec![0.0; self.layout.dim()];
        for (b, blk) in self.spec.blocks.iter().enumerate() {
            for s in 0..states {
                v[self.alpha_idx(b, s)] = blk.q_terminal.get(s);
                v[self.alpha_bar_idx(b, s)] = blk.q_bar_terminal.get(s);
            }
        }
        v
    }

    /// Mean-field drift coefficient m(t,s): dxbar = m xbar dt with
    /// m = b1bar + sum_j b2bar_j gamma_j bar_gain_j (gamma = deviation scales).
    pub fn meanfield_coeff(&self, fields: &[RegimeField], t: f64, s: usize, scales: &[f64]) -> f64 {
        let mut m = self.spec.b1_bar.get(s);
        for (b, blk) in self.spec.blocks.iter().enumerate() {
            let bg = self.bar_gain(fields[2 * b + 1].eval(t, s), b, s);
            m += blk.count as f64 * blk.b2_bar.get(s) * scales[b] * bg;
        }
        m
    }

    pub fn value(&self, fields: &[RegimeField], init: &InitialState) -> Result<Vec<f64>> {
        Ok(self
            .spec
            .blocks
            .iter()
            .enumerate()
            .map(|(b, blk)| {
                let two_k = 2 * blk.k as i32;
                let two_kb = 2 * blk.k_bar as i32;
                fields[2 * b].at_node(0, init.s0) * init.spread.powi(two_k) / f64::from(two_k as u32)
                    + fields[2 * b + 1].at_node(0, init.s0) * init.x0.powi(two_kb)
                        / f64::from(two_kb as u32)
            })
            .collect())
    }
}

// ---------------------------------------------------------------------------
// Fully cooperative

#[derive(Debug, Clone)]
pub struct GvCoopGame {
    pub spec: GvPowerSpec,
    pub layout: Layout,
    pub t_floor: f64,
}

pub fn build_gv_power_cooperative(spec: GvPowerSpec) -> Result<GameDefinition> {
    validate_common(&spec, "gv_power_cooperative", false)?;
    let k0 = spec.blocks[0].k;
    let kb0 = spec.blocks[0].k_bar;
    require(
        spec.blocks.iter().all(|b| b.k == k0 && b.k_bar == kb0),
        "cooperative game requires a shared exponent pair (k, k_bar)",
    )?;
    for (b, blk) in spec.blocks.iter().enumerate() {
        require(
            blk.r.all(|v| v > 0.0) && blk.r_bar.all(|v| v > 0.0),
            format!("block {b}: r_i, r_bar_i > delta > 0 required"),
        )?;
    }
    let states = spec.gen.num_states();
    for s in 0..states {
        let qs: f64 = spec.blocks.iter().map(|b| b.count as f64 * b.q.get(s)).sum();
        let qbs: f64 = spec.blocks.iter().map(|b| b.count as f64 * b.q_bar.get(s)).sum();
        require(qs > 0.0, "sum_i q_i > 0 required")?;
        require(qbs > 0.0, "sum_i q_bar_i > 0 required")?;
    }
    spec.jumps.moment_power(k0)?;
    let layout = Layout {
        states,
        components: vec![
            ComponentDesc {
                name: "alpha_0".into(),
                alpha_like: true,
            },
            ComponentDesc {
                name: "alpha_bar_0".into(),
                alpha_like: true,
            },
        ],
    };
    let t_floor = spec.grid.dt() * 0.1;
    Ok(GameDefinition::GvPowerCooperative(GvCoopGame {
        spec,
        layout,
        t_floor,
    }))
}

impl GvCoopGame {
    pub fn gain(&self, alpha0_s: f64, b: usize, s: usize) -> f64 {
        let blk = &self.spec.blocks[b];
        sroot(-blk.b2.get(s) * alpha0_s / blk.r.get(s), 2 * blk.k - 1)
    }

    pub fn bar_gain(&self, alpha_bar0_s: f64, b: usize, s: usize) -> f64 {
        let blk = &self.spec.blocks[b];
        sroot(
            -blk.b2_bar.get(s) * alpha_bar0_s / blk.r_bar.get(s),
            2 * blk.k_bar - 1,
        )
    }

    pub fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        let spec = &self.spec;
        let states = self.layout.states;
        let k = f64::from(spec.blocks[0].k);
        let kb = f64::from(spec.blocks[0].k_bar);
        let two_k = 2 * spec.blocks[0].k as i32;
        let two_kb = 2 * spec.blocks[0].k_bar as i32;
        let jmp = spec.jumps.moment_power(spec.blocks[0].k)?;
        for s in 0..states {
            let load = noise_load(spec, self.t_floor, t, s);
            let a = y[self.layout.idx(0, s)];
            let ab = y[self.layout.idx(1, s)];
            let q_sum: f64 = spec.blocks.iter().map(|b| b.count as f64 * b.q.get(s)).sum();
            let qb_sum: f64 = spec
                .blocks
                .iter()
                .map(|b| b.count as f64 * b.q_bar.get(s))
                .sum();
            let own: f64 = spec
                .blocks
                .iter()
                .enumerate()
                .map(|(b, blk)| {
                    blk.count as f64 * blk.r.get(s) * self.gain(a, b, s).powi(two_k)
                })
                .sum();
            let own_bar: f64 = spec
                .blocks
                .iter()
                .enumerate()
                .map(|(b, blk)| {
                    blk.count as f64 * blk.r_bar.get(s) * self.bar_gain(ab, b, s).powi(two_kb)
                })
                .sum();
            let sw_a = spec.gen.switching_sum(t, s, |sp| y[self.layout.idx(0, sp)]);
            out[self.layout.idx(0, s)] = -q_sum
                - 2.0 * k * a * spec.b1.get(s)
                - a * k * (2.0 * k - 1.0) * load
                - a * jmp
                - sw_a
                + (2.0 * k - 1.0) * own;
            let sw_ab = spec.gen.switching_sum(t, s, |sp| y[self.layout.idx(1, sp)]);
            out[self.layout.idx(1, s)] = -qb_sum
                - 2.0 * kb * ab * spec.b1_bar.get(s)
                - sw_ab
                + (2.0 * kb - 1.0) * own_bar;
        }
        Ok(())
    }

    pub fn terminal(&self) -> Vec<f64> {
        let states = self.layout.states;
        let mut v = vec![0.0; self.layout.dim()];
        for s in 0..states {
            v[self.layout.idx(0, s)] = self
                .spec
                .blocks
                .iter()
                .map(|b| b.count as f64 * b.q_terminal.get(s))
                .sum();
            v[self.layout.idx(1, s)] = self
                .spec
                .blocks
                .iter()
                .map(|b| b.count as f64 * b.q_bar_terminal.get(s))
                .sum();
        }
        v
    }

    pub fn meanfield_coeff(&self, fields: &[RegimeField], t: f64, s: usize, scales: &[f64]) -> f64 {
        let mut m = self.spec.b1_bar.get(s);
        let ab = fields[1].eval(t, s);
        for (b, blk) in self.spec.blocks.iter().enumerate() {
            m += blk.count as f64 * blk.b2_bar.get(s) * scales[b] * self.bar_gain(ab, b, s);
        }
        m
    }

    /// Total cooperative cost (the aggregate objective the team minimizes).
    pub fn value(&self, fields: &[RegimeField], init: &InitialState) -> Result<Vec<f64>> {
        let two_k = 2 * self.spec.blocks[0].k as i32;
        let two_kb = 2 * self.spec.blocks[0].k_bar as i32;
        Ok(vec![
            fields[0].at_node(0, init.s0) * init.spread.powi(two_k) / f64::from(two_k as u32)
                + fields[1].at_node(0, init.s0) * init.x0.powi(two_kb) / f64::from(two_kb as u32),
        ])
    }
}

// ---------------------------------------------------------------------------
// Adversarial (two teams, minmax)

#[derive(Debug, Clone)]
pub struct AdvBlock {
    pub count: usize,
    pub r: Coeff,
    pub r_bar: Coeff,
    pub b2: Coeff,
    pub b2_bar: Coeff,
}

#[derive(Debug, Clone)]
pub struct GvAdversarialSpec {
    pub blocks: Vec<AdvBlock>,
    pub q: Coeff,
    pub q_bar: Coeff,
    pub q_terminal: Coeff,
    pub q_bar_terminal: Coeff,
    pub k: u32,
    pub k_bar: u32,
    pub b1: Coeff,
    pub b1_bar: Coeff,
    pub sigma: Coeff,
    pub sigma_gv: Coeff,
    pub hurst: Option<f64>,
    pub jumps: JumpSpec,
    pub xbar0: f64,
    pub spread: f64,
    pub s0: usize,
    pub gen: RegimeGenerator,
    pub grid: TimeGrid,
}

#[derive(Debug, Clone)]
pub struct GvAdversarialGame {
    pub spec: GvAdversarialSpec,
    pub layout: Layout,
    pub t_floor: f64,
}

pub fn build_gv_power_adversarial(spec: GvAdversarialSpec) -> Result<GameDefinition> {
    let states = spec.gen.num_states();
    require(!spec.blocks.is_empty(), "adversarial game needs at least one block")?;
    require(spec.s0 < states, "initial regime out of range")?;
    require(spec.spread >= 0.0, "spread must be nonnegative")?;
    require(
        spec.k >= 1 && spec.k <= MAX_POWER && spec.k_bar >= 1 && spec.k_bar <= MAX_POWER,
        format!("exponents must be integers in 1..={MAX_POWER}"),
    )?;
    for c in [&spec.b1, &spec.b1_bar, &spec.sigma, &spec.sigma_gv] {
        c.validate(states, "drift/noise coefficient")?;
    }
    if !spec.sigma_gv.all(|v| v == 0.0) {
        let h = spec.hurst.ok_or_else(|| {
            Error::HypothesisViolation("sigma_gv set but no Hurst parameter given".into())
        })?;
        require(h > 0.0 && h < 1.0, "Hurst parameter must lie in (0,1)")?;
    }
    for (nm, c) in [
        ("q", &spec.q),
        ("q_bar", &spec.q_bar),
        ("q_terminal", &spec.q_terminal),
        ("q_bar_terminal", &spec.q_bar_terminal),
    ] {
        c.validate(states, nm)?;
    }
    require(spec.q.all(|v| v > 0.0), "q > 0 required")?;
    require(spec.q_bar.all(|v| v > 0.0), "q_bar > 0 required")?;
    spec.jumps.moment_power(spec.k)?;
    for (b, blk) in spec.blocks.iter().enumerate() {
        require(blk.count >= 1, format!("block {b}: count >= 1 required"))?;
        for (nm, c) in [
            ("r", &blk.r),
            ("r_bar", &blk.r_bar),
            ("b2", &blk.b2),
            ("b2_bar", &blk.b2_bar),
        ] {
            c.validate(states, nm)?;
        }
        // teams are defined by the sign of r; r and r_bar must never vanish
        // and must agree in sign per block
        require(
            blk.r.all(|v| v != 0.0) && blk.r_bar.all(|v| v != 0.0),
            format!("block {b}: r, r_bar must be bounded away from zero"),
        )?;
        let sign = blk.r.get(0).signum();
        require(
            blk.r.all(|v| v.signum() == sign) && blk.r_bar.all(|v| v.signum() == sign),
            format!("block {b}: r and r_bar must share one sign (one team)"),
        )?;
    }
    // the bracketed aggregates must be positive for the saddle point to exist
    let two_k = 2 * spec.k as i32;
    let two_kb = 2 * spec.k_bar as i32;
    for s in 0..states {
        let agg: f64 = spec
            .blocks
            .iter()
            .map(|blk| {
                blk.count as f64
                    * blk.r.get(s)
                    * sroot(-blk.b2.get(s) / blk.r.get(s), 2 * spec.k - 1).powi(two_k)
            })
            .sum();
        if agg <= 0.0 {
            return Err(Error::AggregateSignViolation(agg));
        }
        let agg_bar: f64 = spec
            .blocks
            .iter()
            .map(|blk| {
                blk.count as f64
                    * blk.r_bar.get(s)
                    * sroot(-blk.b2_bar.get(s) / blk.r_bar.get(s), 2 * spec.k_bar - 1).powi(two_kb)
            })
            .sum();
        if agg_bar <= 0.0 {
            return Err(Error::AggregateSignViolation(agg_bar));
        }
    }
    let layout = Layout {
        states,
        components: vec![
            ComponentDesc {
                name: "alpha_ad".into(),
                alpha_like: true,
            },
            ComponentDesc {
                name: "alpha_bar_ad".into(),
                alpha_like: true,
            },
        ],
    };
    let t_floor = spec.grid.dt() * 0.1;
    Ok(GameDefinition::GvPowerAdversarial(GvAdversarialGame {
        spec,
        layout,
        t_floor,
    }))
}

impl GvAdversarialGame {
    fn noise_load(&self, t: f64, s: usize) -> f64 {
        let sig = self.spec.sigma.get(s);
        let mut load = sig * sig;
        if let Some(h) = self.spec.hurst {
            let sgv = self.spec.sigma_gv.get(s);
            if sgv != 0.0 {
                load += effective_gv_variance_fast(h, sgv, t.max(self.t_floor)).unwrap_or(0.0);
            }
        }
        load
    }

    pub fn gain(&self, alpha_s: f64, b: usize, s: usize) -> f64 {
        let blk = &self.spec.blocks[b];
        sroot(-blk.b2.get(s) * alpha_s / blk.r.get(s), 2 * self.spec.k - 1)
    }

    pub fn bar_gain(&self, alpha_bar_s: f64, b: usize, s: usize) -> f64 {
        let blk = &self.spec.blocks[b];
        sroot(
            -blk.b2_bar.get(s) * alpha_bar_s / blk.r_bar.get(s),
            2 * self.spec.k_bar - 1,
        )
    }

    pub fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        let spec = &self.spec;
        let states = self.layout.states;
        let k = f64::from(spec.k);
        let kb = f64::from(spec.k_bar);
        let two_k = 2 * spec.k as i32;
        let two_kb = 2 * spec.k_bar as i32;
        let jmp = spec.jumps.moment_power(spec.k)?;
        for s in 0..states {
            let load = self.noise_load(t, s);
            let a = y[self.layout.idx(0, s)];
            let ab = y[self.layout.idx(1, s)];
            // signed aggregate sum_i r_i gain_i^{2k}, formed per player so the
            // attacker's negative r enters sign-correctly
            let agg: f64 = (0..spec.blocks.len())
                .map(|b| {
                    let blk = &spec.blocks[b];
                    blk.count as f64 * blk.r.get(s) * self.gain(a, b, s).powi(two_k)
                })
                .sum();
            let agg_bar: f64 = (0..spec.blocks.len())
                .map(|b| {
                    let blk = &spec.blocks[b];
                    blk.count as f64 * blk.r_bar.get(s) * self.bar_gain(ab, b, s).powi(two_kb)
                })
                .sum();
            let sw_a = spec.gen.switching_sum(t, s, |sp| y[self.layout.idx(0, sp)]);
            out[self.layout.idx(0, s)] = -spec.q.get(s)
                - 2.0 * k * a * spec.b1.get(s)
                - a * k * (2.0 * k - 1.0) * load
                - a * jmp
                - sw_a
                + (2.0 * k - 1.0) * agg;
            let sw_ab = spec.gen.switching_sum(t, s, |sp| y[self.layout.idx(1, sp)]);
            out[self.layout.idx(1, s)] = -spec.q_bar.get(s)
                - 2.0 * kb * ab * spec.b1_bar.get(s)
                - sw_ab
                + (2.0 * kb - 1.0) * agg_bar;
        }
        Ok(())
    }

    pub fn terminal(&self) -> Vec<f64> {
        let states = self.layout.states;
        let mut v = vec![0.0; self.layout.dim()];
        for s in 0..states {
            v[self.layout.idx(0, s)] = self.spec.q_terminal.get(s);
            v[self.layout.idx(1, s)] = self.spec.q_bar_terminal.get(s);
        }
        v
    }

    pub fn meanfield_coeff(&self, fields: &[RegimeField], t: f64, s: usize, scales: &[f64]) -> f64 {
        let mut m = self.spec.b1_bar.get(s);
        let ab = fields[1].eval(t, s);
        for (b, blk) in self.spec.blocks.iter().enumerate() {
            m += blk.count as f64 * blk.b2_bar.get(s) * scales[b] * self.bar_gain(ab, b, s);
        }
        m
    }

    /// Value of the adversarial game (single number, reported per block 0).
    pub fn value(&self, fields: &[RegimeField], init: &InitialState) -> Result<Vec<f64>> {
        let two_k = 2 * self.spec.k as i32;
        let two_kb = 2 * self.spec.k_bar as i32;
        Ok(vec![
            fields[0].at_node(0, init.s0) * init.spread.powi(two_k) / f64::from(two_k as u32)
                + fields[1].at_node(0, init.s0) * init.x0.powi(two_kb) / f64::from(two_kb as u32),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(count: usize, q: f64, r: f64, b2: f64, k: u32) -> GvBlock {
        GvBlock {
            count,
            q: Coeff::constant(q, 1),
            q_bar: Coeff::constant(q, 1),
            q_terminal: Coeff::constant(q, 1),
            q_bar_terminal: Coeff::constant(q, 1),
            r: Coeff::constant(r, 1),
            r_bar: Coeff::constant(r, 1),
            b2: Coeff::constant(b2, 1),
            b2_bar: Coeff::constant(b2, 1),
            k,
            k_bar: k,
        }
    }

    fn nash_spec(blocks: Vec<GvBlock>) -> GvPowerSpec {
        GvPowerSpec {
            blocks,
            b1: Coeff::constant(0.0, 1),
            b1_bar: Coeff::constant(0.0, 1),
            sigma: Coeff::constant(0.0, 1),
            sigma_gv: Coeff::constant(0.0, 1),
            hurst: None,
            jumps: JumpSpec::disabled(),
            xbar0: 1.0,
            spread: 0.5,
            s0: 0,
            gen: RegimeGenerator::single("s"),
            grid: TimeGrid::new(1.0, 64).unwrap(),
        }
    }

    #[test]
    fn symmetric_blocks_same_rhs() {
        let def = build_gv_power_nash(nash_spec(vec![
            block(1, 1.0, 1.0, 1.0, 2),
            block(1, 1.0, 1.0, 1.0, 2),
        ]))
        .unwrap();
        let y = def.terminal();
        let mut out = vec![0.0; y.len()];
        def.rhs(1.0, &y, &mut out).unwrap();
        assert!((out[0] - out[2]).abs() < 1e-15);
        assert!((out[1] - out[3]).abs() < 1e-15);
    }

    #[test]
    fn table_v_feedback_exponents() {
        // symmetric block with k = 2, q = r = b = 1: gain = -alpha^{1/3}
        let def = build_gv_power_nash(nash_spec(vec![block(2018, 1.0, 1.0, 1.0, 2)])).unwrap();
        if let GameDefinition::GvPowerNash(g) = &def {
            let alpha = 0.5;
            let gain = g.gain(alpha, 0, 0);
            assert!((gain - (-alpha.powf(1.0 / 3.0))).abs() < 1e-14);
        } else {
            panic!("wrong variant");
        }
    }

    #[test]
    fn cooperative_single_player_matches_nash_rhs() {
        // I = 1: cooperative rhs coincides with the Nash rhs (empty cross sum)
        let nash = build_gv_power_nash(nash_spec(vec![block(1, 1.0, 2.0, 1.5, 1)])).unwrap();
        let coop =
            build_gv_power_cooperative(nash_spec(vec![block(1, 1.0, 2.0, 1.5, 1)])).unwrap();
        let y = vec![0.8, 0.6];
        let mut on = vec![0.0; 2];
        let mut oc = vec![0.0; 2];
        nash.rhs(0.5, &y, &mut on).unwrap();
        coop.rhs(0.5, &y, &mut oc).unwrap();
        assert!((on[0] - oc[0]).abs() < 1e-14);
        assert!((on[1] - oc[1]).abs() < 1e-14);
    }

    fn adv_spec(r_att: f64) -> GvAdversarialSpec {
        GvAdversarialSpec {
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
                    r: Coeff::constant(r_att, 1),
                    r_bar: Coeff::constant(r_att, 1),
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
            sigma: Coeff::constant(0.0, 1),
            sigma_gv: Coeff::constant(0.0, 1),
            hurst: None,
            jumps: JumpSpec::disabled(),
            xbar0: 1.0,
            spread: 0.5,
            s0: 0,
            gen: RegimeGenerator::single("s"),
            grid: TimeGrid::new(1.0, 64).unwrap(),
        }
    }

    #[test]
    fn hand_computed_aggregate() {
        // defender r = 1, attacker r = -2, b = 1, k = 1:
        // aggregate = 1*1 + (-2)*(1/2)^2 = 1/2 > 0
        let def = build_gv_power_adversarial(adv_spec(-2.0)).unwrap();
        if let GameDefinition::GvPowerAdversarial(g) = &def {
            let a = 1.0;
            let agg: f64 = (0..2)
                .map(|b| {
                    let blk = &g.spec.blocks[b];
                    blk.r.get(0) * g.gain(a, b, 0).powi(2)
                })
                .sum();
            assert!((agg - 0.5).abs() < 1e-14);
        } else {
            panic!("wrong variant");
        }
    }

    #[test]
    fn aggregate_sign_guard() {
        // attacker r = -0.5 flips the aggregate: 1 + (-0.5)*(1/0.5)^2 = -1
        assert!(matches!(
            build_gv_power_adversarial(adv_spec(-0.5)),
            Err(Error::AggregateSignViolation(_))
        ));
    }
}
