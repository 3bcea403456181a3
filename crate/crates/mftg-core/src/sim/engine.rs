//! Per-game simulation loops.
//!
//! Multiplicative dynamics (log-state, geometric, power family) are stepped
//! through exact per-step stochastic exponentials: positivity is structural
//! and the Gauss-Volterra factor carries its variance-increment correction
//! (exp(sigma_gv dB_gv - 1/2 sigma_gv^2 d[t^{2H}])), which is the integral
//! convention the coefficient equations assume for the fractional noise.
//! Additive and trigonometric dynamics use Euler-Maruyama with exact jump
//! insertion; the singular cot/coth drifts are advanced by their exact flows
//! before the regular terms.
//!
//! Conditional means: mode A steps the game's closed-form mean-field ODE,
//! mode B keeps the particle average, maintaining mean(zeta) = 0 by
//! recentering after every step so the two representations stay aligned.

use super::{CheckpointStats, MeanfieldMode, PathEnsemble, SamplePath, SimOptions};
use crate::error::{Error, Result};
use crate::field::RegimeField;
use crate::games::*;
use crate::grid::TimeGrid;
use crate::jump::JumpSpec;
use crate::noise::ctmc::{sample_ctmc, sample_ctmc_controlled, RegimePath};
use crate::noise::gv::gv_nodes_from_white;
use crate::noise::jumps::sample_jumps;
use crate::noise::kernel::{KernelColumn, VolterraKernel};
use crate::rng::{RngFactory, StreamTag};
use crate::solver::SolvedCoefficients;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use std::sync::Arc;

const TRIG_GUARD: f64 = 1e-6;

pub(super) fn run(
    def: &GameDefinition,
    sol: &SolvedCoefficients,
    opts: &SimOptions,
    scales: &[f64],
) -> Result<PathEnsemble> {
    match def {
        GameDefinition::LogState(g) => log_state(g, sol, opts, scales),
        GameDefinition::LogSquare(g) => log_square(g, sol, opts, scales),
        GameDefinition::LegendreFenchel(g) => fenchel(g, sol, opts, scales),
        GameDefinition::GeometricGv(g) => geometric(g, sol, opts, scales),
        GameDefinition::ControlledSwitching(g) => switching(g, sol, opts, scales),
        GameDefinition::QuadraticQuadratic(g) => quadratic(g, sol, opts, scales),
        GameDefinition::Cotangent(g) | GameDefinition::HyperbolicCotangent(g) => {
            trig(g, sol, opts, scales)
        }
        GameDefinition::DelayedTrend(g) => delay(g, sol, opts, scales),
        GameDefinition::GvPowerNash(g) => gv_power(g, sol, opts, scales),
        GameDefinition::GvPowerCooperative(g) => gv_coop(g, sol, opts, scales),
        GameDefinition::GvPowerAdversarial(g) => gv_adversarial(g, sol, opts, scales),
    }
}

// ---------------------------------------------------------------------------
// shared plumbing

/// Result of one common-noise path (all its particles).
struct PathBlock {
    costs: Vec<Vec<f64>>,
    samples: Vec<SamplePath>,
    sum_abs_x: Vec<f64>,
    xbar: Option<Vec<f64>>,
    checkpoints: Vec<Vec<Vec<f64>>>,
}

impl PathBlock {
    fn new(players: usize, particles: usize, nodes: usize, n_chk: usize) -> Self {
        Self {
            costs: vec![Vec::with_capacity(particles); players],
            samples: Vec::new(),
            sum_abs_x: vec![0.0; nodes],
            xbar: None,
            checkpoints: vec![vec![Vec::new(); players]; n_chk],
        }
    }
}

struct Assembler<'a> {
    grid: TimeGrid,
    variant: &'static str,
    opts: &'a SimOptions,
    players: usize,
    meanfield_used: &'static str,
    checkpoint_nodes: Vec<usize>,
}

impl<'a> Assembler<'a> {
    fn collect(&self, blocks: Vec<PathBlock>) -> PathEnsemble {
        let r = self.opts.common_paths;
        let m = self.opts.particles;
        let mut costs = vec![Vec::with_capacity(r * m); self.players];
        let mut clusters = Vec::with_capacity(r * m);
        let mut sample_paths = Vec::new();
        let mut mean_abs = vec![0.0; self.grid.num_nodes()];
        let mut xbar_paths = Vec::new();
        let mut checkpoints: Vec<CheckpointStats> = self
            .checkpoint_nodes
            .iter()
            .map(|&node| CheckpointStats {
                node,
                values: vec![Vec::new(); self.players],
            })
            .collect();
        for (rid, block) in blocks.into_iter().enumerate() {
            for p in 0..self.players {
                costs[p].extend_from_slice(&block.costs[p]);
            }
            let n_particles = block.costs[0].len();
            clusters.extend(std::iter::repeat(rid).take(n_particles));
            sample_paths.extend(block.samples);
            for (acc, v) in mean_abs.iter_mut().zip(&block.sum_abs_x) {
                *acc += v;
            }
            if let Some(xb) = block.xbar {
                if xbar_paths.len() < self.opts.store_paths.max(1) {
                    xbar_paths.push(xb);
                }
            }
            for (chk, per_path) in checkpoints.iter_mut().zip(block.checkpoints) {
                for (pl, vals) in per_path.into_iter().enumerate() {
                    chk.values[pl].extend(vals);
                }
            }
        }
        let total = clusters.len() as f64;
        for v in mean_abs.iter_mut() {
            *v /= total;
        }
        PathEnsemble {
            grid: self.grid,
            variant: self.variant,
            costs,
            clusters,
            sample_paths,
            mean_abs_state: mean_abs,
            xbar_paths,
            checkpoints,
            seed: self.opts.seed,
            common_paths: r,
            particles: m,
            meanfield_used: self.meanfield_used,
        }
    }
}

fn regime_nodes(
    gen: &crate::regime::RegimeGenerator,
    s0: usize,
    grid: &TimeGrid,
    factory: &RngFactory,
    r: usize,
) -> Result<(RegimePath, Vec<usize>)> {
    let mut rng = factory.stream(r as u64, StreamTag::Regime);
    let path = sample_ctmc(gen, s0, grid, &mut rng)?;
    let nodes = path.at_nodes(grid);
    Ok((path, nodes))
}

/// Bucket jump marks by grid step: marks with time in (t_n, t_{n+1}].
fn bucket_marks(events: &[(f64, f64)], grid: &TimeGrid) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new(); grid.steps()];
    for &(t, theta) in events {
        let cell = grid.cell_of(t * (1.0 - 1e-15));
        out[cell].push(theta);
    }
    out
}

struct Trapezoid {
    acc: Vec<f64>,
    prev: Vec<f64>,
    first: bool,
}

impl Trapezoid {
    fn new(players: usize) -> Self {
        Self {
            acc: vec![0.0; players],
            prev: vec![0.0; players],
            first: true,
        }
    }

    fn push(&mut self, rates: &[f64], dt: f64) {
        if self.first {
            self.first = false;
        } else {
            for i in 0..self.acc.len() {
                self.acc[i] += 0.5 * (self.prev[i] + rates[i]) * dt;
            }
        }
        self.prev.copy_from_slice(rates);
    }
}

/// Gauss-Volterra node-path provider shared by all particles.
enum GvSource {
    None,
    /// Triangular kernel table K(t_n, u_m), rows n = 1..=N.
    Table(Arc<GvTable>),
    /// Precomputed node paths per global particle id (large grids).
    Precomputed(Arc<Vec<Vec<f64>>>),
}

struct GvTable {
    steps: usize,
    tri: Vec<f64>,
}

impl GvTable {
    fn build(kernel: &VolterraKernel, grid: &TimeGrid) -> Result<Self> {
        let n = grid.steps();
        let cols: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|m| -> Result<Vec<f64>> {
                let s = 0.5 * (grid.node(m) + grid.node(m + 1));
                let mut col = KernelColumn::new(kernel, s);
                (m + 1..=n).map(|node| col.eval_at(grid.node(node))).collect()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut tri = vec![0.0; n * (n + 1) / 2];
        for (m, col) in cols.iter().enumerate() {
            for (j, v) in col.iter().enumerate() {
                let node = m + 1 + j;
                tri[node * (node - 1) / 2 + m] = *v;
            }
        }
        Ok(Self { steps: n, tri })
    }

    fn apply(&self, white: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
        for node in 1..=self.steps {
            let off = node * (node - 1) / 2;
            let row = &self.tri[off..off + node];
            let mut acc = 0.0;
            for (k, w) in row.iter().zip(white.iter()) {
                acc += k * w;
            }
            out[node] = acc;
        }
    }
}

fn make_gv_source(
    hurst: Option<f64>,
    needed: bool,
    grid: &TimeGrid,
    factory: &RngFactory,
    tag: StreamTag,
    n_paths: usize,
) -> Result<GvSource> {
    if !needed {
        return Ok(GvSource::None);
    }
    let h = hurst.ok_or_else(|| {
        Error::HypothesisViolation("Gauss-Volterra noise active but no Hurst parameter".into())
    })?;
    let kernel = VolterraKernel::fbm(h)?;
    if grid.steps() <= 4000 {
        Ok(GvSource::Table(Arc::new(GvTable::build(&kernel, grid)?)))
    } else {
        // large grids: the triangular table would be too big; stream kernel
        // columns once per batch of paths and keep the node values
        let ids: Vec<usize> = (0..n_paths).collect();
        let chunks: Vec<Vec<Vec<f64>>> = ids
            .par_chunks(128)
            .map(|chunk| -> Result<Vec<Vec<f64>>> {
                let normal = Normal::new(0.0, grid.dt().sqrt()).expect("positive dt");
                let white: Vec<Vec<f64>> = chunk
                    .iter()
                    .map(|&p| {
                        let mut rng = factory.stream(p as u64, tag);
                        (0..grid.steps()).map(|_| normal.sample(&mut rng)).collect()
                    })
                    .collect();
                gv_nodes_from_white(&kernel, grid, &white)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut all = Vec::with_capacity(n_paths);
        for c in chunks {
            all.extend(c);
        }
        Ok(GvSource::Precomputed(Arc::new(all)))
    }
}

impl GvSource {
    fn nodes(&self, grid: &TimeGrid, factory: &RngFactory, tag: StreamTag, pid: usize) -> Vec<f64> {
        match self {
            GvSource::None => vec![0.0; grid.num_nodes()],
            GvSource::Table(tbl) => {
                let normal = Normal::new(0.0, grid.dt().sqrt()).expect("positive dt");
                let mut rng = factory.stream(pid as u64, tag);
                let white: Vec<f64> =
                    (0..grid.steps()).map(|_| normal.sample(&mut rng)).collect();
                let mut out = vec![0.0; grid.num_nodes()];
                tbl.apply(&white, &mut out);
                out
            }
            GvSource::Precomputed(paths) => paths[pid].clone(),
        }
    }
}

fn brownian(grid: &TimeGrid, factory: &RngFactory, pid: u64, tag: StreamTag) -> Vec<f64> {
    let normal = Normal::new(0.0, grid.dt().sqrt()).expect("positive dt");
    let mut rng = factory.stream(pid, tag);
    (0..grid.steps()).map(|_| normal.sample(&mut rng)).collect()
}

fn checkpoint_nodes(grid: &TimeGrid, enabled: bool) -> Vec<usize> {
    if !enabled {
        return Vec::new();
    }
    vec![grid.steps() / 4, grid.steps() / 2, 3 * grid.steps() / 4]
}

/// Unit variance increment of the fBm integrator: t_{n+1}^{2H} - t_n^{2H}.
fn gv_var_increment(h: f64, grid: &TimeGrid, n: usize) -> f64 {
    grid.node(n + 1).powf(2.0 * h) - grid.node(n).powf(2.0 * h)
}

fn new_sample(
    pid: usize,
    opts: &SimOptions,
    r: usize,
    s_nodes: &[usize],
    players: usize,
    nodes: usize,
) -> Option<SamplePath> {
    (pid < opts.store_paths).then(|| SamplePath {
        common: r,
        x: Vec::with_capacity(nodes),
        regimes: s_nodes.to_vec(),
        controls: vec![Vec::with_capacity(nodes); players],
    })
}

// ---------------------------------------------------------------------------
// log-state game

fn log_state(
    g: &LogStateGame,
    sol: &SolvedCoefficients,
    opts: &SimOptions,
    scales: &[f64],
) -> Result<PathEnsemble> {
    let spec = &g.spec;
    let grid = spec.grid;
    let factory = RngFactory::new(opts.seed);
    let n_players = spec.players.len();
    let chk_nodes = checkpoint_nodes(&grid, opts.record_checkpoints);
    let asm = Assembler {
        grid,
        variant: "log_state",
        opts,
        players: n_players,
        meanfield_used: "none",
        checkpoint_nodes: chk_nodes.clone(),
    };
    let fields = &sol.fields;
    let two_k = 2 * spec.k as i32;
    let compensator = spec.jumps.mean_amplitude();

    let blocks: Vec<PathBlock> = (0..opts.common_paths)
        .into_par_iter()
        .map(|r| -> Result<PathBlock> {
            let (_, s_nodes) = regime_nodes(&spec.gen, spec.s0, &grid, &factory, r)?;
            let nodes = grid.num_nodes();
            let mut block = PathBlock::new(n_players, opts.particles, nodes, chk_nodes.len());
            for m in 0..opts.particles {
                let pid = r * opts.particles + m;
                let db = brownian(&grid, &factory, pid as u64, StreamTag::Brownian);
                let mut jrng = factory.stream(pid as u64, StreamTag::Jumps);
                let marks = bucket_marks(&sample_jumps(&spec.jumps, &grid, &mut jrng), &grid);

                let mut y = spec.x0.ln();
                let mut trap = Trapezoid::new(n_players);
                let dt = grid.dt();
                let mut sp = new_sample(pid, opts, r, &s_nodes, n_players, nodes);
                for n in 0..nodes {
                    let t = grid.node(n);
                    let s = s_nodes[n];
                    let controls: Vec<f64> = (0..n_players)
                        .map(|i| scales[i] * g.gain(fields[2 * i].eval(t, s), i, s))
                        .collect();
                    let rates: Vec<f64> = (0..n_players)
                        .map(|i| {
                            let p = &spec.players[i];
                            -p.q.get(s) * y + p.r.get(s) * controls[i].powi(two_k)
                        })
                        .collect();
                    trap.push(&rates, dt);
                    block.sum_abs_x[n] += y.exp();
                    if let Some(sp) = sp.as_mut() {
                        sp.x.push(y.exp());
                        for (i, c) in controls.iter().enumerate() {
                            sp.controls[i].push(*c);
                        }
                    }
                    if let Some(ci) = chk_nodes.iter().position(|cn| *cn == n) {
                        for i in 0..n_players {
                            let f = -fields[2 * i].eval(t, s) * y + fields[2 * i + 1].eval(t, s);
                            block.checkpoints[ci][i].push(f + trap.acc[i]);
                        }
                    }
                    if n == grid.steps() {
                        break;
                    }
                    // d ln x = [b1 y + sum_j b2_j u_j - sigma^2/2 - compensator] dt
                    //        + sigma dB + sum ln(1 + theta)
                    let sig = spec.sigma.get(s);
                    let drift_at = |tt: f64, yy: f64| {
                        let mut d = spec.b1.get(s) * yy - 0.5 * sig * sig - compensator;
                        for j in 0..n_players {
                            d += spec.players[j].b2.get(s)
                                * scales[j]
                                * g.gain(fields[2 * j].eval(tt, s), j, s);
                        }
                        d
                    };
                    // Heun step on the drift, then the noise increments
                    let d0 = drift_at(t, y);
                    let d1 = drift_at(t + dt, y + d0 * dt);
                    y += 0.5 * (d0 + d1) * dt + sig * db[n];
                    for theta in &marks[n] {
                        y += theta.ln_1p();
                    }
                }
                let s_t = s_nodes[grid.steps()];
                for i in 0..n_players {
                    let terminal = -spec.players[i].q_terminal.get(s_t) * y;
                    block.costs[i].push(trap.acc[i] + terminal);
                }
                if let Some(sp) = sp.take() {
                    block.samples.push(sp);
                }
            }
            Ok(block)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(asm.collect(blocks))
}

// ---------------------------------------------------------------------------
// log-square game (noise-free multiplicative dynamics)

fn log_square(
    g: &LogSquareGame,
    sol: &SolvedCoefficients,
    opts: &SimOptions,
    scales: &[f64],
) -> Result<PathEnsemble> {
    let spec = &g.spec;
    let grid = spec.grid;
    let factory = RngFactory::new(opts.seed);
    let n_players = spec.players.len();
    let asm = Assembler {
        grid,
        variant: "log_square",
        opts,
        players: n_players,
        meanfield_used: "none",
        checkpoint_nodes: Vec::new(),
    };
    let fields = &sol.fields;

    let blocks: Vec<PathBlock> = (0..opts.common_paths)
        .into_par_iter()
        .map(|r| -> Result<PathBlock> {
            let (_, s_nodes) = regime_nodes(&spec.gen, spec.s0, &grid, &factory, r)?;
            let nodes = grid.num_nodes();
            let mut block = PathBlock::new(n_players, opts.particles, nodes, 0);
            for m in 0..opts.particles {
                let pid = r * opts.particles + m;
                let mut y = spec.x0.ln();
                let mut trap = Trapezoid::new(n_players);
                let dt = grid.dt();
                let mut sp = new_sample(pid, opts, r, &s_nodes, n_players, nodes);
                for n in 0..nodes {
                    let t = grid.node(n);
                    let s = s_nodes[n];
                    let coeffs: Vec<f64> = (0..n_players)
                        .map(|i| scales[i] * g.gain_coeff(fields[i].eval(t, s), i, s))
                        .collect();
                    let rates: Vec<f64> = (0..n_players)
                        .map(|i| {
                            let p = &spec.players[i];
                            p.q.get(s) * y * y + p.r.get(s) * (coeffs[i] * y).powi(2)
                        })
                        .collect();
                    trap.push(&rates, dt);
                    block.sum_abs_x[n] += y.exp();
                    if let Some(sp) = sp.as_mut() {
                        sp.x.push(y.exp());
                        for (i, c) in coeffs.iter().enumerate() {
                            sp.controls[i].push(c * y);
                        }
                    }
                    if n == grid.steps() {
                        break;
                    }
                    // dy = (b1 + sum_j b2_j coeff_j) y dt: exponential step with
                    // midpoint coefficients
                    let tm = t + 0.5 * dt;
                    let mut c = spec.b1.get(s);
                    for j in 0..n_players {
                        c += spec.players[j].b2.get(s)
                            * scales[j]
                            * g.gain_coeff(fields[j].eval(tm, s), j, s);
                    }
                    y *= (c * dt).exp();
                }
                let s_t = s_nodes[grid.steps()];
                for i in 0..n_players {
                    block.costs[i].push(trap.acc[i] + spec.players[i].q_terminal.get(s_t) * y * y);
                }
                if let Some(sp) = sp.take() {
                    block.samples.push(sp);
                }
            }
            Ok(block)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(asm.collect(blocks))
}

// ---------------------------------------------------------------------------
// Legendre-Fenchel power game (Euler on the raw state)

fn fenchel(
    g: &FenchelGame,
    sol: &SolvedCoefficients,
    opts: &SimOptions,
    scales: &[f64],
) -> Result<PathEnsemble> {
    let spec = &g.spec;
    let grid = spec.grid;
    let factory = RngFactory::new(opts.seed);
    let n_players = spec.players.len();
    let asm = Assembler {
        grid,
        variant: "legendre_fenchel",
        opts,
        players: n_players,
        meanfield_used: "none",
        checkpoint_nodes: Vec::new(),
    };
    let fields = &sol.fields;
    let two_k = 2.0 * f64::from(spec.k);

    let blocks: Vec<PathBlock> = (0..opts.common_paths)
        .into_par_iter()
        .map(|r| -> Result<PathBlock> {
            let (_, s_nodes) = regime_nodes(&spec.gen, spec.s0, &grid, &factory, r)?;
            let nodes = grid.num_nodes();
            let mut block = PathBlock::new(n_players, opts.particles, nodes, 0);
            for m in 0..opts.particles {
                let pid = r * opts.particles + m;
                let db = brownian(&grid, &factory, pid as u64, StreamTag::Brownian);
                let mut x = spec.x0;
                let mut trap = Trapezoid::new(n_players);
                let dt = grid.dt();
                let mut sp = new_sample(pid, opts, r, &s_nodes, n_players, nodes);
                for n in 0..nodes {
                    let t = grid.node(n);
                    let s = s_nodes[n];
                    let controls: Vec<f64> = (0..n_players)
                        .map(|j| scales[j] * g.gain_coeff(fields[2 * j].eval(t, s), j, s) * x)
                        .collect();
                    let rates: Vec<f64> = (0..n_players)
                        .map(|i| {
                            let mut c = spec.players[i].q.get(s) * g.l1(x);
                            for (j, u) in controls.iter().enumerate() {
                                c += spec.r[i][j].get(s) * g.l2(*u);
                            }
                            c
                        })
                        .collect();
                    trap.push(&rates, dt);
                    block.sum_abs_x[n] += x.abs();
                    if let Some(sp) = sp.as_mut() {
                        sp.x.push(x);
                        for (i, c) in controls.iter().enumerate() {
                            sp.controls[i].push(*c);
                        }
                    }
                    if n == grid.steps() {
                        break;
                    }
                    // drift b1 x/(2k) + sum_j b2_j u_j / (2k kappa),
                    // diffusion^2 = (sigma1^2 + sigma2^2 l1(x)) / l1''(x)
                    let mut drift = spec.b1.get(s) * x / two_k;
                    for (j, u) in controls.iter().enumerate() {
                        drift += spec.players[j].b2.get(s) * u / (two_k * spec.kappa);
                    }
                    let s1 = spec.sigma1.get(s);
                    let s2 = spec.sigma2.get(s);
                    let l1pp = spec.kappa * (two_k - 1.0) * x.powi(2 * spec.k as i32 - 2);
                    let diff2 = (s1 * s1 + s2 * s2 * g.l1(x)) / l1pp;
                    x += drift * dt + diff2.max(0.0).sqrt() * db[n];
                }
                let s_t = s_nodes[grid.steps()];
                for i in 0..n_players {
                    block.costs[i]
                        .push(trap.acc[i] + spec.players[i].q_terminal.get(s_t) * g.l1(x));
                }
                if let Some(sp) = sp.take() {
                    block.samples.push(sp);
                }
            }
            Ok(block)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(asm.collect(blocks))
}

// ---------------------------------------------------------------------------
// geometric Gauss-Volterra game (exact stochastic-exponential stepping)

fn geometric(
    g: &GeometricGame,
    sol: &SolvedCoefficients,
    opts: &SimOptions,
    scales: &[f64],
) -> Result<PathEnsemble> {
    let spec = &g.spec;
    let grid = spec.grid;
    let factory = RngFactory::new(opts.seed);
    let n_players = spec.players.len();
    let asm = Assembler {
        grid,
        variant: "geometric_gv",
        opts,
        players: n_players,
        meanfield_used: "none",
        checkpoint_nodes: Vec::new(),
    };
    let fields = &sol.fields;
    let k = f64::from(spec.k);
    let two_k = 2 * spec.k as i32;
    let total = opts.common_paths * opts.particles;
    let idio_gv = !spec.sigma_gv.all(|v| v == 0.0);
    let common_gv = !spec.sigma_o_gv.all(|v| v == 0.0);
    let gv_idio =
        make_gv_source(spec.hurst, idio_gv, &grid, &factory, StreamTag::GaussVolterra, total)?;
    let gv_common = make_gv_source(
        spec.hurst,
        common_gv,
        &grid,
        &factory,
        StreamTag::CommonGaussVolterra,
        opts.common_paths,
    )?;
    let comp = spec.jumps.mean_amplitude();
    let comp_o = spec.jumps_common.mean_amplitude();

    let blocks: Vec<PathBlock> = (0..opts.common_paths)
        .into_par_iter()
        .map(|r| -> Result<PathBlock> {
            let (_, s_nodes) = regime_nodes(&spec.gen, spec.s0, &grid, &factory, r)?;
            let dbo = brownian(&grid, &factory, r as u64, StreamTag::CommonBrownian);
            let mut jrng_o = factory.stream(r as u64, StreamTag::CommonJumps);
            let marks_o =
                bucket_marks(&sample_jumps(&spec.jumps_common, &grid, &mut jrng_o), &grid);
            let bgv_o = gv_common.nodes(&grid, &factory, StreamTag::CommonGaussVolterra, r);
            let nodes = grid.num_nodes();
            let mut block = PathBlock::new(n_players, opts.particles, nodes, 0);
            for m in 0..opts.particles {
                let pid = r * opts.particles + m;
                let db = brownian(&grid, &factory, pid as u64, StreamTag::Brownian);
                let mut jrng = factory.stream(pid as u64, StreamTag::Jumps);
                let marks = bucket_marks(&sample_jumps(&spec.jumps, &grid, &mut jrng), &grid);
                let bgv = gv_idio.nodes(&grid, &factory, StreamTag::GaussVolterra, pid);

                let mut y = spec.x0.ln();
                let mut trap = Trapezoid::new(n_players);
                let dt = grid.dt();
                let mut sp = new_sample(pid, opts, r, &s_nodes, n_players, nodes);
                for n in 0..nodes {
                    let t = grid.node(n);
                    let s = s_nodes[n];
                    let x = y.exp();
                    let gains: Vec<f64> = (0..n_players)
                        .map(|j| scales[j] * g.gain(fields[j].eval(t, s), j, s))
                        .collect();
                    let xk = x.powi(spec.k as i32);
                    let rates: Vec<f64> = (0..n_players)
                        .map(|i| {
                            let p = &spec.players[i];
                            (p.q.get(s) + p.r.get(s) * gains[i].powi(two_k)) * xk / k
                        })
                        .collect();
                    trap.push(&rates, dt);
                    block.sum_abs_x[n] += x;
                    if let Some(sp) = sp.as_mut() {
                        sp.x.push(x);
                        for (i, gn) in gains.iter().enumerate() {
                            sp.controls[i].push(gn * x.sqrt());
                        }
                    }
                    if n == grid.steps() {
                        break;
                    }
                    let sig = spec.sigma.get(s);
                    let sig_o = spec.sigma_o.get(s);
                    let sgv = spec.sigma_gv.get(s);
                    let sogv = spec.sigma_o_gv.get(s);
                    // deterministic exponent at the midpoint
                    let tm = t + 0.5 * dt;
                    let mut c = 2.0 * spec.b1.get(s) + g.sigma2_total(tm, s);
                    for j in 0..n_players {
                        c += 2.0
                            * spec.players[j].b2.get(s)
                            * scales[j]
                            * g.gain(fields[j].eval(tm, s), j, s);
                    }
                    let mut dy = (c
                        - 2.0 * comp
                        - 2.0 * comp_o
                        - 2.0 * sig * sig
                        - 2.0 * sig_o * sig_o)
                        * dt
                        + 2.0 * sig * db[n]
                        + 2.0 * sig_o * dbo[n];
                    if let Some(h) = spec.hurst {
                        let dv = gv_var_increment(h, &grid, n);
                        if sgv != 0.0 {
                            dy += 2.0 * sgv * (bgv[n + 1] - bgv[n]) - 2.0 * sgv * sgv * dv;
                        }
                        if sogv != 0.0 {
                            dy += 2.0 * sogv * (bgv_o[n + 1] - bgv_o[n]) - 2.0 * sogv * sogv * dv;
                        }
                    }
                    for theta in &marks[n] {
                        dy += (2.0 * theta).ln_1p();
                    }
                    for theta in &marks_o[n] {
                        dy += (2.0 * theta).ln_1p();
                    }
                    y += dy;
                }
                let s_t = s_nodes[grid.steps()];
                let x_t = y.exp();
                for i in 0..n_players {
                    block.costs[i].push(
                        trap.acc[i]
                            + spec.players[i].q_terminal.get(s_t) * x_t.powi(spec.k as i32) / k,
                    );
                }
                if let Some(sp) = sp.take() {
                    block.samples.push(sp);
                }
            }
            Ok(block)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(asm.collect(blocks))
}

// ---------------------------------------------------------------------------
// controlled switching game

fn switching(
    g: &SwitchingGame,
    sol: &SolvedCoefficients,
    opts: &SimOptions,
    scales: &[f64],
) -> Result<PathEnsemble> {
    let spec = &g.spec;
    let grid = spec.grid;
    let factory = RngFactory::new(opts.seed);
    let n_players = spec.players.len();
    if opts.particles != 1 {
        return Err(Error::InvalidInput(
            "controlled_switching simulates one particle per path (the chain is endogenous)"
                .into(),
        ));
    }
    let asm = Assembler {
        grid,
        variant: "controlled_switching",
        opts,
        players: n_players,
        meanfield_used: "none",
        checkpoint_nodes: Vec::new(),
    };
    let randomized = (0..n_players).any(|j| spec.rates.b1_std(j) > 0.0);

    let blocks: Vec<PathBlock> = (0..opts.common_paths)
        .into_par_iter()
        .map(|r| -> Result<PathBlock> {
            let mut drng = factory.stream(r as u64, StreamTag::CoeffDraw);
            let draw = spec.rates.draw(&mut drng);
            // the V system depends on the realized draw
            let game;
            let fields_owned;
            let fields: &[RegimeField] = if randomized {
                let def =
                    build_controlled_switching_with_draw(spec.clone(), draw.clone())?;
                let solved = crate::solver::integrate_backward(&def, &grid)?;
                game = match def {
                    GameDefinition::ControlledSwitching(gg) => gg,
                    _ => unreachable!(),
                };
                fields_owned = solved.fields;
                &fields_owned
            } else {
                game = g.clone();
                &sol.fields
            };
            let feedback = |t: f64, s: usize| -> Vec<(f64, f64)> {
                (0..n_players)
                    .map(|j| {
                        let (c, mn) = game.feedback(fields, t, s, j);
                        (scales[j] * c, scales[j] * mn)
                    })
                    .collect()
            };
            let mut crng = factory.stream(r as u64, StreamTag::Regime);
            let path =
                sample_ctmc_controlled(&spec.rates, &draw, &feedback, spec.s0, &grid, &mut crng)?;
            let s_nodes = path.at_nodes(&grid);

            let nodes = grid.num_nodes();
            let mut block = PathBlock::new(n_players, 1, nodes, 0);
            let mut trap = Trapezoid::new(n_players);
            let dt = grid.dt();
            let mut sp = new_sample(r, opts, r, &s_nodes, n_players, nodes);
            for n in 0..nodes {
                let t = grid.node(n);
                let s = s_nodes[n];
                let controls = feedback(t, s);
                let rates: Vec<f64> = (0..n_players)
                    .map(|i| {
                        let p = &spec.players[i];
                        let (v, ub) = controls[i];
                        p.r.get(s) * v * v + p.r_bar.get(s) * ub * ub + p.eps.get(s) * ub
                    })
                    .collect();
                trap.push(&rates, dt);
                if let Some(sp) = sp.as_mut() {
                    sp.x.push(0.0);
                    for (i, (v, ub)) in controls.iter().enumerate() {
                        sp.controls[i].push(v + ub);
                    }
                }
            }
            let s_t = s_nodes[grid.steps()];
            for i in 0..n_players {
                block.costs[i].push(trap.acc[i] + spec.players[i].q_terminal.get(s_t));
            }
            if let Some(sp) = sp.take() {
                block.samples.push(sp);
            }
            Ok(block)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(asm.collect(blocks))
}

// ---------------------------------------------------------------------------
// quadratic-quadratic game

fn quadratic(
    g: &QuadraticGame,
    sol: &SolvedCoefficients,
    opts: &SimOptions,
    scales: &[f64],
) -> Result<PathEnsemble> {
    let spec = &g.spec;
    let grid = spec.grid;
    let factory = RngFactory::new(opts.seed);
    let n_players = spec.players.len();
    let asm = Assembler {
        grid,
        variant: "quadratic_quadratic",
        opts,
        players: n_players,
        meanfield_used: "none",
        checkpoint_nodes: Vec::new(),
    };
    let fields = &sol.fields;
    let comp = spec.jumps.mean_amplitude();

    let blocks: Vec<PathBlock> = (0..opts.common_paths)
        .into_par_iter()
        .map(|r| -> Result<PathBlock> {
            let (_, s_nodes) = regime_nodes(&spec.gen, spec.s0, &grid, &factory, r)?;
            let nodes = grid.num_nodes();
            let mut block = PathBlock::new(n_players, opts.particles, nodes, 0);
            for m in 0..opts.particles {
                let pid = r * opts.particles + m;
                let db = brownian(&grid, &factory, pid as u64, StreamTag::Brownian);
                let mut jrng = factory.stream(pid as u64, StreamTag::Jumps);
                let marks = bucket_marks(&sample_jumps(&spec.jumps, &grid, &mut jrng), &grid);
                let mut erng = factory.stream(pid as u64, StreamTag::CoeffDraw);
                let eps: Vec<f64> = spec
                    .players
                    .iter()
                    .map(|p| {
                        if p.eps1_std > 0.0 {
                            Normal::new(0.0, p.eps1_std)
                                .expect("validated std")
                                .sample(&mut erng)
                        } else {
                            0.0
                        }
                    })
                    .collect();

                let mut x = spec.x0;
                let mut trap = Trapezoid::new(n_players);
                let dt = grid.dt();
                let mut sp = new_sample(pid, opts, r, &s_nodes, n_players, nodes);
                for n in 0..nodes {
                    let t = grid.node(n);
                    let s = s_nodes[n];
                    let centered: Vec<f64> = (0..n_players)
                        .map(|j| -scales[j] * g.centered_slope(fields[j].eval(t, s), j, s) * eps[j])
                        .collect();
                    let means: Vec<f64> = (0..n_players)
                        .map(|j| scales[j] * g.mean_control(fields[j].eval(t, s), j, s))
                        .collect();
                    let rates: Vec<f64> = (0..n_players)
                        .map(|i| {
                            let p = &spec.players[i];
                            p.r.get(s) * centered[i] * centered[i]
                                + p.r_bar.get(s) * means[i] * means[i]
                                + p.eps_bar_2.get(s) * means[i]
                        })
                        .collect();
                    trap.push(&rates, dt);
                    block.sum_abs_x[n] += x.abs();
                    if let Some(sp) = sp.as_mut() {
                        sp.x.push(x);
                        for i in 0..n_players {
                            sp.controls[i].push(centered[i] + means[i]);
                        }
                    }
                    if n == grid.steps() {
                        break;
                    }
                    let tm = t + 0.5 * dt;
                    let mut drift = -comp;
                    for j in 0..n_players {
                        let p = &spec.players[j];
                        let cm = -scales[j] * g.centered_slope(fields[j].eval(tm, s), j, s) * eps[j];
                        let mm = scales[j] * g.mean_control(fields[j].eval(tm, s), j, s);
                        drift += p.q.get(s) * cm * cm
                            + p.q_bar.get(s) * mm * mm
                            + eps[j] * cm
                            + p.eps_bar_1.get(s) * mm;
                    }
                    x += drift * dt + spec.sigma.get(s) * db[n];
                    for theta in &marks[n] {
                        x += theta;
                    }
                }
                let s_t = s_nodes[grid.steps()];
                for i in 0..n_players {
                    block.costs[i].push(trap.acc[i] + spec.players[i].q_terminal.get(s_t) * x);
                }
                if let Some(sp) = sp.take() {
                    block.samples.push(sp);
                }
            }
            Ok(block)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(asm.collect(blocks))
}

// ---------------------------------------------------------------------------
// trigonometric games

/// Exact flow of d zeta/dt = 1/2 cot(zeta/2) over dt.
fn cot_flow(zeta: f64, dt: f64) -> f64 {
    if zeta == 0.0 {
        return 2.0 * (-dt / 4.0).exp().acos();
    }
    let sign = zeta.signum();
    let c = (zeta.abs() / 2.0).cos() * (-dt / 4.0).exp();
    sign * 2.0 * c.clamp(-1.0, 1.0).acos()
}

/// Exact flow of d zeta/dt = 1/2 coth(zeta/2) over dt.
fn coth_flow(zeta: f64, dt: f64) -> f64 {
    let sign = if zeta == 0.0 { 1.0 } else { zeta.signum() };
    let c = (zeta.abs() / 2.0).cosh() * (dt / 4.0).exp();
    sign * 2.0 * c.acosh()
}

fn trig(
    g: &TrigGame,
    sol: &SolvedCoefficients,
    opts: &SimOptions,
    scales: &[f64],
) -> Result<PathEnsemble> {
    let spec = &g.spec;
    let grid = spec.grid;
    let factory = RngFactory::new(opts.seed);
    let n_players = spec.players.len();
    let mode_b = matches!(opts.meanfield, MeanfieldMode::Particles);
    if mode_b {
        if opts.particles < 2 {
            return Err(Error::InvalidInput(
                "particle mean-field mode needs at least 2 particles".into(),
            ));
        }
        if spec.spread > 0.0 && opts.particles % 2 != 0 {
            return Err(Error::InvalidInput(
                "particle mean-field mode with a spread needs an even particle count".into(),
            ));
        }
    }
    let asm = Assembler {
        grid,
        variant: if g.hyperbolic {
            "hyperbolic_cotangent"
        } else {
            "cotangent"
        },
        opts,
        players: n_players,
        meanfield_used: if mode_b { "particles" } else { "closed_form" },
        checkpoint_nodes: Vec::new(),
    };
    let fields = &sol.fields;
    let hyper = g.hyperbolic;
    let two_pi = 2.0 * std::f64::consts::PI;

    let blocks: Vec<PathBlock> = (0..opts.common_paths)
        .into_par_iter()
        .map(|r| -> Result<PathBlock> {
            let (_, s_nodes) = regime_nodes(&spec.gen, spec.s0, &grid, &factory, r)?;
            let dt = grid.dt();
            let nodes = grid.num_nodes();
            let mut block = PathBlock::new(n_players, opts.particles, nodes, 0);

            let mut zeta: Vec<f64> = (0..opts.particles)
                .map(|m| if m % 2 == 0 { spec.spread } else { -spec.spread })
                .collect();
            let mut traps: Vec<Trapezoid> =
                (0..opts.particles).map(|_| Trapezoid::new(n_players)).collect();
            let dbs: Vec<Vec<f64>> = (0..opts.particles)
                .map(|m| {
                    brownian(
                        &grid,
                        &factory,
                        (r * opts.particles + m) as u64,
                        StreamTag::Brownian,
                    )
                })
                .collect();
            let mut sps: Vec<Option<SamplePath>> = (0..opts.particles)
                .map(|m| new_sample(r * opts.particles + m, opts, r, &s_nodes, n_players, nodes))
                .collect();

            let mut xbar = spec.xbar0;
            let mut xbar_traj = Vec::with_capacity(nodes);
            for n in 0..nodes {
                let t = grid.node(n);
                let s = s_nodes[n];
                xbar_traj.push(xbar);
                if !hyper && xbar.abs() >= two_pi - TRIG_GUARD {
                    return Err(Error::TrigDomain(xbar));
                }
                if xbar.abs() <= 1e-12 {
                    return Err(Error::MeanfieldSingularity(t));
                }

                let means: Vec<f64> = (0..n_players)
                    .map(|j| scales[j] * g.mean_control(fields, t, s, j, xbar))
                    .collect();
                for m in 0..opts.particles {
                    let z = zeta[m];
                    if z.abs() >= two_pi - TRIG_GUARD {
                        return Err(Error::TrigDomain(z));
                    }
                    let centered: Vec<f64> = (0..n_players)
                        .map(|j| scales[j] * g.centered_control(fields, t, s, j, z))
                        .collect();
                    let rates: Vec<f64> = (0..n_players)
                        .map(|i| g.running_cost(s, i, z, xbar, centered[i], means[i]))
                        .collect();
                    traps[m].push(&rates, dt);
                    block.sum_abs_x[n] += (xbar + z).abs();
                    if let Some(sp) = sps[m].as_mut() {
                        sp.x.push(xbar + z);
                        for i in 0..n_players {
                            sp.controls[i].push(centered[i] + means[i]);
                        }
                    }
                }
                if n == grid.steps() {
                    break;
                }
                // particles: exact singular flow, then Euler for the control
                // drift and the Brownian kick
                for m in 0..opts.particles {
                    let mut z = if hyper {
                        coth_flow(zeta[m], dt)
                    } else {
                        cot_flow(zeta[m], dt)
                    };
                    let mut drift = 0.0;
                    for j in 0..n_players {
                        drift += spec.players[j].b2.get(s)
                            * scales[j]
                            * g.centered_control(fields, t, s, j, z);
                    }
                    z += drift * dt + spec.sigma.get(s) * dbs[m][n];
                    zeta[m] = z;
                }
                if mode_b {
                    // common drift 1/2 cot(xbar/2) + sum_j b2bar_j ubar_j is
                    // shared by all particles; the idiosyncratic average is
                    // folded back so xbar stays the particle mean
                    let common = g.meanfield_drift(fields, t, s, xbar, scales);
                    let shift: f64 = zeta.iter().sum::<f64>() / opts.particles as f64;
                    for z in zeta.iter_mut() {
                        *z -= shift;
                    }
                    xbar += common * dt + shift;
                } else {
                    // RK4 on the closed-form mean-field ODE
                    let f = |tt: f64, xb: f64| g.meanfield_drift(fields, tt, s, xb, scales);
                    let k1 = f(t, xbar);
                    let k2 = f(t + 0.5 * dt, xbar + 0.5 * dt * k1);
                    let k3 = f(t + 0.5 * dt, xbar + 0.5 * dt * k2);
                    let k4 = f(t + dt, xbar + dt * k3);
                    xbar += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                }
            }
            for m in 0..opts.particles {
                for i in 0..n_players {
                    block.costs[i].push(traps[m].acc[i]);
                }
                if let Some(sp) = sps[m].take() {
                    block.samples.push(sp);
                }
            }
            block.xbar = Some(xbar_traj);
            Ok(block)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(asm.collect(blocks))
}

// ---------------------------------------------------------------------------
// delayed/trend game

fn delay(
    g: &DelayGame,
    sol: &SolvedCoefficients,
    opts: &SimOptions,
    scales: &[f64],
) -> Result<PathEnsemble> {
    let spec = &g.spec;
    let grid = spec.grid;
    let factory = RngFactory::new(opts.seed);
    let asm = Assembler {
        grid,
        variant: "delayed_trend",
        opts,
        players: 1,
        meanfield_used: "common_sde",
        checkpoint_nodes: Vec::new(),
    };
    let fields = &sol.fields;
    let dt = grid.dt();
    let nodes = grid.num_nodes();
    let rho = spec.rho;

    let blocks: Vec<PathBlock> = (0..opts.common_paths)
        .into_par_iter()
        .map(|r| -> Result<PathBlock> {
            let dbo = brownian(&grid, &factory, r as u64, StreamTag::CommonBrownian);
            // common conditional-mean system (xbar, ybar), with the delayed
            // mean zbar read from the stored xbar trajectory
            let mut xbar_traj: Vec<f64> = Vec::with_capacity(nodes);
            let mut ybar_traj = Vec::with_capacity(nodes);
            let mut u1_means = Vec::with_capacity(nodes);
            let mut u2_means = Vec::with_capacity(nodes);
            let mut xbar = spec.xbar0;
            let mut ybar = g.ybar0();
            for n in 0..nodes {
                let t = grid.node(n);
                xbar_traj.push(xbar);
                ybar_traj.push(ybar);
                let u1m = scales[0] * g.u1_mean(fields, t, xbar, ybar);
                let u2m = scales[0] * g.u2_mean(xbar, ybar)?;
                if !(u1m.is_finite() && u2m.is_finite()) || (xbar + g.eta_bar * ybar) <= 0.0 {
                    return Err(Error::HypothesisViolation(format!(
                        "delay game left the power-utility domain at t = {t:.4}"
                    )));
                }
                u1_means.push(u1m);
                u2_means.push(u2m);
                if n == grid.steps() {
                    break;
                }
                let td = t - spec.tau;
                let zbar = if td <= 0.0 {
                    spec.xbar0
                } else {
                    let pos = td / dt;
                    let i = (pos.floor() as usize).min(xbar_traj.len().saturating_sub(2));
                    let w = pos - i as f64;
                    xbar_traj[i] * (1.0 - w) + xbar_traj[(i + 1).min(xbar_traj.len() - 1)] * w
                };
                // Heun step on the common drift (the trend decays at rate
                // lambda, the form consistent with the matching identity
                // b12_bar = eta (b11 + lambda + eta)), then the common noise
                let drift = |xb: f64, yb: f64, zb: f64, u1: f64, u2: f64| {
                    (
                        -u1 + spec.b11_bar * xb
                            + g.b12_bar * yb
                            + spec.b13_bar * zb
                            + spec.b2_bar * u2 * xb,
                        xb - spec.lambda * yb - (-spec.lambda * spec.tau).exp() * zb,
                    )
                };
                let (dx0, dy0) = drift(xbar, ybar, zbar, u1m, u2m);
                let xp = xbar + dx0 * dt;
                let yp = ybar + dy0 * dt;
                let tp = t + dt;
                let u1p = scales[0] * g.u1_mean(fields, tp, xp, yp);
                let u2p = scales[0] * g.u2_mean(xp, yp)?;
                let (dx1, dy1) = drift(xp, yp, zbar, u1p, u2p);
                xbar += 0.5 * (dx0 + dx1) * dt + spec.sigma_bar * xbar * u2m * dbo[n];
                ybar += 0.5 * (dy0 + dy1) * dt;
            }

            let mut block = PathBlock::new(1, opts.particles, nodes, 0);
            let v2 = scales[0] * g.u2_centered();
            for m in 0..opts.particles {
                let pid = r * opts.particles + m;
                let db = brownian(&grid, &factory, pid as u64, StreamTag::Brownian);
                let mut zeta = if m % 2 == 0 { spec.spread } else { -spec.spread };
                let mut trap = Trapezoid::new(1);
                let mut sp = new_sample(pid, opts, r, &vec![0; nodes], 2, nodes);
                for n in 0..nodes {
                    let t = grid.node(n);
                    let v1 = scales[0] * g.u1_centered(fields, t, zeta);
                    let u1m = u1_means[n];
                    if u1m <= 0.0 {
                        return Err(Error::HypothesisViolation(format!(
                            "mean consumption ubar_1 must stay positive, got {u1m:.4e} at t = {t:.4}"
                        )));
                    }
                    // payoff rate: -q var(x) - r1 var(u1) + rbar1 ubar1^rho/rho
                    let rate = -spec.q.get(0) * zeta * zeta - spec.r1.get(0) * v1 * v1
                        + spec.r1_bar * u1m.powf(rho) / rho;
                    trap.push(&[rate], dt);
                    block.sum_abs_x[n] += (xbar_traj[n] + zeta).abs();
                    if let Some(sp) = sp.as_mut() {
                        sp.x.push(xbar_traj[n] + zeta);
                        sp.controls[0].push(v1 + u1m);
                        sp.controls[1].push(v2 + u2_means[n]);
                    }
                    if n == grid.steps() {
                        break;
                    }
                    let b2eps = spec.b2.get(0) * spec.eps.get(0);
                    let drift = -v1 + spec.b1.get(0) * zeta + b2eps * zeta * v2;
                    zeta += drift * dt + spec.sigma * zeta * v2 * db[n];
                }
                let w_t = xbar_traj[nodes - 1] + g.eta_bar * ybar_traj[nodes - 1];
                let terminal = -spec.q_terminal.get(0) * zeta * zeta + w_t.powf(rho) / rho;
                block.costs[0].push(trap.acc[0] + terminal);
                if let Some(sp) = sp.take() {
                    block.samples.push(sp);
                }
            }
            block.xbar = Some(xbar_traj);
            Ok(block)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(asm.collect(blocks))
}

// ---------------------------------------------------------------------------
// Gauss-Volterra power family (Nash / cooperative / adversarial)

struct GvFamily<'a> {
    variant: &'static str,
    blocks: usize,
    gen: &'a crate::regime::RegimeGenerator,
    grid: TimeGrid,
    s0: usize,
    xbar0: f64,
    spread: f64,
    sigma: &'a Coeff,
    sigma_gv: &'a Coeff,
    hurst: Option<f64>,
    jumps: &'a JumpSpec,
    b1: &'a Coeff,
    /// centered gain (t, s, block) before deviation scaling
    gain: Box<dyn Fn(f64, usize, usize) -> f64 + Sync + Send + 'a>,
    /// mean gain (t, s, block) before deviation scaling
    bar_gain: Box<dyn Fn(f64, usize, usize) -> f64 + Sync + Send + 'a>,
    /// player count of block c
    count: Box<dyn Fn(usize) -> f64 + Sync + Send + 'a>,
    b2: Box<dyn Fn(usize, usize) -> f64 + Sync + Send + 'a>,
    b2_bar: Box<dyn Fn(usize, usize) -> f64 + Sync + Send + 'a>,
    b1_bar: &'a Coeff,
    /// running cost rates per player slot at (s, zeta, xbar, gains, bar_gains)
    cost: Box<dyn Fn(usize, f64, f64, &[f64], &[f64]) -> Vec<f64> + Sync + Send + 'a>,
    /// terminal cost per player slot at (s, zeta, xbar)
    terminal_cost: Box<dyn Fn(usize, f64, f64) -> Vec<f64> + Sync + Send + 'a>,
    players: usize,
}

fn gv_family(fam: GvFamily<'_>, opts: &SimOptions, scales: &[f64]) -> Result<PathEnsemble> {
    let grid = fam.grid;
    let factory = RngFactory::new(opts.seed);
    let mode_b = matches!(opts.meanfield, MeanfieldMode::Particles);
    if mode_b {
        if opts.particles < 2 {
            return Err(Error::InvalidInput(
                "particle mean-field mode needs at least 2 particles".into(),
            ));
        }
        if fam.spread > 0.0 && opts.particles % 2 != 0 {
            return Err(Error::InvalidInput(
                "particle mean-field mode with a spread needs an even particle count".into(),
            ));
        }
    }
    let asm = Assembler {
        grid,
        variant: fam.variant,
        opts,
        players: fam.players,
        meanfield_used: if mode_b { "particles" } else { "closed_form" },
        checkpoint_nodes: Vec::new(),
    };
    let total = opts.common_paths * opts.particles;
    let gv_needed = !fam.sigma_gv.all(|v| v == 0.0);
    let gv = make_gv_source(
        fam.hurst,
        gv_needed,
        &grid,
        &factory,
        StreamTag::GaussVolterra,
        total,
    )?;
    let comp = fam.jumps.mean_amplitude();
    let dt = grid.dt();
    let nodes = grid.num_nodes();

    let blocks_out: Vec<PathBlock> = (0..opts.common_paths)
        .into_par_iter()
        .map(|r| -> Result<PathBlock> {
            let (_, s_nodes) = regime_nodes(fam.gen, fam.s0, &grid, &factory, r)?;
            let mut block = PathBlock::new(fam.players, opts.particles, nodes, 0);

            let mut zeta: Vec<f64> = (0..opts.particles)
                .map(|m| if m % 2 == 0 { fam.spread } else { -fam.spread })
                .collect();
            let mut traps: Vec<Trapezoid> =
                (0..opts.particles).map(|_| Trapezoid::new(fam.players)).collect();
            let particle_noise: Vec<(Vec<f64>, Vec<Vec<f64>>, Vec<f64>)> = (0..opts.particles)
                .map(|m| {
                    let pid = r * opts.particles + m;
                    let db = brownian(&grid, &factory, pid as u64, StreamTag::Brownian);
                    let mut jrng = factory.stream(pid as u64, StreamTag::Jumps);
                    let marks = bucket_marks(&sample_jumps(fam.jumps, &grid, &mut jrng), &grid);
                    let bgv = gv.nodes(&grid, &factory, StreamTag::GaussVolterra, pid);
                    (db, marks, bgv)
                })
                .collect();
            let mut sps: Vec<Option<SamplePath>> = (0..opts.particles)
                .map(|m| new_sample(r * opts.particles + m, opts, r, &s_nodes, fam.players, nodes))
                .collect();

            let mut xbar = fam.xbar0;
            let mut xbar_traj = Vec::with_capacity(nodes);
            for n in 0..nodes {
                let t = grid.node(n);
                let s = s_nodes[n];
                xbar_traj.push(xbar);

                let gains: Vec<f64> = (0..fam.blocks)
                    .map(|b| scales[b] * (fam.gain)(t, s, b))
                    .collect();
                let bar_gains: Vec<f64> = (0..fam.blocks)
                    .map(|b| scales[b] * (fam.bar_gain)(t, s, b))
                    .collect();
                for m in 0..opts.particles {
                    let z = zeta[m];
                    let rates = (fam.cost)(s, z, xbar, &gains, &bar_gains);
                    traps[m].push(&rates, dt);
                    block.sum_abs_x[n] += (xbar + z).abs();
                    if let Some(sp) = sps[m].as_mut() {
                        sp.x.push(xbar + z);
                        for p in 0..fam.players {
                            let b = p.min(fam.blocks - 1);
                            sp.controls[p].push(gains[b] * z + bar_gains[b] * xbar);
                        }
                    }
                }
                if n == grid.steps() {
                    break;
                }
                // stepping coefficients from midpoint gains:
                // a = b1 + sum_c n_c b2_c gain_c, m = b1_bar + sum_c n_c b2bar_c bar_gain_c
                let tm = t + 0.5 * dt;
                let mut a = fam.b1.get(s);
                let mut mf = fam.b1_bar.get(s);
                for c in 0..fam.blocks {
                    a += (fam.count)(c) * (fam.b2)(c, s) * scales[c] * (fam.gain)(tm, s, c);
                    mf +=
                        (fam.count)(c) * (fam.b2_bar)(c, s) * scales[c] * (fam.bar_gain)(tm, s, c);
                }
                let sig = fam.sigma.get(s);
                let sgv = fam.sigma_gv.get(s);
                let dv = fam.hurst.map_or(0.0, |h| gv_var_increment(h, &grid, n));
                for m in 0..opts.particles {
                    let (db, marks, bgv) = &particle_noise[m];
                    let mut expo = (a - 0.5 * sig * sig - comp) * dt + sig * db[n];
                    if sgv != 0.0 {
                        expo += sgv * (bgv[n + 1] - bgv[n]) - 0.5 * sgv * sgv * dv;
                    }
                    let mut factor = expo.exp();
                    for theta in &marks[n] {
                        factor *= 1.0 + theta;
                    }
                    zeta[m] *= factor;
                }
                // conditional mean: exact exponential step of dxbar = m xbar dt
                xbar *= (mf * dt).exp();
                if mode_b {
                    // fold the realized displacement average back into xbar so
                    // it remains the particle mean
                    let shift: f64 = zeta.iter().sum::<f64>() / opts.particles as f64;
                    for z in zeta.iter_mut() {
                        *z -= shift;
                    }
                    xbar += shift;
                }
            }
            let s_t = s_nodes[grid.steps()];
            let xb_t = xbar_traj[nodes - 1];
            for m in 0..opts.particles {
                let terms = (fam.terminal_cost)(s_t, zeta[m], xb_t);
                for p in 0..fam.players {
                    block.costs[p].push(traps[m].acc[p] + terms[p]);
                }
                if let Some(sp) = sps[m].take() {
                    block.samples.push(sp);
                }
            }
            block.xbar = Some(xbar_traj);
            Ok(block)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(asm.collect(blocks_out))
}

fn gv_power(
    g: &GvPowerGame,
    sol: &SolvedCoefficients,
    opts: &SimOptions,
    scales: &[f64],
) -> Result<PathEnsemble> {
    let spec = &g.spec;
    let fields = &sol.fields;
    let blocks = &spec.blocks;
    let fam = GvFamily {
        variant: "gv_power_nash",
        blocks: blocks.len(),
        gen: &spec.gen,
        grid: spec.grid,
        s0: spec.s0,
        xbar0: spec.xbar0,
        spread: spec.spread,
        sigma: &spec.sigma,
        sigma_gv: &spec.sigma_gv,
        hurst: spec.hurst,
        jumps: &spec.jumps,
        b1: &spec.b1,
        gain: Box::new(move |t, s, b| g.gain(fields[2 * b].eval(t, s), b, s)),
        bar_gain: Box::new(move |t, s, b| g.bar_gain(fields[2 * b + 1].eval(t, s), b, s)),
        count: Box::new(move |c| blocks[c].count as f64),
        b2: Box::new(move |c, s| blocks[c].b2.get(s)),
        b2_bar: Box::new(move |c, s| blocks[c].b2_bar.get(s)),
        b1_bar: &spec.b1_bar,
        cost: Box::new(move |s, z, xb, gains, bar_gains| {
            blocks
                .iter()
                .enumerate()
                .map(|(b, blk)| {
                    let two_k = 2 * blk.k as i32;
                    let two_kb = 2 * blk.k_bar as i32;
                    blk.q.get(s) * z.powi(two_k) / f64::from(two_k as u32)
                        + blk.r.get(s) * (gains[b] * z).powi(two_k) / f64::from(two_k as u32)
                        + blk.q_bar.get(s) * xb.powi(two_kb) / f64::from(two_kb as u32)
                        + blk.r_bar.get(s) * (bar_gains[b] * xb).powi(two_kb)
                            / f64::from(two_kb as u32)
                })
                .collect()
        }),
        terminal_cost: Box::new(move |s, z, xb| {
            blocks
                .iter()
                .map(|blk| {
                    let two_k = 2 * blk.k as i32;
                    let two_kb = 2 * blk.k_bar as i32;
                    blk.q_terminal.get(s) * z.powi(two_k) / f64::from(two_k as u32)
                        + blk.q_bar_terminal.get(s) * xb.powi(two_kb) / f64::from(two_kb as u32)
                })
                .collect()
        }),
        players: blocks.len(),
    };
    gv_family(fam, opts, scales)
}

fn gv_coop(
    g: &GvCoopGame,
    sol: &SolvedCoefficients,
    opts: &SimOptions,
    scales: &[f64],
) -> Result<PathEnsemble> {
    let spec = &g.spec;
    let fields = &sol.fields;
    let blocks = &spec.blocks;
    let shared = scales.first().copied().unwrap_or(1.0);
    let block_scales = vec![shared; blocks.len()];
    let fam = GvFamily {
        variant: "gv_power_cooperative",
        blocks: blocks.len(),
        gen: &spec.gen,
        grid: spec.grid,
        s0: spec.s0,
        xbar0: spec.xbar0,
        spread: spec.spread,
        sigma: &spec.sigma,
        sigma_gv: &spec.sigma_gv,
        hurst: spec.hurst,
        jumps: &spec.jumps,
        b1: &spec.b1,
        gain: Box::new(move |t, s, b| g.gain(fields[0].eval(t, s), b, s)),
        bar_gain: Box::new(move |t, s, b| g.bar_gain(fields[1].eval(t, s), b, s)),
        count: Box::new(move |c| blocks[c].count as f64),
        b2: Box::new(move |c, s| blocks[c].b2.get(s)),
        b2_bar: Box::new(move |c, s| blocks[c].b2_bar.get(s)),
        b1_bar: &spec.b1_bar,
        // single player slot: the aggregate (team) cost
        cost: Box::new(move |s, z, xb, gains, bar_gains| {
            let mut total = 0.0;
            for (b, blk) in blocks.iter().enumerate() {
                let two_k = 2 * blk.k as i32;
                let two_kb = 2 * blk.k_bar as i32;
                total += blk.count as f64
                    * (blk.q.get(s) * z.powi(two_k) / f64::from(two_k as u32)
                        + blk.r.get(s) * (gains[b] * z).powi(two_k) / f64::from(two_k as u32)
                        + blk.q_bar.get(s) * xb.powi(two_kb) / f64::from(two_kb as u32)
                        + blk.r_bar.get(s) * (bar_gains[b] * xb).powi(two_kb)
                            / f64::from(two_kb as u32));
            }
            vec![total]
        }),
        terminal_cost: Box::new(move |s, z, xb| {
            let mut total = 0.0;
            for blk in blocks.iter() {
                let two_k = 2 * blk.k as i32;
                let two_kb = 2 * blk.k_bar as i32;
                total += blk.count as f64
                    * (blk.q_terminal.get(s) * z.powi(two_k) / f64::from(two_k as u32)
                        + blk.q_bar_terminal.get(s) * xb.powi(two_kb) / f64::from(two_kb as u32));
            }
            vec![total]
        }),
        players: 1,
    };
    gv_family(fam, opts, &block_scales)
}

fn gv_adversarial(
    g: &GvAdversarialGame,
    sol: &SolvedCoefficients,
    opts: &SimOptions,
    scales: &[f64],
) -> Result<PathEnsemble> {
    let spec = &g.spec;
    let fields = &sol.fields;
    let blocks = &spec.blocks;
    let (k, k_bar) = (spec.k, spec.k_bar);
    let q = &spec.q;
    let q_bar = &spec.q_bar;
    let q_t = &spec.q_terminal;
    let q_bar_t = &spec.q_bar_terminal;
    // team deviations scale whole blocks
    let block_scales = if scales.len() == blocks.len() {
        scales.to_vec()
    } else {
        vec![1.0; blocks.len()]
    };
    let fam = GvFamily {
        variant: "gv_power_adversarial",
        blocks: blocks.len(),
        gen: &spec.gen,
        grid: spec.grid,
        s0: spec.s0,
        xbar0: spec.xbar0,
        spread: spec.spread,
        sigma: &spec.sigma,
        sigma_gv: &spec.sigma_gv,
        hurst: spec.hurst,
        jumps: &spec.jumps,
        b1: &spec.b1,
        gain: Box::new(move |t, s, b| g.gain(fields[0].eval(t, s), b, s)),
        bar_gain: Box::new(move |t, s, b| g.bar_gain(fields[1].eval(t, s), b, s)),
        count: Box::new(move |c| blocks[c].count as f64),
        b2: Box::new(move |c, s| blocks[c].b2.get(s)),
        b2_bar: Box::new(move |c, s| blocks[c].b2_bar.get(s)),
        b1_bar: &spec.b1_bar,
        // single player slot: the adversarial objective L_ad
        cost: Box::new(move |s, z, xb, gains, bar_gains| {
            let two_k = 2 * k as i32;
            let two_kb = 2 * k_bar as i32;
            let mut total = q.get(s) * z.powi(two_k) / f64::from(two_k as u32)
                + q_bar.get(s) * xb.powi(two_kb) / f64::from(two_kb as u32);
            for (b, blk) in blocks.iter().enumerate() {
                total += blk.count as f64
                    * (blk.r.get(s) * (gains[b] * z).powi(two_k) / f64::from(two_k as u32)
                        + blk.r_bar.get(s) * (bar_gains[b] * xb).powi(two_kb)
                            / f64::from(two_kb as u32));
            }
            vec![total]
        }),
        terminal_cost: Box::new(move |s, z, xb| {
            let two_k = 2 * k as i32;
            let two_kb = 2 * k_bar as i32;
            vec![
                q_t.get(s) * z.powi(two_k) / f64::from(two_k as u32)
                    + q_bar_t.get(s) * xb.powi(two_kb) / f64::from(two_kb as u32),
            ]
        }),
        players: 1,
    };
    gv_family(fam, opts, &block_scales)
}
