//! Forward Monte-Carlo simulation of the controlled state under equilibrium
//! (or gain-scaled) feedback, conditional mean-field tracking, cost
//! estimation and the verification suites.
//!
//! Sampling is parallel over common-noise paths; every path owns its RNG
//! streams, so ensembles are bitwise reproducible for a given
//! (seed, R, M, config) regardless of scheduling.

mod engine;
pub mod verify;

pub use verify::{
    cooperative_dominance, deviation_test, saddle_test, value_consistency, DeviationReport,
    DominanceReport, SaddleReport, ValueCheck,
};

use crate::error::{Error, Result};
use crate::games::GameDefinition;
use crate::grid::TimeGrid;
use crate::solver::SolvedCoefficients;

/// How the conditional mean is realized during simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanfieldMode {
    /// Closed-form mean-field ODE where the game provides one, otherwise
    /// particle averaging.
    Auto,
    ClosedForm,
    /// Synchronized particles per common-noise path.
    Particles,
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    /// Number of common-noise paths (clusters).
    pub common_paths: usize,
    /// Particles per common path.
    pub particles: usize,
    pub seed: u64,
    pub meanfield: MeanfieldMode,
    /// Per-player (or per-block) multipliers on the equilibrium feedback;
    /// empty means all ones.
    pub scales: Vec<f64>,
    /// Number of sample trajectories to retain for output.
    pub store_paths: usize,
    /// Record guess-functional checkpoints at T/4, T/2, 3T/4 (supported for
    /// the log-state game).
    pub record_checkpoints: bool,
}

impl SimOptions {
    pub fn new(common_paths: usize, particles: usize, seed: u64) -> Self {
        Self {
            common_paths,
            particles,
            seed,
            meanfield: MeanfieldMode::Auto,
            scales: Vec::new(),
            store_paths: 4,
            record_checkpoints: false,
        }
    }

    pub fn with_scales(mut self, scales: Vec<f64>) -> Self {
        self.scales = scales;
        self
    }

    pub fn with_mode(mut self, mode: MeanfieldMode) -> Self {
        self.meanfield = mode;
        self
    }

    pub(crate) fn resolved_scales(&self, players: usize) -> Vec<f64> {
        if self.scales.is_empty() {
            vec![1.0; players]
        } else {
            self.scales.clone()
        }
    }
}

/// One retained sample trajectory.
#[derive(Debug, Clone)]
pub struct SamplePath {
    pub common: usize,
    /// State at every node (zeta + xbar for mean-field games).
    pub x: Vec<f64>,
    pub regimes: Vec<usize>,
    /// Per player: total control u_i at every node.
    pub controls: Vec<Vec<f64>>,
}

/// Guess-functional checkpoint: per player, per sample, the value
/// f_i(t, x(t), s(t)) + accumulated running cost up to t.
#[derive(Debug, Clone)]
pub struct CheckpointStats {
    pub node: usize,
    pub values: Vec<Vec<f64>>,
}

/// Monte-Carlo trajectories and cost samples grouped by common-noise path.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub grid: TimeGrid,
    pub variant: &'static str,
    /// Cost samples per player slot.
    pub costs: Vec<Vec<f64>>,
    /// Common-path id per sample (clustered-error grouping).
    pub clusters: Vec<usize>,
    pub sample_paths: Vec<SamplePath>,
    /// Ensemble mean of |x(t)| per node.
    pub mean_abs_state: Vec<f64>,
    /// Conditional-mean trajectories per retained common path.
    pub xbar_paths: Vec<Vec<f64>>,
    pub checkpoints: Vec<CheckpointStats>,
    pub seed: u64,
    pub common_paths: usize,
    pub particles: usize,
    pub meanfield_used: &'static str,
}

/// Mean / standard-error summary of one scalar quantity.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub mean: f64,
    /// Gating standard error: max(clustered, naive), so intra-cluster
    /// dependence is never hidden.
    pub se: f64,
    pub naive_se: f64,
    pub clustered_se: f64,
    pub count: usize,
}

/// Cluster-robust mean and standard error. With one sample per cluster the
/// clustered estimate coincides with the naive sample-std / sqrt(count).
pub fn estimate(samples: &[f64], clusters: &[usize]) -> McEstimate {
    let n = samples.len();
    assert!(n > 0 && clusters.len() == n);
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
        / (n as f64 - 1.0).max(1.0);
    let naive_se = (var / n as f64).sqrt();

    let n_clusters = clusters.iter().copied().max().unwrap_or(0) + 1;
    let mut sums = vec![0.0; n_clusters];
    let mut counts = vec![0usize; n_clusters];
    for (x, &c) in samples.iter().zip(clusters) {
        sums[c] += *x;
        counts[c] += 1;
    }
    let clustered_se = if n_clusters > 1 {
        let means: Vec<f64> = sums
            .iter()
            .zip(&counts)
            .filter(|(_, c)| **c > 0)
            .map(|(s, c)| s / *c as f64)
            .collect();
        let c = means.len() as f64;
        let grand = means.iter().sum::<f64>() / c;
        let cvar = means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>() / (c - 1.0).max(1.0);
        (cvar / c).sqrt()
    } else {
        naive_se
    };
    McEstimate {
        mean,
        se: clustered_se.max(naive_se),
        naive_se,
        clustered_se,
        count: n,
    }
}

/// Cost estimate for one player slot of the ensemble.
pub fn estimate_cost(ens: &PathEnsemble, player: usize) -> McEstimate {
    estimate(&ens.costs[player], &ens.clusters)
}

/// Simulate the controlled dynamics under the solved equilibrium feedback
/// (optionally gain-scaled through `opts.scales`).
pub fn simulate(
    def: &GameDefinition,
    sol: &SolvedCoefficients,
    opts: &SimOptions,
) -> Result<PathEnsemble> {
    if sol.grid != *def.grid() {
        return Err(Error::InvalidInput(
            "solved coefficients grid does not match the game grid".into(),
        ));
    }
    if opts.common_paths == 0 || opts.particles == 0 {
        return Err(Error::InvalidInput("need at least one path and particle".into()));
    }
    let scales = opts.resolved_scales(def.num_players());
    if scales.len() != def.num_players() {
        return Err(Error::InvalidInput(format!(
            "got {} gain scales for {} player slots",
            scales.len(),
            def.num_players()
        )));
    }
    engine::run(def, sol, opts, &scales)
}
