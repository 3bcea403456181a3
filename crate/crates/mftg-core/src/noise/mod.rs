//! Path generation for every noise source: Brownian increments, compound
//! Poisson jumps, regime chains and Gauss-Volterra paths.
//!
//! Idiosyncratic and common components always come from distinct RNG streams
//! (see [`crate::rng`]), so their independence is structural.

pub mod ctmc;
pub mod gv;
pub mod jumps;
pub mod kernel;

pub use ctmc::{sample_ctmc, sample_ctmc_controlled, RegimePath};
pub use gv::{gv_nodes_from_white, sample_gv_paths};
pub use jumps::sample_jumps;
pub use kernel::{
    effective_gv_variance_fast, effective_gv_variance_quadrature, fbm_normalizer,
    gv_variance_integral, VolterraKernel,
};

use crate::grid::TimeGrid;
use crate::rng::{RngFactory, StreamTag};
use rand_distr::{Distribution, Normal};

/// One path's worth of noise, conforming to a shared grid. Fields not
/// requested stay empty. The regime path and common sources are shared by
/// all particles of a common-noise path.
#[derive(Debug, Clone, Default)]
pub struct NoiseBundle {
    /// Brownian increments dB_n ~ N(0, dt), length = steps.
    pub d_brownian: Vec<f64>,
    pub d_common_brownian: Vec<f64>,
    /// Jump events (time, theta).
    pub jump_events: Vec<(f64, f64)>,
    pub common_jump_events: Vec<(f64, f64)>,
    /// White increments destined for the Volterra map (not yet transformed).
    pub gv_white: Vec<f64>,
    pub common_gv_white: Vec<f64>,
    /// RNG stream identifier of the idiosyncratic sources.
    pub stream_id: u64,
}

/// Sample Brownian-type increments for one stream.
pub fn brownian_increments(
    grid: &TimeGrid,
    factory: &RngFactory,
    path: u64,
    tag: StreamTag,
) -> Vec<f64> {
    let normal = Normal::new(0.0, grid.dt().sqrt()).expect("positive dt");
    let mut rng = factory.stream(path, tag);
    (0..grid.steps()).map(|_| normal.sample(&mut rng)).collect()
}
