//! Solvers, simulators and Monte-Carlo verifiers for a family of twelve
//! semi-explicitly solvable mean-field-type games under jump-diffusion,
//! regime-switching and Gauss-Volterra noise.
//!
//! The crate is organized along the pipeline:
//!
//! * [`regime`], [`grid`], [`field`], [`jump`] — shared domain types:
//!   switching generators, time grids, per-regime coefficient fields and
//!   jump-measure moment functionals;
//! * [`noise`] — path generation for Brownian, compound-Poisson, regime and
//!   Gauss-Volterra sources, plus the fractional kernel and the effective
//!   variance functional;
//! * [`games`] — one constructor per solved game class, each bundling the
//!   backward coefficient system, terminal conditions, equilibrium feedback
//!   and cost evaluators;
//! * [`solver`] — backward RK4 with regime coupling, escape diagnostics and
//!   closed-form cross-checks (matrix-exponential and explicit-beta paths);
//! * [`sim`] — forward Monte-Carlo under equilibrium or gain-scaled
//!   feedback, with the value/Nash/saddle/dominance verification suites.

pub mod error;
pub mod field;
pub mod games;
pub mod grid;
pub mod jump;
pub mod noise;
pub mod quad;
pub mod regime;
pub mod rng;
pub mod sim;
pub mod solver;

pub use error::{Error, Result};
pub use field::RegimeField;
pub use games::{Coeff, GameDefinition, InitialState, Layout};
pub use grid::TimeGrid;
pub use jump::JumpSpec;
pub use regime::{ControlledSwitchRates, RegimeGenerator};
pub use sim::{MeanfieldMode, PathEnsemble, SimOptions};
pub use solver::{integrate_backward, positivity_report, SolvedCoefficients};
