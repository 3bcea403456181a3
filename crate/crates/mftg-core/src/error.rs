//! Error types shared by all modules.

use thiserror::Error;

/// Errors produced by construction, solving and simulation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An off-diagonal switching rate was negative.
    #[error("negative switching rate q({from} -> {to}) = {rate}")]
    NegativeRate { from: usize, to: usize, rate: f64 },

    /// A jump-moment integral did not converge to the requested tolerance.
    #[error("jump moment integral diverged: {0}")]
    DivergentMoment(String),

    /// An argument was outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A standing assumption of the game class was violated.
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    /// The Legendre-Fenchel variant only supports the power loss family.
    #[error("unsupported loss: {0}")]
    UnsupportedLoss(String),

    /// A coefficient escaped during backward integration.
    #[error("blow-up of component `{component}` at t = {time:.6e} (|value| > {bound:.1e})")]
    BlowUp {
        time: f64,
        component: String,
        bound: f64,
    },

    /// Halving the step still changed the t=0 value beyond tolerance.
    #[error("step too coarse: relative change {change:.3e} at N = {steps} exceeds {tol:.1e}")]
    StepTooCoarse { steps: usize, change: f64, tol: f64 },

    /// The explicit delay-game formula requires omega > 0.
    #[error("omega must be positive for the explicit delay solution, got {0}")]
    OmegaNonpositive(f64),

    /// The adversarial bracketed aggregate lost its sign.
    #[error("adversarial aggregate must be positive, got {0}")]
    AggregateSignViolation(f64),

    /// r_i + sum_s' V_i b_2iss' (or its barred analogue) crossed zero.
    #[error("control denominator crossed zero at t = {0:.6e} (convexity assumption fails)")]
    DenominatorSignFlip(f64),

    /// Thinning bound repeatedly exceeded while sampling the controlled chain.
    #[error("dominating rate exceeded: rate {rate:.3e} > bound {bound:.3e} after {retries} retries")]
    DominatingRateExceeded {
        rate: f64,
        bound: f64,
        retries: usize,
    },

    /// |x - xbar| or |xbar| reached 2*pi during a trigonometric-drift simulation.
    #[error("trigonometric domain exhausted: |{0:.6}| reached 2*pi")]
    TrigDomain(f64),

    /// The mean-field trajectory reached the coth singularity at zero.
    #[error("mean-field singularity: xbar reached 0 at t = {0:.6e}")]
    MeanfieldSingularity(f64),

    /// A positivity-sensitive state hit zero and local step halving failed.
    #[error("state became non-positive at t = {0:.6e}")]
    StateNonPositive(f64),

    /// Invalid time grid.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Catch-all for invalid inputs to constructors.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
