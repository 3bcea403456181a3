//! Declarative run configuration: a TOML document with human-readable
//! key-value sections. Coefficients are literals (one value for all regimes)
//! or per-regime arrays. Unknown keys are rejected with location info; the
//! exact grammar is documented in the repository README.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Game class: log_state | log_square | legendre_fenchel | geometric_gv |
    /// controlled_switching | quadratic_quadratic | cotangent |
    /// hyperbolic_cotangent | delayed_trend | gv_power_nash |
    /// gv_power_cooperative | gv_power_adversarial
    pub variant: String,
    pub grid: GridConfig,
    pub mc: McConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub regimes: Option<RegimesConfig>,
    pub init: InitConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    #[serde(default, rename = "player")]
    pub players: Vec<PlayerConfig>,
    #[serde(default)]
    pub fenchel: Option<FenchelConfig>,
    #[serde(default)]
    pub delay: Option<DelayConfig>,
    #[serde(default)]
    pub aggregate: Option<AggregateConfig>,
    #[serde(default)]
    pub verify: VerifyConfig,
}

/// Scalar (all regimes) or one value per regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoeffToml {
    Scalar(f64),
    PerRegime(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub horizon: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub common_paths: usize,
    pub particles: usize,
    pub seed: u64,
    /// "auto" | "closed_form" | "particles"
    #[serde(default = "default_meanfield")]
    pub meanfield: String,
}

fn default_meanfield() -> String {
    "auto".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimesConfig {
    pub states: Vec<String>,
    /// Off-diagonal switching intensities, row-major; diagonals are ignored
    /// and recomputed so rows sum to zero.
    pub rates: Vec<Vec<f64>>,
    #[serde(default)]
    pub initial: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    /// Initial state (the conditional mean for mean-field variants).
    pub x0: f64,
    /// Mean-field variants start particles at x0 +/- spread.
    #[serde(default)]
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default)]
    pub sigma: Option<CoeffToml>,
    #[serde(default)]
    pub sigma_o: Option<CoeffToml>,
    #[serde(default)]
    pub sigma_gv: Option<CoeffToml>,
    #[serde(default)]
    pub sigma_o_gv: Option<CoeffToml>,
    #[serde(default)]
    pub hurst: Option<f64>,
    #[serde(default)]
    pub jumps: Option<JumpConfig>,
    #[serde(default)]
    pub jumps_common: Option<JumpConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpConfig {
    /// Density c * exp(-decay * theta) on (0, inf).
    #[serde(default)]
    pub coeff: f64,
    #[serde(default = "default_decay")]
    pub decay: f64,
    /// Optional point masses (location, mass).
    #[serde(default)]
    pub atoms: Vec<(f64, f64)>,
}

fn default_decay() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    #[serde(default)]
    pub b1: Option<CoeffToml>,
    #[serde(default)]
    pub b1_bar: Option<CoeffToml>,
    /// Shared power exponent (log_state, geometric_gv).
    #[serde(default)]
    pub k: Option<u32>,
}

/// One player, or one symmetric block of `count` identical players.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PlayerConfig {
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub q: Option<CoeffToml>,
    #[serde(default)]
    pub q_terminal: Option<CoeffToml>,
    #[serde(default)]
    pub q_bar: Option<CoeffToml>,
    #[serde(default)]
    pub q_bar_terminal: Option<CoeffToml>,
    #[serde(default)]
    pub r: Option<CoeffToml>,
    #[serde(default)]
    pub r_bar: Option<CoeffToml>,
    #[serde(default)]
    pub b2: Option<CoeffToml>,
    #[serde(default)]
    pub b2_bar: Option<CoeffToml>,
    #[serde(default)]
    pub k: Option<u32>,
    #[serde(default)]
    pub k_bar: Option<u32>,
    /// quadratic_quadratic randomness and incentives
    #[serde(default)]
    pub eps1_std: Option<f64>,
    #[serde(default)]
    pub eps_bar_1: Option<CoeffToml>,
    #[serde(default)]
    pub eps_bar_2: Option<CoeffToml>,
    /// controlled_switching per-player cost slope and rate families
    #[serde(default)]
    pub eps: Option<CoeffToml>,
    #[serde(default)]
    pub switch_b2: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub switch_b2_bar: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub switch_b1_bar: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub switch_bo_bar: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub switch_b1_std: Option<f64>,
    /// legendre_fenchel control-cost row r_{ij}, one entry per player
    #[serde(default)]
    pub r_row: Option<Vec<CoeffToml>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FenchelConfig {
    pub k: u32,
    pub kappa: f64,
    #[serde(default = "default_loss")]
    pub loss: String,
    pub sigma1: CoeffToml,
    pub sigma2: CoeffToml,
}

fn default_loss() -> String {
    "power".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayConfig {
    pub r1_bar: f64,
    pub sigma: f64,
    pub sigma_bar: f64,
    pub b2_bar: f64,
    pub b11_bar: f64,
    pub b13_bar: f64,
    pub rho: f64,
    pub lambda: f64,
    pub tau: f64,
}

/// Shared cost weights of the adversarial game (teams come from the sign of
/// each block's r).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregateConfig {
    pub q: CoeffToml,
    pub q_bar: CoeffToml,
    pub q_terminal: CoeffToml,
    pub q_bar_terminal: CoeffToml,
    pub k: u32,
    pub k_bar: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_scales")]
    pub deviation_scales: Vec<f64>,
    /// Run the deviation test for each player (value consistency always runs).
    #[serde(default = "default_true")]
    pub deviation: bool,
}

fn default_scales() -> Vec<f64> {
    vec![0.5, 0.8, 1.25, 2.0]
}

fn default_true() -> bool {
    true
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            deviation_scales: default_scales(),
            deviation: true,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Canonical serialization; parse -> serialize -> parse is the identity
    /// (exercised by the round-trip tests).
    #[allow(dead_code)]
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
