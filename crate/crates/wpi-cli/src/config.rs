//! Run-configuration schemas: one TOML document per command, unknown keys rejected.
//!
//! Every command accepts an optional top-level `seed` (overridden by `--seed`) and echoes the
//! fully resolved configuration next to its output files, so a run can be reproduced from the
//! echo alone.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use wpi::config::BetaConfig;

/// Log-spaced evaluation grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl GridConfig {
    pub fn resolve(opt: &mut Option<GridConfig>, lo: f64, hi: f64, points: usize) -> GridConfig {
        *opt.get_or_insert(GridConfig { lo, hi, points })
    }

    pub fn values(&self) -> Vec<f64> {
        wpi::numeric::log_spaced(self.lo, self.hi, self.points)
    }
}

/// Options forwarded to the rate construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateOpts {
    /// Start value of the rate integral; 1 for the oscillation and 2p-norm functionals.
    pub a: f64,
    pub force_numeric: bool,
    /// Tri-state: absent picks the extended mode automatically.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_infinity: Option<bool>,
    /// Adds the alternative fixed-point rate column.
    pub gamma_tilde: bool,
}

impl Default for RateOpts {
    fn default() -> Self {
        RateOpts { a: 1.0, force_numeric: false, f_infinity: None, gamma_tilde: false }
    }
}

impl RateOpts {
    pub fn to_options(&self) -> wpi::rate::RateOptions {
        wpi::rate::RateOptions { force_numeric: self.force_numeric, f_infinity: self.f_infinity }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateRun {
    #[serde(default)]
    pub seed: u64,
    pub beta: BetaConfig,
    #[serde(default)]
    pub rate: RateOpts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<GridConfig>,
}

/// One comparison link; applied in file order to the base coefficient.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LinkConfig {
    /// Chain a strong constant through the running coefficient.
    Strong { c_p: f64 },
    /// Compose with a second weak coefficient.
    Weak { beta: BetaConfig },
    /// Left-spectral-gap correction.
    SpectralGap { c_gap: f64 },
    /// Weakly lazy comparison from a laziness tail; `p` absent means the oscillation pairing.
    WeaklyLazy {
        eps_tail: BetaConfig,
        #[serde(skip_serializing_if = "Option::is_none")]
        p: Option<f64>,
    },
}

impl LinkConfig {
    pub fn to_link(&self) -> anyhow::Result<wpi::comparison::ChainLink> {
        Ok(match self {
            LinkConfig::Strong { c_p } => wpi::comparison::ChainLink::StrongToWeak { c_p: *c_p },
            LinkConfig::Weak { beta } => {
                wpi::comparison::ChainLink::WeakToWeak { second: beta.to_beta()? }
            }
            LinkConfig::SpectralGap { c_gap } => {
                wpi::comparison::ChainLink::SpectralGapCorrection { c_gap: *c_gap }
            }
            LinkConfig::WeaklyLazy { eps_tail, p } => wpi::comparison::ChainLink::WeaklyLazy {
                eps_tail: eps_tail.to_beta()?,
                p: p.unwrap_or(f64::INFINITY),
            },
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainRun {
    #[serde(default)]
    pub seed: u64,
    pub base: BetaConfig,
    #[serde(default)]
    pub links: Vec<LinkConfig>,
    #[serde(default)]
    pub rate: RateOpts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_grid: Option<GridConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<GridConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ImhFamilyConfig {
    ExpExp { a1: f64, a2: f64 },
    PolyPoly { b1: f64, b2: f64 },
    /// Placeholder: custom families carry closures and are reachable only through the library.
    Custom {},
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayBlock {
    #[serde(default = "default_decay_grid")]
    pub n_grid: Vec<u64>,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default = "default_pairs")]
    pub pairs_per_replica: usize,
    /// Observable threshold for the centered indicator `1{x > threshold}`; defaults per family.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

fn default_decay_grid() -> Vec<u64> {
    vec![1, 2, 4, 8, 16, 32]
}

fn default_replicas() -> usize {
    8
}

fn default_pairs() -> usize {
    2000
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImhRun {
    #[serde(default)]
    pub seed: u64,
    pub imh: ImhFamilyConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_grid: Option<GridConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<GridConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecayBlock>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmLognormalBlock {
    pub sigma: f64,
    pub c_p: f64,
    #[serde(default)]
    pub pair_tail_factor: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmLognormalRun {
    #[serde(default)]
    pub seed: u64,
    pub pm: PmLognormalBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<GridConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmMixingBlock {
    pub epsilon: f64,
    pub sigma: f64,
    pub c_p: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmMixingRun {
    #[serde(default)]
    pub seed: u64,
    pub pm: PmMixingBlock,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmBudgetBlock {
    pub epsilon: f64,
    pub c_p: f64,
    pub sigma0_sq: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmBudgetRun {
    #[serde(default)]
    pub seed: u64,
    pub pm: PmBudgetBlock,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmAvarBlock {
    pub c_p: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmAvarRun {
    #[serde(default)]
    pub seed: u64,
    pub pm: PmAvarBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_grid: Option<GridConfig>,
}

/// Marginal strong constant for optional chaining of a weight tail into a full rate.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmChainBlock {
    pub c_p: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbcBlock {
    /// Simulation draws per weight.
    pub n: u64,
    /// Tail order; the envelope decays like `s^-p`.
    pub p: u32,
    /// Integrated negative moments `int pi(dx) l(x)^(-j)` for `j = 1..=p`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neg_moments: Option<Vec<f64>>,
    /// Finite-model alternative: stationary masses and per-state acceptance probabilities.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmAbcRun {
    #[serde(default)]
    pub seed: u64,
    pub abc: AbcBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pm: Option<PmChainBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_grid: Option<GridConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<GridConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductBlock {
    /// Number of averaged factors (the time horizon).
    pub t: u64,
    /// Particle count per factor.
    pub n: u64,
    /// Moment order behind the growth functional.
    pub p: f64,
    /// `int pi(dx) e^(M_p(x)/alpha)`.
    pub mp_integral: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmProductRun {
    #[serde(default)]
    pub seed: u64,
    pub product: ProductBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pm: Option<PmChainBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_grid: Option<GridConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<GridConfig>,
}

pub fn load<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).map_err(|e| anyhow!("config {}: {e}", path.display()))
}

pub fn to_toml<T: Serialize>(value: &T) -> anyhow::Result<String> {
    toml::to_string_pretty(value).context("serializing resolved config")
}
