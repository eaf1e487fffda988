//! Run-configuration file: a small TOML document naming the inputs (antenna
//! networks plus either a traced scene or a stochastic channel model), the
//! link budget, the receive schemes to evaluate, and the seed.
//!
//! Parsing is strict — unknown keys are rejected so a typo cannot silently
//! fall back to a default — and structural rules that make a config
//! meaningless (no schemes, no noise powers, scene and stochastic model at
//! once) fail here. Softer cross-file checks (frequency coverage, port
//! counts, suspicious power levels) live in the `validate` rule table.
//!
//! Relative paths are resolved against the directory containing the config
//! file, and dBm link-budget figures are converted to watts at this boundary
//! so everything downstream works in linear units.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("TOML syntax/schema error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("config must name exactly one of `scene` or `[stochastic]`")]
    SceneStochasticConflict,
    #[error("`schemes` must list at least one receive scheme")]
    NoSchemes,
    #[error("`noise_powers_dbm` must list at least one value")]
    NoNoisePowers,
    #[error("`schemes` repeats '{0}'")]
    DuplicateScheme(ReceiveScheme),
    #[error("traced-scene runs need `bs_touchstone` and `ue_touchstone`")]
    MissingAntennaNetworks,
}

/// Receive strategies the pipeline can evaluate. The string forms are the
/// ones used in config files and CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReceiveScheme {
    /// Single receive port, transmit beamforming onto it.
    #[serde(rename = "miso-1x1")]
    Miso1x1,
    /// Two receive ports combined coherently for one stream.
    #[serde(rename = "mrc-2x1")]
    Mrc2x1,
    /// Linear MMSE receiver, best single layer.
    #[serde(rename = "lmmse-1layer")]
    LmmseOneLayer,
    /// Linear MMSE receiver, two spatial layers.
    #[serde(rename = "lmmse-2layer")]
    LmmseTwoLayer,
    /// Waterfilling-free equal-power channel capacity (successive
    /// cancellation attains it).
    #[serde(rename = "optimal")]
    Optimal,
}

impl ReceiveScheme {
    pub const ALL: [ReceiveScheme; 5] = [
        ReceiveScheme::Miso1x1,
        ReceiveScheme::Mrc2x1,
        ReceiveScheme::LmmseOneLayer,
        ReceiveScheme::LmmseTwoLayer,
        ReceiveScheme::Optimal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReceiveScheme::Miso1x1 => "miso-1x1",
            ReceiveScheme::Mrc2x1 => "mrc-2x1",
            ReceiveScheme::LmmseOneLayer => "lmmse-1layer",
            ReceiveScheme::LmmseTwoLayer => "lmmse-2layer",
            ReceiveScheme::Optimal => "optimal",
        }
    }
}

impl fmt::Display for ReceiveScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters of the correlated Rayleigh channel model used when no scene is
/// traced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StochasticModel {
    pub n_users: usize,
    pub n_rx: usize,
    pub n_tx: usize,
    /// Correlation between adjacent receive ports; |rho| <= 1.
    pub rx_correlation: f64,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_quantile() -> f64 {
    0.1
}

/// A run configuration exactly as written in the file (paths still relative,
/// powers still in dBm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Base-station antenna network (`.sNp`). Required with `scene`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bs_touchstone: Option<PathBuf>,
    /// User-equipment antenna network (`.sNp`). Required with `scene`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ue_touchstone: Option<PathBuf>,
    /// Facet scene to trace. Mutually exclusive with `[stochastic]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scene: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stochastic: Option<StochasticModel>,
    pub frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub signal_power_dbm: f64,
    pub noise_powers_dbm: Vec<f64>,
    pub schemes: Vec<ReceiveScheme>,
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Outage quantile used for the diversity figure and threshold rate.
    #[serde(default = "default_quantile")]
    pub diversity_threshold_quantile: f64,
}

impl RunConfig {
    /// Resolve relative paths against `base_dir` (the config file's
    /// directory), returning a copy whose paths are usable from any cwd.
    pub fn resolved_against(&self, base_dir: &Path) -> RunConfig {
        let resolve = |p: &PathBuf| -> PathBuf {
            if p.is_absolute() {
                p.clone()
            } else {
                base_dir.join(p)
            }
        };
        RunConfig {
            bs_touchstone: self.bs_touchstone.as_ref().map(resolve),
            ue_touchstone: self.ue_touchstone.as_ref().map(resolve),
            scene: self.scene.as_ref().map(resolve),
            output_dir: resolve(&self.output_dir),
            ..self.clone()
        }
    }

    pub fn signal_power_w(&self) -> f64 {
        dbm_to_watts(self.signal_power_dbm)
    }

    pub fn noise_powers_w(&self) -> Vec<f64> {
        self.noise_powers_dbm.iter().map(|&d| dbm_to_watts(d)).collect()
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Parse a config document and apply the structural rules that make a run
/// impossible to interpret. Cross-file diagnostics live in `validate`.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text)?;
    match (&cfg.scene, &cfg.stochastic) {
        (Some(_), Some(_)) | (None, None) => return Err(ConfigError::SceneStochasticConflict),
        _ => {}
    }
    if cfg.scene.is_some() && (cfg.bs_touchstone.is_none() || cfg.ue_touchstone.is_none()) {
        return Err(ConfigError::MissingAntennaNetworks);
    }
    if cfg.schemes.is_empty() {
        return Err(ConfigError::NoSchemes);
    }
    if cfg.noise_powers_dbm.is_empty() {
        return Err(ConfigError::NoNoisePowers);
    }
    for (i, s) in cfg.schemes.iter().enumerate() {
        if cfg.schemes[..i].contains(s) {
            return Err(ConfigError::DuplicateScheme(*s));
        }
    }
    Ok(cfg)
}
