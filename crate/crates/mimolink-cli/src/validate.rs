//! Cross-file validation rule table.
//!
//! `parse_config` already rejects structurally meaningless documents (unknown
//! keys, scheme/model conflicts). The rules here need the referenced files or
//! judge physical plausibility, and each carries a stable code so scripts can
//! filter on them:
//!
//! - `V0xx` — link-budget and quantile sanity on the config values alone,
//! - `V1xx` — referenced files: existence, parseability, frequency coverage,
//!   port-count compatibility, passivity,
//! - `V2xx` — stochastic-model parameter ranges,
//! - `V3xx` — output location.
//!
//! Errors make a run impossible or meaningless and fail `validate`; warnings
//! flag probable mistakes (unit confusion, non-positive SNR) but let the run
//! proceed. The full table is reproduced in the README.

use std::fmt;
use std::path::Path;

use mimolink::multiport::{interpolate_network, PASSIVITY_TOLERANCE};
use mimolink::propagation::scene_file::{load_scene, SceneDescription};
use mimolink::touchstone::{load_touchstone, TouchstoneNetwork};

use crate::config::{ReceiveScheme, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Finding {
    pub code: &'static str,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]: {}", self.severity, self.code, self.message)
    }
}

/// Files loaded while validating, so a run does not parse everything twice.
/// A `None` means the corresponding rule already recorded an error (or the
/// config simply does not use that input).
#[derive(Default)]
pub struct LoadedInputs {
    pub bs: Option<TouchstoneNetwork>,
    pub ue: Option<TouchstoneNetwork>,
    pub scene: Option<SceneDescription>,
}

fn schemes_needing_two_branches(cfg: &RunConfig) -> Vec<ReceiveScheme> {
    cfg.schemes
        .iter()
        .copied()
        .filter(|s| !matches!(s, ReceiveScheme::Miso1x1))
        .collect()
}

/// Run the whole rule table against a path-resolved config. Never mutates
/// anything on disk.
pub fn load_and_check(cfg: &RunConfig) -> (LoadedInputs, Vec<Finding>) {
    let mut findings = Vec::new();
    let mut inputs = LoadedInputs::default();
    let err = |code, message: String| Finding {
        code,
        severity: Severity::Error,
        message,
    };
    let warn = |code, message: String| Finding {
        code,
        severity: Severity::Warning,
        message,
    };

    // --- V0xx: link budget and quantile ---
    if !(cfg.frequency_hz.is_finite() && cfg.frequency_hz > 0.0) {
        findings.push(err(
            "V001",
            format!("frequency_hz = {} must be finite and positive", cfg.frequency_hz),
        ));
    }
    if !(cfg.bandwidth_hz.is_finite() && cfg.bandwidth_hz > 0.0) {
        findings.push(err(
            "V002",
            format!("bandwidth_hz = {} must be finite and positive", cfg.bandwidth_hz),
        ));
    }
    if !(cfg.diversity_threshold_quantile > 0.0 && cfg.diversity_threshold_quantile < 1.0) {
        findings.push(err(
            "V003",
            format!(
                "diversity_threshold_quantile = {} must lie strictly between 0 and 1",
                cfg.diversity_threshold_quantile
            ),
        ));
    }
    if !cfg.signal_power_dbm.is_finite()
        || cfg.noise_powers_dbm.iter().any(|p| !p.is_finite())
    {
        findings.push(err(
            "V004",
            "signal and noise powers must all be finite dBm values".to_string(),
        ));
    }
    if cfg.signal_power_dbm > 50.0 {
        findings.push(warn(
            "V005",
            format!(
                "signal_power_dbm = {} is over 100 W — was a watt figure pasted into a dBm key?",
                cfg.signal_power_dbm
            ),
        ));
    }
    for (i, &n) in cfg.noise_powers_dbm.iter().enumerate() {
        if n >= cfg.signal_power_dbm {
            findings.push(warn(
                "V006",
                format!(
                    "noise_powers_dbm[{i}] = {n} dBm is at or above the signal power \
                     ({} dBm): transmit-referenced SNR is non-positive",
                    cfg.signal_power_dbm
                ),
            ));
        }
    }
    for (i, &n) in cfg.noise_powers_dbm.iter().enumerate() {
        if cfg.noise_powers_dbm[..i].contains(&n) {
            findings.push(warn(
                "V007",
                format!("noise_powers_dbm repeats {n} dBm; duplicate curves will be written"),
            ));
        }
    }
    if cfg.bandwidth_hz.is_finite() && cfg.frequency_hz.is_finite() && cfg.bandwidth_hz > cfg.frequency_hz
    {
        findings.push(warn(
            "V008",
            format!(
                "bandwidth_hz = {} exceeds the carrier frequency_hz = {} — check units",
                cfg.bandwidth_hz, cfg.frequency_hz
            ),
        ));
    }

    // --- V1xx: referenced files ---
    let check_sweep = |net: &TouchstoneNetwork, path: &Path, code| {
        if cfg.frequency_hz < net.min_frequency_hz() || cfg.frequency_hz > net.max_frequency_hz() {
            Some(Finding {
                code,
                severity: Severity::Error,
                message: format!(
                    "run frequency {} Hz lies outside the sweep of {} ({} - {} Hz)",
                    cfg.frequency_hz,
                    path.display(),
                    net.min_frequency_hz(),
                    net.max_frequency_hz()
                ),
            })
        } else {
            None
        }
    };

    if let Some(path) = &cfg.bs_touchstone {
        match load_touchstone(path) {
            Ok(net) => {
                if let Some(f) = check_sweep(&net, path, "V103") {
                    findings.push(f);
                }
                inputs.bs = Some(net);
            }
            Err(e) => findings.push(err("V101", format!("{e:#}"))),
        }
    }
    if let Some(path) = &cfg.ue_touchstone {
        match load_touchstone(path) {
            Ok(net) => {
                if let Some(f) = check_sweep(&net, path, "V104") {
                    findings.push(f);
                }
                if net.n_ports() != 2 {
                    findings.push(err(
                        "V106",
                        format!(
                            "{} has {} ports; the terminal network must have exactly 2",
                            path.display(),
                            net.n_ports()
                        ),
                    ));
                } else {
                    inputs.ue = Some(net);
                }
            }
            Err(e) => findings.push(err("V102", format!("{e:#}"))),
        }
    }
    if let Some(path) = &cfg.scene {
        match load_scene(path) {
            Ok(desc) => {
                if desc.carrier_hz != cfg.frequency_hz {
                    findings.push(warn(
                        "V107",
                        format!(
                            "scene design carrier {} Hz differs from the run frequency {} Hz; \
                             tracing happens at the run frequency",
                            desc.carrier_hz, cfg.frequency_hz
                        ),
                    ));
                }
                if let Some(bs) = &inputs.bs {
                    if bs.n_ports() != desc.bs.n_elements() {
                        findings.push(err(
                            "V105",
                            format!(
                                "base-station network has {} ports but the scene array has {} \
                                 elements",
                                bs.n_ports(),
                                desc.bs.n_elements()
                            ),
                        ));
                    }
                }
                if desc.ue_template.len() != 2 {
                    findings.push(err(
                        "V108",
                        format!(
                            "scene user template has {} elements; receive processing needs \
                             exactly 2 branches",
                            desc.ue_template.len()
                        ),
                    ));
                }
                inputs.scene = Some(desc);
            }
            Err(e) => findings.push(err("V109", format!("{e:#}"))),
        }
    }
    // Passivity at the run frequency (only meaningful once the sweep covers it).
    if let Some(net) = &inputs.ue {
        if let Ok(s) = interpolate_network(net, cfg.frequency_hz) {
            if !s.is_passive(PASSIVITY_TOLERANCE) {
                findings.push(err(
                    "V110",
                    format!(
                        "terminal network is not passive at {} Hz (spectral norm {:.6}); \
                         correlation figures would be meaningless",
                        cfg.frequency_hz,
                        s.spectral_norm()
                    ),
                ));
            }
        }
    }
    if let Some(net) = &inputs.bs {
        if let Ok(s) = interpolate_network(net, cfg.frequency_hz) {
            if !s.is_passive(PASSIVITY_TOLERANCE) {
                findings.push(warn(
                    "V111",
                    format!(
                        "base-station network is not passive at {} Hz (spectral norm {:.6})",
                        cfg.frequency_hz,
                        s.spectral_norm()
                    ),
                ));
            }
        }
    }

    // --- V2xx: stochastic model ---
    if let Some(m) = &cfg.stochastic {
        if m.n_users == 0 || m.n_tx == 0 {
            findings.push(err(
                "V201",
                format!(
                    "stochastic model needs n_users >= 1 and n_tx >= 1 (got {} users, {} tx)",
                    m.n_users, m.n_tx
                ),
            ));
        }
        if !(m.rx_correlation.is_finite() && m.rx_correlation.abs() <= 1.0) {
            findings.push(err(
                "V202",
                format!("rx_correlation = {} must satisfy |rho| <= 1", m.rx_correlation),
            ));
        }
        let two_branch = schemes_needing_two_branches(cfg);
        if m.n_rx == 0 || (m.n_rx == 1 && !two_branch.is_empty()) || m.n_rx > 2 {
            findings.push(err(
                "V203",
                format!(
                    "n_rx = {} is incompatible with the configured schemes \
                     (miso-1x1 needs 1 branch; every other scheme needs exactly 2)",
                    m.n_rx
                ),
            ));
        }
    }

    // --- V3xx: output location ---
    if cfg.output_dir.exists() && !cfg.output_dir.is_dir() {
        findings.push(err(
            "V301",
            format!(
                "output_dir {} exists and is not a directory",
                cfg.output_dir.display()
            ),
        ));
    }

    (inputs, findings)
}

pub fn has_errors(findings: &[Finding]) -> bool {
    findings.iter().any(|f| f.severity == Severity::Error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use std::path::PathBuf;

    fn data_dir() -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
    }

    fn example_config() -> RunConfig {
        let dir = data_dir();
        let text = std::fs::read_to_string(dir.join("run_example.toml")).unwrap();
        parse_config(&text).unwrap().resolved_against(&dir)
    }

    #[test]
    fn shipped_example_config_is_clean() {
        let (inputs, findings) = load_and_check(&example_config());
        assert!(
            findings.is_empty(),
            "expected no findings, got: {:?}",
            findings.iter().map(|f| f.to_string()).collect::<Vec<_>>()
        );
        assert!(inputs.bs.is_some() && inputs.ue.is_some() && inputs.scene.is_some());
    }

    #[test]
    fn missing_file_and_coverage_rules_fire_with_the_file_named() {
        let mut cfg = example_config();
        cfg.bs_touchstone = Some(PathBuf::from("/nonexistent/bs.s16p"));
        let (_, findings) = load_and_check(&cfg);
        assert!(findings.iter().any(|f| f.code == "V101"));

        let mut cfg = example_config();
        cfg.frequency_hz = 9.9e9; // outside both sweeps
        let (_, findings) = load_and_check(&cfg);
        let v103 = findings.iter().find(|f| f.code == "V103").unwrap();
        assert!(v103.message.contains("bs_array.s16p"));
        assert!(findings.iter().any(|f| f.code == "V104"));
        // Out-of-sweep is an error, and the scene warns about the carrier.
        assert!(has_errors(&findings));
        assert!(findings.iter().any(|f| f.code == "V107"));
    }

    #[test]
    fn unit_confusion_heuristics_warn_without_blocking() {
        let mut cfg = example_config();
        cfg.signal_power_dbm = 100.0; // 10 MW: surely watts pasted as dBm
        cfg.noise_powers_dbm = vec![-80.0, -80.0, 120.0];
        let (_, findings) = load_and_check(&cfg);
        assert!(findings.iter().any(|f| f.code == "V005"));
        assert!(findings.iter().any(|f| f.code == "V006"));
        assert!(findings.iter().any(|f| f.code == "V007"));
        assert!(!has_errors(&findings));
    }

    #[test]
    fn stochastic_branch_count_must_match_schemes() {
        let text = r#"
frequency_hz = 3.16e9
bandwidth_hz = 1e7
signal_power_dbm = 10.0
noise_powers_dbm = [-10.0]
schemes = ["mrc-2x1"]
seed = 1

[stochastic]
n_users = 10
n_rx = 1
n_tx = 4
rx_correlation = 0.0
"#;
        let cfg = parse_config(text).unwrap();
        let (_, findings) = load_and_check(&cfg);
        assert!(findings.iter().any(|f| f.code == "V203"));

        let ok = text.replace("n_rx = 1", "n_rx = 2");
        let cfg = parse_config(&ok).unwrap();
        let (_, findings) = load_and_check(&cfg);
        assert!(findings.is_empty(), "{findings:?}");
    }

    #[test]
    fn quantile_and_budget_rules() {
        let mut cfg = example_config();
        cfg.diversity_threshold_quantile = 1.0;
        cfg.bandwidth_hz = 5.0e9; // wider than the carrier
        let (_, findings) = load_and_check(&cfg);
        assert!(findings.iter().any(|f| f.code == "V003"));
        assert!(findings.iter().any(|f| f.code == "V008"));
    }
}
