//! The run pipeline: config in, artifacts out.
//!
//! A run proceeds in four stages — load and validate the inputs, build the
//! channel ensemble (traced scene or stochastic model), evaluate every
//! configured scheme at every noise power, and reduce to artifacts:
//!
//! - one CSV staircase per (scheme, noise power), columns
//!   `scheme,snr_db,rate_bps,cdf` (schema v1),
//! - `gain_report.json` with the diversity/multiplexing/coupling figures
//!   (schema v1), written when the run funds all of them,
//! - `manifest.json` (schema v1) recording the tool version, a SHA-256 of the
//!   resolved config, SHA-256s of every input file, and the artifact list.
//!
//! Everything here is deterministic in (config, seed): per-user evaluation
//! fans out over the thread pool, but results are collected in user order and
//! every file is written once, by this single writer, at the end. `snr_db` in
//! file names and CSV rows is the transmit-referenced figure
//! `signal_power_dbm - noise_power_dbm`; path loss is inside the channel
//! matrices, so traced scenes see a lower SNR at the receiver.
//!
//! Reproduction: `run --from-manifest <manifest.json>` re-executes the
//! embedded resolved config and rewrites byte-identical artifacts (unless
//! `--seed`/`--out` deliberately change the run).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use mimolink::analysis::{
    diversity_gain, ecc_from_sparams, isolation_db, multiplexing_gain, outage_cdf, GainReport,
    OutageCurve,
};
use mimolink::linkproc::{evaluate_scheme, LinkBudget, LinkError, Scheme};
use mimolink::multiport::{cascade_channel, interpolate_network, ChannelMatrix, TerminationSet};
use mimolink::propagation::ensemble::{generate_stochastic_ensemble, Ensemble, StochasticParams};

use crate::config::{parse_config, ReceiveScheme, RunConfig};
use crate::validate::{has_errors, load_and_check, LoadedInputs, Severity};
use crate::{CliError, RunArgs};

pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Reproduction record for a completed run.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool_version: String,
    /// SHA-256 of `resolved_config_toml`.
    pub config_sha256: String,
    /// The exact config executed, with paths made absolute and overrides
    /// applied. `run --from-manifest` re-executes this text.
    pub resolved_config_toml: String,
    /// SHA-256 of every input file, keyed by role.
    pub input_sha256: std::collections::BTreeMap<String, String>,
    /// Artifact file names written into the output directory.
    pub artifacts: Vec<String>,
}

/// Gain report extended with its schema version (the library struct carries
/// the physics; the version field belongs to the file format).
#[derive(Debug, Serialize, Deserialize)]
struct VersionedReport {
    schema_version: u32,
    #[serde(flatten)]
    report: GainReport,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        write!(out, "{b:02x}").expect("writing to a String cannot fail");
    }
    out
}

fn runtime(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Runtime(e.into())
}

fn invalid(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Invalid(e.into())
}

/// Map the scheme names used in config files onto the evaluator's scheme
/// enum. The two lists are distinct on purpose: one is file-format surface,
/// the other is numerics.
fn to_link_scheme(s: ReceiveScheme) -> Scheme {
    match s {
        ReceiveScheme::Miso1x1 => Scheme::Miso1x1,
        ReceiveScheme::Mrc2x1 => Scheme::Mrc2x1,
        ReceiveScheme::LmmseOneLayer => Scheme::LmmseOneLayer,
        ReceiveScheme::LmmseTwoLayer => Scheme::LmmseTwoLayer,
        ReceiveScheme::Optimal => Scheme::Optimal,
    }
}

/// Per-user rate with outage semantics: a fully shadowed user (zero channel,
/// or a dead target branch) transmits nothing and scores 0 bit/s rather than
/// erroring the whole run.
fn rate_or_outage(
    scheme: Scheme,
    channel: &ChannelMatrix,
    budget: &LinkBudget,
) -> Result<f64, LinkError> {
    match evaluate_scheme(scheme, channel, budget) {
        Ok(r) => Ok(r.rate_bps),
        Err(LinkError::ZeroChannel) | Err(LinkError::ZeroTargetRow { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// File-name-safe rendering of a dBm figure: `-80` -> "m80", `12.5` -> "12p5".
fn dbm_label(dbm: f64) -> String {
    format!("{dbm}").replace('-', "m").replace('.', "p")
}

pub fn curve_file_name(scheme: ReceiveScheme, noise_dbm: f64) -> String {
    format!("curve_{}_noise_{}dbm.csv", scheme.name(), dbm_label(noise_dbm))
}

/// Resolve the config text and base directory for this invocation: either a
/// config file from disk or the resolved text embedded in a manifest.
fn config_source(args: &RunArgs) -> Result<(String, PathBuf), CliError> {
    match (&args.config, &args.from_manifest) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))
                .map_err(invalid)?;
            let base = path
                .parent()
                .map(Path::to_path_buf)
                .filter(|p| !p.as_os_str().is_empty())
                .unwrap_or_else(|| PathBuf::from("."));
            Ok((text, base))
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading manifest {}", path.display()))
                .map_err(invalid)?;
            let manifest: Manifest = serde_json::from_str(&text)
                .with_context(|| format!("parsing manifest {}", path.display()))
                .map_err(invalid)?;
            if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
                return Err(invalid(anyhow!(
                    "manifest schema version {} is not supported (expected {})",
                    manifest.schema_version,
                    MANIFEST_SCHEMA_VERSION
                )));
            }
            // Paths inside the manifest are already absolute.
            Ok((manifest.resolved_config_toml, PathBuf::from(".")))
        }
        _ => unreachable!("clap enforces exactly one of --config/--from-manifest"),
    }
}

/// Make a path independent of the working directory (no filesystem access,
/// so nonexistent paths still resolve and reach the rule table as errors).
fn absolutize(p: &mut PathBuf) -> Result<(), CliError> {
    *p = std::path::absolute(&*p)
        .with_context(|| format!("resolving {}", p.display()))
        .map_err(runtime)?;
    Ok(())
}

pub fn run_command(args: RunArgs) -> Result<(), CliError> {
    let (config_text, base_dir) = config_source(&args)?;
    let cfg = parse_config(&config_text).map_err(invalid)?;
    let mut resolved = cfg.resolved_against(&base_dir);
    if let Some(seed) = args.seed {
        resolved.seed = seed;
    }
    if let Some(out) = &args.out {
        resolved.output_dir = out.clone();
    }
    // The manifest must replay from any working directory.
    for p in [&mut resolved.bs_touchstone, &mut resolved.ue_touchstone, &mut resolved.scene]
        .into_iter()
        .flatten()
    {
        absolutize(p)?;
    }
    absolutize(&mut resolved.output_dir)?;

    let (inputs, findings) = load_and_check(&resolved);
    for f in &findings {
        eprintln!("{f}");
    }
    if has_errors(&findings) {
        let n = findings.iter().filter(|f| f.severity == Severity::Error).count();
        return Err(invalid(anyhow!("validation failed with {n} error(s)")));
    }

    match args.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(runtime)?
            .install(|| execute(&resolved, &inputs)),
        None => execute(&resolved, &inputs),
    }
}

/// Build the per-user channel ensemble for a validated config.
fn build_ensemble(cfg: &RunConfig, inputs: &LoadedInputs) -> Result<Ensemble, CliError> {
    if let Some(desc) = &inputs.scene {
        let mut ens = desc
            .generate(cfg.frequency_hz, cfg.seed)
            .context("tracing the scene ensemble")
            .map_err(runtime)?;
        // Compose the antenna networks around the traced transfer block.
        // Conjugate-matched feeds and loads leave the transfer untouched; the
        // call still enforces dimensions and guards against resonant factors.
        let bs = inputs.bs.as_ref().expect("validation loaded the BS network");
        let ue = inputs.ue.as_ref().expect("validation loaded the UE network");
        let s_t = interpolate_network(bs, cfg.frequency_hz).map_err(runtime)?;
        let s_r = interpolate_network(ue, cfg.frequency_hz).map_err(runtime)?;
        let terminations = TerminationSet::matched(ens.n_tx(), ens.n_rx());
        for user in &mut ens.users {
            user.channel = cascade_channel(&s_t, &s_r, &user.channel, &terminations)
                .context("cascading antenna networks around the traced channel")
                .map_err(runtime)?;
        }
        Ok(ens)
    } else {
        let m = cfg
            .stochastic
            .as_ref()
            .expect("config names a scene or a stochastic model");
        let params = StochasticParams {
            n_users: m.n_users,
            n_rx: m.n_rx,
            n_tx: m.n_tx,
            rx_correlation: m.rx_correlation,
        };
        generate_stochastic_ensemble(&params, cfg.frequency_hz, cfg.seed)
            .context("drawing the stochastic ensemble")
            .map_err(runtime)
    }
}

/// One evaluated curve and where it came from.
struct EvaluatedCurve {
    scheme: ReceiveScheme,
    noise_dbm: f64,
    snr_db: f64,
    curve: OutageCurve,
}

fn evaluate_all(
    cfg: &RunConfig,
    ensemble: &Ensemble,
) -> Result<Vec<EvaluatedCurve>, CliError> {
    let signal_w = cfg.signal_power_w();
    let mut curves = Vec::with_capacity(cfg.noise_powers_dbm.len() * cfg.schemes.len());
    for &noise_dbm in &cfg.noise_powers_dbm {
        let noise_w = crate::config::dbm_to_watts(noise_dbm);
        let budget = LinkBudget::new(cfg.bandwidth_hz, signal_w, noise_w)
            .context("building the link budget")
            .map_err(invalid)?;
        for &scheme in &cfg.schemes {
            let link_scheme = to_link_scheme(scheme);
            let rates = ensemble
                .users
                .par_iter()
                .map(|u| rate_or_outage(link_scheme, &u.channel, &budget))
                .collect::<Result<Vec<f64>, _>>()
                .with_context(|| format!("evaluating {scheme}"))
                .map_err(runtime)?;
            let curve = outage_cdf(&rates, link_scheme, budget)
                .context("building the outage curve")
                .map_err(runtime)?;
            curves.push(EvaluatedCurve {
                scheme,
                noise_dbm,
                snr_db: cfg.signal_power_dbm - noise_dbm,
                curve,
            });
        }
    }
    Ok(curves)
}

fn render_csv(c: &EvaluatedCurve) -> String {
    let mut out = String::with_capacity(c.curve.points().len() * 40 + 32);
    out.push_str("scheme,snr_db,rate_bps,cdf\n");
    for p in c.curve.points() {
        writeln!(out, "{},{},{},{}", c.scheme.name(), c.snr_db, p.rate_bps, p.cdf)
            .expect("writing to a String cannot fail");
    }
    out
}

/// Assemble the gain report, or explain which ingredient the config lacks.
fn gain_report(
    cfg: &RunConfig,
    inputs: &LoadedInputs,
    curves: &[EvaluatedCurve],
) -> Result<GainReport, String> {
    let ue = inputs
        .ue
        .as_ref()
        .ok_or("no terminal network to read ECC/isolation from (stochastic run)")?;
    let s = interpolate_network(ue, cfg.frequency_hz).map_err(|e| e.to_string())?;
    let ecc = ecc_from_sparams(&s).map_err(|e| e.to_string())?;
    let iso = isolation_db(&s).map_err(|e| e.to_string())?;

    // Diversity: baseline and combined curve at the median noise power.
    let mid_noise = cfg.noise_powers_dbm[cfg.noise_powers_dbm.len() / 2];
    let find = |scheme: ReceiveScheme, noise: f64| {
        curves
            .iter()
            .find(|c| c.scheme == scheme && c.noise_dbm == noise)
            .map(|c| &c.curve)
    };
    let base = find(ReceiveScheme::Miso1x1, mid_noise)
        .ok_or("diversity needs the miso-1x1 scheme in the run")?;
    let multi = find(ReceiveScheme::Mrc2x1, mid_noise)
        .ok_or("diversity needs the mrc-2x1 scheme in the run")?;
    let threshold_rate_bps = base
        .rate_at_quantile(cfg.diversity_threshold_quantile)
        .map_err(|e| e.to_string())?;
    let diversity = diversity_gain(multi, base, threshold_rate_bps).map_err(|e| e.to_string())?;

    // Multiplexing: optimal-scheme medians across every noise power.
    let points: Vec<(f64, f64)> = cfg
        .noise_powers_dbm
        .iter()
        .filter_map(|&n| {
            find(ReceiveScheme::Optimal, n)
                .map(|c| (cfg.signal_power_dbm - n, c.median_rate()))
        })
        .collect();
    if points.len() != cfg.noise_powers_dbm.len() {
        return Err("multiplexing needs the optimal scheme in the run".to_string());
    }
    let mux = multiplexing_gain(&points, cfg.bandwidth_hz).map_err(|e| e.to_string())?;

    Ok(GainReport {
        diversity_gain: diversity,
        multiplexing_gain: mux,
        ecc,
        isolation_db: iso,
        threshold_rate_bps,
        snr_points_db: points.iter().map(|&(db, _)| db).collect(),
    })
}

fn execute(cfg: &RunConfig, inputs: &LoadedInputs) -> Result<(), CliError> {
    let ensemble = build_ensemble(cfg, inputs)?;
    let curves = evaluate_all(cfg, &ensemble)?;

    std::fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating output dir {}", cfg.output_dir.display()))
        .map_err(runtime)?;

    let mut artifacts = Vec::new();
    for c in &curves {
        let name = curve_file_name(c.scheme, c.noise_dbm);
        std::fs::write(cfg.output_dir.join(&name), render_csv(c))
            .with_context(|| format!("writing {name}"))
            .map_err(runtime)?;
        artifacts.push(name);
    }

    match gain_report(cfg, inputs, &curves) {
        Ok(report) => {
            let versioned = VersionedReport {
                schema_version: REPORT_SCHEMA_VERSION,
                report,
            };
            let json = serde_json::to_string_pretty(&versioned)
                .context("serializing the gain report")
                .map_err(runtime)?;
            std::fs::write(cfg.output_dir.join("gain_report.json"), json + "\n")
                .context("writing gain_report.json")
                .map_err(runtime)?;
            artifacts.push("gain_report.json".to_string());
        }
        Err(why) => eprintln!("note: gain report skipped: {why}"),
    }

    // Manifest last, so it lists exactly what was written.
    let resolved_config_toml = toml::to_string(cfg)
        .context("serializing the resolved config")
        .map_err(runtime)?;
    let mut input_sha256 = std::collections::BTreeMap::new();
    let mut hash_input = |role: &str, path: &Option<PathBuf>| -> Result<(), CliError> {
        if let Some(p) = path {
            let bytes = std::fs::read(p)
                .with_context(|| format!("hashing {}", p.display()))
                .map_err(runtime)?;
            input_sha256.insert(role.to_string(), sha256_hex(&bytes));
        }
        Ok(())
    };
    hash_input("bs_touchstone", &cfg.bs_touchstone)?;
    hash_input("ue_touchstone", &cfg.ue_touchstone)?;
    hash_input("scene", &cfg.scene)?;
    artifacts.push("manifest.json".to_string());
    let manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: sha256_hex(resolved_config_toml.as_bytes()),
        resolved_config_toml,
        input_sha256,
        artifacts,
    };
    let json = serde_json::to_string_pretty(&manifest)
        .context("serializing the manifest")
        .map_err(runtime)?;
    std::fs::write(cfg.output_dir.join("manifest.json"), json + "\n")
        .context("writing manifest.json")
        .map_err(runtime)?;

    eprintln!(
        "wrote {} curve file(s) + manifest to {} ({} users, {} schemes, {} noise powers)",
        curves.len(),
        cfg.output_dir.display(),
        ensemble.n_users(),
        cfg.schemes.len(),
        cfg.noise_powers_dbm.len()
    );
    Ok(())
}
