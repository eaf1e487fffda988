//! Library half of the `mimolink` command-line tool: config file parsing and
//! validation, the run pipeline, and report serialization. The binary in
//! `main.rs` is a thin argument-parsing shell over this crate so that the
//! whole surface stays testable (and the config parser fuzzable) without
//! spawning processes.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

pub mod config;
pub mod pipeline;
pub mod validate;

/// Exit code 0: success. 1: the request itself was invalid (bad config,
/// failed validation, malformed input files). 2: a valid request failed at
/// run time (I/O, numerics).
#[derive(Debug)]
pub enum CliError {
    Runtime(anyhow::Error),
    Invalid(anyhow::Error),
}

impl CliError {
    fn code(&self) -> ExitCode {
        match self {
            CliError::Invalid(_) => ExitCode::from(1),
            CliError::Runtime(_) => ExitCode::from(2),
        }
    }

    fn message(&self) -> &anyhow::Error {
        match self {
            CliError::Runtime(e) | CliError::Invalid(e) => e,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mimolink",
    version,
    about = "Multi-antenna link ensembles: trace or draw channels, evaluate receive schemes, reduce to outage and gain figures"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute a run config: build the channel ensemble, evaluate every
    /// configured scheme at every noise power, and write CSV curves plus a
    /// gain report and a reproduction manifest.
    Run(RunArgs),
    /// Check a run config (and the files it references) against the
    /// validation rule table without running anything.
    Validate(ValidateArgs),
    /// Parse a Touchstone file, report its shape, and optionally re-emit it.
    ParseTouchstone(ParseTouchstoneArgs),
    /// Trace the specular paths between the base station and one user of a
    /// scene, printing per-path delay, bounce count, and gain.
    Trace(TraceArgs),
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// Run configuration (TOML).
    #[arg(long, required_unless_present = "from_manifest", conflicts_with = "from_manifest")]
    pub config: Option<PathBuf>,
    /// Reproduce a previous run byte-for-byte from its manifest.
    #[arg(long)]
    pub from_manifest: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the config output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output format for the outage curves.
    #[arg(long, value_enum, default_value_t = CurveFormat::Csv)]
    pub format: CurveFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurveFormat {
    Csv,
}

#[derive(Debug, clap::Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct ParseTouchstoneArgs {
    pub path: PathBuf,
    /// Expected port count (default: inferred from the .sNp extension).
    #[arg(long)]
    pub ports: Option<usize>,
    /// Re-emit the parsed network to stdout in this format.
    #[arg(long, value_enum)]
    pub emit: Option<EmitFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmitFormat {
    Ma,
    Db,
    Ri,
}

#[derive(Debug, clap::Args)]
pub struct TraceArgs {
    /// Scene description (TOML).
    #[arg(long)]
    pub scene: PathBuf,
    /// Index of the user position to trace (0-based, from the scene's ring).
    #[arg(long, default_value_t = 0)]
    pub user: usize,
    /// Seed for the user-position sampler.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Dispatch a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Run(args) => commands::run_command(args),
        Command::Validate(args) => commands::validate_command(args),
        Command::ParseTouchstone(args) => commands::parse_touchstone_command(args),
        Command::Trace(args) => commands::trace_command(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {:#}", err.message());
            err.code()
        }
    }
}

mod commands {
    use super::*;
    use mimolink::touchstone::{self, NumberFormat};

    pub fn run_command(args: RunArgs) -> Result<(), CliError> {
        pipeline::run_command(args)
    }

    pub fn validate_command(args: ValidateArgs) -> Result<(), CliError> {
        let text = std::fs::read_to_string(&args.config).map_err(|e| {
            CliError::Invalid(anyhow::anyhow!("reading {}: {e}", args.config.display()))
        })?;
        let cfg = config::parse_config(&text).map_err(|e| {
            CliError::Invalid(anyhow::anyhow!("{}: {e}", args.config.display()))
        })?;
        let base = args
            .config
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or_else(|| std::path::Path::new("."));
        let (_, findings) = validate::load_and_check(&cfg.resolved_against(base));
        for f in &findings {
            println!("{f}");
        }
        if validate::has_errors(&findings) {
            let n = findings
                .iter()
                .filter(|f| f.severity == validate::Severity::Error)
                .count();
            Err(CliError::Invalid(anyhow::anyhow!(
                "{} rule violation(s) in {}",
                n,
                args.config.display()
            )))
        } else {
            eprintln!("{}: ok ({} warning(s))", args.config.display(), findings.len());
            Ok(())
        }
    }

    pub fn parse_touchstone_command(args: ParseTouchstoneArgs) -> Result<(), CliError> {
        let declared = args.ports.or_else(|| touchstone::ports_from_extension(&args.path));
        let text = std::fs::read_to_string(&args.path).map_err(|e| {
            CliError::Runtime(anyhow::anyhow!("reading {}: {e}", args.path.display()))
        })?;
        let net = touchstone::parse_touchstone(&text, declared)
            .map_err(|e| CliError::Invalid(anyhow::anyhow!("{}: {e}", args.path.display())))?;
        eprintln!(
            "{}: {} ports, {} points, {:.6} - {:.6} GHz, {} ohm reference",
            args.path.display(),
            net.n_ports(),
            net.points().len(),
            net.min_frequency_hz() / 1e9,
            net.max_frequency_hz() / 1e9,
            net.reference_ohms()
        );
        for w in net.warnings() {
            eprintln!("warning: {w}");
        }
        if let Some(emit) = args.emit {
            let format = match emit {
                EmitFormat::Ma => NumberFormat::MagnitudeAngle,
                EmitFormat::Db => NumberFormat::Db,
                EmitFormat::Ri => NumberFormat::RealImaginary,
            };
            print!("{}", touchstone::write_touchstone(&net, format));
        }
        Ok(())
    }

    pub fn trace_command(args: TraceArgs) -> Result<(), CliError> {
        use mimolink::propagation::ensemble::sample_ring_positions;
        use mimolink::propagation::scene_file::load_scene;
        use mimolink::propagation::trace::trace_paths;

        let desc = load_scene(&args.scene)
            .map_err(|e| CliError::Invalid(anyhow::anyhow!("{e:#}")))?;
        let positions = sample_ring_positions(&desc.ring, args.seed)
            .map_err(|e| CliError::Runtime(anyhow::anyhow!("{e:#}")))?;
        let rx = *positions.get(args.user).ok_or_else(|| {
            CliError::Invalid(anyhow::anyhow!(
                "user index {} out of range: the scene ring has {} users",
                args.user,
                positions.len()
            ))
        })?;
        let tx = desc.bs.phase_center;
        let paths = trace_paths(&desc.scene, tx, rx, desc.carrier_hz)
            .map_err(|e| CliError::Runtime(anyhow::anyhow!("{e:#}")))?;

        println!(
            "user {} at ({:.3}, {:.3}, {:.3}) m, {} path(s) from ({:.3}, {:.3}, {:.3}) m",
            args.user, rx.x, rx.y, rx.z, paths.len(), tx.x, tx.y, tx.z
        );
        println!("{:>4}  {:>7}  {:>12}  {:>12}  {:>9}  route", "path", "bounces", "delay_ns", "distance_m", "gain_db");
        for (i, p) in paths.iter().enumerate() {
            let route = if p.facet_indices.is_empty() {
                "direct".to_string()
            } else {
                p.facet_indices
                    .iter()
                    .map(|&f| desc.scene.facets()[f].kind.as_str())
                    .collect::<Vec<_>>()
                    .join(" -> ")
            };
            println!(
                "{i:>4}  {:>7}  {:>12.4}  {:>12.4}  {:>9.2}  {route}",
                p.bounce_count(),
                p.delay_s * 1e9,
                p.distance_m,
                20.0 * p.transfer.norm().log10()
            );
        }
        Ok(())
    }
}
