//! Plain-text ensemble dumps: a one-line JSON header followed by fixed-shape
//! user records. The format is line-oriented so it diffs cleanly, and every
//! float is written with shortest-exact decimal formatting so a
//! write/parse/write cycle is byte-identical.
//!
//! ```text
//! {"format":"mimolink-ensemble","version":1,"frequency_hz":3.16e9,...}
//! user 0 <x> <y> <z> <n_paths>
//! <re> <im> ... 2*n_tx values   (receive row 0)
//! ...                           (n_rx rows per user)
//! user 1 ...
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::multiport::ChannelMatrix;

use super::ensemble::{Ensemble, UserSample};
use super::geometry::Vec3;

pub const ENSEMBLE_FORMAT_TAG: &str = "mimolink-ensemble";
pub const ENSEMBLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleHeader {
    pub format: String,
    pub version: u32,
    pub frequency_hz: f64,
    pub n_users: usize,
    pub n_rx: usize,
    pub n_tx: usize,
    pub seed: u64,
    /// SHA-256 of the scene file the ensemble was traced from; `None` for
    /// stochastic ensembles.
    pub scene_hash: Option<String>,
}

#[derive(Debug, Error)]
pub enum EnsembleIoError {
    #[error("empty dump (missing header line)")]
    MissingHeader,
    #[error("header is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("header format tag is '{0}', expected '{ENSEMBLE_FORMAT_TAG}'")]
    WrongFormat(String),
    #[error("unsupported dump version {0} (this reader handles {ENSEMBLE_FORMAT_VERSION})")]
    UnsupportedVersion(u32),
    #[error("header dimensions are invalid: {0}")]
    BadHeader(String),
    #[error("line {line}: expected 'user {expected} <x> <y> <z> <n_paths>'")]
    BadUserLine { line: usize, expected: usize },
    #[error("line {line}: expected {expected} values in a channel row, got {found}")]
    BadRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: '{token}' is not a number")]
    BadNumber { token: String, line: usize },
    #[error("line {line}: non-finite value")]
    NonFinite { line: usize },
    #[error("dump ends early: user {user} is incomplete")]
    Truncated { user: usize },
    #[error("line {line}: trailing content after the last user")]
    TrailingContent { line: usize },
}

/// Serialize an ensemble with its provenance (seed and optional scene hash).
pub fn write_ensemble(ensemble: &Ensemble, seed: u64, scene_hash: Option<&str>) -> String {
    let header = EnsembleHeader {
        format: ENSEMBLE_FORMAT_TAG.to_string(),
        version: ENSEMBLE_FORMAT_VERSION,
        frequency_hz: ensemble.frequency_hz,
        n_users: ensemble.n_users(),
        n_rx: ensemble.n_rx(),
        n_tx: ensemble.n_tx(),
        seed,
        scene_hash: scene_hash.map(str::to_string),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for (idx, user) in ensemble.users.iter().enumerate() {
        let p = user.position;
        out.push_str(&format!(
            "user {idx} {} {} {} {}\n",
            p.x, p.y, p.z, user.n_paths
        ));
        for r in 0..user.channel.n_rx() {
            let mut row = String::new();
            for t in 0..user.channel.n_tx() {
                let v = user.channel.get(r, t);
                if t > 0 {
                    row.push(' ');
                }
                row.push_str(&format!("{} {}", v.re, v.im));
            }
            row.push('\n');
            out.push_str(&row);
        }
    }
    out
}

fn parse_f64(token: &str, line: usize) -> Result<f64, EnsembleIoError> {
    let v: f64 = token.parse().map_err(|_| EnsembleIoError::BadNumber {
        token: token.to_string(),
        line,
    })?;
    if !v.is_finite() {
        return Err(EnsembleIoError::NonFinite { line });
    }
    Ok(v)
}

/// Parse a dump back into its header and ensemble. The reader is strict: user
/// records must appear in order, every row must have exactly `2 * n_tx`
/// finite values, and nothing may follow the last user.
pub fn parse_ensemble(text: &str) -> Result<(EnsembleHeader, Ensemble), EnsembleIoError> {
    let mut lines = text.lines().enumerate();
    let (_, header_line) = lines.next().ok_or(EnsembleIoError::MissingHeader)?;
    let header: EnsembleHeader = serde_json::from_str(header_line)?;
    if header.format != ENSEMBLE_FORMAT_TAG {
        return Err(EnsembleIoError::WrongFormat(header.format));
    }
    if header.version != ENSEMBLE_FORMAT_VERSION {
        return Err(EnsembleIoError::UnsupportedVersion(header.version));
    }
    if header.n_rx == 0 || header.n_tx == 0 {
        return Err(EnsembleIoError::BadHeader(format!(
            "n_rx = {}, n_tx = {} (both must be positive)",
            header.n_rx, header.n_tx
        )));
    }
    if !(header.frequency_hz.is_finite() && header.frequency_hz > 0.0) {
        return Err(EnsembleIoError::BadHeader(format!(
            "frequency_hz = {}",
            header.frequency_hz
        )));
    }

    let mut users = Vec::with_capacity(header.n_users);
    for expected in 0..header.n_users {
        let Some((idx0, user_line)) = lines.next() else {
            return Err(EnsembleIoError::Truncated { user: expected });
        };
        let line_no = idx0 + 1;
        let tokens: Vec<&str> = user_line.split_whitespace().collect();
        if tokens.len() != 6 || tokens[0] != "user" || tokens[1] != expected.to_string() {
            return Err(EnsembleIoError::BadUserLine {
                line: line_no,
                expected,
            });
        }
        let x = parse_f64(tokens[2], line_no)?;
        let y = parse_f64(tokens[3], line_no)?;
        let z = parse_f64(tokens[4], line_no)?;
        let n_paths: usize = tokens[1 + 4]
            .parse()
            .map_err(|_| EnsembleIoError::BadUserLine {
                line: line_no,
                expected,
            })?;

        let mut entries = vec![Complex64::new(0.0, 0.0); header.n_rx * header.n_tx];
        for r in 0..header.n_rx {
            let Some((ridx0, row_line)) = lines.next() else {
                return Err(EnsembleIoError::Truncated { user: expected });
            };
            let row_no = ridx0 + 1;
            let vals: Vec<&str> = row_line.split_whitespace().collect();
            if vals.len() != 2 * header.n_tx {
                return Err(EnsembleIoError::BadRow {
                    line: row_no,
                    expected: 2 * header.n_tx,
                    found: vals.len(),
                });
            }
            for t in 0..header.n_tx {
                let re = parse_f64(vals[2 * t], row_no)?;
                let im = parse_f64(vals[2 * t + 1], row_no)?;
                // Column-major storage, matching DMatrix.
                entries[t * header.n_rx + r] = Complex64::new(re, im);
            }
        }
        let channel = ChannelMatrix::new(
            DMatrix::from_vec(header.n_rx, header.n_tx, entries),
            header.frequency_hz,
        )
        .expect("entries are finite and shape is positive");
        users.push(UserSample {
            position: Vec3::new(x, y, z),
            n_paths,
            channel,
        });
    }
    if let Some((idx0, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        let _ = extra;
        return Err(EnsembleIoError::TrailingContent { line: idx0 + 1 });
    }
    let ensemble = Ensemble {
        frequency_hz: header.frequency_hz,
        users,
    };
    Ok((header, ensemble))
}
