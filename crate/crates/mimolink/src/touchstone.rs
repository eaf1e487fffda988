//! Touchstone v1 (`.sNp`) reader and writer for scattering-parameter sweeps.
//!
//! Supported surface:
//! - option line `# <unit> <param> <format> R <z0>` in any token order,
//!   case-insensitive, with the v1 defaults (GHz, S, MA, 50 ohm) filling in
//!   omitted tokens — or the whole line;
//! - MA / DB / RI number formats;
//! - `!` comments (aggregated and preserved on round-trip);
//! - 1- and 2-port single-line points (2-port data in the classic
//!   S11 S21 S12 S22 column order) and N >= 3 row-per-line matrices with
//!   continuation lines;
//! - the trailing 2-port noise-parameter block, which is skipped with a
//!   recorded warning rather than misread as S-data.
//!
//! Rejected: Touchstone v2 keyword files, Y/Z/H/G parameter sets, duplicate
//! option lines, non-increasing frequency sweeps, and points with the wrong
//! number of values. Frequencies are stored in Hz.
//!
//! The writer emits Hz with plain decimal `f64` formatting (never scientific
//! notation, shortest digits that reparse exactly), so an RI-format
//! write/parse cycle reproduces the network bit-for-bit.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use thiserror::Error;

use crate::multiport::ScatteringMatrix;

/// Floor applied to |S| before taking `20 log10` when writing DB format, so
/// exact zeros serialize as a very deep notch instead of `-inf`.
const DB_MAGNITUDE_FLOOR: f64 = 1e-300;

#[derive(Debug, Error)]
pub enum TouchstoneError {
    #[error("line {line}: keyword lines ([...]) are Touchstone v2, which is not supported")]
    VersionTwoUnsupported { line: usize },
    #[error("line {line}: second option line (only one # line is allowed)")]
    DuplicateOptionLine { line: usize },
    #[error("line {line}: parameter set '{found}' is not supported (only S-parameters)")]
    UnsupportedParameter { found: String, line: usize },
    #[error("line {line}: unrecognized option token '{token}'")]
    UnknownOptionToken { token: String, line: usize },
    #[error("line {line}: reference impedance must be a positive number")]
    InvalidReference { line: usize },
    #[error("line {line}: '{token}' is not a number")]
    InvalidNumber { token: String, line: usize },
    #[error("line {line}: data before the first frequency value")]
    DataBeforeFrequency { line: usize },
    #[error(
        "point starting at line {line}: {found} values do not form a complete \
         {n_ports}-port matrix ({expected} expected)"
    )]
    IncompletePoint {
        line: usize,
        n_ports: usize,
        expected: usize,
        found: usize,
    },
    #[error(
        "point starting at line {line}: {found} values do not form 2*N^2 entries \
         of any square matrix"
    )]
    BadPointShape { line: usize, found: usize },
    #[error(
        "file declares {declared} ports but the first point carries {found} values \
         ({expected} expected)"
    )]
    PortCountMismatch {
        declared: usize,
        expected: usize,
        found: usize,
    },
    #[error(
        "line {line}: frequency {found} is not strictly greater than the previous \
         point ({previous})"
    )]
    NonIncreasingFrequency {
        line: usize,
        previous: f64,
        found: f64,
    },
    #[error("no data points found")]
    NoData,
    #[error("port count must be at least 1")]
    NoPorts,
    #[error("matrix at point {index} is {found}x{found}, expected {expected}x{expected}")]
    WrongMatrixSize {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("frequency at point {index} is not finite and positive")]
    BadFrequency { index: usize },
}

/// Errors from the path-based convenience loader.
#[derive(Debug, Error)]
pub enum TouchstoneFileError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: TouchstoneError,
    },
}

/// Number format of the data columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NumberFormat {
    /// Linear magnitude and angle in degrees.
    MagnitudeAngle,
    /// `20 log10` magnitude and angle in degrees.
    Db,
    /// Real and imaginary parts.
    RealImaginary,
}

impl NumberFormat {
    fn decode(self, a: f64, b: f64) -> Complex64 {
        match self {
            NumberFormat::MagnitudeAngle => Complex64::from_polar(a, b.to_radians()),
            NumberFormat::Db => Complex64::from_polar(10f64.powf(a / 20.0), b.to_radians()),
            NumberFormat::RealImaginary => Complex64::new(a, b),
        }
    }

    fn encode(self, v: Complex64) -> (f64, f64) {
        match self {
            NumberFormat::MagnitudeAngle => (v.norm(), v.arg().to_degrees()),
            NumberFormat::Db => (
                20.0 * v.norm().max(DB_MAGNITUDE_FLOOR).log10(),
                v.arg().to_degrees(),
            ),
            NumberFormat::RealImaginary => (v.re, v.im),
        }
    }

    fn keyword(self) -> &'static str {
        match self {
            NumberFormat::MagnitudeAngle => "MA",
            NumberFormat::Db => "DB",
            NumberFormat::RealImaginary => "RI",
        }
    }
}

/// One frequency sample of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub frequency_hz: f64,
    pub matrix: ScatteringMatrix,
}

/// A parsed scattering-parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TouchstoneNetwork {
    n_ports: usize,
    reference_ohms: f64,
    points: Vec<SweepPoint>,
    source_comment: Option<String>,
    warnings: Vec<String>,
}

impl TouchstoneNetwork {
    pub fn new(
        n_ports: usize,
        reference_ohms: f64,
        points: Vec<SweepPoint>,
        source_comment: Option<String>,
    ) -> Result<Self, TouchstoneError> {
        if n_ports == 0 {
            return Err(TouchstoneError::NoPorts);
        }
        if !(reference_ohms.is_finite() && reference_ohms > 0.0) {
            return Err(TouchstoneError::InvalidReference { line: 0 });
        }
        if points.is_empty() {
            return Err(TouchstoneError::NoData);
        }
        for (index, p) in points.iter().enumerate() {
            if p.matrix.dim() != n_ports {
                return Err(TouchstoneError::WrongMatrixSize {
                    index,
                    expected: n_ports,
                    found: p.matrix.dim(),
                });
            }
            if !(p.frequency_hz.is_finite() && p.frequency_hz > 0.0) {
                return Err(TouchstoneError::BadFrequency { index });
            }
            if index > 0 && p.frequency_hz <= points[index - 1].frequency_hz {
                return Err(TouchstoneError::NonIncreasingFrequency {
                    line: 0,
                    previous: points[index - 1].frequency_hz,
                    found: p.frequency_hz,
                });
            }
        }
        Ok(Self {
            n_ports,
            reference_ohms,
            points,
            source_comment,
            warnings: Vec::new(),
        })
    }

    pub fn n_ports(&self) -> usize {
        self.n_ports
    }

    pub fn reference_ohms(&self) -> f64 {
        self.reference_ohms
    }

    pub fn points(&self) -> &[SweepPoint] {
        &self.points
    }

    pub fn source_comment(&self) -> Option<&str> {
        self.source_comment.as_deref()
    }

    /// Non-fatal oddities found while parsing (e.g. a skipped noise block).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn min_frequency_hz(&self) -> f64 {
        self.points.first().map(|p| p.frequency_hz).unwrap_or(0.0)
    }

    pub fn max_frequency_hz(&self) -> f64 {
        self.points.last().map(|p| p.frequency_hz).unwrap_or(0.0)
    }
}

/// Port count implied by a `.sNp` file extension (`.s2p` -> 2). `None` when
/// the extension does not encode one.
pub fn ports_from_extension(path: &Path) -> Option<usize> {
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    let digits = ext.strip_prefix('s')?.strip_suffix('p')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok().filter(|&n| n > 0)
}

/// Read and parse a Touchstone file, inferring the expected port count from
/// the extension when it has the `.sNp` form.
pub fn load_touchstone(path: &Path) -> Result<TouchstoneNetwork, TouchstoneFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| TouchstoneFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_touchstone(&text, ports_from_extension(path)).map_err(|source| {
        TouchstoneFileError::Parse {
            path: path.to_path_buf(),
            source,
        }
    })
}

struct Options {
    frequency_scale: f64,
    format: NumberFormat,
    reference_ohms: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            frequency_scale: 1e9,
            format: NumberFormat::MagnitudeAngle,
            reference_ohms: 50.0,
        }
    }
}

fn parse_option_line(content: &str, line: usize) -> Result<Options, TouchstoneError> {
    let mut opts = Options::default();
    let mut tokens = content[1..].split_whitespace().peekable();
    while let Some(tok) = tokens.next() {
        match tok.to_ascii_lowercase().as_str() {
            "hz" => opts.frequency_scale = 1.0,
            "khz" => opts.frequency_scale = 1e3,
            "mhz" => opts.frequency_scale = 1e6,
            "ghz" => opts.frequency_scale = 1e9,
            "s" => {}
            "y" | "z" | "h" | "g" => {
                return Err(TouchstoneError::UnsupportedParameter {
                    found: tok.to_ascii_uppercase(),
                    line,
                })
            }
            "ma" => opts.format = NumberFormat::MagnitudeAngle,
            "db" => opts.format = NumberFormat::Db,
            "ri" => opts.format = NumberFormat::RealImaginary,
            "r" => {
                let value = tokens
                    .next()
                    .ok_or(TouchstoneError::InvalidReference { line })?;
                let r: f64 = value
                    .parse()
                    .map_err(|_| TouchstoneError::InvalidReference { line })?;
                if !(r.is_finite() && r > 0.0) {
                    return Err(TouchstoneError::InvalidReference { line });
                }
                opts.reference_ohms = r;
            }
            _ => {
                return Err(TouchstoneError::UnknownOptionToken {
                    token: tok.to_string(),
                    line,
                })
            }
        }
    }
    Ok(opts)
}

struct PointAccum {
    start_line: usize,
    raw_frequency: f64,
    values: Vec<f64>,
}

/// Assemble an n-port matrix from one point's flat value list.
///
/// 2-port points use the classic single-line column order S11 S21 S12 S22;
/// every other size is row-major.
fn matrix_from_values(
    n: usize,
    values: &[f64],
    format: NumberFormat,
) -> Result<ScatteringMatrix, TouchstoneError> {
    debug_assert_eq!(values.len(), 2 * n * n);
    let entries: Vec<Complex64> = values
        .chunks_exact(2)
        .map(|pair| format.decode(pair[0], pair[1]))
        .collect();
    let at = |k: usize| entries[k];
    ScatteringMatrix::from_fn(n, |i, j| {
        if n == 2 {
            // data order: (0,0) (1,0) (0,1) (1,1)
            at(j * 2 + i)
        } else {
            at(i * n + j)
        }
    })
    .map_err(|_| TouchstoneError::BadPointShape {
        line: 0,
        found: values.len(),
    })
}

fn value_order(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n * n).map(move |k| {
        if n == 2 {
            (k % 2, k / 2)
        } else {
            (k / n, k % n)
        }
    })
}

/// Parse Touchstone v1 text. `declared_ports` (usually from the `.sNp` file
/// extension) is checked against the data when given and used to size the
/// matrix; otherwise the port count is inferred from the first point.
pub fn parse_touchstone(
    text: &str,
    declared_ports: Option<usize>,
) -> Result<TouchstoneNetwork, TouchstoneError> {
    let mut option: Option<Options> = None;
    let mut comments: Vec<String> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();
    let mut raw_points: Vec<PointAccum> = Vec::new();
    let mut current: Option<PointAccum> = None;
    let mut n_ports: Option<usize> = declared_ports;
    let mut inferred_here = false;
    let mut noise_block = false;

    // Closes `cur`, inferring the port count from the first point if needed.
    // Returns true when `cur` was instead the start of a 2-port noise block.
    fn close_point(
        cur: PointAccum,
        n_ports: &mut Option<usize>,
        declared: Option<usize>,
        inferred_here: &mut bool,
        raw_points: &mut Vec<PointAccum>,
        warnings: &mut Vec<String>,
        at_eof_or_new_point: bool,
    ) -> Result<bool, TouchstoneError> {
        match *n_ports {
            Some(n) => {
                let expected = 2 * n * n;
                if cur.values.len() != expected {
                    // A 2-port "point" of exactly two pairs is the classic
                    // 4-column noise-parameter row.
                    if n == 2 && cur.values.len() == 4 && !raw_points.is_empty() {
                        warnings.push(format!(
                            "line {}: trailing noise-parameter block skipped",
                            cur.start_line
                        ));
                        return Ok(true);
                    }
                    if declared == Some(n) && !*inferred_here && raw_points.is_empty() {
                        return Err(TouchstoneError::PortCountMismatch {
                            declared: n,
                            expected,
                            found: cur.values.len(),
                        });
                    }
                    return Err(TouchstoneError::IncompletePoint {
                        line: cur.start_line,
                        n_ports: n,
                        expected,
                        found: cur.values.len(),
                    });
                }
                let _ = at_eof_or_new_point;
                raw_points.push(cur);
                Ok(false)
            }
            None => {
                // First point: values must be 2*N^2 for a whole N.
                let pairs = cur.values.len() / 2;
                let n = (pairs as f64).sqrt().round() as usize;
                if !cur.values.len().is_multiple_of(2) || n == 0 || n * n != pairs {
                    return Err(TouchstoneError::BadPointShape {
                        line: cur.start_line,
                        found: cur.values.len(),
                    });
                }
                *n_ports = Some(n);
                *inferred_here = true;
                raw_points.push(cur);
                Ok(false)
            }
        }
    }

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let (data_part, comment_part) = match raw_line.find('!') {
            Some(pos) => (&raw_line[..pos], Some(&raw_line[pos + 1..])),
            None => (raw_line, None),
        };
        if let Some(c) = comment_part {
            let trimmed = c.trim();
            if !trimmed.is_empty() {
                comments.push(trimmed.to_string());
            }
        }
        let content = data_part.trim();
        if content.is_empty() {
            continue;
        }
        if noise_block {
            continue;
        }
        if content.starts_with('[') {
            return Err(TouchstoneError::VersionTwoUnsupported { line: line_no });
        }
        if content.starts_with('#') {
            if option.is_some() {
                return Err(TouchstoneError::DuplicateOptionLine { line: line_no });
            }
            option = Some(parse_option_line(content, line_no)?);
            continue;
        }

        let mut tokens = Vec::new();
        for tok in content.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| TouchstoneError::InvalidNumber {
                token: tok.to_string(),
                line: line_no,
            })?;
            tokens.push(v);
        }

        if tokens.len() % 2 == 1 {
            // A frequency column: starts a new point.
            if let Some(cur) = current.take() {
                if close_point(
                    cur,
                    &mut n_ports,
                    declared_ports,
                    &mut inferred_here,
                    &mut raw_points,
                    &mut warnings,
                    false,
                )? {
                    noise_block = true;
                    continue;
                }
            }
            if let (Some(2), Some(last)) = (n_ports, raw_points.last()) {
                // 2-port noise rows restart the frequency column; detect the
                // rewind before the monotonicity check condemns the file.
                if tokens[0] <= last.raw_frequency {
                    warnings.push(format!(
                        "line {line_no}: trailing noise-parameter block skipped"
                    ));
                    noise_block = true;
                    continue;
                }
            }
            if let Some(last) = raw_points.last() {
                if tokens[0] <= last.raw_frequency {
                    return Err(TouchstoneError::NonIncreasingFrequency {
                        line: line_no,
                        previous: last.raw_frequency,
                        found: tokens[0],
                    });
                }
            }
            current = Some(PointAccum {
                start_line: line_no,
                raw_frequency: tokens[0],
                values: tokens[1..].to_vec(),
            });
        } else {
            match current.as_mut() {
                Some(cur) => cur.values.extend_from_slice(&tokens),
                None => return Err(TouchstoneError::DataBeforeFrequency { line: line_no }),
            }
        }
    }
    if let Some(cur) = current.take() {
        // The returned noise flag is irrelevant at EOF; errors still propagate.
        let _ = close_point(
            cur,
            &mut n_ports,
            declared_ports,
            &mut inferred_here,
            &mut raw_points,
            &mut warnings,
            true,
        )?;
    }

    if raw_points.is_empty() {
        return Err(TouchstoneError::NoData);
    }
    let n = n_ports.expect("port count fixed by the first closed point");
    let opts = option.unwrap_or_default();

    let mut points = Vec::with_capacity(raw_points.len());
    for p in &raw_points {
        points.push(SweepPoint {
            frequency_hz: p.raw_frequency * opts.frequency_scale,
            matrix: matrix_from_values(n, &p.values, opts.format)?,
        });
    }

    let source_comment = if comments.is_empty() {
        None
    } else {
        Some(comments.join("\n"))
    };
    let mut net = TouchstoneNetwork::new(n, opts.reference_ohms, points, source_comment)?;
    net.warnings = warnings;
    Ok(net)
}

/// Serialize a network as Touchstone v1 text, frequencies in Hz.
///
/// Values use Rust's shortest-exact decimal formatting, so
/// `parse(write(net, RealImaginary))` reproduces `net` exactly. 2-port points
/// go on one line in S11 S21 S12 S22 order; larger matrices are written one
/// row per line, wrapped at four pairs.
pub fn write_touchstone(net: &TouchstoneNetwork, format: NumberFormat) -> String {
    let mut out = String::new();
    if let Some(comment) = net.source_comment() {
        for line in comment.lines() {
            writeln!(out, "! {line}").unwrap();
        }
    }
    writeln!(
        out,
        "# Hz S {} R {}",
        format.keyword(),
        net.reference_ohms()
    )
    .unwrap();
    let n = net.n_ports();
    for point in net.points() {
        let mut pairs = value_order(n).map(|(i, j)| format.encode(point.matrix.get(i, j)));
        if n <= 2 {
            write!(out, "{}", point.frequency_hz).unwrap();
            for (a, b) in &mut pairs {
                write!(out, " {a} {b}").unwrap();
            }
            writeln!(out).unwrap();
        } else {
            for row in 0..n {
                for (col_chunk, chunk) in (0..n).collect::<Vec<_>>().chunks(4).enumerate() {
                    let mut line = String::new();
                    if row == 0 && col_chunk == 0 {
                        write!(line, "{}", point.frequency_hz).unwrap();
                    }
                    for _ in chunk {
                        let (a, b) = pairs.next().expect("pair per matrix entry");
                        if line.is_empty() {
                            write!(line, "{a} {b}").unwrap();
                        } else {
                            write!(line, " {a} {b}").unwrap();
                        }
                    }
                    writeln!(out, "{line}").unwrap();
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn two_port_column_order_and_unit_scaling() {
        let text = "\
! demo file
# MHz S RI R 75
100 0.11 0 0.21 0 0.12 0 0.22 0
200 0.5 0.1 0.6 0.2 0.7 0.3 0.8 0.4
";
        let net = parse_touchstone(text, Some(2)).unwrap();
        assert_eq!(net.n_ports(), 2);
        assert_eq!(net.reference_ohms(), 75.0);
        assert_eq!(net.source_comment(), Some("demo file"));
        assert_eq!(net.points().len(), 2);
        assert_eq!(net.points()[0].frequency_hz, 100e6);
        let m = &net.points()[0].matrix;
        // Data order S11 S21 S12 S22.
        assert_eq!(m.get(0, 0), c(0.11, 0.0));
        assert_eq!(m.get(1, 0), c(0.21, 0.0));
        assert_eq!(m.get(0, 1), c(0.12, 0.0));
        assert_eq!(m.get(1, 1), c(0.22, 0.0));
    }

    #[test]
    fn defaults_apply_without_option_line() {
        let text = "2.4 0.5 45\n"; // one-port, GHz MA by default
        let net = parse_touchstone(text, None).unwrap();
        assert_eq!(net.n_ports(), 1);
        assert_eq!(net.reference_ohms(), 50.0);
        assert_eq!(net.points()[0].frequency_hz, 2.4e9);
        let v = net.points()[0].matrix.get(0, 0);
        assert!((v - Complex64::from_polar(0.5, 45f64.to_radians())).norm() < 1e-15);
    }

    #[test]
    fn db_format_decodes() {
        let text = "# Hz S DB\n1e9 -20 90\n";
        let net = parse_touchstone(text, Some(1)).unwrap();
        let v = net.points()[0].matrix.get(0, 0);
        assert!((v - c(0.0, 0.1)).norm() < 1e-15);
    }

    #[test]
    fn three_port_rows_with_continuation() {
        // Row-major rows on separate lines; second row wrapped mid-row.
        let text = "\
# Hz S RI
1e9 1 0 2 0 3 0
4 0 5 0
6 0
7 0 8 0 9 0
";
        let net = parse_touchstone(text, Some(3)).unwrap();
        let m = &net.points()[0].matrix;
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), c((i * 3 + j) as f64 + 1.0, 0.0));
            }
        }
    }

    #[test]
    fn noise_block_skipped_with_warning() {
        let text = "\
# GHz S MA R 50
1 0.9 -10 0.05 80 0.05 80 0.8 -20
2 0.8 -20 0.06 70 0.06 70 0.7 -30
1 2.5 0.4 30 0.15
2 2.9 0.5 20 0.2
";
        let net = parse_touchstone(text, Some(2)).unwrap();
        assert_eq!(net.points().len(), 2);
        assert_eq!(net.warnings().len(), 1);
        assert!(net.warnings()[0].contains("noise"));
    }

    #[test]
    fn version_two_rejected() {
        let err = parse_touchstone("[Version] 2.0\n# Hz S RI\n", None).unwrap_err();
        assert!(matches!(err, TouchstoneError::VersionTwoUnsupported { line: 1 }));
    }

    #[test]
    fn y_parameters_rejected() {
        let err = parse_touchstone("# Hz Y RI\n1e9 0.5 0\n", None).unwrap_err();
        assert!(matches!(err, TouchstoneError::UnsupportedParameter { .. }));
    }

    #[test]
    fn duplicate_option_line_rejected() {
        let err = parse_touchstone("# Hz S RI\n# GHz S MA\n1 0.5 0\n", None).unwrap_err();
        assert!(matches!(err, TouchstoneError::DuplicateOptionLine { line: 2 }));
    }

    #[test]
    fn non_increasing_frequency_rejected() {
        let err = parse_touchstone("# Hz S RI\n2e9 0.5 0\n1e9 0.4 0\n", Some(1)).unwrap_err();
        assert!(matches!(err, TouchstoneError::NonIncreasingFrequency { .. }));
    }

    #[test]
    fn declared_port_mismatch_rejected() {
        let err = parse_touchstone("# Hz S RI\n1e9 0.5 0\n", Some(2)).unwrap_err();
        assert!(matches!(
            err,
            TouchstoneError::PortCountMismatch {
                declared: 2,
                expected: 8,
                found: 2
            }
        ));
    }

    #[test]
    fn incomplete_point_rejected() {
        // Complete first point, then a second point truncated at EOF.
        let text = "\
# Hz S RI
1e9 1 0 2 0 3 0
4 0 5 0 6 0
7 0 8 0 9 0
2e9 1 0 2 0 3 0
4 0 5 0
";
        let err = parse_touchstone(text, Some(3)).unwrap_err();
        assert!(matches!(
            err,
            TouchstoneError::IncompletePoint {
                n_ports: 3,
                expected: 18,
                found: 10,
                ..
            }
        ));
    }

    #[test]
    fn truncated_first_point_against_declared_ports() {
        let text = "# Hz S RI\n1e9 1 0 2 0 3 0\n4 0 5 0\n6 0\n7 0 8 0\n2e9 0 0\n";
        let err = parse_touchstone(text, Some(3)).unwrap_err();
        assert!(matches!(err, TouchstoneError::PortCountMismatch { .. }));
    }

    #[test]
    fn extension_port_inference() {
        assert_eq!(ports_from_extension(Path::new("a/ue.s2p")), Some(2));
        assert_eq!(ports_from_extension(Path::new("b.S16P")), Some(16));
        assert_eq!(ports_from_extension(Path::new("c.snp")), None);
        assert_eq!(ports_from_extension(Path::new("d.csv")), None);
        assert_eq!(ports_from_extension(Path::new("noext")), None);
    }

    #[test]
    fn writer_round_trips_exactly_in_ri() {
        let points = vec![
            SweepPoint {
                frequency_hz: 3.1600000001e9,
                matrix: ScatteringMatrix::from_fn(2, |i, j| {
                    c(0.123456789012345 * (i as f64 + 1.0), -0.987654321 * (j as f64 - 0.5))
                })
                .unwrap(),
            },
            SweepPoint {
                frequency_hz: 3.17e9,
                matrix: ScatteringMatrix::from_fn(2, |i, j| c(1e-17 * (i + j) as f64, 0.25)).unwrap(),
            },
        ];
        let net =
            TouchstoneNetwork::new(2, 50.0, points, Some("round trip\nsecond line".into())).unwrap();
        let text = write_touchstone(&net, NumberFormat::RealImaginary);
        let back = parse_touchstone(&text, Some(2)).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn writer_round_trips_large_matrix_shape() {
        let m = ScatteringMatrix::from_fn(5, |i, j| c(0.01 * (i as f64 + 1.0), 0.02 * j as f64)).unwrap();
        let net = TouchstoneNetwork::new(
            5,
            50.0,
            vec![SweepPoint {
                frequency_hz: 1e9,
                matrix: m,
            }],
            None,
        )
        .unwrap();
        let text = write_touchstone(&net, NumberFormat::RealImaginary);
        // Five rows, rows wrapped at four pairs -> 2 lines per row.
        assert_eq!(text.lines().count(), 1 + 10);
        let back = parse_touchstone(&text, Some(5)).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn db_writer_survives_exact_zero() {
        let m = ScatteringMatrix::from_fn(1, |_, _| c(0.0, 0.0)).unwrap();
        let net = TouchstoneNetwork::new(
            1,
            50.0,
            vec![SweepPoint {
                frequency_hz: 1e9,
                matrix: m,
            }],
            None,
        )
        .unwrap();
        let text = write_touchstone(&net, NumberFormat::Db);
        let back = parse_touchstone(&text, Some(1)).unwrap();
        assert!(back.points()[0].matrix.get(0, 0).norm() < 1e-299);
    }
}
