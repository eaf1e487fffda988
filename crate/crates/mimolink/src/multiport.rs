//! Dense complex scattering-parameter algebra for cascading antenna networks
//! with a propagation channel.
//!
//! The core operation is [`cascade_channel`]: given the transmit-side antenna
//! network `S_T`, the receive-side antenna network `S_R`, the transmission
//! block `S_RT` of the joint scene, and source/load termination networks
//! `S_S`/`S_L`, it forms the end-to-end voltage transfer matrix
//!
//! ```text
//! H = (I + S_L) (I - S_R S_L)^-1  S_RT  (I - S_S S_T)^-1 (I - S_S)
//! ```
//!
//! With reference (reflectionless, 50 Ω) terminations `S_S = S_L = 0` this
//! collapses to `H = S_RT`. The inverses are taken by LU with partial
//! pivoting; both cascade factors are guarded by a condition-number estimate
//! so that a near-singular matching-network resonance surfaces as a typed
//! error instead of a silently garbage channel.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::touchstone::TouchstoneNetwork;

/// Tolerance on the spectral norm when classifying a network as passive.
/// Allows lossless networks (norm exactly 1) through under rounding.
pub const PASSIVITY_TOLERANCE: f64 = 1e-9;

/// Condition-number ceiling for the cascade factors `(I - S_R S_L)` and
/// `(I - S_S S_T)`. Beyond this the inversion result carries no trustworthy
/// digits in f64 and the cascade is rejected as resonant.
pub const RESONANCE_CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Error)]
pub enum MultiportError {
    #[error("matrix must be square and non-empty, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains a non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },
    #[error("{context}: expected {expected} ports, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error(
        "termination network is not passive (spectral norm {spectral_norm:.6} > 1 + {PASSIVITY_TOLERANCE:e})"
    )]
    NotPassive { spectral_norm: f64 },
    #[error(
        "matching-network resonance: cascade factor {factor} is numerically singular \
         (condition number {condition:.3e} exceeds {RESONANCE_CONDITION_LIMIT:e})"
    )]
    Resonance { factor: &'static str, condition: f64 },
    #[error(
        "frequency {requested_hz} Hz outside the tabulated sweep [{min_hz}, {max_hz}] Hz; \
         refusing to extrapolate"
    )]
    FrequencyOutOfRange {
        requested_hz: f64,
        min_hz: f64,
        max_hz: f64,
    },
    #[error("network sweep has no frequency points")]
    EmptySweep,
}

fn check_finite(m: &DMatrix<Complex64>) -> Result<(), MultiportError> {
    for row in 0..m.nrows() {
        for col in 0..m.ncols() {
            let v = m[(row, col)];
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(MultiportError::NonFinite { row, col });
            }
        }
    }
    Ok(())
}

/// A square complex scattering matrix at a single frequency.
///
/// Invariants enforced at construction: square, at least 1x1, all entries
/// finite. Passivity is *not* an invariant (mismatched and even active
/// networks are representable); it is a queryable property.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    entries: DMatrix<Complex64>,
}

impl ScatteringMatrix {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self, MultiportError> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(MultiportError::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        check_finite(&entries)?;
        Ok(Self { entries })
    }

    /// The all-zero (reflectionless, perfectly matched) n-port.
    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "port count must be positive");
        Self {
            entries: DMatrix::zeros(n, n),
        }
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> Complex64) -> Result<Self, MultiportError> {
        Self::new(DMatrix::from_fn(n, n, f))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    /// Largest singular value. For a passive network this is at most 1.
    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(&self.entries)
    }

    /// Passivity as an energy statement: no excitation may reflect more
    /// power than it carries, i.e. `sigma_max(S) <= 1` up to `tol`.
    pub fn is_passive(&self, tol: f64) -> bool {
        self.spectral_norm() <= 1.0 + tol
    }
}

/// A voltage transfer matrix (`n_rx` x `n_tx`) at a single frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    entries: DMatrix<Complex64>,
    frequency_hz: f64,
}

impl ChannelMatrix {
    pub fn new(entries: DMatrix<Complex64>, frequency_hz: f64) -> Result<Self, MultiportError> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(MultiportError::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        check_finite(&entries)?;
        Ok(Self {
            entries,
            frequency_hz,
        })
    }

    pub fn n_rx(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.entries.ncols()
    }

    pub fn frequency_hz(&self) -> f64 {
        self.frequency_hz
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    /// `sqrt(sum |h_ij|^2)` — the aggregate voltage-gain scale of the channel.
    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(&self.entries)
    }

    /// Row `i` as a 1 x n_tx channel (e.g. the link seen by one receive port).
    pub fn row(&self, i: usize) -> ChannelMatrix {
        ChannelMatrix {
            entries: DMatrix::from_fn(1, self.n_tx(), |_, j| self.entries[(i, j)]),
            frequency_hz: self.frequency_hz,
        }
    }
}

/// Frobenius norm of a complex matrix.
pub fn frobenius_norm(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Spectral norm (largest singular value) of a complex matrix.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0f64, f64::max)
}

/// Ratio of extreme singular values; `f64::INFINITY` for a singular matrix.
pub fn condition_number(m: &DMatrix<Complex64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0f64, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Source- and load-side termination networks seen by the antenna arrays.
///
/// Both must be passive: an active termination would let the cascade create
/// energy and invalidates every downstream rate figure.
#[derive(Debug, Clone)]
pub struct TerminationSet {
    source: ScatteringMatrix,
    load: ScatteringMatrix,
}

impl TerminationSet {
    pub fn new(source: ScatteringMatrix, load: ScatteringMatrix) -> Result<Self, MultiportError> {
        for s in [&source, &load] {
            let norm = s.spectral_norm();
            if norm > 1.0 + PASSIVITY_TOLERANCE {
                return Err(MultiportError::NotPassive {
                    spectral_norm: norm,
                });
            }
        }
        Ok(Self { source, load })
    }

    /// Reference terminations: every port sees exactly the reference
    /// impedance, so nothing reflects (`S_S = S_L = 0`).
    pub fn matched(n_tx: usize, n_rx: usize) -> Self {
        Self {
            source: ScatteringMatrix::zeros(n_tx),
            load: ScatteringMatrix::zeros(n_rx),
        }
    }

    pub fn source(&self) -> &ScatteringMatrix {
        &self.source
    }

    pub fn load(&self) -> &ScatteringMatrix {
        &self.load
    }
}

/// End-to-end cascade of source, transmit array, propagation, receive array
/// and load:
///
/// `H = (I + S_L)(I - S_R S_L)^-1 S_RT (I - S_S S_T)^-1 (I - S_S)`
///
/// - `s_t`: transmit-side antenna network (`n_tx` ports),
/// - `s_r`: receive-side antenna network (`n_rx` ports),
/// - `s_rt`: transmission block from transmit ports to receive ports,
/// - `terminations`: source (`n_tx`) and load (`n_rx`) networks.
///
/// `H` is linear in `s_rt`, equals `s_rt` under matched terminations, and
/// carries `s_rt`'s frequency. Errors if either cascade factor is closer to
/// singular than [`RESONANCE_CONDITION_LIMIT`] allows.
pub fn cascade_channel(
    s_t: &ScatteringMatrix,
    s_r: &ScatteringMatrix,
    s_rt: &ChannelMatrix,
    terminations: &TerminationSet,
) -> Result<ChannelMatrix, MultiportError> {
    let n_tx = s_rt.n_tx();
    let n_rx = s_rt.n_rx();
    if s_t.dim() != n_tx {
        return Err(MultiportError::DimensionMismatch {
            context: "transmit antenna network",
            expected: n_tx,
            found: s_t.dim(),
        });
    }
    if s_r.dim() != n_rx {
        return Err(MultiportError::DimensionMismatch {
            context: "receive antenna network",
            expected: n_rx,
            found: s_r.dim(),
        });
    }
    if terminations.source.dim() != n_tx {
        return Err(MultiportError::DimensionMismatch {
            context: "source termination",
            expected: n_tx,
            found: terminations.source.dim(),
        });
    }
    if terminations.load.dim() != n_rx {
        return Err(MultiportError::DimensionMismatch {
            context: "load termination",
            expected: n_rx,
            found: terminations.load.dim(),
        });
    }

    let s_s = terminations.source.entries();
    let s_l = terminations.load.entries();
    let i_rx = DMatrix::<Complex64>::identity(n_rx, n_rx);
    let i_tx = DMatrix::<Complex64>::identity(n_tx, n_tx);

    // Receive-side factor: (I - S_R S_L).
    let a = &i_rx - s_r.entries() * s_l;
    let cond_a = condition_number(&a);
    if !cond_a.is_finite() || cond_a > RESONANCE_CONDITION_LIMIT {
        return Err(MultiportError::Resonance {
            factor: "(I - S_R S_L)",
            condition: cond_a,
        });
    }
    // Transmit-side factor: (I - S_S S_T).
    let b = &i_tx - s_s * s_t.entries();
    let cond_b = condition_number(&b);
    if !cond_b.is_finite() || cond_b > RESONANCE_CONDITION_LIMIT {
        return Err(MultiportError::Resonance {
            factor: "(I - S_S S_T)",
            condition: cond_b,
        });
    }

    let x = a
        .lu()
        .solve(s_rt.entries())
        .ok_or(MultiportError::Resonance {
            factor: "(I - S_R S_L)",
            condition: cond_a,
        })?;
    let z = b
        .lu()
        .solve(&(&i_tx - s_s))
        .ok_or(MultiportError::Resonance {
            factor: "(I - S_S S_T)",
            condition: cond_b,
        })?;

    let h = (i_rx + s_l) * x * z;
    ChannelMatrix::new(h, s_rt.frequency_hz())
}

/// Linear interpolation of a tabulated network sweep at `frequency_hz`.
///
/// Entries are interpolated independently in rectangular (re/im) parts
/// between the two bracketing sweep points; a frequency exactly on the grid
/// reproduces that point bit-for-bit. Requests outside the sweep are refused
/// rather than extrapolated.
pub fn interpolate_network(
    net: &TouchstoneNetwork,
    frequency_hz: f64,
) -> Result<ScatteringMatrix, MultiportError> {
    let points = net.points();
    if points.is_empty() {
        return Err(MultiportError::EmptySweep);
    }
    let min = points.first().unwrap().frequency_hz;
    let max = points.last().unwrap().frequency_hz;
    if frequency_hz < min || frequency_hz > max {
        return Err(MultiportError::FrequencyOutOfRange {
            requested_hz: frequency_hz,
            min_hz: min,
            max_hz: max,
        });
    }
    // Exact grid hit (including the single-point sweep) returns the tabulated
    // matrix unchanged.
    if let Some(p) = points.iter().find(|p| p.frequency_hz == frequency_hz) {
        return Ok(p.matrix.clone());
    }
    let hi = points
        .iter()
        .position(|p| p.frequency_hz > frequency_hz)
        .expect("bracketing point exists: frequency is strictly inside the sweep");
    let lo = hi - 1;
    let (f0, f1) = (points[lo].frequency_hz, points[hi].frequency_hz);
    let t = (frequency_hz - f0) / (f1 - f0);
    let m0 = points[lo].matrix.entries();
    let m1 = points[hi].matrix.entries();
    let n = m0.nrows();
    ScatteringMatrix::new(DMatrix::from_fn(n, n, |i, j| {
        let a = m0[(i, j)];
        let b = m1[(i, j)];
        a + (b - a) * Complex64::new(t, 0.0)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::touchstone::{SweepPoint, TouchstoneNetwork};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn srt_2x4() -> ChannelMatrix {
        let m = DMatrix::from_fn(2, 4, |i, j| c(0.1 * (i as f64 + 1.0), 0.05 * j as f64));
        ChannelMatrix::new(m, 3.16e9).unwrap()
    }

    #[test]
    fn matched_terminations_pass_srt_through() {
        let srt = srt_2x4();
        let h = cascade_channel(
            &ScatteringMatrix::zeros(4),
            &ScatteringMatrix::zeros(2),
            &srt,
            &TerminationSet::matched(4, 2),
        )
        .unwrap();
        assert_eq!(h.entries(), srt.entries());
        assert_eq!(h.frequency_hz(), 3.16e9);
    }

    #[test]
    fn uniform_load_reflection_scales_by_one_plus_gamma() {
        // S_S = 0, S_R = 0, S_L = 0.5 I  =>  H = (I + S_L) S_RT = 1.5 S_RT.
        let srt = srt_2x4();
        let s_l = ScatteringMatrix::from_fn(2, |i, j| if i == j { c(0.5, 0.0) } else { c(0.0, 0.0) })
            .unwrap();
        let term = TerminationSet::new(ScatteringMatrix::zeros(4), s_l).unwrap();
        let h = cascade_channel(
            &ScatteringMatrix::zeros(4),
            &ScatteringMatrix::zeros(2),
            &srt,
            &term,
        )
        .unwrap();
        for i in 0..2 {
            for j in 0..4 {
                let expect = srt.get(i, j) * 1.5;
                assert!((h.get(i, j) - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn cascade_is_linear_in_srt() {
        let s_t = ScatteringMatrix::from_fn(4, |i, j| {
            c(0.05 * ((i * 4 + j) as f64).sin(), 0.04 * ((i + 2 * j) as f64).cos())
        })
        .unwrap();
        let s_r =
            ScatteringMatrix::from_fn(2, |i, j| c(0.1 * (i as f64 - j as f64), 0.02)).unwrap();
        let s_s = ScatteringMatrix::from_fn(4, |i, j| if i == j { c(0.2, 0.1) } else { c(0.0, 0.0) })
            .unwrap();
        let s_l = ScatteringMatrix::from_fn(2, |i, j| if i == j { c(-0.3, 0.05) } else { c(0.0, 0.0) })
            .unwrap();
        let term = TerminationSet::new(s_s, s_l).unwrap();

        let srt = srt_2x4();
        let scaled = ChannelMatrix::new(srt.entries() * c(2.0, -1.0), srt.frequency_hz()).unwrap();
        let h1 = cascade_channel(&s_t, &s_r, &srt, &term).unwrap();
        let h2 = cascade_channel(&s_t, &s_r, &scaled, &term).unwrap();
        for i in 0..2 {
            for j in 0..4 {
                assert!((h2.get(i, j) - h1.get(i, j) * c(2.0, -1.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn unit_reflections_resonate() {
        // S_R = S_L = I makes (I - S_R S_L) exactly singular: both networks are
        // lossless total reflectors and the loop rings forever.
        let eye = ScatteringMatrix::from_fn(2, |i, j| {
            if i == j {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
        .unwrap();
        let term = TerminationSet::new(ScatteringMatrix::zeros(4), eye.clone()).unwrap();
        let err = cascade_channel(&ScatteringMatrix::zeros(4), &eye, &srt_2x4(), &term).unwrap_err();
        match err {
            MultiportError::Resonance { condition, .. } => {
                assert!(!condition.is_finite() || condition > RESONANCE_CONDITION_LIMIT)
            }
            other => panic!("expected resonance, got {other:?}"),
        }
    }

    #[test]
    fn active_termination_rejected() {
        let hot = ScatteringMatrix::from_fn(2, |i, j| {
            if i == j {
                c(1.1, 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
        .unwrap();
        assert!(matches!(
            TerminationSet::new(ScatteringMatrix::zeros(2), hot),
            Err(MultiportError::NotPassive { .. })
        ));
    }

    #[test]
    fn dimension_mismatch_reported() {
        let srt = srt_2x4();
        let err = cascade_channel(
            &ScatteringMatrix::zeros(3),
            &ScatteringMatrix::zeros(2),
            &srt,
            &TerminationSet::matched(4, 2),
        )
        .unwrap_err();
        assert!(matches!(err, MultiportError::DimensionMismatch { .. }));
    }

    #[test]
    fn frobenius_norm_examples() {
        let m = DMatrix::from_row_slice(1, 2, &[c(3.0, 0.0), c(0.0, 4.0)]);
        assert!((frobenius_norm(&m) - 5.0).abs() < 1e-15);
        let z = DMatrix::<Complex64>::zeros(3, 3);
        assert_eq!(frobenius_norm(&z), 0.0);
    }

    #[test]
    fn spectral_norm_flags_passivity() {
        let s = ScatteringMatrix::from_fn(2, |i, j| {
            if i == j {
                c(0.9, 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
        .unwrap();
        assert!(s.is_passive(PASSIVITY_TOLERANCE));
        let gain = ScatteringMatrix::from_fn(2, |_, _| c(0.8, 0.0)).unwrap();
        // Rank-one all-0.8 matrix has spectral norm 1.6.
        assert!((gain.spectral_norm() - 1.6).abs() < 1e-12);
        assert!(!gain.is_passive(PASSIVITY_TOLERANCE));
    }

    fn sweep(points: Vec<(f64, ScatteringMatrix)>) -> TouchstoneNetwork {
        TouchstoneNetwork::new(
            2,
            50.0,
            points
                .into_iter()
                .map(|(frequency_hz, matrix)| SweepPoint {
                    frequency_hz,
                    matrix,
                })
                .collect(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn interpolation_exact_on_grid_and_linear_between() {
        let m0 = ScatteringMatrix::from_fn(2, |i, j| c((i + j) as f64, 1.0)).unwrap();
        let m1 = ScatteringMatrix::from_fn(2, |i, j| c((i + j) as f64 + 2.0, 3.0)).unwrap();
        let net = sweep(vec![(1.0e9, m0.clone()), (2.0e9, m1.clone())]);

        let at0 = interpolate_network(&net, 1.0e9).unwrap();
        assert_eq!(at0.entries(), m0.entries());

        let mid = interpolate_network(&net, 1.5e9).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect = (m0.get(i, j) + m1.get(i, j)) * c(0.5, 0.0);
                assert!((mid.get(i, j) - expect).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn interpolation_refuses_extrapolation() {
        let m0 = ScatteringMatrix::zeros(2);
        let net = sweep(vec![(1.0e9, m0.clone()), (2.0e9, m0)]);
        assert!(matches!(
            interpolate_network(&net, 2.5e9),
            Err(MultiportError::FrequencyOutOfRange { .. })
        ));
        assert!(matches!(
            interpolate_network(&net, 0.5e9),
            Err(MultiportError::FrequencyOutOfRange { .. })
        ));
    }
}
