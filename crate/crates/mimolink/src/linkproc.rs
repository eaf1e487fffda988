//! Receive-scheme throughput evaluation on a single narrowband channel
//! matrix: matched-filter transmit beamforming, maximal-ratio combining,
//! linear MMSE equalization (one- and two-layer readouts), and the
//! successive-cancellation optimum, all under a shared power/bandwidth
//! budget.
//!
//! Conventions: the channel `H` maps transmit ports to receive ports
//! (`n_rx x n_tx`). Every multi-layer scheme uses the matched precoder
//! `W = H^H / ||H||_F`, i.e. the conjugate channel under a total transmit
//! power constraint. Each transmitted layer carries `signal_power_w` and the
//! noise is white per receive port, so every achievable rate here is a
//! Shannon capacity `B log2(1 + SINR)` of a scalarized channel: linear in
//! bandwidth, increasing in signal power, decreasing in noise power.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::multiport::ChannelMatrix;

#[derive(Debug, Error)]
pub enum LinkError {
    #[error("link budget field {field} must be strictly positive, got {value}")]
    BadBudget { field: &'static str, value: f64 },
    #[error("{context} expects a {expected} channel, got {n_rx}x{n_tx}")]
    WrongShape {
        context: &'static str,
        expected: &'static str,
        n_rx: usize,
        n_tx: usize,
    },
    #[error("channel matrix is identically zero; matched precoder is undefined")]
    ZeroChannel,
    #[error("beamforming target row {row} of the channel is zero")]
    ZeroTargetRow { row: usize },
    #[error("receive covariance is singular (noise power underflowed?)")]
    SingularCovariance,
}

/// Bandwidth and the two power levels every rate formula shares. All watts
/// and hertz, all strictly positive; dBm conversion belongs to the caller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    bandwidth_hz: f64,
    signal_power_w: f64,
    noise_power_w: f64,
}

impl LinkBudget {
    pub fn new(
        bandwidth_hz: f64,
        signal_power_w: f64,
        noise_power_w: f64,
    ) -> Result<Self, LinkError> {
        for (field, value) in [
            ("bandwidth_hz", bandwidth_hz),
            ("signal_power_w", signal_power_w),
            ("noise_power_w", noise_power_w),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(LinkError::BadBudget { field, value });
            }
        }
        Ok(Self {
            bandwidth_hz,
            signal_power_w,
            noise_power_w,
        })
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    pub fn signal_power_w(&self) -> f64 {
        self.signal_power_w
    }

    pub fn noise_power_w(&self) -> f64 {
        self.noise_power_w
    }

    /// Per-layer transmit SNR `P_x / P_n`.
    pub fn snr(&self) -> f64 {
        self.signal_power_w / self.noise_power_w
    }
}

/// The five receive/transmit processing schemes the tool evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Single receive port, matched transmit beamforming.
    Miso1x1,
    /// Two receive ports, beamform toward one row, combine both.
    Mrc2x1,
    /// LMMSE equalizer, both layer outputs combined into one stream.
    LmmseOneLayer,
    /// LMMSE equalizer, two independent streams.
    LmmseTwoLayer,
    /// Mutual-information bound of the matched-precoded channel.
    Optimal,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Miso1x1,
        Scheme::Mrc2x1,
        Scheme::LmmseOneLayer,
        Scheme::LmmseTwoLayer,
        Scheme::Optimal,
    ];

    /// Stable name used in config files, CSV rows, and reports.
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Miso1x1 => "miso-1x1",
            Scheme::Mrc2x1 => "mrc-2x1",
            Scheme::LmmseOneLayer => "lmmse-1layer",
            Scheme::LmmseTwoLayer => "lmmse-2layer",
            Scheme::Optimal => "optimal",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|scheme| scheme.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Scheme::ALL.iter().map(|s| s.as_str()).collect();
                format!("unknown scheme {s:?}; expected one of {}", names.join(", "))
            })
    }
}

/// One scheme's throughput on one channel instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    pub scheme: Scheme,
    /// Total achievable rate, bits/s.
    pub rate_bps: f64,
    /// Per-layer rates for multi-layer schemes; they sum to `rate_bps`.
    pub per_layer_bps: Option<Vec<f64>>,
    /// Post-processing SINR of each decoded stream, dimensionless.
    pub effective_sinr: Option<Vec<f64>>,
    /// Set when the input channel carried no usable signal (rate pinned to
    /// zero rather than erroring, so ensemble sweeps don't abort on one
    /// dead placement).
    pub degenerate: bool,
}

/// Which channel row the MRC beamformer is matched to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamTarget {
    Row1,
    Row2,
}

impl BeamTarget {
    fn index(self) -> usize {
        match self {
            BeamTarget::Row1 => 0,
            BeamTarget::Row2 => 1,
        }
    }
}

/// Scalar equivalent channels after LMMSE equalization of a two-layer
/// transmission: per-layer gain `h_tilde` (real, in `[0, 1)`) and residual
/// error power (cross-layer interference plus filtered noise), in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmmseStats {
    pub h_tilde: [f64; 2],
    pub error_power_w: [f64; 2],
}

impl LmmseStats {
    /// Post-equalization SINR of each layer, `h_tilde^2 P_x / P_e`. A dead
    /// layer (zero gain, zero error power) reads as SINR 0 — the correct
    /// limit as its channel column vanishes.
    pub fn layer_sinr(&self, signal_power_w: f64) -> [f64; 2] {
        std::array::from_fn(|i| {
            let signal = self.h_tilde[i] * self.h_tilde[i] * signal_power_w;
            if self.error_power_w[i] > 0.0 {
                signal / self.error_power_w[i]
            } else {
                0.0
            }
        })
    }
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// Matched precoder `W = H^H / ||H||_F` (`n_tx x n_rx`, unit Frobenius norm).
fn matched_precoder(h: &ChannelMatrix) -> Result<DMatrix<Complex64>, LinkError> {
    let fro = h.frobenius_norm();
    if fro == 0.0 {
        return Err(LinkError::ZeroChannel);
    }
    Ok(h.entries().adjoint() / Complex64::new(fro, 0.0))
}

/// Single receive port with matched transmit beamforming: the beamformer
/// realizes the full array gain, so `R = B log2(1 + ||h||^2 P_x / P_n)`.
/// A zero channel is not an error here — it yields rate 0 with the
/// `degenerate` flag set.
pub fn rate_miso_1x1(h: &ChannelMatrix, lb: &LinkBudget) -> Result<RateResult, LinkError> {
    if h.n_rx() != 1 {
        return Err(LinkError::WrongShape {
            context: "rate_miso_1x1",
            expected: "1 x n_tx",
            n_rx: h.n_rx(),
            n_tx: h.n_tx(),
        });
    }
    let gain = h.frobenius_norm().powi(2);
    if gain == 0.0 {
        return Ok(RateResult {
            scheme: Scheme::Miso1x1,
            rate_bps: 0.0,
            per_layer_bps: None,
            effective_sinr: Some(vec![0.0]),
            degenerate: true,
        });
    }
    let sinr = gain * lb.snr();
    Ok(RateResult {
        scheme: Scheme::Miso1x1,
        rate_bps: lb.bandwidth_hz() * log2_1p(sinr),
        per_layer_bps: None,
        effective_sinr: Some(vec![sinr]),
        degenerate: false,
    })
}

/// Two receive ports, transmit beam matched to the target row, both ports
/// combined with maximal-ratio weights: the target row contributes its full
/// `||h_t||^2` array gain and the other row whatever the beam leaks into it,
/// so `R = B log2(1 + (||h_t||^2 + |h_o w|^2) P_x / P_n)`.
pub fn rate_mrc_2x1(
    h: &ChannelMatrix,
    beam_target: BeamTarget,
    lb: &LinkBudget,
) -> Result<RateResult, LinkError> {
    if h.n_rx() != 2 {
        return Err(LinkError::WrongShape {
            context: "rate_mrc_2x1",
            expected: "2 x n_tx",
            n_rx: h.n_rx(),
            n_tx: h.n_tx(),
        });
    }
    let target = beam_target.index();
    let other = 1 - target;
    let target_gain = h.row(target).frobenius_norm().powi(2);
    if target_gain == 0.0 {
        return Err(LinkError::ZeroTargetRow { row: target });
    }
    // w = h_t^H / ||h_t||; the target branch sees exactly ||h_t||^2 (computed
    // directly so the reduction to the single-port rate is float-exact), the
    // other branch |h_o w|^2.
    let norm = target_gain.sqrt();
    let leak: Complex64 = (0..h.n_tx())
        .map(|j| h.get(other, j) * h.get(target, j).conj())
        .sum();
    let other_gain = (leak / Complex64::new(norm, 0.0)).norm_sqr();
    let sinr = (target_gain + other_gain) * lb.snr();
    Ok(RateResult {
        scheme: Scheme::Mrc2x1,
        rate_bps: lb.bandwidth_hz() * log2_1p(sinr),
        per_layer_bps: None,
        effective_sinr: Some(vec![sinr]),
        degenerate: false,
    })
}

/// LMMSE equalization of the two-layer matched-precoded channel.
///
/// Forms the effective channel `G = H W`, the LMMSE filter
/// `L = P_x G^H (P_x G G^H + P_n I)^{-1}`, and reads off per-layer gains
/// `h_tilde_i = (LG)_ii` plus error powers
/// `P_e_i = sum_{j != i} |(LG)_ij|^2 P_x + (L L^H)_ii P_n`
/// (cross-layer interference plus filtered noise).
pub fn lmmse_equalize(h: &ChannelMatrix, lb: &LinkBudget) -> Result<LmmseStats, LinkError> {
    if h.n_rx() != 2 {
        return Err(LinkError::WrongShape {
            context: "lmmse_equalize",
            expected: "2 x n_tx",
            n_rx: h.n_rx(),
            n_tx: h.n_tx(),
        });
    }
    let w = matched_precoder(h)?;
    let g = h.entries() * w;
    let px = Complex64::new(lb.signal_power_w(), 0.0);
    let pn = Complex64::new(lb.noise_power_w(), 0.0);
    let cov = &g * g.adjoint() * px + DMatrix::identity(2, 2) * pn;
    // cov is Hermitian and >= P_n I, so the solve cannot fail in exact
    // arithmetic; L^H = cov^{-1} G P_x.
    let l_adjoint = cov
        .lu()
        .solve(&(&g * px))
        .ok_or(LinkError::SingularCovariance)?;
    let l = l_adjoint.adjoint();
    let lg = &l * &g;
    let llh = &l * l.adjoint();
    let h_tilde = std::array::from_fn(|i| {
        debug_assert!(lg[(i, i)].im.abs() < 1e-9, "LG diagonal must be real");
        lg[(i, i)].re
    });
    let error_power_w = std::array::from_fn(|i| {
        let interference: f64 = (0..2)
            .filter(|&j| j != i)
            .map(|j| lg[(i, j)].norm_sqr() * lb.signal_power_w())
            .sum();
        interference + llh[(i, i)].re * lb.noise_power_w()
    });
    Ok(LmmseStats {
        h_tilde,
        error_power_w,
    })
}

/// Two independent LMMSE-equalized streams: `R = sum_i B log2(1 + SINR_i)`.
pub fn rate_lmmse_two_layer(h: &ChannelMatrix, lb: &LinkBudget) -> Result<RateResult, LinkError> {
    let stats = lmmse_equalize(h, lb)?;
    let sinr = stats.layer_sinr(lb.signal_power_w());
    let per_layer: Vec<f64> = sinr
        .iter()
        .map(|&s| lb.bandwidth_hz() * log2_1p(s))
        .collect();
    Ok(RateResult {
        scheme: Scheme::LmmseTwoLayer,
        rate_bps: per_layer.iter().sum(),
        per_layer_bps: Some(per_layer),
        effective_sinr: Some(sinr.to_vec()),
        degenerate: false,
    })
}

/// Both equalized layers carry the same stream and are recombined with
/// maximal-ratio weights on their scalar equivalent channels:
/// `R = B log2(1 + (h1^2 + h2^2)^2 P_x / (h1^2 P_e1 + h2^2 P_e2))`.
/// When one layer is dead its gain and error power are both zero, so the
/// formula collapses to the surviving layer's scalar capacity.
pub fn rate_lmmse_one_layer(h: &ChannelMatrix, lb: &LinkBudget) -> Result<RateResult, LinkError> {
    let stats = lmmse_equalize(h, lb)?;
    let [h1, h2] = stats.h_tilde;
    let [e1, e2] = stats.error_power_w;
    let combined_gain = h1 * h1 + h2 * h2;
    let denom = h1 * h1 * e1 + h2 * h2 * e2;
    let sinr = if denom > 0.0 {
        combined_gain * combined_gain * lb.signal_power_w() / denom
    } else {
        0.0
    };
    Ok(RateResult {
        scheme: Scheme::LmmseOneLayer,
        rate_bps: lb.bandwidth_hz() * log2_1p(sinr),
        per_layer_bps: None,
        effective_sinr: Some(vec![sinr]),
        degenerate: denom <= 0.0,
    })
}

/// Mutual-information bound of the matched-precoded channel,
/// `R = B log2 det(I + (P_x/P_n) G^H G)` with `G = H W`, evaluated through
/// the (real, nonnegative) eigenvalues of the Hermitian Gram matrix. The
/// per-layer breakdown is the successive-cancellation chain rule: layer `k`
/// is decoded treating layers `> k` as colored interference,
/// `SINR_k = P_x g_k^H (P_x sum_{j>k} g_j g_j^H + P_n I)^{-1} g_k`,
/// and those per-layer capacities sum back to the log-det value.
pub fn rate_optimal(h: &ChannelMatrix, lb: &LinkBudget) -> Result<RateResult, LinkError> {
    let w = matched_precoder(h)?;
    let g = h.entries() * w;
    let layers = g.ncols();
    let gram = g.adjoint() * &g;
    let rho = lb.snr();
    let rate_bps: f64 = gram
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|&lambda| lb.bandwidth_hz() * log2_1p(rho * lambda.max(0.0)))
        .sum();

    let px = Complex64::new(lb.signal_power_w(), 0.0);
    let mut per_layer = Vec::with_capacity(layers);
    let mut sinrs = Vec::with_capacity(layers);
    for k in 0..layers {
        let mut cov =
            DMatrix::<Complex64>::identity(g.nrows(), g.nrows())
                * Complex64::new(lb.noise_power_w(), 0.0);
        for j in (k + 1)..layers {
            let gj = g.column(j);
            for r in 0..g.nrows() {
                for c in 0..g.nrows() {
                    cov[(r, c)] += px * gj[r] * gj[c].conj();
                }
            }
        }
        let gk: DVector<Complex64> = g.column(k).into_owned();
        let x = cov
            .lu()
            .solve(&gk)
            .ok_or(LinkError::SingularCovariance)?;
        let sinr = (lb.signal_power_w() * gk.dotc(&x).re).max(0.0);
        per_layer.push(lb.bandwidth_hz() * log2_1p(sinr));
        sinrs.push(sinr);
    }
    Ok(RateResult {
        scheme: Scheme::Optimal,
        rate_bps,
        per_layer_bps: Some(per_layer),
        effective_sinr: Some(sinrs),
        degenerate: false,
    })
}

/// Evaluate one named scheme on a full `n_rx x n_tx` channel. The 1x1 scheme
/// reads the first receive port; the MRC beam is matched to the first row.
pub fn evaluate_scheme(
    scheme: Scheme,
    h: &ChannelMatrix,
    lb: &LinkBudget,
) -> Result<RateResult, LinkError> {
    match scheme {
        Scheme::Miso1x1 => rate_miso_1x1(&h.row(0), lb),
        Scheme::Mrc2x1 => rate_mrc_2x1(h, BeamTarget::Row1, lb),
        Scheme::LmmseOneLayer => rate_lmmse_one_layer(h, lb),
        Scheme::LmmseTwoLayer => rate_lmmse_two_layer(h, lb),
        Scheme::Optimal => rate_optimal(h, lb),
    }
}
