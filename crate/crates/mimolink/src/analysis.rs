//! Ensemble reduction: per-user rates become empirical outage curves, and
//! the curves become the scalar figures of merit — diversity gain,
//! multiplexing gain — that get compared against the S-parameter-side
//! metrics (envelope correlation, port isolation) computed directly from a
//! two-port antenna measurement.
//!
//! Outage curves are stored as the raw sorted sample staircase, one point
//! per sample with `cdf = k/n`, never binned; thresholds and quantiles
//! evaluate by binary search, so every reported probability is an exact
//! count over the ensemble.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linkproc::{LinkBudget, Scheme};
use crate::multiport::ScatteringMatrix;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("outage statistics need at least one rate sample")]
    EmptySample,
    #[error("quantile {q} outside [0, 1]")]
    QuantileOutOfRange { q: f64 },
    #[error(
        "threshold {threshold_rate_bps} bits/s outside the measurable range of the {scheme} \
         curve (outage there is {outage}); {}",
        match suggested_rate_bps {
            Some(r) => format!("nearest usable threshold is {r} bits/s"),
            None => "no usable threshold exists on this curve".to_string(),
        }
    )]
    ThresholdOutsideRange {
        scheme: Scheme,
        threshold_rate_bps: f64,
        outage: f64,
        suggested_rate_bps: Option<f64>,
    },
    #[error("multiplexing fit needs >= 2 SNR points spanning >= {required_db} dB, got {points} points over {span_db} dB")]
    InsufficientSnrSpan {
        points: usize,
        span_db: f64,
        required_db: f64,
    },
    #[error("S-parameter metrics need a 2-port, got {n} ports")]
    NotTwoPort { n: usize },
    #[error("network is not passive (spectral norm {spectral_norm}); envelope correlation undefined")]
    NotPassive { spectral_norm: f64 },
    #[error("port {port} efficiency degenerate (1 - |reflections|^2 = {efficiency}); envelope correlation denominator vanishes")]
    DegeneratePortEfficiency { port: usize, efficiency: f64 },
}

/// One point of an empirical outage staircase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub rate_bps: f64,
    pub cdf: f64,
}

/// Empirical CDF of one scheme's rate over a user ensemble at one budget.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageCurve {
    scheme: Scheme,
    points: Vec<CurvePoint>,
    budget: LinkBudget,
}

/// Build the empirical outage curve `cdf(r) = #{samples <= r} / n` from raw
/// per-user rates. Order-insensitive; a single sample is allowed (one-step
/// staircase), an empty ensemble is not.
pub fn outage_cdf(
    rates_bps: &[f64],
    scheme: Scheme,
    budget: LinkBudget,
) -> Result<OutageCurve, AnalysisError> {
    if rates_bps.is_empty() {
        return Err(AnalysisError::EmptySample);
    }
    let mut sorted = rates_bps.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let points = sorted
        .iter()
        .enumerate()
        .map(|(k, &rate_bps)| CurvePoint {
            rate_bps,
            cdf: (k + 1) as f64 / n,
        })
        .collect();
    Ok(OutageCurve {
        scheme,
        points,
        budget,
    })
}

impl OutageCurve {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn budget(&self) -> &LinkBudget {
        &self.budget
    }

    pub fn n_samples(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    /// Empirical outage probability at a rate threshold:
    /// `#{samples <= rate} / n`, by binary search on the staircase.
    pub fn outage_at(&self, rate_bps: f64) -> f64 {
        let below = self
            .points
            .partition_point(|p| p.rate_bps <= rate_bps);
        below as f64 / self.points.len() as f64
    }

    /// First rate whose CDF reaches `q`. `q = 0` gives the smallest sample,
    /// `q = 1` the largest.
    pub fn rate_at_quantile(&self, q: f64) -> Result<f64, AnalysisError> {
        if !(0.0..=1.0).contains(&q) {
            return Err(AnalysisError::QuantileOutOfRange { q });
        }
        let idx = self.points.partition_point(|p| p.cdf < q);
        Ok(self.points[idx.min(self.points.len() - 1)].rate_bps)
    }

    pub fn median_rate(&self) -> f64 {
        self.rate_at_quantile(0.5).expect("0.5 is a valid quantile")
    }

    /// Nearest threshold at which this curve's outage lies strictly inside
    /// (0, 1), or `None` when no such rate exists (all samples equal).
    fn usable_threshold_near(&self, rate_bps: f64) -> Option<f64> {
        let lo = self.points.first()?.rate_bps;
        // Largest sample strictly below the maximum: outage there is k/n < 1.
        let max = self.points.last()?.rate_bps;
        let hi = self
            .points
            .iter()
            .rev()
            .map(|p| p.rate_bps)
            .find(|&r| r < max)?;
        if self.outage_at(lo) >= 1.0 {
            return None;
        }
        Some(rate_bps.clamp(lo, hi))
    }

    fn outage_strictly_inside(&self, rate_bps: f64) -> Result<f64, AnalysisError> {
        let p = self.outage_at(rate_bps);
        if p <= 0.0 || p >= 1.0 {
            return Err(AnalysisError::ThresholdOutsideRange {
                scheme: self.scheme,
                threshold_rate_bps: rate_bps,
                outage: p,
                suggested_rate_bps: self.usable_threshold_near(rate_bps),
            });
        }
        Ok(p)
    }
}

/// Diversity gain `d = log10(p_multi) / log10(p_baseline)` at a common rate
/// threshold: how many decades of outage the multi-antenna scheme buys per
/// decade of the baseline's. Both outage probabilities must lie strictly
/// inside (0, 1) — otherwise the log-ratio is meaningless and the error
/// names the offending curve and the nearest measurable threshold.
pub fn diversity_gain(
    curve_multi: &OutageCurve,
    curve_baseline: &OutageCurve,
    threshold_rate_bps: f64,
) -> Result<f64, AnalysisError> {
    let p_multi = curve_multi.outage_strictly_inside(threshold_rate_bps)?;
    let p_base = curve_baseline.outage_strictly_inside(threshold_rate_bps)?;
    Ok(p_multi.log10() / p_base.log10())
}

/// Least-squares slope of `median_rate / bandwidth` against `log2(SNR)`
/// over the supplied `(snr_db, median_rate_bps)` points: the number of
/// effective spatial streams the scheme sustains as power grows.
pub fn multiplexing_gain(
    points: &[(f64, f64)],
    bandwidth_hz: f64,
) -> Result<f64, AnalysisError> {
    const REQUIRED_SPAN_DB: f64 = 10.0;
    let span_db = points
        .iter()
        .map(|&(db, _)| db)
        .fold(f64::NEG_INFINITY, f64::max)
        - points
            .iter()
            .map(|&(db, _)| db)
            .fold(f64::INFINITY, f64::min);
    // NaN span (a NaN input point) must land in the error branch too.
    if points.len() < 2 || span_db.is_nan() || span_db < REQUIRED_SPAN_DB {
        return Err(AnalysisError::InsufficientSnrSpan {
            points: points.len(),
            span_db: if span_db.is_finite() { span_db } else { 0.0 },
            required_db: REQUIRED_SPAN_DB,
        });
    }
    // x = log2 of the linear SNR; snr_db/10 decades, log2(10) bits/decade.
    let xs: Vec<f64> = points
        .iter()
        .map(|&(db, _)| db / 10.0 * std::f64::consts::LOG2_10)
        .collect();
    let ys: Vec<f64> = points.iter().map(|&(_, r)| r / bandwidth_hz).collect();
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let var: f64 = xs.iter().map(|x| (x - x_mean) * (x - x_mean)).sum();
    Ok(cov / var)
}

/// Envelope correlation of a two-antenna system from its S-parameters:
/// `|S11* S12 + S21* S22|^2 / ((1-|S11|^2-|S21|^2)(1-|S22|^2-|S12|^2))`.
/// For any strictly passive 2-port the Gram inequality pins this to [0, 1];
/// a port whose efficiency denominator vanishes (fully reflective/coupled)
/// has no radiated field to correlate and is rejected.
pub fn ecc_from_sparams(s: &ScatteringMatrix) -> Result<f64, AnalysisError> {
    if s.dim() != 2 {
        return Err(AnalysisError::NotTwoPort { n: s.dim() });
    }
    let norm = s.spectral_norm();
    if !s.is_passive(crate::multiport::PASSIVITY_TOLERANCE) {
        return Err(AnalysisError::NotPassive {
            spectral_norm: norm,
        });
    }
    let numerator = (s.get(0, 0).conj() * s.get(0, 1) + s.get(1, 0).conj() * s.get(1, 1))
        .norm_sqr();
    let eff = [
        1.0 - s.get(0, 0).norm_sqr() - s.get(1, 0).norm_sqr(),
        1.0 - s.get(1, 1).norm_sqr() - s.get(0, 1).norm_sqr(),
    ];
    for (port, &e) in eff.iter().enumerate() {
        if e <= 0.0 {
            return Err(AnalysisError::DegeneratePortEfficiency {
                port: port + 1,
                efficiency: e,
            });
        }
    }
    Ok(numerator / (eff[0] * eff[1]))
}

/// Port-to-port isolation `20 log10 |S21|` in dB (negative infinity for a
/// perfectly isolated pair).
pub fn isolation_db(s: &ScatteringMatrix) -> Result<f64, AnalysisError> {
    if s.dim() != 2 {
        return Err(AnalysisError::NotTwoPort { n: s.dim() });
    }
    Ok(20.0 * s.get(1, 0).norm().log10())
}

/// The scalar figures a run reduces to, serialized as the gain report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    /// Outage-based diversity gain at `threshold_rate_bps`.
    pub diversity_gain: f64,
    /// Median-rate slope versus log2(SNR).
    pub multiplexing_gain: f64,
    /// Envelope correlation of the terminal antenna pair, in [0, 1].
    pub ecc: f64,
    /// Terminal port isolation, dB.
    pub isolation_db: f64,
    /// Rate threshold the diversity gain was read at, bits/s.
    pub threshold_rate_bps: f64,
    /// SNR points (dB) backing the multiplexing fit.
    pub snr_points_db: Vec<f64>,
}
