//! Deterministic specular ray tracing by the method of images, up to two
//! bounces, with full polarization bookkeeping.
//!
//! For every path the tracer records the geometry (bounce points, total
//! length, delay) and a cartesian 3x3 transfer operator that maps the
//! transverse field radiated at the departure direction to the transverse
//! field arriving at the receiver. The operator folds in:
//!
//! - free-space spreading `1 / (4 pi d_total)` over the unfolded length,
//! - one Fresnel reflection per bounce, resolved in that bounce's s/p frame,
//! - the plane rotations between consecutive incidence frames.
//!
//! It deliberately excludes the carrier phase `e^{-j 2 pi f d / c}`; that
//! factor is applied when a path is evaluated at a frequency, keeping the
//! operator smooth across the band.
//!
//! Reversing a path transposes its operator (each bounce operator transposes
//! and the product order flips), which is what makes assembled channels obey
//! reciprocity exactly; the conformance tests lean on this.

use nalgebra::Matrix3;
use num_complex::Complex64;
use thiserror::Error;

use super::elements::{complex_vec, transverse_frame};
use super::fresnel::reflection_coefficients;
use super::geometry::{Facet, Vec3, GEOM_EPS};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Relative parameter margin for segment intersections: crossings within this
/// fraction of either endpoint do not count (a leg that starts on its own
/// facet is not blocked by it).
const T_MARGIN: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("at most {max} bounces are supported, got {requested}")]
    TooManyBounces { max: usize, requested: usize },
    #[error("transmit and receive points coincide")]
    CoincidentEndpoints,
}

/// A static collection of facets plus the bounce budget.
#[derive(Debug, Clone)]
pub struct Scene {
    facets: Vec<Facet>,
    max_bounces: usize,
}

pub const MAX_SUPPORTED_BOUNCES: usize = 2;

impl Scene {
    pub fn new(facets: Vec<Facet>, max_bounces: usize) -> Result<Self, TraceError> {
        if max_bounces > MAX_SUPPORTED_BOUNCES {
            return Err(TraceError::TooManyBounces {
                max: MAX_SUPPORTED_BOUNCES,
                requested: max_bounces,
            });
        }
        Ok(Self {
            facets,
            max_bounces,
        })
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn max_bounces(&self) -> usize {
        self.max_bounces
    }

    /// True when the open segment `a..b` crosses any facet strictly between
    /// its endpoints.
    pub fn blocked(&self, a: Vec3, b: Vec3) -> bool {
        self.facets
            .iter()
            .any(|f| f.intersect_segment(a, b, T_MARGIN).is_some())
    }
}

/// One specular path from a transmit point to a receive point.
#[derive(Debug, Clone)]
pub struct TracedPath {
    /// Transmit point, bounce points in order, receive point.
    pub points: Vec<Vec3>,
    /// Scene indices of the facets bounced off, in order.
    pub facet_indices: Vec<usize>,
    /// Unfolded path length, m.
    pub distance_m: f64,
    /// `distance_m / c`, s.
    pub delay_s: f64,
    /// Unit direction of travel leaving the transmit point.
    pub departure: Vec3,
    /// Unit direction of travel arriving at the receive point.
    pub arrival: Vec3,
    /// Cartesian field transfer (spreading + reflections, no carrier phase).
    pub transfer: Matrix3<Complex64>,
}

impl TracedPath {
    pub fn bounce_count(&self) -> usize {
        self.facet_indices.len()
    }

    /// Carrier phase factor of this path at `frequency_hz`.
    pub fn phase_at(&self, frequency_hz: f64) -> Complex64 {
        Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * frequency_hz * self.delay_s)
    }
}

/// Transverse projector `I - k k^T` as a complex operator.
fn transverse_projector(k: Vec3) -> Matrix3<Complex64> {
    let kc = complex_vec(k);
    Matrix3::identity() - kc * kc.transpose()
}

/// Reflection operator at one facet: maps the field arriving along `k_in`
/// (transverse to it) to the reflected field along the returned `k_out`.
fn bounce_operator(
    k_in: Vec3,
    facet: &Facet,
    frequency_hz: f64,
) -> (Matrix3<Complex64>, Vec3) {
    let n = facet.normal();
    let k_out = k_in - n * (2.0 * k_in.dot(&n));
    let cross = k_in.cross(&n);
    let s = if cross.norm() < 1e-9 {
        // Normal incidence: any transverse direction serves as s; pick the
        // canonical one so results are deterministic.
        transverse_frame(k_in).0
    } else {
        cross.normalize()
    };
    let p_in = s.cross(&k_in);
    let p_out = s.cross(&k_out);
    let cos_theta = k_in.dot(&n).abs();
    let (gamma_s, gamma_p) =
        reflection_coefficients(facet.epsilon_r, facet.sigma_s_per_m, frequency_hz, cos_theta);
    let sc = complex_vec(s);
    let op = sc * sc.transpose() * gamma_s
        + complex_vec(p_out) * complex_vec(p_in).transpose() * gamma_p;
    (op, k_out)
}

/// Assemble a `TracedPath` from its polyline, validating nothing (the caller
/// has already established specularity and visibility).
fn build_path(
    points: Vec<Vec3>,
    facet_indices: Vec<usize>,
    scene: &Scene,
    frequency_hz: f64,
) -> TracedPath {
    let mut distance = 0.0;
    for w in points.windows(2) {
        distance += (w[1] - w[0]).norm();
    }
    let departure = (points[1] - points[0]).normalize();
    let arrival = (points[points.len() - 1] - points[points.len() - 2]).normalize();

    let mut op = transverse_projector(departure);
    let mut k = departure;
    for (leg, &fi) in facet_indices.iter().enumerate() {
        debug_assert!((k - (points[leg + 1] - points[leg]).normalize()).norm() < 1e-9);
        let (m, k_out) = bounce_operator(k, &scene.facets[fi], frequency_hz);
        op = m * op;
        k = k_out;
    }
    debug_assert!((k - arrival).norm() < 1e-9, "reflection chain must end at the arrival direction");

    let spreading = Complex64::new(1.0 / (4.0 * std::f64::consts::PI * distance), 0.0);
    TracedPath {
        points,
        facet_indices,
        distance_m: distance,
        delay_s: distance / SPEED_OF_LIGHT,
        departure,
        arrival,
        transfer: op * spreading,
    }
}

/// All specular paths from `tx` to `rx` with up to `scene.max_bounces()`
/// reflections, sorted by (bounce count, delay, facet indices). Both
/// endpoints are treated as point sources; array structure is applied when a
/// channel is assembled from the paths.
pub fn trace_paths(
    scene: &Scene,
    tx: Vec3,
    rx: Vec3,
    frequency_hz: f64,
) -> Result<Vec<TracedPath>, TraceError> {
    if (tx - rx).norm() < 1e-9 {
        return Err(TraceError::CoincidentEndpoints);
    }
    let mut paths = Vec::new();

    if !scene.blocked(tx, rx) {
        paths.push(build_path(vec![tx, rx], vec![], scene, frequency_hz));
    }

    if scene.max_bounces() >= 1 {
        for (i, facet) in scene.facets.iter().enumerate() {
            if facet.signed_distance(tx).abs() < GEOM_EPS
                || facet.signed_distance(rx).abs() < GEOM_EPS
            {
                continue; // endpoint embedded in the facet plane
            }
            let image = facet.mirror(tx);
            let Some((_, q)) = facet.intersect_segment(image, rx, T_MARGIN) else {
                continue;
            };
            if (q - tx).norm() < GEOM_EPS || (q - rx).norm() < GEOM_EPS {
                continue;
            }
            if scene.blocked(tx, q) || scene.blocked(q, rx) {
                continue;
            }
            paths.push(build_path(vec![tx, q, rx], vec![i], scene, frequency_hz));
        }
    }

    if scene.max_bounces() >= 2 {
        for (i1, f1) in scene.facets.iter().enumerate() {
            if f1.signed_distance(tx).abs() < GEOM_EPS {
                continue;
            }
            let img1 = f1.mirror(tx);
            for (i2, f2) in scene.facets.iter().enumerate() {
                if i2 == i1 || f2.signed_distance(rx).abs() < GEOM_EPS {
                    continue;
                }
                let img2 = f2.mirror(img1);
                let Some((_, q2)) = f2.intersect_segment(img2, rx, T_MARGIN) else {
                    continue;
                };
                let Some((_, q1)) = f1.intersect_segment(img1, q2, T_MARGIN) else {
                    continue;
                };
                if (q1 - q2).norm() < GEOM_EPS
                    || (q1 - tx).norm() < GEOM_EPS
                    || (q2 - rx).norm() < GEOM_EPS
                {
                    continue;
                }
                if scene.blocked(tx, q1) || scene.blocked(q1, q2) || scene.blocked(q2, rx) {
                    continue;
                }
                paths.push(build_path(
                    vec![tx, q1, q2, rx],
                    vec![i1, i2],
                    scene,
                    frequency_hz,
                ));
            }
        }
    }

    paths.sort_by(|a, b| {
        a.bounce_count()
            .cmp(&b.bounce_count())
            .then(a.delay_s.total_cmp(&b.delay_s))
            .then(a.facet_indices.cmp(&b.facet_indices))
    });
    Ok(paths)
}
