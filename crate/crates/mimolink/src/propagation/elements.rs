//! Antenna element models: the complex 3-vector "effective length" an element
//! presents to a plane wave traveling in a given direction.
//!
//! Every model returns a vector orthogonal to the propagation direction (the
//! radiated/received field is transverse). Conventions used everywhere:
//!
//! - transmit elements are evaluated at the *departure* direction of travel;
//! - receive elements are evaluated at the *look-back* direction (the
//!   negative of the arriving direction of travel), which is what makes a
//!   bilinear (unconjugated) port coupling exactly reciprocal for any
//!   pattern, tabulated ones included;
//! - the canonical transverse frame at direction `k` is
//!   `u = normalize(z x k)`, `v = k x u` (with `u = x` when `k` is within a
//!   microradian of vertical), matching the frame the path transfer
//!   operators are expressed in.

use nalgebra::{Vector3};
use num_complex::Complex64;
use thiserror::Error;

use super::geometry::Vec3;

pub type CVec3 = Vector3<Complex64>;

#[derive(Debug, Error)]
pub enum PatternError {
    #[error("dipole axis must be a finite non-zero vector")]
    BadAxis,
    #[error("tabulated pattern needs at least 2 azimuth and 2 polar samples, got {az}x{pol}")]
    GridTooSmall { az: usize, pol: usize },
    #[error("tabulated pattern expects {expected} samples ({az} azimuth x {pol} polar), got {found}")]
    GridSizeMismatch {
        az: usize,
        pol: usize,
        expected: usize,
        found: usize,
    },
    #[error("tabulated pattern sample {index} is not finite")]
    NonFiniteSample { index: usize },
}

/// Canonical transverse frame `(u, v)` at propagation direction `k` (unit).
pub fn transverse_frame(k: Vec3) -> (Vec3, Vec3) {
    let z = Vec3::new(0.0, 0.0, 1.0);
    let cross = z.cross(&k);
    let u = if cross.norm() < 1e-6 {
        Vec3::new(1.0, 0.0, 0.0)
    } else {
        cross.normalize()
    };
    let v = k.cross(&u);
    (u, v)
}

pub fn complex_vec(v: Vec3) -> CVec3 {
    CVec3::new(
        Complex64::new(v.x, 0.0),
        Complex64::new(v.y, 0.0),
        Complex64::new(v.z, 0.0),
    )
}

/// Direction-dependent complex amplitudes on the canonical transverse frame,
/// sampled on a uniform azimuth x polar grid and interpolated bilinearly.
///
/// Azimuth spans `[0, 2*pi)` with wraparound; the polar angle spans
/// `[0, pi]` measured from +z. Each sample is `(a_u, a_v)`.
#[derive(Debug, Clone)]
pub struct TabulatedPattern {
    n_azimuth: usize,
    n_polar: usize,
    samples: Vec<(Complex64, Complex64)>, // row-major: polar index * n_azimuth + azimuth index
}

impl TabulatedPattern {
    pub fn new(
        n_azimuth: usize,
        n_polar: usize,
        samples: Vec<(Complex64, Complex64)>,
    ) -> Result<Self, PatternError> {
        if n_azimuth < 2 || n_polar < 2 {
            return Err(PatternError::GridTooSmall {
                az: n_azimuth,
                pol: n_polar,
            });
        }
        let expected = n_azimuth * n_polar;
        if samples.len() != expected {
            return Err(PatternError::GridSizeMismatch {
                az: n_azimuth,
                pol: n_polar,
                expected,
                found: samples.len(),
            });
        }
        for (index, (a, b)) in samples.iter().enumerate() {
            if !(a.re.is_finite() && a.im.is_finite() && b.re.is_finite() && b.im.is_finite()) {
                return Err(PatternError::NonFiniteSample { index });
            }
        }
        Ok(Self {
            n_azimuth,
            n_polar,
            samples,
        })
    }

    fn lookup(&self, k: Vec3) -> (Complex64, Complex64) {
        let azimuth = k.y.atan2(k.x).rem_euclid(2.0 * std::f64::consts::PI);
        let polar = k.z.clamp(-1.0, 1.0).acos();

        // Azimuth: uniform with wraparound (n_azimuth cells over 2 pi).
        let az_step = 2.0 * std::f64::consts::PI / self.n_azimuth as f64;
        let az_pos = azimuth / az_step;
        let az0 = (az_pos.floor() as usize) % self.n_azimuth;
        let az1 = (az0 + 1) % self.n_azimuth;
        let az_t = az_pos - az_pos.floor();

        // Polar: uniform with clamped ends (n_polar samples over [0, pi]).
        let pol_step = std::f64::consts::PI / (self.n_polar - 1) as f64;
        let pol_pos = (polar / pol_step).clamp(0.0, (self.n_polar - 1) as f64);
        let pol0 = (pol_pos.floor() as usize).min(self.n_polar - 2);
        let pol1 = pol0 + 1;
        let pol_t = pol_pos - pol0 as f64;

        let at = |pol: usize, az: usize| self.samples[pol * self.n_azimuth + az];
        let lerp = |a: Complex64, b: Complex64, t: f64| a + (b - a) * Complex64::new(t, 0.0);
        let (u00, v00) = at(pol0, az0);
        let (u01, v01) = at(pol0, az1);
        let (u10, v10) = at(pol1, az0);
        let (u11, v11) = at(pol1, az1);
        (
            lerp(lerp(u00, u01, az_t), lerp(u10, u11, az_t), pol_t),
            lerp(lerp(v00, v01, az_t), lerp(v10, v11, az_t), pol_t),
        )
    }
}

/// An antenna element model.
#[derive(Debug, Clone)]
pub enum ElementPattern {
    /// Unit coupling onto the first canonical transverse axis, all
    /// directions. Not physical, but invaluable as a reference.
    Isotropic,
    /// Infinitesimal dipole along `axis` (unit vector): couples to the
    /// transverse projection of its axis, `sin(angle to axis)` magnitude.
    ShortDipole { axis: Vec3 },
    /// Measured/synthesized pattern on a direction grid.
    Tabulated(TabulatedPattern),
}

impl ElementPattern {
    pub fn short_dipole(axis: Vec3) -> Result<Self, PatternError> {
        if !(axis.x.is_finite() && axis.y.is_finite() && axis.z.is_finite())
            || axis.norm() < 1e-12
        {
            return Err(PatternError::BadAxis);
        }
        Ok(ElementPattern::ShortDipole {
            axis: axis.normalize(),
        })
    }

    /// Effective length vector for propagation direction of travel `k`
    /// (unit). The result is orthogonal to `k`.
    pub fn effective_vector(&self, k: Vec3) -> CVec3 {
        let (u, v) = transverse_frame(k);
        match self {
            ElementPattern::Isotropic => complex_vec(u),
            ElementPattern::ShortDipole { axis } => {
                let transverse = axis - k * axis.dot(&k);
                complex_vec(transverse)
            }
            ElementPattern::Tabulated(pat) => {
                let (a_u, a_v) = pat.lookup(k);
                complex_vec(u) * a_u + complex_vec(v) * a_v
            }
        }
    }
}
