//! Planar convex facets and the point/segment predicates the image-method
//! tracer is built on.
//!
//! A facet is a convex planar polygon with at least three vertices, a unit
//! normal from Newell's method, and a homogeneous material (relative
//! permittivity and conductivity). All predicates work with a small absolute
//! tolerance suited to scenes measured in meters up to a few kilometers.

use nalgebra::Vector3;
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

/// Absolute geometric tolerance (meters) for planarity, sidedness, and
/// in-polygon tests.
pub const GEOM_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("facet needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("facet vertices are collinear or coincident (area ~ {area:.3e} m^2)")]
    Degenerate { area: f64 },
    #[error("facet is not planar: vertex {index} is {deviation:.3e} m off the plane")]
    NonPlanar { index: usize, deviation: f64 },
    #[error("facet is not convex at vertex {index}")]
    NonConvex { index: usize },
    #[error("vertex {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("relative permittivity must be >= 1, got {0}")]
    BadPermittivity(f64),
    #[error("conductivity must be finite and >= 0, got {0}")]
    BadConductivity(f64),
}

/// A convex planar polygon with a homogeneous material.
#[derive(Debug, Clone)]
pub struct Facet {
    /// Free-form label ("ground", "wall-north", ...) used in diagnostics.
    pub kind: String,
    vertices: Vec<Vec3>,
    normal: Vec3,
    pub epsilon_r: f64,
    pub sigma_s_per_m: f64,
}

impl Facet {
    pub fn new(
        kind: String,
        vertices: Vec<Vec3>,
        epsilon_r: f64,
        sigma_s_per_m: f64,
    ) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        for (index, v) in vertices.iter().enumerate() {
            if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
                return Err(GeometryError::NonFinite { index });
            }
        }
        if !(epsilon_r.is_finite() && epsilon_r >= 1.0) {
            return Err(GeometryError::BadPermittivity(epsilon_r));
        }
        if !(sigma_s_per_m.is_finite() && sigma_s_per_m >= 0.0) {
            return Err(GeometryError::BadConductivity(sigma_s_per_m));
        }

        // Newell's method: robust polygon normal, |n| = 2 * area.
        let mut n = Vec3::zeros();
        for i in 0..vertices.len() {
            let a = vertices[i];
            let b = vertices[(i + 1) % vertices.len()];
            n.x += (a.y - b.y) * (a.z + b.z);
            n.y += (a.z - b.z) * (a.x + b.x);
            n.z += (a.x - b.x) * (a.y + b.y);
        }
        let area = 0.5 * n.norm();
        if area < 1e-12 {
            return Err(GeometryError::Degenerate { area });
        }
        let normal = n.normalize();

        for (index, v) in vertices.iter().enumerate() {
            let deviation = (v - vertices[0]).dot(&normal).abs();
            if deviation > GEOM_EPS * (1.0 + v.norm()) {
                return Err(GeometryError::NonPlanar { index, deviation });
            }
        }
        // Convexity: every corner must turn the same way around the normal.
        let m = vertices.len();
        for i in 0..m {
            let prev = vertices[(i + m - 1) % m];
            let here = vertices[i];
            let next = vertices[(i + 1) % m];
            let turn = (here - prev).cross(&(next - here)).dot(&normal);
            if turn < -GEOM_EPS * (1.0 + here.norm_squared()) {
                return Err(GeometryError::NonConvex { index: i });
            }
        }

        Ok(Self {
            kind,
            vertices,
            normal,
            epsilon_r,
            sigma_s_per_m,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    /// Unit normal (orientation follows the vertex winding; reflection logic
    /// treats the facet as two-sided).
    pub fn normal(&self) -> Vec3 {
        self.normal
    }

    pub fn plane_point(&self) -> Vec3 {
        self.vertices[0]
    }

    /// Signed distance from `p` to the facet plane along the normal.
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        (p - self.vertices[0]).dot(&self.normal)
    }

    /// Mirror `p` across the facet plane.
    pub fn mirror(&self, p: Vec3) -> Vec3 {
        p - self.normal * (2.0 * self.signed_distance(p))
    }

    /// Whether a point already on the plane lies inside the polygon
    /// (boundary counts as inside within tolerance).
    pub fn contains(&self, p: Vec3) -> bool {
        let m = self.vertices.len();
        for i in 0..m {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % m];
            let side = (b - a).cross(&(p - a)).dot(&self.normal);
            if side < -GEOM_EPS * (1.0 + (b - a).norm_squared()) {
                return false;
            }
        }
        true
    }

    /// Intersection of the open segment `a..b` with the facet, excluding a
    /// `t_margin`-wide window at each end (so a segment that merely starts or
    /// ends on the facet does not count). Returns `(t, point)`.
    pub fn intersect_segment(&self, a: Vec3, b: Vec3, t_margin: f64) -> Option<(f64, Vec3)> {
        let d = b - a;
        let denom = d.dot(&self.normal);
        let da = self.signed_distance(a);
        if denom.abs() < 1e-15 {
            return None; // parallel (coplanar segments never count as crossings)
        }
        let t = -da / denom;
        if t <= t_margin || t >= 1.0 - t_margin {
            return None;
        }
        let p = a + d * t;
        if self.contains(p) {
            Some((t, p))
        } else {
            None
        }
    }
}
