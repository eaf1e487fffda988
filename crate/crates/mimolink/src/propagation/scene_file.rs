//! TOML scene descriptions: facet list with materials, base-station array,
//! and the user ring, all in one self-contained file.
//!
//! ```toml
//! carrier_hz = 3.16e9
//! max_bounces = 2
//!
//! [[facets]]
//! kind = "ground"
//! epsilon_r = 5.0
//! sigma_s_per_m = 0.01
//! vertices_m = [[-500, -500, 0], [500, -500, 0], [500, 500, 0], [-500, 500, 0]]
//!
//! [base_station]
//! position_m = [0.0, 0.0, 20.0]
//!
//! [[base_station.elements]]
//! kind = "short-dipole"
//! axis = [0.0, 0.0, 1.0]
//! offset_m = [0.0, -0.35, 0.0]
//!
//! [users]
//! count = 140
//! ring_inner_m = 90.0
//! ring_outer_m = 200.0
//! height_m = 1.5
//!
//! [[users.elements]]
//! kind = "short-dipole"
//! axis = [0.0, 0.0, 1.0]
//! offset_m = [0.0, 0.0, 0.0]
//! ```
//!
//! Element kinds in files are `isotropic` and `short-dipole` (tabulated
//! patterns are constructed through the API). Unknown keys anywhere are
//! rejected. The user ring is centered on the base station's horizontal
//! position.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use super::elements::{ElementPattern, PatternError};
use super::ensemble::{generate_ensemble, ArrayElement, ArrayGeometry, Ensemble, EnsembleError, RingSpec};
use super::geometry::{Facet, GeometryError, Vec3};
use super::trace::{Scene, TraceError};

#[derive(Debug, Error)]
pub enum SceneFileError {
    #[error("TOML syntax/schema error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("carrier_hz must be finite and positive, got {0}")]
    BadCarrier(f64),
    #[error("facet {index} ({kind}): {source}")]
    BadFacet {
        index: usize,
        kind: String,
        #[source]
        source: GeometryError,
    },
    #[error("{context}: unknown element kind '{kind}' (expected 'isotropic' or 'short-dipole')")]
    UnknownElementKind { context: String, kind: String },
    #[error("{context}: 'axis' is only meaningful for short-dipole elements")]
    AxisOnNonDipole { context: String },
    #[error("{context}: short-dipole elements need an 'axis'")]
    MissingAxis { context: String },
    #[error("{context}: {source}")]
    BadPattern {
        context: String,
        #[source]
        source: PatternError,
    },
    #[error("{context}: offset has a non-finite coordinate")]
    BadOffset { context: String },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("users ring: {0}")]
    BadRing(String),
    #[error("{0} needs at least one element")]
    NoElements(&'static str),
}

/// Errors from the path-based loader.
#[derive(Debug, Error)]
pub enum SceneLoadError {
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
        source: SceneFileError,
    },
}

fn default_max_bounces() -> usize {
    2
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneRaw {
    carrier_hz: f64,
    #[serde(default = "default_max_bounces")]
    max_bounces: usize,
    #[serde(default)]
    facets: Vec<FacetRaw>,
    base_station: StationRaw,
    users: UsersRaw,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FacetRaw {
    kind: String,
    epsilon_r: f64,
    sigma_s_per_m: f64,
    vertices_m: Vec<[f64; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StationRaw {
    position_m: [f64; 3],
    elements: Vec<ElementRaw>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct UsersRaw {
    count: usize,
    ring_inner_m: f64,
    ring_outer_m: f64,
    height_m: f64,
    elements: Vec<ElementRaw>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ElementRaw {
    kind: String,
    axis: Option<[f64; 3]>,
    offset_m: [f64; 3],
}

/// A fully validated scene: geometry, arrays, ring, and design carrier.
#[derive(Debug, Clone)]
pub struct SceneDescription {
    pub carrier_hz: f64,
    pub scene: Scene,
    pub bs: ArrayGeometry,
    pub ue_template: Vec<ArrayElement>,
    pub ring: RingSpec,
}

impl SceneDescription {
    /// Trace the full user ensemble at `frequency_hz` with positions drawn
    /// from `seed`.
    pub fn generate(&self, frequency_hz: f64, seed: u64) -> Result<Ensemble, EnsembleError> {
        generate_ensemble(
            &self.scene,
            &self.bs,
            &self.ue_template,
            &self.ring,
            frequency_hz,
            seed,
        )
    }
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn build_element(raw: &ElementRaw, context: String) -> Result<ArrayElement, SceneFileError> {
    let offset = vec3(raw.offset_m);
    if !(offset.x.is_finite() && offset.y.is_finite() && offset.z.is_finite()) {
        return Err(SceneFileError::BadOffset { context });
    }
    let pattern = match raw.kind.as_str() {
        "isotropic" => {
            if raw.axis.is_some() {
                return Err(SceneFileError::AxisOnNonDipole { context });
            }
            ElementPattern::Isotropic
        }
        "short-dipole" => {
            let axis = raw.axis.ok_or_else(|| SceneFileError::MissingAxis {
                context: context.clone(),
            })?;
            ElementPattern::short_dipole(vec3(axis)).map_err(|source| {
                SceneFileError::BadPattern {
                    context: context.clone(),
                    source,
                }
            })?
        }
        other => {
            return Err(SceneFileError::UnknownElementKind {
                context,
                kind: other.to_string(),
            })
        }
    };
    Ok(ArrayElement {
        pattern,
        offset_m: offset,
    })
}

/// Parse and validate a scene document.
pub fn parse_scene(text: &str) -> Result<SceneDescription, SceneFileError> {
    let raw: SceneRaw = toml::from_str(text)?;
    if !(raw.carrier_hz.is_finite() && raw.carrier_hz > 0.0) {
        return Err(SceneFileError::BadCarrier(raw.carrier_hz));
    }

    let mut facets = Vec::with_capacity(raw.facets.len());
    for (index, f) in raw.facets.iter().enumerate() {
        let vertices = f.vertices_m.iter().copied().map(vec3).collect();
        let facet = Facet::new(f.kind.clone(), vertices, f.epsilon_r, f.sigma_s_per_m)
            .map_err(|source| SceneFileError::BadFacet {
                index,
                kind: f.kind.clone(),
                source,
            })?;
        facets.push(facet);
    }
    let scene = Scene::new(facets, raw.max_bounces)?;

    if raw.base_station.elements.is_empty() {
        return Err(SceneFileError::NoElements("base_station"));
    }
    if raw.users.elements.is_empty() {
        return Err(SceneFileError::NoElements("users"));
    }
    let bs_elements = raw
        .base_station
        .elements
        .iter()
        .enumerate()
        .map(|(i, e)| build_element(e, format!("base_station element {i}")))
        .collect::<Result<Vec<_>, _>>()?;
    let ue_template = raw
        .users
        .elements
        .iter()
        .enumerate()
        .map(|(i, e)| build_element(e, format!("users element {i}")))
        .collect::<Result<Vec<_>, _>>()?;

    let position = vec3(raw.base_station.position_m);
    if !(position.x.is_finite() && position.y.is_finite() && position.z.is_finite()) {
        return Err(SceneFileError::BadOffset {
            context: "base_station position".into(),
        });
    }

    let ring = RingSpec {
        center_xy: (position.x, position.y),
        inner_m: raw.users.ring_inner_m,
        outer_m: raw.users.ring_outer_m,
        height_m: raw.users.height_m,
        count: raw.users.count,
    };
    if raw.users.count == 0 {
        return Err(SceneFileError::BadRing("count must be at least 1".into()));
    }
    if !(ring.inner_m.is_finite() && ring.inner_m > 0.0 && ring.outer_m >= ring.inner_m) {
        return Err(SceneFileError::BadRing(format!(
            "radii [{}, {}] must be finite, positive, and ordered",
            ring.inner_m, ring.outer_m
        )));
    }
    if !(ring.height_m.is_finite() && ring.height_m >= 0.0) {
        return Err(SceneFileError::BadRing(format!(
            "height {} must be finite and non-negative",
            ring.height_m
        )));
    }

    Ok(SceneDescription {
        carrier_hz: raw.carrier_hz,
        scene,
        bs: ArrayGeometry {
            phase_center: position,
            elements: bs_elements,
        },
        ue_template,
        ring,
    })
}

/// Read and parse a scene file.
pub fn load_scene(path: &Path) -> Result<SceneDescription, SceneLoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| SceneLoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scene(&text).map_err(|source| SceneLoadError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
carrier_hz = 3.16e9
max_bounces = 2

[[facets]]
kind = "ground"
epsilon_r = 5.0
sigma_s_per_m = 0.01
vertices_m = [[-500.0, -500.0, 0.0], [500.0, -500.0, 0.0], [500.0, 500.0, 0.0], [-500.0, 500.0, 0.0]]

[base_station]
position_m = [0.0, 0.0, 20.0]

[[base_station.elements]]
kind = "short-dipole"
axis = [0.0, 0.0, 1.0]
offset_m = [0.0, -0.1, 0.0]

[[base_station.elements]]
kind = "short-dipole"
axis = [0.0, 0.0, 1.0]
offset_m = [0.0, 0.1, 0.0]

[users]
count = 25
ring_inner_m = 90.0
ring_outer_m = 200.0
height_m = 1.5

[[users.elements]]
kind = "short-dipole"
axis = [0.0, 0.0, 1.0]
offset_m = [0.0, 0.0, 0.0]

[[users.elements]]
kind = "isotropic"
offset_m = [0.05, 0.0, 0.0]
"#;

    #[test]
    fn good_scene_parses_and_generates() {
        let desc = parse_scene(GOOD).unwrap();
        assert_eq!(desc.carrier_hz, 3.16e9);
        assert_eq!(desc.scene.facets().len(), 1);
        assert_eq!(desc.bs.n_elements(), 2);
        assert_eq!(desc.ue_template.len(), 2);
        assert_eq!(desc.ring.count, 25);
        assert_eq!(desc.ring.center_xy, (0.0, 0.0));

        let ens = desc.generate(3.16e9, 5).unwrap();
        assert_eq!(ens.n_users(), 25);
        assert_eq!(ens.n_rx(), 2);
        assert_eq!(ens.n_tx(), 2);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = GOOD.replace("max_bounces = 2", "max_bounces = 2\nray_count = 10");
        assert!(matches!(parse_scene(&text), Err(SceneFileError::Toml(_))));
    }

    #[test]
    fn unknown_element_kind_rejected() {
        let text = GOOD.replace("kind = \"isotropic\"", "kind = \"patch\"");
        assert!(matches!(
            parse_scene(&text),
            Err(SceneFileError::UnknownElementKind { .. })
        ));
    }

    #[test]
    fn dipole_without_axis_rejected() {
        let text = GOOD.replace("axis = [0.0, 0.0, 1.0]\noffset_m = [0.0, -0.1, 0.0]", "offset_m = [0.0, -0.1, 0.0]");
        assert!(matches!(parse_scene(&text), Err(SceneFileError::MissingAxis { .. })));
    }

    #[test]
    fn isotropic_with_axis_rejected() {
        let text = GOOD.replace(
            "kind = \"isotropic\"\noffset_m = [0.05, 0.0, 0.0]",
            "kind = \"isotropic\"\naxis = [1.0, 0.0, 0.0]\noffset_m = [0.05, 0.0, 0.0]",
        );
        assert!(matches!(
            parse_scene(&text),
            Err(SceneFileError::AxisOnNonDipole { .. })
        ));
    }

    #[test]
    fn bad_facet_reported_with_index() {
        let text = GOOD.replace("epsilon_r = 5.0", "epsilon_r = 0.2");
        match parse_scene(&text) {
            Err(SceneFileError::BadFacet { index: 0, kind, .. }) => assert_eq!(kind, "ground"),
            other => panic!("expected BadFacet, got {other:?}"),
        }
    }

    #[test]
    fn ring_rules_enforced() {
        let text = GOOD.replace("ring_inner_m = 90.0", "ring_inner_m = 300.0");
        assert!(matches!(parse_scene(&text), Err(SceneFileError::BadRing(_))));
        let text = GOOD.replace("count = 25", "count = 0");
        assert!(matches!(parse_scene(&text), Err(SceneFileError::BadRing(_))));
    }

    #[test]
    fn carrier_and_bounce_limits() {
        let text = GOOD.replace("carrier_hz = 3.16e9", "carrier_hz = -1.0");
        assert!(matches!(parse_scene(&text), Err(SceneFileError::BadCarrier(_))));
        let text = GOOD.replace("max_bounces = 2", "max_bounces = 5");
        assert!(matches!(parse_scene(&text), Err(SceneFileError::Trace(_))));
    }

    #[test]
    fn scene_without_facets_is_free_space() {
        let mut lines: Vec<&str> = GOOD.lines().collect();
        // Drop the whole [[facets]] block (lines 3..8 of the document).
        let start = lines.iter().position(|l| l.starts_with("[[facets]]")).unwrap();
        lines.drain(start..start + 5);
        let text = lines.join("\n");
        let desc = parse_scene(&text).unwrap();
        assert_eq!(desc.scene.facets().len(), 0);
        let ens = desc.generate(3.16e9, 1).unwrap();
        for u in &ens.users {
            assert_eq!(u.n_paths, 1); // LOS only
        }
    }
}
