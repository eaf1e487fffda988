//! Deterministic propagation modeling: facet scenes, specular image-method
//! tracing with polarization, antenna element patterns, channel assembly,
//! and seeded ensembles (traced or stochastic) with a stable text dump
//! format.

pub mod elements;
pub mod ensemble;
pub mod ensemble_io;
pub mod fresnel;
pub mod geometry;
pub mod scene_file;
pub mod trace;

pub use elements::{ElementPattern, TabulatedPattern};
pub use ensemble::{
    assemble_channel, generate_ensemble, generate_stochastic_ensemble, ArrayElement,
    ArrayGeometry, Ensemble, EnsembleError, RingSpec, StochasticParams, UserSample,
};
pub use ensemble_io::{parse_ensemble, write_ensemble, EnsembleHeader, EnsembleIoError};
pub use fresnel::reflection_coefficients;
pub use geometry::{Facet, GeometryError, Vec3};
pub use scene_file::{load_scene, parse_scene, SceneDescription, SceneFileError, SceneLoadError};
pub use trace::{trace_paths, Scene, TraceError, TracedPath, SPEED_OF_LIGHT};
