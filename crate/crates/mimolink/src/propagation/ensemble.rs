//! Channel assembly from traced paths, and ensemble generation: many user
//! positions sampled on a ring (traced scenes) or many independent draws of a
//! correlated Rayleigh model (stochastic runs).
//!
//! Determinism contract: given the same inputs and seed, every function here
//! produces bit-identical results, serially or on any number of threads. The
//! traced ensemble draws all positions up front from one seeded generator and
//! then traces users in parallel (tracing is pure); the stochastic ensemble
//! gives each user its own counter-mode stream keyed by index, so no draw
//! order dependence exists to break.

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::multiport::{ChannelMatrix, MultiportError};

use super::elements::{CVec3, ElementPattern};
use super::geometry::Vec3;
use super::trace::{trace_paths, Scene, TraceError, TracedPath, SPEED_OF_LIGHT};

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("user ring is invalid: {0}")]
    BadRing(String),
    #[error("stochastic model is invalid: {0}")]
    BadModel(String),
    #[error("receive correlation matrix is not positive semidefinite (eigenvalue {min_eig:.3e})")]
    CorrelationNotPsd { min_eig: f64 },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Channel(#[from] MultiportError),
}

/// One antenna element of an array: a pattern at a fixed offset from the
/// array phase center (offsets stay in the global frame; arrays translate
/// with their phase center but do not rotate toward anything).
#[derive(Debug, Clone)]
pub struct ArrayElement {
    pub pattern: ElementPattern,
    pub offset_m: Vec3,
}

/// An antenna array: a phase center plus elements at fixed offsets.
#[derive(Debug, Clone)]
pub struct ArrayGeometry {
    pub phase_center: Vec3,
    pub elements: Vec<ArrayElement>,
}

impl ArrayGeometry {
    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn translated_to(&self, phase_center: Vec3) -> ArrayGeometry {
        ArrayGeometry {
            phase_center,
            elements: self.elements.clone(),
        }
    }
}

fn bilinear(a: &CVec3, m: &Matrix3<Complex64>, b: &CVec3) -> Complex64 {
    (a.transpose() * m * b)[(0, 0)]
}

/// Sum the traced paths into the `n_rx x n_tx` channel matrix between two
/// arrays at `frequency_hz`.
///
/// Per path and element pair the contribution is the polarimetric coupling
/// `e_rx(-arrival)^T  T  e_tx(departure)` (transmit pattern at the departure
/// direction, receive pattern at the look-back direction, unconjugated),
/// times first-order array phase offsets
/// `exp(+j k departure.offset_tx) * exp(-j k arrival.offset_rx)`,
/// times the carrier phase of the path delay. An empty path list yields the
/// all-zero channel (a fully shadowed user, not an error).
pub fn assemble_channel(
    paths: &[TracedPath],
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    frequency_hz: f64,
) -> Result<ChannelMatrix, MultiportError> {
    let n_tx = tx.n_elements();
    let n_rx = rx.n_elements();
    let wavenumber = 2.0 * std::f64::consts::PI * frequency_hz / SPEED_OF_LIGHT;
    let mut h = DMatrix::from_element(n_rx, n_tx, Complex64::new(0.0, 0.0));
    for path in paths {
        let carrier = path.phase_at(frequency_hz);
        let e_tx: Vec<CVec3> = tx
            .elements
            .iter()
            .map(|el| el.pattern.effective_vector(path.departure))
            .collect();
        let e_rx: Vec<CVec3> = rx
            .elements
            .iter()
            .map(|el| el.pattern.effective_vector(-path.arrival))
            .collect();
        for (r, rel) in rx.elements.iter().enumerate() {
            let rx_phase =
                Complex64::from_polar(1.0, -wavenumber * path.arrival.dot(&rel.offset_m));
            for (t, tel) in tx.elements.iter().enumerate() {
                let tx_phase =
                    Complex64::from_polar(1.0, wavenumber * path.departure.dot(&tel.offset_m));
                let coupling = bilinear(&e_rx[r], &path.transfer, &e_tx[t]);
                h[(r, t)] += coupling * tx_phase * rx_phase * carrier;
            }
        }
    }
    ChannelMatrix::new(h, frequency_hz)
}

/// Uniform-in-area annulus of user positions at a fixed height.
#[derive(Debug, Clone)]
pub struct RingSpec {
    pub center_xy: (f64, f64),
    pub inner_m: f64,
    pub outer_m: f64,
    pub height_m: f64,
    pub count: usize,
}

impl RingSpec {
    fn validate(&self) -> Result<(), EnsembleError> {
        if !(self.inner_m.is_finite() && self.outer_m.is_finite() && self.inner_m > 0.0) {
            return Err(EnsembleError::BadRing(format!(
                "radii must be finite and positive, got [{}, {}]",
                self.inner_m, self.outer_m
            )));
        }
        if self.inner_m > self.outer_m {
            return Err(EnsembleError::BadRing(format!(
                "inner radius {} exceeds outer radius {}",
                self.inner_m, self.outer_m
            )));
        }
        if !(self.height_m.is_finite() && self.height_m >= 0.0) {
            return Err(EnsembleError::BadRing(format!(
                "height must be finite and non-negative, got {}",
                self.height_m
            )));
        }
        if self.count == 0 {
            return Err(EnsembleError::BadRing("user count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Draw the ring positions for a seed: uniform in area over the annulus
/// (square-root radial transform), uniform in angle.
pub fn sample_ring_positions(ring: &RingSpec, seed: u64) -> Result<Vec<Vec3>, EnsembleError> {
    ring.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let (cx, cy) = ring.center_xy;
    let r0_sq = ring.inner_m * ring.inner_m;
    let r1_sq = ring.outer_m * ring.outer_m;
    Ok((0..ring.count)
        .map(|_| {
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            let r = (r0_sq + u * (r1_sq - r0_sq)).sqrt();
            let phi = 2.0 * std::f64::consts::PI * v;
            Vec3::new(cx + r * phi.cos(), cy + r * phi.sin(), ring.height_m)
        })
        .collect())
}

/// One user of an ensemble: where it was, how many paths reached it, and the
/// resulting channel.
#[derive(Debug, Clone, PartialEq)]
pub struct UserSample {
    pub position: Vec3,
    pub n_paths: usize,
    pub channel: ChannelMatrix,
}

/// A set of per-user channels at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub frequency_hz: f64,
    pub users: Vec<UserSample>,
}

impl Ensemble {
    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_rx(&self) -> usize {
        self.users.first().map(|u| u.channel.n_rx()).unwrap_or(0)
    }

    pub fn n_tx(&self) -> usize {
        self.users.first().map(|u| u.channel.n_tx()).unwrap_or(0)
    }
}

/// Trace an ensemble: sample `ring.count` user positions, trace every user
/// against the base-station array, and assemble per-user channels.
pub fn generate_ensemble(
    scene: &Scene,
    bs: &ArrayGeometry,
    ue_template: &[ArrayElement],
    ring: &RingSpec,
    frequency_hz: f64,
    seed: u64,
) -> Result<Ensemble, EnsembleError> {
    if bs.elements.is_empty() || ue_template.is_empty() {
        return Err(EnsembleError::BadModel(
            "arrays need at least one element per side".into(),
        ));
    }
    let positions = sample_ring_positions(ring, seed)?;
    let users = positions
        .into_par_iter()
        .map(|position| {
            let paths = trace_paths(scene, bs.phase_center, position, frequency_hz)?;
            let ue = ArrayGeometry {
                phase_center: position,
                elements: ue_template.to_vec(),
            };
            let channel = assemble_channel(&paths, bs, &ue, frequency_hz)?;
            Ok(UserSample {
                position,
                n_paths: paths.len(),
                channel,
            })
        })
        .collect::<Result<Vec<_>, EnsembleError>>()?;
    Ok(Ensemble {
        frequency_hz,
        users,
    })
}

/// Parameters of the correlated Rayleigh model: iid unit-variance complex
/// Gaussian entries, colored across receive ports by an exponential
/// correlation profile `C[i,j] = rho^|i-j|`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticParams {
    pub n_users: usize,
    pub n_rx: usize,
    pub n_tx: usize,
    pub rx_correlation: f64,
}

/// Symmetric PSD square root via eigendecomposition. Eigenvalues within
/// `-1e-9` of zero are clamped; anything lower is an error.
fn psd_sqrt(c: &DMatrix<f64>) -> Result<DMatrix<f64>, EnsembleError> {
    let eig = c.clone().symmetric_eigen();
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eig < -1e-9 {
        return Err(EnsembleError::CorrelationNotPsd { min_eig });
    }
    let n = c.nrows();
    let sqrt_vals = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            eig.eigenvalues[i].max(0.0).sqrt()
        } else {
            0.0
        }
    });
    Ok(&eig.eigenvectors * sqrt_vals * eig.eigenvectors.transpose())
}

/// Draw a stochastic ensemble. User `i` is drawn from stream `i + 1` of the
/// seeded generator (stream 0 is reserved for position sampling in traced
/// runs), so the ensemble is independent of evaluation order.
pub fn generate_stochastic_ensemble(
    params: &StochasticParams,
    frequency_hz: f64,
    seed: u64,
) -> Result<Ensemble, EnsembleError> {
    if params.n_users == 0 || params.n_rx == 0 || params.n_tx == 0 {
        return Err(EnsembleError::BadModel(
            "n_users, n_rx, n_tx must all be at least 1".into(),
        ));
    }
    if !(params.rx_correlation.is_finite() && params.rx_correlation.abs() <= 1.0) {
        return Err(EnsembleError::BadModel(format!(
            "rx_correlation must lie in [-1, 1], got {}",
            params.rx_correlation
        )));
    }
    let c = DMatrix::from_fn(params.n_rx, params.n_rx, |i, j| {
        params.rx_correlation.powi((i as i32 - j as i32).abs())
    });
    let sqrt_c = psd_sqrt(&c)?;
    let sqrt_c_cplx = sqrt_c.map(|v| Complex64::new(v, 0.0));
    let sigma = (0.5f64).sqrt();

    let users = (0..params.n_users)
        .into_par_iter()
        .map(|user| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(user as u64 + 1);
            // Column-major draw order, fixed by contract.
            let mut entries = Vec::with_capacity(params.n_rx * params.n_tx);
            for _ in 0..params.n_rx * params.n_tx {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                entries.push(Complex64::new(re * sigma, im * sigma));
            }
            let g = DMatrix::from_vec(params.n_rx, params.n_tx, entries);
            let h = &sqrt_c_cplx * g;
            let channel = ChannelMatrix::new(h, frequency_hz)?;
            Ok(UserSample {
                position: Vec3::zeros(),
                n_paths: 0,
                channel,
            })
        })
        .collect::<Result<Vec<_>, EnsembleError>>()?;
    Ok(Ensemble {
        frequency_hz,
        users,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::geometry::Facet;

    const F: f64 = 3.16e9;

    fn dipole_z() -> ElementPattern {
        ElementPattern::short_dipole(Vec3::new(0.0, 0.0, 1.0)).unwrap()
    }

    fn simple_scene() -> Scene {
        let ground = Facet::new(
            "ground".into(),
            vec![
                Vec3::new(-500.0, -500.0, 0.0),
                Vec3::new(500.0, -500.0, 0.0),
                Vec3::new(500.0, 500.0, 0.0),
                Vec3::new(-500.0, 500.0, 0.0),
            ],
            5.0,
            0.01,
        )
        .unwrap();
        Scene::new(vec![ground], 2).unwrap()
    }

    fn bs() -> ArrayGeometry {
        ArrayGeometry {
            phase_center: Vec3::new(0.0, 0.0, 20.0),
            elements: (0..4)
                .map(|i| ArrayElement {
                    pattern: dipole_z(),
                    offset_m: Vec3::new(0.0, 0.0474 * (i as f64 - 1.5), 0.0),
                })
                .collect(),
        }
    }

    fn ring() -> RingSpec {
        RingSpec {
            center_xy: (0.0, 0.0),
            inner_m: 90.0,
            outer_m: 200.0,
            height_m: 1.5,
            count: 12,
        }
    }

    #[test]
    fn empty_path_list_means_zero_channel() {
        let ue = ArrayGeometry {
            phase_center: Vec3::new(100.0, 0.0, 1.5),
            elements: vec![ArrayElement {
                pattern: dipole_z(),
                offset_m: Vec3::zeros(),
            }],
        };
        let h = assemble_channel(&[], &bs(), &ue, F).unwrap();
        assert_eq!(h.n_rx(), 1);
        assert_eq!(h.n_tx(), 4);
        assert_eq!(h.frobenius_norm(), 0.0);
    }

    #[test]
    fn ring_positions_are_inside_the_annulus_and_seeded() {
        let spec = ring();
        let a = sample_ring_positions(&spec, 7).unwrap();
        let b = sample_ring_positions(&spec, 7).unwrap();
        let c = sample_ring_positions(&spec, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for p in &a {
            let r = (p.x * p.x + p.y * p.y).sqrt();
            assert!(r >= spec.inner_m && r <= spec.outer_m);
            assert_eq!(p.z, spec.height_m);
        }
    }

    #[test]
    fn traced_ensemble_is_deterministic_across_thread_counts() {
        let scene = simple_scene();
        let array = bs();
        let ue = vec![ArrayElement {
            pattern: dipole_z(),
            offset_m: Vec3::zeros(),
        }];
        let spec = ring();
        let parallel = generate_ensemble(&scene, &array, &ue, &spec, F, 42).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| generate_ensemble(&scene, &array, &ue, &spec, F, 42).unwrap());
        assert_eq!(parallel, single);
        // Every ring user sees LOS + ground bounce over flat ground.
        for u in &parallel.users {
            assert_eq!(u.n_paths, 2);
            assert!(u.channel.frobenius_norm() > 0.0);
        }
    }

    #[test]
    fn stochastic_ensemble_is_deterministic_and_stream_keyed() {
        let params = StochasticParams {
            n_users: 64,
            n_rx: 2,
            n_tx: 16,
            rx_correlation: 0.5,
        };
        let a = generate_stochastic_ensemble(&params, F, 9).unwrap();
        let b = generate_stochastic_ensemble(&params, F, 9).unwrap();
        assert_eq!(a, b);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| generate_stochastic_ensemble(&params, F, 9).unwrap());
        assert_eq!(a, single);
        // Prefixes agree: adding users never changes earlier ones.
        let shorter = generate_stochastic_ensemble(
            &StochasticParams {
                n_users: 16,
                ..params.clone()
            },
            F,
            9,
        )
        .unwrap();
        assert_eq!(&a.users[..16], &shorter.users[..]);
    }

    #[test]
    fn full_correlation_duplicates_rows() {
        let params = StochasticParams {
            n_users: 8,
            n_rx: 2,
            n_tx: 4,
            rx_correlation: 1.0,
        };
        let e = generate_stochastic_ensemble(&params, F, 3).unwrap();
        for u in &e.users {
            for t in 0..4 {
                let a = u.channel.get(0, t);
                let b = u.channel.get(1, t);
                assert!((a - b).norm() < 1e-12, "rows must coincide for rho = 1");
            }
        }
    }

    #[test]
    fn zero_correlation_matches_raw_gaussian_statistics() {
        let params = StochasticParams {
            n_users: 4000,
            n_rx: 2,
            n_tx: 2,
            rx_correlation: 0.0,
        };
        let e = generate_stochastic_ensemble(&params, F, 11).unwrap();
        let mut power = 0.0;
        let mut cross = Complex64::new(0.0, 0.0);
        for u in &e.users {
            for t in 0..2 {
                power += u.channel.get(0, t).norm_sqr() + u.channel.get(1, t).norm_sqr();
                cross += u.channel.get(0, t) * u.channel.get(1, t).conj();
            }
        }
        let n_entries = (params.n_users * 4) as f64;
        assert!((power / n_entries - 1.0).abs() < 0.05, "unit variance");
        assert!(cross.norm() / (params.n_users as f64 * 2.0) < 0.05, "uncorrelated rows");
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let mut p = StochasticParams {
            n_users: 1,
            n_rx: 2,
            n_tx: 2,
            rx_correlation: 1.5,
        };
        assert!(matches!(
            generate_stochastic_ensemble(&p, F, 0),
            Err(EnsembleError::BadModel(_))
        ));
        p.rx_correlation = 0.0;
        p.n_tx = 0;
        assert!(matches!(
            generate_stochastic_ensemble(&p, F, 0),
            Err(EnsembleError::BadModel(_))
        ));

        let bad_ring = RingSpec {
            center_xy: (0.0, 0.0),
            inner_m: 200.0,
            outer_m: 90.0,
            height_m: 1.5,
            count: 4,
        };
        assert!(matches!(
            sample_ring_positions(&bad_ring, 0),
            Err(EnsembleError::BadRing(_))
        ));
    }
}
