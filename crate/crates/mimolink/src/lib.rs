//! Link-level analysis of multi-antenna radio links: scattering-parameter
//! network cascades, deterministic polarimetric ray tracing over simple
//! facet scenes, correlated stochastic channel ensembles, linear receive
//! processing, and outage/diversity/multiplexing statistics.
//!
//! The crate is organized as a pipeline:
//!
//! 1. [`touchstone`] reads measured antenna networks (`.sNp` sweeps);
//! 2. [`propagation`] traces specular paths through a facet scene and
//!    assembles per-user channel matrices, or draws them from a correlated
//!    Rayleigh model;
//! 3. [`multiport`] cascades antenna and termination networks around the
//!    propagation block to form end-to-end channels;
//! 4. [`linkproc`] turns a channel matrix and a link budget into achievable
//!    rates for a family of receive strategies;
//! 5. [`analysis`] reduces rate ensembles to outage curves, diversity and
//!    multiplexing figures, and antenna-correlation diagnostics.
//!
//! Everything downstream of a seed is deterministic: the same inputs produce
//! bit-identical ensembles, rates, and files on any platform.

pub mod analysis;
pub mod linkproc;
pub mod multiport;
pub mod propagation;
pub mod touchstone;
