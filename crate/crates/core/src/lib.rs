//! Stereographic k-nearest-neighbour clustering for 64-QAM decoding.
//!
//! The crate covers four members of the same k-NN family, all driven by one
//! engine ([`clustering::run_knn`]) with pluggable dissimilarity and centroid
//! rules:
//!
//! - **2DEC**: plain Euclidean k-means on the received I/Q plane.
//! - **3DSC**: inverse stereographic projection onto a sphere of radius `r`,
//!   then Euclidean k-means in 3D (centroids drift inside the sphere).
//! - **2DSC**: the same projection, with centroids renormalised onto the
//!   sphere after every update (spherical / cosine k-means).
//! - **SQ**: the quantum formulation, where points become Bloch-sphere qubits
//!   and dissimilarity is the probability of the `11` outcome of a Bell-state
//!   measurement. It runs either on exact probabilities or on a shot-sampled
//!   estimate.
//!
//! In exact mode SQ and 2DSC produce identical assignments at every iteration;
//! the test suite checks this directly.
//!
//! Supporting modules generate synthetic 64-QAM channel data, compute decoding
//! metrics and run parameter sweeps that write plot-ready CSV/JSON reports.

pub mod clustering;
pub mod dissimilarity;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod qamdata;
pub mod quantum;
pub mod seed;

pub use error::{Error, Result};
