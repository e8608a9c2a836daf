// Dense numeric kernels iterate paired containers by index throughout.
#![allow(clippy::needless_range_loop)]

//! Noise-stable multidimensional scaling.
//!
//! This crate reconstructs point clouds from (possibly noisy, possibly
//! sparse) pairwise distance observations and quantifies how faithful the
//! reconstruction is as a *global* shape, not just edge by edge:
//!
//! - [`geometry`] — point clouds, squared distance matrices, scale
//!   parameters, and the structural loss over optimal rigid alignments.
//! - [`noise`] — independent Gaussian perturbation of distances and the
//!   bias matrix used to debias squared observations.
//! - [`cmds`] — the classical MDS pipeline (double centering,
//!   eigendecomposition, embedding) plus spectral diagnostics: Gershgorin
//!   bounds, spectral gaps, Weyl / eigenvector perturbation checks and the
//!   theoretical error envelope.
//! - [`sampling`] — farthest-point sampling and the epsilon-net predicates
//!   it guarantees, plus a 2D interiority test.
//! - [`graph`] — anchor graphs: a farthest-sampled anchor clique plus a
//!   constant number of local edges per remaining vertex, with cost
//!   accounting and rigidity validators (pebble game, vertex connectivity).
//! - [`reconstruct`] — two-stage reconstruction (cMDS on the anchors, then
//!   trilateration of everything else) and the randomized quick-MDS path.
//! - [`io`] — CSV/JSON serialization for clouds, distance matrices, noise
//!   specs and anchor graphs.

pub mod cmds;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod io;
pub mod matrix;
pub mod noise;
pub mod reconstruct;
pub mod sampling;

pub use error::{Error, Result};
pub use geometry::{Alignment, PointCloud, ScaleParams, SquaredDistanceMatrix};
pub use matrix::Matrix;
