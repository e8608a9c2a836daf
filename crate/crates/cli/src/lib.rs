// Dense numeric kernels iterate paired containers by index throughout.
#![allow(clippy::needless_range_loop)]

//! Experiment harness for noise-stable multidimensional scaling: synthetic
//! generators, scaling-law experiments with reproducible seeding, and the
//! `nsmds` command-line interface.

pub mod cli;
pub mod experiments;
pub mod generators;
