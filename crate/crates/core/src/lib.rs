//! Piece-wise quadratic potentials of subquadratic growth (PQSQ) and the data
//! approximators built on top of them.
//!
//! A PQSQ potential `u(x)` imitates an arbitrary error function `f(x)` that
//! grows no faster than `x²` by gluing together fragments of parabolas
//! `b_k + a_k x²` centered at zero. Because every fragment is quadratic, any
//! functional built from `u` can be minimized by splitting: freeze the
//! interval each residual falls into, solve the resulting quadratic problem,
//! and repeat until the assignment stops changing.
//!
//! The crate provides:
//!
//! - [`potential`]: building, validating and evaluating potentials, and the
//!   interval heuristics used to place thresholds.
//! - [`minorant`]: the general splitting optimizer for the pointwise minimum of
//!   a finite family of positive-definite quadratic forms.
//! - [`approximators`]: PQSQ mean, k-means and principal components.
//! - [`elastic_graph`]: elastic principal graphs with a PQSQ approximation term.
//! - [`regression`]: PQSQ-regularized linear regression with the black hole
//!   sparsification and lambda-path calibration.
//! - [`datagen`]: seeded synthetic benchmark generators and their metrics.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod approximators;
pub mod datagen;
pub mod elastic_graph;
mod error;
pub mod linalg;
pub mod minorant;
pub mod potential;
pub mod regression;
pub mod trace;

pub use approximators::{
    fit_l2_pca, fit_pc1, fit_pca, pqsq_error, pqsq_kmeans, pqsq_mean, reconstruct, ClusterModel,
    DataMatrix, KMeansOptions, MeanFit, MeanOptions, Pc1Fit, Pc1Options, PcaModel, PcaOptions,
};
pub use error::{PqsqError, Result};
pub use potential::{
    build_potential, characteristic_distance, check_subquadratic, default_intervals,
    CoordinatePotential, DistanceMode, IntervalConfig, Majorant, PotentialSpec,
};
