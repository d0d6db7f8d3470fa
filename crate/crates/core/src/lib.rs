//! Adaptive multilevel Monte Carlo for random-parameter differential
//! equations, with adjoint-based error estimates driving both the bias
//! estimate and the creation of new levels.
//!
//! The numerical core (meshes, cG(1) solvers, adjoints, estimators,
//! refinement) is generic over [`Real`]; the MLMC driver and the experiment
//! layer work in `f64`. The aliases below fix the common `f64` instances.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bvp;
pub mod error;
pub mod estimate;
pub mod experiments;
pub mod galerkin;
pub mod linalg;
pub mod mesh;
pub mod mlmc;
pub mod models;
pub mod qoi;
pub mod quadrature;
pub mod refine;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type TemporalMesh64 = mesh::TemporalMesh<f64>;
pub type SpatialMesh64 = mesh::SpatialMesh<f64>;
pub type Trajectory64 = galerkin::Trajectory<f64>;
pub type ErrorDecomposition64 = estimate::ErrorDecomposition<f64>;
pub type AccumulatedError64 = estimate::AccumulatedError<f64>;
pub type MesoRegion64 = mesh::MesoRegion<f64>;
pub type MesoSpan64 = mesh::MesoSpan<f64>;
pub type StandardQoi64 = qoi::StandardQoi<f64>;
pub type NonstandardQoi64 = qoi::NonstandardQoi<f64>;
pub type BvpProblem64 = bvp::BvpProblem<f64>;
pub type Matrix64 = linalg::Matrix<f64>;
