//! Robust residual-type a posteriori error estimation for the reaction-diffusion
//! problem `-Δu + κ²u = f` on planar triangulations, with an oscillation term
//! that is bounded by the error uniformly in `κ`.
//!
//! ```
//! use rdest::mesh::criss_cross_square;
//! use rdest::problem::{Preset, Problem};
//! use rdest::galerkin::solve_problem;
//! use rdest::dual_system::DualSystem;
//! use rdest::estimator::{estimate, EstimateOptions};
//!
//! let mesh = criss_cross_square(4);
//! let problem = Problem::new(100.0, Preset::SinSin).unwrap();
//! let (u, _) = solve_problem(&mesh, &problem, 1e-10).unwrap();
//! let duals = DualSystem::build(&mesh, problem.kappa);
//! let report = estimate(&mesh, &duals, &problem, &u, &EstimateOptions::default()).unwrap();
//! assert_eq!(report.vertices.len(), mesh.num_vertices());
//! assert!(report.estimator > 0.0);
//! ```
//!
//! The guide in `book/` introduces each concept with runnable listings.

// `!(x > 0.0)` deliberately rejects NaN; index loops mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod adapt;
pub mod dual_system;
pub mod estimator;
pub mod functional;
pub mod galerkin;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod patch;
pub mod problem;
pub mod quadrature;
pub mod report;
pub mod verify;
