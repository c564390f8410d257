//! Numerical laboratory for the small-data lifespan of the quadratic wave
//! equation `□u = c (∂ₜu)²` exterior to the unit ball in three space
//! dimensions, with homogeneous Dirichlet data on the sphere.
//!
//! The crate is organised bottom-up:
//!
//! * [`weights`]: grids, adaptive quadrature, smooth cutoffs and the
//!   weight functions used to normalise decay diagnostics.
//! * [`radiation`]: Radon transforms, the free-space Friedlander field and
//!   the radial exterior radiation field built from the odd reflection of the
//!   data about `r = 1`.
//! * [`profile`]: the nonlinearity form `G(θ)`, the Riccati profile `P`, its
//!   primitive `p` and the lifespan constant `τ*`.
//! * [`solver`]: the exact linear representation and a characteristic-grid
//!   solver for the nonlinear radial problem with blow-up detection.
//! * [`approximator`]: the cutoff-glued approximate solution and its error
//!   functional.
//! * [`lab`]: experiment drivers (lifespan sweeps, extrapolation fits,
//!   bound checks) shared by the command-line tool and the acceptance suite.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approximator;
pub mod error;
pub mod lab;
pub mod profile;
pub mod radiation;
pub mod solver;
pub mod weights;

pub use approximator::{ApproxConfig, ApproxField};
pub use error::{LabError, Result};
pub use lab::{ExperimentConfig, FitReport, LifespanRecord};
pub use profile::{NonlinCoeffs, ProfileContext, TauStar};
pub use radiation::{CheckExtension, RadialProfile, RadiationField};
pub use solver::{BlowupReport, RadialIvp, SolutionField, SolverConfig};
pub use weights::{Grid1D, SpacetimePoint, WeightParams};
