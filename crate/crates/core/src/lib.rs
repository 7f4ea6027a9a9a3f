//! Structure-preserving particle scheme for one-dimensional viscous
//! compressible flow between two walls.
//!
//! The fluid is split into `n` particles of equal mass `m/n`. Particle
//! interactions are derived from the pressure law `P(ρ)` and the viscosity
//! law `μ(ρ)` so that total mass is conserved and two energy functionals,
//! the mechanical energy `Eₙ` and the modified mechanical energy `Wₙ`, decay
//! along every trajectory.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, configuration and
//! the command-line driver live in the companion `pflow` crate.
//!
//! Module map:
//!
//! * [`model`]: constitutive laws and the functions derived from them
//!   (`k`, `Q`, `Φ`, `K`, the `F` envelope, limit probing).
//! * [`particles`]: particle state, ODE right-hand side, discrete functionals,
//!   spacing bounds.
//! * [`integrator`]: adaptive Dormand–Prince time stepping with snapshots.
//! * [`initial`]: equal-mass particle placement and the initial-data
//!   admissibility verdict.
//! * [`reconstruct`]: piecewise-linear density/velocity fields and the
//!   continuous functionals evaluated on them.
//! * [`validation`]: weak-form residuals, decay checks and convergence
//!   studies.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;
mod fmath;

pub mod initial;
pub mod integrator;
pub mod model;
pub mod particles;
pub mod quadrature;
pub mod reconstruct;
pub mod validation;

pub use error::{Error, Result};
pub use error::Side;
pub use initial::{AdmissibilityReport, DensityProfile, InitialData, Theorem32Constants, VelocityProfile};
pub use integrator::{IntegratorConfig, Snapshot, SnapshotSeries};
pub use model::{FluidModel, ModelKind};
pub use particles::{DiscreteFunctionals, ParticleState, StateDerivative};
pub use reconstruct::ReconstructedField;
