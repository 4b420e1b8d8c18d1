//! Generalized projected gradient descent for low-dimensional models.
//!
//! The crate recovers `x̂ ∈ Σ` from `y = Ax̂` with iterations of the form
//! `x_{n+1} = P(x_n) − μAᵀ(AP(x_n) − y)`, and computes the two constants that
//! bound the linear rate: the restricted isometry constant `δ` of `μAᵀA` and
//! the restricted Lipschitz constant `β` of the projection `P`. When
//! `δβ < 1` the error contracts by at least `δβ` per step.
//!
//! - [`linalg`]: dense vectors and matrices, SVD, Haar transform, seeded RNG
//! - [`models`]: model sets and their orthogonal projections
//! - [`certify`]: quadratic forms `Q_c`, `R_c` and Lipschitz certificates
//! - [`operators`]: measurement operators and isometry constants
//! - [`solvers`]: GPGD, PnP-PGM, GM-RED, Landweber, exhaustive oracle
//! - [`diagnostics`]: per-iterate quantities, rate fitting, reports
//! - [`denoise`]: projection plug-ins and the external denoiser bridge
//! - [`io`]: image files

pub mod certify;
pub mod denoise;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod linalg;
pub mod models;
pub mod operators;
pub mod solvers;

pub use denoise::GeneralizedProjection;
pub use error::{Error, Result};
pub use linalg::{Matrix, RngStream, Vector};
pub use models::ModelSet;
pub use operators::MeasurementOp;
