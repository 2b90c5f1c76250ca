//! Ricci flow of surfaces of revolution.
//!
//! A surface of revolution with profile `(f(ξ), h(ξ))` in isothermal
//! coordinates has metric `u(dξ² + dθ²)` with `u = f²`, and Ricci flow
//! reduces to the logarithmic diffusion equation `u_t = (log u)_ξξ`.
//!
//! * [`profile`] turns a generating curve into the isothermal coordinate and
//!   initial data `u₀`.
//! * [`logdiff`] advances `u` with an implicit conservative scheme.
//! * [`embed`] rebuilds the embedded surface, folds the creased torus and
//!   exports meshes.
//! * [`diagnostics`] evaluates curvature, residuals and the analytic estimates.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod embed;
pub mod grid;
pub mod interp;
pub mod linalg;
pub mod logdiff;
pub mod profile;
pub mod quadrature;
pub mod stencil;

pub use diagnostics::{DiagError, DiagnosticReport, PeriodicLimits};
pub use embed::{EmbedError, SurfaceFrame};
pub use grid::{Boundary, FluxBoundary, GridError, IsothermalGrid};
pub use logdiff::{FlowError, FlowState, Frame, StepController, Stepper, StepperConfig, Trajectory};
pub use profile::{build_profile, ProfileCurve, ProfileError, SurfaceSpec, Topology};

/// Any error raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Diag(#[from] DiagError),
}
