//! Control synthesis for the integral overdetermination `∫ u(t) ω = φ(t)`.
//!
//! A boundary control `h = u_xx(·, L)` or an internal amplitude `f0` is found
//! as the fixed point of an affine map `A` built from one linear solve, and
//! the nonlinear problem adds an outer fixed point over the convection term.

mod context;
mod picard;
mod smallness;
mod synthesis;
mod target;

pub use context::{OuterReport, SynthesisContext, SynthesisReport};
pub use picard::{fit_window, geometric_fit, PicardConfig};
pub use smallness::{
    calibrate_constant, data_size, smallness_diagnostics, smallness_report, CalibrationEntry, CalibrationStore,
    DriveData, SmallnessReport,
};
pub use synthesis::{
    apply_a_boundary, apply_a_internal, controllable_boundary_linear, controllable_internal_linear, gamma_boundary,
    gamma_internal, theta_boundary_nonlinear, theta_internal_nonlinear,
};
pub use target::{InternalControlSpec, TargetObservable};
