//! Manufactured solutions, refinement studies and the bundled property suite.

mod convergence;
mod jet;
mod manufactured;
pub mod random;
mod suite;

pub use convergence::{convergence_study, fit_slope, ConvergenceRow, ConvergenceTable, BASE_INTERVALS};
pub use jet::Jet;
pub use manufactured::{manufactured_case, ManufacturedCase, CASE_NAMES};
pub use suite::{
    identity_study, run_property_suite, run_property_suite_with, IdentityStudy, PropertyReport, SuiteOptions,
    SuiteReport,
};
