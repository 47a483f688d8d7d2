//! Kawahara equation on a bounded interval: an implicit finite-difference
//! solver, moment observables, and synthesis of boundary or internal controls
//! that enforce a prescribed moment `∫ u(t, x) ω(x) dx = φ(t)`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod error;
pub mod mesh;
pub mod observables;
pub mod solver;
pub mod testfn;
pub mod verify;

pub use error::{Error, Result};
