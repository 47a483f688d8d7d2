//! Discrete solution map for the Kawahara initial-boundary-value problem
//!
//! `u_t + u_x + u_xxx - u_xxxxx + u u_x = f` on `(0, L)` with
//! `u(0) = h1`, `u(L) = h2`, `u_x(0) = h3`, `u_x(L) = h4` and the controlled
//! trace `u_xx(L) = h`.
//!
//! Space: centered second-order stencils on the interior nodes, two ghost
//! nodes per side eliminated by polynomial closures. Time: theta scheme with
//! one banded factorization per solver.

mod closure;
mod data;
mod scheme;
mod trajectory;

pub use data::{BoundarySet, SolverConfig, SourceSplit};
pub use scheme::{solve_linear, solve_nonlinear, KawaharaSolver};
pub use trajectory::{norm_x, Trajectory};
