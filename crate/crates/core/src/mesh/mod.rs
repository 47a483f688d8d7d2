//! Uniform space and time grids, sampled functions on them, composite
//! quadrature and banded linear algebra.

mod banded;
mod grid;
mod quadrature;

pub use banded::{banded_lu_solve, BandedLu, BandedMatrix};
pub use grid::{make_grid, GridFunction, SpaceTimeField, TimeGrid, TimeSeries, MIN_INTERIOR};
pub use grid::Grid;
pub use quadrature::{cumulative_theta, quad, quad_values, quad_weights, time_integral};
