use std::sync::Arc;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Smallest admissible interior node count.
pub const MIN_INTERIOR: usize = 16;

/// Uniform grid on `[0, L]` with `N` interior nodes and both endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    length: f64,
    interior: usize,
    dx: f64,
    nodes: Vec<f64>,
}

pub fn make_grid(length: f64, interior: usize) -> Result<Grid> {
    Grid::new(length, interior)
}

impl Grid {
    pub fn new(length: f64, interior: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Config(format!("domain length must be positive, got {length}")));
        }
        if interior < MIN_INTERIOR {
            return Err(Error::Config(format!(
                "interior node count must be at least {MIN_INTERIOR}, got {interior}"
            )));
        }
        let dx = length / (interior + 1) as f64;
        let mut nodes: Vec<f64> = (0..interior + 2).map(|i| i as f64 * dx).collect();
        nodes[interior + 1] = length;
        Ok(Self {
            length,
            interior,
            dx,
            nodes,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Interior node count `N`.
    pub fn interior(&self) -> usize {
        self.interior
    }

    /// Total node count `N + 2`.
    pub fn len(&self) -> usize {
        self.interior + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }
}

/// Uniform time grid on `[0, T]` with `M` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
    dt: f64,
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Config(format!("time horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::Config("time step count must be at least 1".into()));
        }
        let dt = horizon / steps as f64;
        let mut times: Vec<f64> = (0..=steps).map(|m| m as f64 * dt).collect();
        times[steps] = horizon;
        Ok(Self {
            horizon,
            steps,
            dt,
            times,
        })
    }

    /// Time grid whose step is the spatial spacing of `grid` (rounded so the
    /// horizon is hit exactly).
    pub fn matching(horizon: f64, grid: &Grid) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Config(format!("time horizon must be positive, got {horizon}")));
        }
        let steps = ((horizon / grid.dx()) - 1e-9).ceil().max(1.0) as usize;
        Self::new(horizon, steps)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Node count `M + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, m: usize) -> f64 {
        self.times[m]
    }
}

/// Samples of a function of `x` at every node of a grid, endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Argument(format!(
                "grid function needs {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self {
            grid: Arc::clone(grid),
            values,
        })
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self {
            grid: Arc::clone(grid),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: Arc::clone(grid),
            values: grid.nodes().iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &GridFunction, b: f64) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        Self {
            grid: Arc::clone(&self.grid),
            values,
        }
    }

    pub fn mul(&self, other: &GridFunction) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(u, v)| u * v).collect();
        Self {
            grid: Arc::clone(&self.grid),
            values,
        }
    }

    /// Discrete `L^2(0, L)` norm.
    pub fn l2_norm(&self) -> f64 {
        super::quad_values(&self.values.iter().map(|v| v * v).collect::<Vec<_>>(), self.grid.dx()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Samples of a function of `t` at every node of a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    time: Arc<TimeGrid>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(time: &Arc<TimeGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != time.len() {
            return Err(Error::Argument(format!(
                "time series needs {} values, got {}",
                time.len(),
                values.len()
            )));
        }
        Ok(Self {
            time: Arc::clone(time),
            values,
        })
    }

    pub fn zeros(time: &Arc<TimeGrid>) -> Self {
        Self {
            time: Arc::clone(time),
            values: vec![0.0; time.len()],
        }
    }

    pub fn from_fn(time: &Arc<TimeGrid>, f: impl Fn(f64) -> f64) -> Self {
        Self {
            time: Arc::clone(time),
            values: time.times().iter().map(|&t| f(t)).collect(),
        }
    }

    pub fn time(&self) -> &Arc<TimeGrid> {
        &self.time
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Piecewise-linear interpolation; clamps outside `[0, T]`.
    pub fn sample_at(&self, t: f64) -> f64 {
        let dt = self.time.dt();
        let last = self.values.len() - 1;
        if t <= 0.0 {
            return self.values[0];
        }
        if t >= self.time.horizon() {
            return self.values[last];
        }
        let s = t / dt;
        let k = (s.floor() as usize).min(last - 1);
        let w = s - k as f64;
        (1.0 - w) * self.values[k] + w * self.values[k + 1]
    }

    /// Linear interpolation of this series onto another time grid.
    pub fn resample(&self, target: &Arc<TimeGrid>) -> Self {
        Self::from_fn(target, |t| self.sample_at(t))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            time: Arc::clone(&self.time),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    /// Pointwise combination `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &TimeSeries, b: f64) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        Self {
            time: Arc::clone(&self.time),
            values,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Discrete `L^2(0, T)` norm.
    pub fn l2_norm(&self) -> f64 {
        super::quad_values(&self.values.iter().map(|v| v * v).collect::<Vec<_>>(), self.time.dt()).sqrt()
    }

    /// Discrete `L^1(0, T)` norm.
    pub fn l1_norm(&self) -> f64 {
        super::quad_values(&self.values.iter().map(|v| v.abs()).collect::<Vec<_>>(), self.time.dt())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl Serialize for TimeSeries {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("TimeSeries", 2)?;
        s.serialize_field("t", self.time.times())?;
        s.serialize_field("values", &self.values)?;
        s.end()
    }
}

/// Time-indexed sequence of grid functions, stored row-major
/// (`(M + 1) x (N + 2)`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    grid: Arc<Grid>,
    time: Arc<TimeGrid>,
    data: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(grid: &Arc<Grid>, time: &Arc<TimeGrid>) -> Self {
        Self {
            grid: Arc::clone(grid),
            time: Arc::clone(time),
            data: vec![0.0; grid.len() * time.len()],
        }
    }

    pub fn from_fn(grid: &Arc<Grid>, time: &Arc<TimeGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len() * time.len());
        for &t in time.times() {
            data.extend(grid.nodes().iter().map(|&x| f(t, x)));
        }
        Self {
            grid: Arc::clone(grid),
            time: Arc::clone(time),
            data,
        }
    }

    pub fn from_rows(grid: &Arc<Grid>, time: &Arc<TimeGrid>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != time.len() {
            return Err(Error::Argument(format!(
                "space-time field needs {} rows, got {}",
                time.len(),
                rows.len()
            )));
        }
        let mut data = Vec::with_capacity(grid.len() * time.len());
        for (m, row) in rows.into_iter().enumerate() {
            if row.len() != grid.len() {
                return Err(Error::Argument(format!(
                    "row {m} needs {} values, got {}",
                    grid.len(),
                    row.len()
                )));
            }
            data.extend(row);
        }
        Ok(Self {
            grid: Arc::clone(grid),
            time: Arc::clone(time),
            data,
        })
    }

    /// Field constant in time.
    pub fn steady(profile: &GridFunction, time: &Arc<TimeGrid>) -> Self {
        let mut data = Vec::with_capacity(profile.values().len() * time.len());
        for _ in 0..time.len() {
            data.extend_from_slice(profile.values());
        }
        Self {
            grid: Arc::clone(profile.grid()),
            time: Arc::clone(time),
            data,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn time(&self) -> &Arc<TimeGrid> {
        &self.time
    }

    pub fn row(&self, m: usize) -> &[f64] {
        let n = self.grid.len();
        &self.data[m * n..(m + 1) * n]
    }

    pub fn row_mut(&mut self, m: usize) -> &mut [f64] {
        let n = self.grid.len();
        &mut self.data[m * n..(m + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.grid.len())
    }

    pub fn row_function(&self, m: usize) -> GridFunction {
        GridFunction {
            grid: Arc::clone(&self.grid),
            values: self.row(m).to_vec(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            time: Arc::clone(&self.time),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Multiply every row by the matching entry of a time series.
    pub fn scale_rows(&self, weights: &TimeSeries) -> Self {
        let mut out = self.clone();
        for (m, w) in weights.values().iter().enumerate() {
            out.row_mut(m).iter_mut().for_each(|v| *v *= w);
        }
        out
    }

    pub fn axpby(&self, a: f64, other: &SpaceTimeField, b: f64) -> Self {
        let data = self.data.iter().zip(&other.data).map(|(u, v)| a * u + b * v).collect();
        Self {
            grid: Arc::clone(&self.grid),
            time: Arc::clone(&self.time),
            data,
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Space-time `L^2(Q_T)` norm.
    pub fn l2_norm(&self) -> f64 {
        let per_time: Vec<f64> = self
            .rows()
            .map(|r| super::quad_values(&r.iter().map(|v| v * v).collect::<Vec<_>>(), self.grid.dx()))
            .collect();
        super::quad_values(&per_time, self.time.dt()).sqrt()
    }

    /// `L^1(0, T; L^2(0, L))` norm.
    pub fn l1_l2_norm(&self) -> f64 {
        let per_time: Vec<f64> = self
            .rows()
            .map(|r| super::quad_values(&r.iter().map(|v| v * v).collect::<Vec<_>>(), self.grid.dx()).sqrt())
            .collect();
        super::quad_values(&per_time, self.time.dt())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spacing_and_endpoints() {
        let g = make_grid(1.0, 99).unwrap();
        assert!((g.dx() - 0.01).abs() < 1e-15);
        assert_eq!(g.len(), 101);
        assert_eq!(g.nodes()[0], 0.0);

        let g = make_grid(2.0, 199).unwrap();
        assert_eq!(*g.nodes().last().unwrap(), 2.0);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn grid_guards() {
        assert!(matches!(make_grid(1.0, 4), Err(Error::Config(_))));
        assert!(matches!(make_grid(0.0, 32), Err(Error::Config(_))));
        assert!(matches!(make_grid(-1.0, 32), Err(Error::Config(_))));
        assert!(TimeGrid::new(0.0, 4).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn time_grid_matching_uses_dx() {
        let g = make_grid(1.0, 63).unwrap();
        let tg = TimeGrid::matching(1.0, &g).unwrap();
        assert_eq!(tg.steps(), 64);
        assert_eq!(tg.times()[64], 1.0);
        let tg = TimeGrid::matching(0.5, &g).unwrap();
        assert_eq!(tg.steps(), 32);
    }

    #[test]
    fn series_interpolation() {
        let tg = Arc::new(TimeGrid::new(1.0, 4).unwrap());
        let s = TimeSeries::from_fn(&tg, |t| 2.0 * t + 1.0);
        assert!((s.sample_at(0.3) - 1.6).abs() < 1e-14);
        assert_eq!(s.sample_at(-1.0), 1.0);
        assert_eq!(s.sample_at(2.0), 3.0);
        let fine = Arc::new(TimeGrid::new(1.0, 10).unwrap());
        let r = s.resample(&fine);
        for (t, v) in fine.times().iter().zip(r.values()) {
            assert!((v - (2.0 * t + 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        let g = Arc::new(make_grid(1.0, 16).unwrap());
        assert!(GridFunction::new(&g, vec![0.0; 3]).is_err());
        let tg = Arc::new(TimeGrid::new(1.0, 4).unwrap());
        assert!(TimeSeries::new(&tg, vec![0.0; 4]).is_err());
        assert!(SpaceTimeField::from_rows(&g, &tg, vec![vec![0.0; 18]; 4]).is_err());
    }
}
