use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Grid, SpaceTimeField, TimeGrid, TimeSeries};

/// Prescribed traces `u(t,0)`, `u(t,L)`, `u_x(t,0)`, `u_x(t,L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySet {
    pub h1: TimeSeries,
    pub h2: TimeSeries,
    pub h3: TimeSeries,
    pub h4: TimeSeries,
}

impl BoundarySet {
    pub fn new(h1: TimeSeries, h2: TimeSeries, h3: TimeSeries, h4: TimeSeries) -> Result<Self> {
        let t = h1.time();
        for (name, s) in [("h2", &h2), ("h3", &h3), ("h4", &h4)] {
            if s.time() != t {
                return Err(Error::Config(format!("boundary trace {name} is on a different time grid")));
            }
        }
        for (name, s) in [("h1", &h1), ("h2", &h2), ("h3", &h3), ("h4", &h4)] {
            if !s.is_finite() {
                return Err(Error::Config(format!("boundary trace {name} has non-finite values")));
            }
        }
        Ok(Self { h1, h2, h3, h4 })
    }

    pub fn zeros(time: &Arc<TimeGrid>) -> Self {
        let z = TimeSeries::zeros(time);
        Self {
            h1: z.clone(),
            h2: z.clone(),
            h3: z.clone(),
            h4: z,
        }
    }

    pub fn time(&self) -> &Arc<TimeGrid> {
        self.h1.time()
    }

    pub fn is_zero(&self) -> bool {
        self.traces().iter().all(|s| s.values().iter().all(|&v| v == 0.0))
    }

    pub fn traces(&self) -> [&TimeSeries; 4] {
        [&self.h1, &self.h2, &self.h3, &self.h4]
    }

    pub fn at(&self, m: usize) -> [f64; 4] {
        [
            self.h1.values()[m],
            self.h2.values()[m],
            self.h3.values()[m],
            self.h4.values()[m],
        ]
    }

    pub fn axpby(&self, a: f64, other: &BoundarySet, b: f64) -> Self {
        Self {
            h1: self.h1.axpby(a, &other.h1, b),
            h2: self.h2.axpby(a, &other.h2, b),
            h3: self.h3.axpby(a, &other.h3, b),
            h4: self.h4.axpby(a, &other.h4, b),
        }
    }

    pub fn resample(&self, time: &Arc<TimeGrid>) -> Self {
        Self {
            h1: self.h1.resample(time),
            h2: self.h2.resample(time),
            h3: self.h3.resample(time),
            h4: self.h4.resample(time),
        }
    }
}

/// Source `f = f1 + ∂x f2`. Either part may be absent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SourceSplit {
    pub f1: Option<SpaceTimeField>,
    pub f2: Option<SpaceTimeField>,
}

impl SourceSplit {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn from_f1(f1: SpaceTimeField) -> Self {
        Self { f1: Some(f1), f2: None }
    }

    pub fn with_f2(mut self, f2: SpaceTimeField) -> Self {
        self.f2 = Some(f2);
        self
    }

    pub fn has_f2(&self) -> bool {
        self.f2.is_some()
    }

    pub fn is_zero(&self) -> bool {
        let zero = |f: &Option<SpaceTimeField>| f.as_ref().is_none_or(|f| f.data().iter().all(|&v| v == 0.0));
        zero(&self.f1) && zero(&self.f2)
    }

    pub(crate) fn check(&self, grid: &Grid, time: &TimeGrid) -> Result<()> {
        for (name, f) in [("f1", &self.f1), ("f2", &self.f2)] {
            if let Some(f) = f {
                if f.grid().len() != grid.len() || f.time().len() != time.len() {
                    return Err(Error::Config(format!("source part {name} is sampled on mismatched grids")));
                }
                if !f.is_finite() {
                    return Err(Error::Config(format!("source part {name} has non-finite values")));
                }
            }
        }
        Ok(())
    }

    pub fn axpby(&self, a: f64, other: &SourceSplit, b: f64) -> Self {
        let comb = |x: &Option<SpaceTimeField>, y: &Option<SpaceTimeField>| match (x, y) {
            (Some(x), Some(y)) => Some(x.axpby(a, y, b)),
            (Some(x), None) => Some(x.map(|v| a * v)),
            (None, Some(y)) => Some(y.map(|v| b * v)),
            (None, None) => None,
        };
        Self {
            f1: comb(&self.f1, &other.f1),
            f2: comb(&self.f2, &other.f2),
        }
    }
}

/// Time-stepping parameters. The equation coefficients are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub theta: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            theta: 0.5,
            picard_tol: 1e-12,
            picard_max: 100,
        }
    }
}

impl SolverConfig {
    /// Coefficients of `u_x`, `u_xxx`, `u_xxxxx`.
    pub const COEFFICIENTS: (f64, f64, f64) = (1.0, 1.0, -1.0);

    pub fn validate(&self) -> Result<()> {
        if !(0.5..=1.0).contains(&self.theta) {
            return Err(Error::Config(format!("theta must lie in [0.5, 1], got {}", self.theta)));
        }
        if !(self.picard_tol > 0.0) {
            return Err(Error::Config("picard_tol must be positive".into()));
        }
        if self.picard_max == 0 {
            return Err(Error::Config("picard_max must be at least 1".into()));
        }
        Ok(())
    }
}
