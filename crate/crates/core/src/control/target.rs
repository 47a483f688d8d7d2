use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{cumulative_theta, quad_values, SpaceTimeField, TimeGrid, TimeSeries};
use crate::testfn::TestFunction;

/// Prescribed moment `φ`, given by `φ(0)` and samples of `φ′`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetObservable {
    phi0: f64,
    phiprime: TimeSeries,
    phi: TimeSeries,
    theta: f64,
}

impl TargetObservable {
    /// `φ` is rebuilt from `φ′` with the same theta rule the time stepper uses.
    pub fn new(phi0: f64, phiprime: TimeSeries, theta: f64) -> Result<Self> {
        if !phi0.is_finite() || !phiprime.is_finite() {
            return Err(Error::Config("target has non-finite values".into()));
        }
        let mut phi = cumulative_theta(phiprime.values(), phiprime.time().dt(), theta);
        phi.iter_mut().for_each(|v| *v += phi0);
        let phi = TimeSeries::new(phiprime.time(), phi)?;
        Ok(Self {
            phi0,
            phiprime,
            phi,
            theta,
        })
    }

    pub fn zero(time: &Arc<TimeGrid>, theta: f64) -> Self {
        Self::new(0.0, TimeSeries::zeros(time), theta).expect("zero target is finite")
    }

    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    pub fn phiprime(&self) -> &TimeSeries {
        &self.phiprime
    }

    pub fn phi(&self) -> &TimeSeries {
        &self.phi
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn time(&self) -> &Arc<TimeGrid> {
        self.phiprime.time()
    }

    /// Target with `φ(0) = 0` and `φ′ − r`.
    pub fn shifted(&self, r: &TimeSeries) -> Result<Self> {
        Self::new(0.0, self.phiprime.axpby(1.0, r, -1.0), self.theta)
    }

    pub fn scaled(&self, sigma: f64) -> Result<Self> {
        Self::new(sigma * self.phi0, self.phiprime.scale(sigma), self.theta)
    }

    pub fn axpby(&self, a: f64, other: &TargetObservable, b: f64) -> Result<Self> {
        Self::new(
            a * self.phi0 + b * other.phi0,
            self.phiprime.axpby(a, &other.phiprime, b),
            self.theta,
        )
    }
}

/// Spatial profile `g` of an internal source `f(t,x) = f0(t) g(t,x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InternalControlSpec {
    g: SpaceTimeField,
    g0: f64,
    g1: TimeSeries,
}

impl InternalControlSpec {
    /// Errors unless `min_t |∫ g ω| ≥ g0 > 0`.
    pub fn new(g: SpaceTimeField, g0: f64, omega: &TestFunction) -> Result<Self> {
        if !(g0 > 0.0) {
            return Err(Error::Precondition(format!("lower bound g0 must be positive, got {g0}")));
        }
        if !g.is_finite() {
            return Err(Error::Config("profile g has non-finite values".into()));
        }
        let w = omega.sample(g.grid(), 0);
        let dx = g.grid().dx();
        let g1: Vec<f64> = g
            .rows()
            .map(|r| quad_values(&r.iter().zip(w.values()).map(|(a, b)| a * b).collect::<Vec<_>>(), dx))
            .collect();
        let g1 = TimeSeries::new(g.time(), g1)?;
        if let Some((m, v)) = g1
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| v.abs() < g0)
        {
            return Err(Error::Precondition(format!(
                "|∫ g ω| = {:.3e} at t = {} is below g0 = {g0:e}",
                v.abs(),
                g.time().time(m)
            )));
        }
        Ok(Self { g, g0, g1 })
    }

    pub fn g(&self) -> &SpaceTimeField {
        &self.g
    }

    pub fn g0(&self) -> f64 {
        self.g0
    }

    pub fn g1(&self) -> &TimeSeries {
        &self.g1
    }

    /// `f0(t) g(t, x)`.
    pub fn source(&self, f0: &TimeSeries) -> SpaceTimeField {
        self.g.scale_rows(f0)
    }
}
