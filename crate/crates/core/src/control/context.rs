use std::sync::Arc;

use serde::Serialize;

use super::picard::{PicardConfig, PicardOutcome};
use super::smallness::SmallnessReport;
use super::target::TargetObservable;
use crate::error::{Error, Result};
use crate::mesh::{quad_weights, Grid, GridFunction, SpaceTimeField, TimeGrid, TimeSeries};
use crate::solver::{BoundarySet, KawaharaSolver, SolverConfig};
use crate::testfn::TestFunction;

/// Everything the synthesis operators share: a factored solver, the weight
/// `ω` with its quadrature-weighted samples, and the iteration settings.
#[derive(Debug, Clone)]
pub struct SynthesisContext {
    pub(crate) solver: KawaharaSolver,
    pub(crate) omega: TestFunction,
    pub(crate) picard: PicardConfig,
    pub(crate) constant: Option<f64>,
    omega_w: Vec<f64>,
    kernel_w: Vec<f64>,
    pub(crate) zero_u: GridFunction,
    pub(crate) zero_b: BoundarySet,
    pub(crate) zero_h: TimeSeries,
}

impl SynthesisContext {
    pub fn new(
        grid: &Arc<Grid>,
        time: &Arc<TimeGrid>,
        omega: TestFunction,
        solver: SolverConfig,
        picard: PicardConfig,
    ) -> Result<Self> {
        omega.require_admissible()?;
        let l = grid.length();
        if (omega.length() - l).abs() > 1e-12 * l {
            return Err(Error::Precondition(format!(
                "test function lives on [0, {}], grid on [0, {l}]",
                omega.length()
            )));
        }
        picard.validate()?;
        let q = quad_weights(grid.len(), grid.dx());
        let omega_w = grid.nodes().iter().zip(&q).map(|(&x, w)| w * omega.eval(x)).collect();
        let kernel_w = grid.nodes().iter().zip(&q).map(|(&x, w)| w * omega.kernel(x)).collect();
        Ok(Self {
            solver: KawaharaSolver::new(grid, time, solver)?,
            omega,
            picard,
            constant: None,
            omega_w,
            kernel_w,
            zero_u: GridFunction::zeros(grid),
            zero_b: BoundarySet::zeros(time),
            zero_h: TimeSeries::zeros(time),
        })
    }

    /// Use a known constant for the smallness diagnostics instead of
    /// calibrating on demand.
    pub fn with_constant(mut self, c: f64) -> Self {
        self.constant = Some(c);
        self
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.solver.grid()
    }

    pub fn time(&self) -> &Arc<TimeGrid> {
        self.solver.time()
    }

    pub fn omega(&self) -> &TestFunction {
        &self.omega
    }

    pub fn solver(&self) -> &KawaharaSolver {
        &self.solver
    }

    pub fn picard(&self) -> &PicardConfig {
        &self.picard
    }

    pub fn solver_config(&self) -> &SolverConfig {
        self.solver.config()
    }

    pub(crate) fn constant(&self) -> Result<f64> {
        match self.constant {
            Some(c) => Ok(c),
            None => super::smallness::calibrate_constant(self.grid(), self.time(), *self.solver.config()),
        }
    }

    /// `∫ u(t_m) (ω′ + ω‴ − ω⁽⁵⁾)` per step.
    pub(crate) fn kernel_integrals(&self, field: &SpaceTimeField) -> Vec<f64> {
        field
            .rows()
            .map(|r| r.iter().zip(&self.kernel_w).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `q(t_m) = ∫ u(t_m) ω`.
    pub fn moment(&self, field: &SpaceTimeField) -> TimeSeries {
        let v = field
            .rows()
            .map(|r| r.iter().zip(&self.omega_w).map(|(a, b)| a * b).sum())
            .collect();
        TimeSeries::new(self.time(), v).expect("one value per time")
    }

    pub(crate) fn check_target(&self, target: &TargetObservable) -> Result<()> {
        if **target.time() != **self.time() {
            return Err(Error::Config("target is sampled on a different time grid".into()));
        }
        Ok(())
    }

    /// `|∫ u0 ω − φ(0)| ≤ 1e-8 (1 + |φ(0)|)`.
    pub fn check_compatibility(&self, u0: &GridFunction, target: &TargetObservable) -> Result<()> {
        let q0: f64 = u0.values().iter().zip(&self.omega_w).map(|(a, b)| a * b).sum();
        let tol = 1e-8 * (1.0 + target.phi0().abs());
        if (q0 - target.phi0()).abs() > tol {
            return Err(Error::Precondition(format!(
                "compatibility ∫ u0 ω = φ(0) fails: ∫ u0 ω = {q0:.6e}, φ(0) = {:.6e}",
                target.phi0()
            )));
        }
        Ok(())
    }

    pub(crate) fn overdetermination_residual(&self, field: &SpaceTimeField, target: &TargetObservable) -> f64 {
        self.moment(field)
            .values()
            .iter()
            .zip(target.phi().values())
            .fold(0.0_f64, |m, (q, p)| m.max((q - p).abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OuterReport {
    pub iterations: usize,
    /// `‖v_{j+1} − v_j‖_X` per outer iteration.
    pub differences: Vec<f64>,
    pub measured_rate: f64,
    pub fit_r2: Option<f64>,
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthesisReport {
    pub mode: String,
    pub control: TimeSeries,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub weighted_history: Vec<f64>,
    pub gamma: f64,
    pub measured_rate: f64,
    pub fit_r2: Option<f64>,
    /// `sup_t |∫ u ω − φ|`.
    pub overdetermination_residual: f64,
    pub smallness: Option<SmallnessReport>,
    pub outer: Option<OuterReport>,
    /// Defect-correction sweeps applied to the moment after the main solve.
    pub moment_corrections: usize,
}

impl SynthesisReport {
    pub(crate) fn from_outcome(mode: &str, out: PicardOutcome, gamma: f64, residual: f64) -> Self {
        Self {
            mode: mode.to_string(),
            control: out.control,
            iterations: out.iterations,
            residual_history: out.residual_history,
            weighted_history: out.weighted_history,
            gamma,
            measured_rate: out.measured_rate,
            fit_r2: out.fit_r2,
            overdetermination_residual: residual,
            smallness: None,
            outer: None,
            moment_corrections: 0,
        }
    }
}
