use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use super::manufactured::ManufacturedCase;
use crate::error::{Error, Result};
use crate::mesh::{Grid, TimeGrid, TimeSeries};
use crate::solver::{KawaharaSolver, SolverConfig};

/// Interval count of the coarsest level.
pub const BASE_INTERVALS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub dx: f64,
    pub dt: f64,
    pub error: f64,
    /// Observed order against the previous level.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub case: String,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log error` against `log dx`.
    pub fitted_order: f64,
}

impl ConvergenceTable {
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "level,dx,dt,error,order")?;
        for r in &self.rows {
            let order = r.order.map(|o| format!("{o:?}")).unwrap_or_default();
            writeln!(w, "{},{:?},{:?},{:?},{}", r.level, r.dx, r.dt, r.error, order)?;
        }
        Ok(())
    }
}

/// Least-squares slope of `y` on `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Max-norm error of the scheme against the manufactured field over levels
/// with `64 * 2^k` intervals, horizon `T`, and `dt = dx`.
pub fn convergence_study(
    case: &ManufacturedCase,
    levels: usize,
    horizon: f64,
    config: SolverConfig,
) -> Result<ConvergenceTable> {
    if levels < 3 {
        return Err(Error::Config(format!("a convergence study needs at least 3 levels, got {levels}")));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    for level in 0..levels {
        let intervals = BASE_INTERVALS << level;
        let grid = Arc::new(Grid::new(case.length(), intervals - 1)?);
        let time = Arc::new(TimeGrid::matching(horizon, &grid)?);
        let wrap = |e: Error| match e {
            Error::SolverBreakdown { step, reason } => Error::SolverBreakdown {
                step,
                reason: format!("level {level}: {reason}"),
            },
            other => other,
        };
        let solver = KawaharaSolver::new(&grid, &time, config).map_err(wrap)?;
        let u0 = case.u0(&grid);
        let bset = case.boundary(&time);
        let h: TimeSeries = case.control(&time);
        let f = case.source(&grid, &time);
        let traj = if case.is_nonlinear() {
            solver.solve_nonlinear(&u0, &bset, &h, &f)
        } else {
            solver.solve_linear(&u0, &bset, &h, &f)
        }
        .map_err(wrap)?;
        let exact = case.exact(&grid, &time);
        let error = traj
            .field()
            .data()
            .iter()
            .zip(exact.data())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        let order = rows
            .last()
            .map(|p| (p.error / error).ln() / (p.dx / grid.dx()).ln());
        rows.push(ConvergenceRow {
            level,
            dx: grid.dx(),
            dt: time.dt(),
            error,
            order,
        });
    }
    let lx: Vec<f64> = rows.iter().map(|r| r.dx.ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.error.ln()).collect();
    Ok(ConvergenceTable {
        case: case.name().to_string(),
        fitted_order: fit_slope(&lx, &ly),
        rows,
    })
}
