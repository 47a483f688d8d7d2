use std::sync::Arc;

use super::closure::{Closure, NB};
use super::data::{BoundarySet, SolverConfig, SourceSplit};
use super::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::mesh::{BandedLu, BandedMatrix, Grid, GridFunction, SpaceTimeField, TimeGrid, TimeSeries};

const KL: usize = 3;
const KU: usize = 4;

/// Stencil of `-D1 - D3 + D5` as (offset, coefficient).
fn stencil(dx: f64) -> [(isize, f64); 6] {
    let a = 1.0 / (2.0 * dx);
    let b = 1.0 / (2.0 * dx.powi(3));
    let c = 1.0 / (2.0 * dx.powi(5));
    [
        (-3, -c),
        (-2, b + 4.0 * c),
        (-1, a - 2.0 * b - 5.0 * c),
        (1, -a + 2.0 * b + 5.0 * c),
        (2, -b - 4.0 * c),
        (3, c),
    ]
}

/// Theta-scheme stepper with a prefactored step matrix.
///
/// The semi-discrete system is `du/dt = A u + B beta + F - D0(u^2 / 2)` on the
/// interior nodes, `beta = [h1, h2, h3, h4, h]`.
#[derive(Debug, Clone)]
pub struct KawaharaSolver {
    grid: Arc<Grid>,
    time: Arc<TimeGrid>,
    config: SolverConfig,
    closure: Closure,
    a: BandedMatrix,
    // rows of B that are not identically zero
    b_rows: Vec<(usize, [f64; NB])>,
    explicit: BandedMatrix,
    lu: BandedLu,
}

impl KawaharaSolver {
    pub fn new(grid: &Arc<Grid>, time: &Arc<TimeGrid>, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let n = grid.interior();
        let dx = grid.dx();
        let closure = Closure::new(n, dx);
        let mut a = BandedMatrix::new(n, KL, KU)?;
        let mut b_rows = Vec::new();
        for i in 1..=n {
            let mut brow = [0.0; NB];
            for (o, c) in stencil(dx) {
                let ex = closure.expand(i as isize + o);
                for (j, w) in ex.cols {
                    a.add(i - 1, j, c * w);
                }
                for (k, w) in ex.bnd.iter().enumerate() {
                    brow[k] += c * w;
                }
            }
            if brow.iter().any(|&v| v != 0.0) {
                b_rows.push((i - 1, brow));
            }
        }
        let dt = time.dt();
        let theta = config.theta;
        let explicit = a.shifted(1.0, (1.0 - theta) * dt);
        let lu = BandedLu::factor(&a.shifted(1.0, -theta * dt)).map_err(|e| Error::SolverBreakdown {
            step: 0,
            reason: format!("step matrix factorization failed: {e}"),
        })?;
        Ok(Self {
            grid: Arc::clone(grid),
            time: Arc::clone(time),
            config,
            closure,
            a,
            b_rows,
            explicit,
            lu,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn time(&self) -> &Arc<TimeGrid> {
        &self.time
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Spatial operator on interior unknowns with homogeneous boundary data.
    pub fn operator(&self) -> &BandedMatrix {
        &self.a
    }

    pub fn solve_linear(
        &self,
        u0: &GridFunction,
        bset: &BoundarySet,
        h: &TimeSeries,
        f: &SourceSplit,
    ) -> Result<Trajectory> {
        self.run(u0, bset, h, f, false)
    }

    pub fn solve_nonlinear(
        &self,
        u0: &GridFunction,
        bset: &BoundarySet,
        h: &TimeSeries,
        f: &SourceSplit,
    ) -> Result<Trajectory> {
        self.run(u0, bset, h, f, true)
    }

    fn on_time(&self, s: &TimeSeries) -> TimeSeries {
        if Arc::ptr_eq(s.time(), &self.time) || **s.time() == *self.time {
            s.clone()
        } else {
            s.resample(&self.time)
        }
    }

    /// `B beta + f1 + D0 f2` at time index `m`.
    fn forcing(&self, beta: &[f64; NB], f: &SourceSplit, m: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, brow) in &self.b_rows {
            out[*i] = brow.iter().zip(beta).map(|(w, v)| w * v).sum();
        }
        if let Some(f1) = &f.f1 {
            let r = f1.row(m);
            for (i, v) in out.iter_mut().enumerate() {
                *v += r[i + 1];
            }
        }
        if let Some(f2) = &f.f2 {
            let r = f2.row(m);
            let inv = 1.0 / (2.0 * self.grid.dx());
            for (i, v) in out.iter_mut().enumerate() {
                *v += (r[i + 2] - r[i]) * inv;
            }
        }
    }

    /// `D0(u^2 / 2)` on interior nodes with endpoint values `left`, `right`.
    fn convection(&self, u: &[f64], left: f64, right: f64, out: &mut [f64]) {
        let n = u.len();
        let inv = 1.0 / (4.0 * self.grid.dx());
        let at = |k: usize| -> f64 {
            if k == 0 {
                left
            } else if k == n + 1 {
                right
            } else {
                u[k - 1]
            }
        };
        for (i, v) in out.iter_mut().enumerate() {
            let (p, q) = (at(i + 2), at(i));
            *v = (p * p - q * q) * inv;
        }
    }

    fn run(
        &self,
        u0: &GridFunction,
        bset: &BoundarySet,
        h: &TimeSeries,
        f: &SourceSplit,
        nonlinear: bool,
    ) -> Result<Trajectory> {
        let n = self.grid.interior();
        if u0.values().len() != self.grid.len() {
            return Err(Error::Config(format!(
                "initial state has {} values, grid has {} nodes",
                u0.values().len(),
                self.grid.len()
            )));
        }
        if u0.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("initial state has non-finite values".into()));
        }
        if !h.is_finite() {
            return Err(Error::Config("control trace has non-finite values".into()));
        }
        f.check(&self.grid, &self.time)?;
        let bset = if **bset.time() == *self.time {
            bset.clone()
        } else {
            bset.resample(&self.time)
        };
        let h = self.on_time(h);
        let beta = |m: usize| -> [f64; NB] {
            let b = bset.at(m);
            [b[0], b[1], b[2], b[3], h.values()[m]]
        };

        let steps = self.time.steps();
        let dt = self.time.dt();
        let theta = self.config.theta;
        let mut field = SpaceTimeField::zeros(&self.grid, &self.time);
        let mut uxx0 = vec![0.0; steps + 1];

        let mut u: Vec<f64> = u0.values()[1..=n].to_vec();
        let b0 = beta(0);
        {
            let row = field.row_mut(0);
            row[0] = b0[0];
            row[1..=n].copy_from_slice(&u);
            row[n + 1] = b0[1];
        }
        uxx0[0] = self.closure.uxx0(b0[0], b0[2], &u);

        let mut g_prev = vec![0.0; n];
        let mut g_next = vec![0.0; n];
        let mut nl_prev = vec![0.0; n];
        let mut nl_next = vec![0.0; n];
        let mut base = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        self.forcing(&b0, f, 0, &mut g_prev);
        if nonlinear {
            self.convection(&u, b0[0], b0[1], &mut nl_prev);
        }

        for m in 0..steps {
            let b1 = beta(m + 1);
            self.forcing(&b1, f, m + 1, &mut g_next);
            self.explicit.matvec_into(&u, &mut base);
            for i in 0..n {
                base[i] += dt * (theta * g_next[i] + (1.0 - theta) * g_prev[i]);
            }
            let next = if nonlinear {
                let mut cur = u.clone();
                let mut converged = false;
                let mut delta = f64::INFINITY;
                for _ in 0..self.config.picard_max {
                    self.convection(&cur, b1[0], b1[1], &mut nl_next);
                    for i in 0..n {
                        rhs[i] = base[i] - dt * (theta * nl_next[i] + (1.0 - theta) * nl_prev[i]);
                    }
                    self.lu.solve_in_place(&mut rhs);
                    delta = rhs
                        .iter()
                        .zip(&cur)
                        .fold(0.0_f64, |d, (a, b)| d.max((a - b).abs()));
                    std::mem::swap(&mut cur, &mut rhs);
                    if !delta.is_finite() {
                        return Err(Error::SolverBreakdown {
                            step: m + 1,
                            reason: "non-finite values in nonlinear iteration".into(),
                        });
                    }
                    if delta < self.config.picard_tol {
                        converged = true;
                        break;
                    }
                }
                if !converged {
                    return Err(Error::NonlinearNonConvergence {
                        step: m + 1,
                        residual: delta,
                    });
                }
                self.convection(&cur, b1[0], b1[1], &mut nl_prev);
                cur
            } else {
                rhs.copy_from_slice(&base);
                self.lu.solve_in_place(&mut rhs);
                rhs.clone()
            };
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::SolverBreakdown {
                    step: m + 1,
                    reason: "non-finite values in solution".into(),
                });
            }
            u = next;
            std::mem::swap(&mut g_prev, &mut g_next);
            let row = field.row_mut(m + 1);
            row[0] = b1[0];
            row[1..=n].copy_from_slice(&u);
            row[n + 1] = b1[1];
            uxx0[m + 1] = self.closure.uxx0(b1[0], b1[2], &u);
        }

        Ok(Trajectory::new(
            field,
            TimeSeries::new(&self.time, uxx0)?,
            h,
            bset,
            Some(self.config),
        ))
    }
}

/// One-shot linear solve.
pub fn solve_linear(
    u0: &GridFunction,
    bset: &BoundarySet,
    h: &TimeSeries,
    f: &SourceSplit,
    config: SolverConfig,
    grid: &Arc<Grid>,
    time: &Arc<TimeGrid>,
) -> Result<Trajectory> {
    KawaharaSolver::new(grid, time, config)?.solve_linear(u0, bset, h, f)
}

/// One-shot nonlinear solve.
pub fn solve_nonlinear(
    u0: &GridFunction,
    bset: &BoundarySet,
    h: &TimeSeries,
    f: &SourceSplit,
    config: SolverConfig,
    grid: &Arc<Grid>,
    time: &Arc<TimeGrid>,
) -> Result<Trajectory> {
    KawaharaSolver::new(grid, time, config)?.solve_nonlinear(u0, bset, h, f)
}
