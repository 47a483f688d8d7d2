use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use super::data::{BoundarySet, SolverConfig};
use crate::error::Result;
use crate::mesh::{quad_values, time_integral, Grid, GridFunction, SpaceTimeField, TimeGrid, TimeSeries};

/// A discrete solution together with its second-derivative traces.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    u: SpaceTimeField,
    uxx0: TimeSeries,
    uxxl: TimeSeries,
    bset: BoundarySet,
    config: Option<SolverConfig>,
}

impl Trajectory {
    pub(crate) fn new(
        u: SpaceTimeField,
        uxx0: TimeSeries,
        uxxl: TimeSeries,
        bset: BoundarySet,
        config: Option<SolverConfig>,
    ) -> Self {
        Self {
            u,
            uxx0,
            uxxl,
            bset,
            config,
        }
    }

    /// Wraps a sampled field that did not come from the solver. Traces are
    /// read off the samples: endpoint values and one-sided second-order
    /// differences.
    pub fn from_field(u: SpaceTimeField) -> Self {
        let time = Arc::clone(u.time());
        let dx = u.grid().dx();
        let n = u.grid().len();
        let d2 = |a: f64, b: f64, c: f64, d: f64| (2.0 * a - 5.0 * b + 4.0 * c - d) / (dx * dx);
        let d1 = |a: f64, b: f64, c: f64| (-3.0 * a + 4.0 * b - c) / (2.0 * dx);
        let mut tr: Vec<Vec<f64>> = (0..6).map(|_| Vec::with_capacity(time.len())).collect();
        for r in u.rows() {
            tr[0].push(r[0]);
            tr[1].push(r[n - 1]);
            tr[2].push(d1(r[0], r[1], r[2]));
            tr[3].push(-d1(r[n - 1], r[n - 2], r[n - 3]));
            tr[4].push(d2(r[0], r[1], r[2], r[3]));
            tr[5].push(d2(r[n - 1], r[n - 2], r[n - 3], r[n - 4]));
        }
        let mut it = tr.into_iter().map(|v| TimeSeries::new(&time, v).expect("one value per time"));
        let (h1, h2, h3, h4, uxx0, uxxl) = (
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
        );
        Self {
            u,
            uxx0,
            uxxl,
            bset: BoundarySet { h1, h2, h3, h4 },
            config: None,
        }
    }

    pub fn field(&self) -> &SpaceTimeField {
        &self.u
    }

    pub fn into_field(self) -> SpaceTimeField {
        self.u
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.u.grid()
    }

    pub fn time(&self) -> &Arc<TimeGrid> {
        self.u.time()
    }

    /// `u(t_m, ·)` including endpoints.
    pub fn state(&self, m: usize) -> GridFunction {
        self.u.row_function(m)
    }

    pub fn final_state(&self) -> GridFunction {
        self.state(self.time().steps())
    }

    /// `u_xx(t, 0)`.
    pub fn uxx0(&self) -> &TimeSeries {
        &self.uxx0
    }

    /// `u_xx(t, L)`, the control trace.
    pub fn uxxl(&self) -> &TimeSeries {
        &self.uxxl
    }

    pub fn boundary(&self) -> &BoundarySet {
        &self.bset
    }

    pub fn config(&self) -> Option<&SolverConfig> {
        self.config.as_ref()
    }

    /// `‖u(t_m)‖_{L²}` for every step.
    pub fn l2_series(&self) -> TimeSeries {
        let dx = self.grid().dx();
        let v = self
            .u
            .rows()
            .map(|r| quad_values(&r.iter().map(|x| x * x).collect::<Vec<_>>(), dx).sqrt())
            .collect();
        TimeSeries::new(self.time(), v).expect("one value per time")
    }

    /// Second difference quotient at every node: centered in the interior,
    /// the stored traces at the endpoints.
    pub fn uxx_field(&self) -> SpaceTimeField {
        let dx2 = self.grid().dx().powi(2);
        let n = self.grid().len();
        let mut out = SpaceTimeField::zeros(self.grid(), self.time());
        for m in 0..self.time().len() {
            let r = self.u.row(m);
            let o = out.row_mut(m);
            o[0] = self.uxx0.values()[m];
            o[n - 1] = self.uxxl.values()[m];
            for i in 1..n - 1 {
                o[i] = (r[i + 1] - 2.0 * r[i] + r[i - 1]) / dx2;
            }
        }
        out
    }

    /// Pointwise combination of two trajectories on the same grids.
    pub fn axpby(&self, a: f64, other: &Trajectory, b: f64) -> Self {
        Self {
            u: self.u.axpby(a, &other.u, b),
            uxx0: self.uxx0.axpby(a, &other.uxx0, b),
            uxxl: self.uxxl.axpby(a, &other.uxxl, b),
            bset: self.bset.axpby(a, &other.bset, b),
            config: self.config,
        }
    }

    /// CSV with header `t,x,u`, one row per node per step.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "t,x,u")?;
        let nodes = self.grid().nodes();
        for (m, r) in self.u.rows().enumerate() {
            let t = self.time().time(m);
            for (x, v) in nodes.iter().zip(r) {
                writeln!(w, "{t:?},{x:?},{v:?}")?;
            }
        }
        Ok(())
    }

    /// CSV with header `t,uxx0,uxxL`.
    pub fn write_traces_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "t,uxx0,uxxL")?;
        for ((t, a), b) in self.time().times().iter().zip(self.uxx0.values()).zip(self.uxxl.values()) {
            writeln!(w, "{t:?},{a:?},{b:?}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, trajectory: &Path, traces: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(trajectory)?);
        self.write_csv(&mut f)?;
        f.flush()?;
        let mut g = std::io::BufWriter::new(std::fs::File::create(traces)?);
        self.write_traces_csv(&mut g)?;
        g.flush()?;
        Ok(())
    }
}

/// Discrete `X(Q_T)` norm: `max_t ‖u(t)‖_{L²} + ‖u_xx‖_{L²(Q_T)}`.
pub fn norm_x(traj: &Trajectory) -> f64 {
    let sup = traj.l2_series().sup_norm();
    let uxx = traj.uxx_field();
    let dx = traj.grid().dx();
    let per_time: Vec<f64> = uxx
        .rows()
        .map(|r| quad_values(&r.iter().map(|v| v * v).collect::<Vec<_>>(), dx))
        .collect();
    let s = TimeSeries::new(traj.time(), per_time).expect("one value per time");
    sup + time_integral(&s).max(0.0).sqrt()
}
