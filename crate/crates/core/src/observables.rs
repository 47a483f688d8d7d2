//! The moment `q(t) = ∫ u ω`, its trace identity, and the energy and bilinear
//! diagnostics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{cumulative_theta, quad_values, SpaceTimeField, TimeSeries};
use crate::solver::{norm_x, BoundarySet, SourceSplit, Trajectory};
use crate::testfn::TestFunction;

/// Which boundary coefficients the trace identity uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IdentityForm {
    /// Integration by parts carried out in full.
    Corrected,
    /// `ω⁗(L)` on `h2` and `-ω⁗(L)` on `h1`, without the `-ω″(L) h2` term.
    Printed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentSeries {
    pub q: TimeSeries,
    pub qprime_fd: TimeSeries,
    pub qprime_identity: TimeSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub min_margin: f64,
    pub argmin_t: f64,
    pub tol: f64,
    pub pass: bool,
    /// `max(0, -min_margin)`.
    pub deficit: f64,
    #[serde(skip)]
    pub margins: Vec<f64>,
}

fn check_domain(traj: &Trajectory, omega: &TestFunction) -> Result<()> {
    let l = traj.grid().length();
    if (omega.length() - l).abs() > 1e-12 * l {
        return Err(Error::Precondition(format!(
            "test function lives on [0, {}], trajectory on [0, {l}]",
            omega.length()
        )));
    }
    Ok(())
}

fn weighted_integrals(field: &SpaceTimeField, weight: &[f64]) -> Vec<f64> {
    let dx = field.grid().dx();
    field
        .rows()
        .map(|r| quad_values(&r.iter().zip(weight).map(|(a, b)| a * b).collect::<Vec<_>>(), dx))
        .collect()
}

/// `q(t_m) = quad(u(t_m) ω)`.
pub fn moment_q(traj: &Trajectory, omega: &TestFunction) -> Result<TimeSeries> {
    omega.require_admissible()?;
    check_domain(traj, omega)?;
    Ok(moment_q_unchecked(traj.field(), omega))
}

pub(crate) fn moment_q_unchecked(field: &SpaceTimeField, omega: &TestFunction) -> TimeSeries {
    let w = omega.sample(field.grid(), 0);
    TimeSeries::new(field.time(), weighted_integrals(field, w.values())).expect("one value per time")
}

/// Right-hand side of the trace identity for `dq/dt`:
///
/// `ω″(L) h − ω‴(L) h4 + ω‴(0) h3 + (ω⁗(L) − ω″(L)) h2 − ω⁗(0) h1`
/// `+ ∫ f1 ω − ∫ f2 ω′ + ∫ u (ω′ + ω‴ − ω⁽⁵⁾)`.
///
/// The convection term is not included; fold it into `f2` as `-u²/2`.
pub fn qprime_identity(
    traj: &Trajectory,
    bset: &BoundarySet,
    h: &TimeSeries,
    f: &SourceSplit,
    omega: &TestFunction,
) -> Result<TimeSeries> {
    trace_identity(traj, bset, h, f, omega, IdentityForm::Corrected)
}

pub fn trace_identity(
    traj: &Trajectory,
    bset: &BoundarySet,
    h: &TimeSeries,
    f: &SourceSplit,
    omega: &TestFunction,
    form: IdentityForm,
) -> Result<TimeSeries> {
    omega.require_admissible()?;
    check_domain(traj, omega)?;
    let time = traj.time();
    let bset = if bset.time() == time { bset.clone() } else { bset.resample(time) };
    let h = if h.time() == time { h.clone() } else { h.resample(time) };
    let l = omega.length();
    let (w2l, w3l, w30, w4l, w40) = (omega.d(2, l), omega.d(3, l), omega.d(3, 0.0), omega.d(4, l), omega.d(4, 0.0));
    let (c2, c1) = match form {
        IdentityForm::Corrected => (w4l - w2l, -w40),
        IdentityForm::Printed => (w4l, -w4l),
    };
    let grid = traj.grid();
    let mut r: Vec<f64> = weighted_integrals(traj.field(), omega.kernel_samples(grid).values());
    if let Some(f1) = &f.f1 {
        let w = omega.sample(grid, 0);
        for (v, s) in r.iter_mut().zip(weighted_integrals(f1, w.values())) {
            *v += s;
        }
    }
    if let Some(f2) = &f.f2 {
        let w = omega.sample(grid, 1);
        for (v, s) in r.iter_mut().zip(weighted_integrals(f2, w.values())) {
            *v -= s;
        }
    }
    for (m, v) in r.iter_mut().enumerate() {
        let [h1, h2, h3, h4] = bset.at(m);
        *v += w2l * h.values()[m] - w3l * h4 + w30 * h3 + c2 * h2 + c1 * h1;
    }
    TimeSeries::new(time, r)
}

/// Centered differences inside, one-sided second-order at both ends.
pub fn time_derivative(s: &TimeSeries) -> TimeSeries {
    let v = s.values();
    let n = v.len();
    let dt = s.time().dt();
    let mut d = vec![0.0; n];
    if n >= 3 {
        d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt);
        d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dt);
        for m in 1..n - 1 {
            d[m] = (v[m + 1] - v[m - 1]) / (2.0 * dt);
        }
    } else if n == 2 {
        d[0] = (v[1] - v[0]) / dt;
        d[1] = d[0];
    }
    TimeSeries::new(s.time(), d).expect("same length")
}

/// `q`, its finite-difference derivative and the identity, using the
/// trajectory's own boundary data.
pub fn moment_series(traj: &Trajectory, f: &SourceSplit, omega: &TestFunction) -> Result<MomentSeries> {
    let q = moment_q(traj, omega)?;
    let qprime_fd = time_derivative(&q);
    let qprime_identity = qprime_identity(traj, traj.boundary(), traj.uxxl(), f, omega)?;
    Ok(MomentSeries {
        q,
        qprime_fd,
        qprime_identity,
    })
}

/// Margin `∫₀ᵗ h² + 2 ∫₀ᵗ∫ f1 u − ‖u(t)‖²` along a trajectory started from
/// rest with homogeneous `h1..h4`.
pub fn energy_check(
    traj: &Trajectory,
    h: &TimeSeries,
    f1: Option<&SpaceTimeField>,
    tol: f64,
) -> Result<InequalityReport> {
    if traj.state(0).sup_norm() > 0.0 {
        return Err(Error::Precondition("energy inequality needs a zero initial state".into()));
    }
    if !traj.boundary().is_zero() {
        return Err(Error::Precondition("energy inequality needs homogeneous h1..h4".into()));
    }
    let time = traj.time();
    let h = if h.time() == time { h.clone() } else { h.resample(time) };
    let dt = time.dt();
    let grid = traj.grid();
    let mut power: Vec<f64> = h.values().iter().map(|v| v * v).collect();
    if let Some(f1) = f1 {
        let dx = grid.dx();
        for (m, p) in power.iter_mut().enumerate() {
            let fu: Vec<f64> = f1.row(m).iter().zip(traj.field().row(m)).map(|(a, b)| a * b).collect();
            *p += 2.0 * quad_values(&fu, dx);
        }
    }
    let supply = cumulative_theta(&power, dt, 0.5);
    let norms = traj.l2_series();
    let margins: Vec<f64> = supply.iter().zip(norms.values()).map(|(s, n)| s - n * n).collect();
    let (argmin, &min_margin) = margins
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    Ok(InequalityReport {
        min_margin,
        argmin_t: time.time(argmin),
        tol,
        pass: min_margin >= -tol,
        deficit: (-min_margin).max(0.0),
        margins,
    })
}

/// `‖u²‖_{L²(Q_T)} / ((T^{1/2} + T^{1/4}) ‖u‖_X²)`.
pub fn gn_ratio(traj: &Trajectory) -> Result<f64> {
    let nx = norm_x(traj);
    if !(nx > 0.0) {
        return Err(Error::UndefinedRatio("trajectory is identically zero".into()));
    }
    let t = traj.time().horizon();
    let sq = traj.field().map(|v| v * v).l2_norm();
    Ok(sq / ((t.sqrt() + t.powf(0.25)) * nx * nx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Grid, TimeGrid};
    use crate::testfn::canonical_omega;
    use std::sync::Arc;

    fn grids(n: usize, steps: usize) -> (Arc<Grid>, Arc<TimeGrid>) {
        (Arc::new(Grid::new(1.0, n).unwrap()), Arc::new(TimeGrid::new(1.0, steps).unwrap()))
    }

    #[test]
    fn zero_trajectory() {
        let (g, t) = grids(99, 10);
        let traj = Trajectory::from_field(SpaceTimeField::zeros(&g, &t));
        let w = canonical_omega(1.0, false).unwrap();
        assert_eq!(moment_q(&traj, &w).unwrap().sup_norm(), 0.0);
        let r = qprime_identity(&traj, traj.boundary(), traj.uxxl(), &SourceSplit::none(), &w).unwrap();
        assert_eq!(r.sup_norm(), 0.0);
        assert!(matches!(gn_ratio(&traj), Err(Error::UndefinedRatio(_))));
        let e = energy_check(&traj, &TimeSeries::zeros(&t), None, 1e-12).unwrap();
        assert_eq!(e.min_margin, 0.0);
        assert!(e.pass);
    }

    #[test]
    fn moment_of_omega_squared() {
        // ∫ x^6 (1 - x)^4 dx = B(7, 5) = 6! 4! / 11! = 1/2310
        let (g, t) = grids(399, 4);
        let w = canonical_omega(1.0, false).unwrap();
        let field = SpaceTimeField::steady(&w.sample(&g, 0), &t);
        let q = moment_q(&Trajectory::from_field(field), &w).unwrap();
        assert!((q.values()[0] - 1.0 / 2310.0).abs() < 1e-12);
    }

    #[test]
    fn static_unit_field_gives_integral_of_omega() {
        // ∫ x^3 (1 - x)^2 = B(4, 3) = 1/60
        let (g, t) = grids(99, 5);
        let w = canonical_omega(1.0, false).unwrap();
        let field = SpaceTimeField::from_fn(&g, &t, |_, _| 1.0);
        let q = moment_q(&Trajectory::from_field(field), &w).unwrap();
        assert!(q.values().iter().all(|v| (v - 1.0 / 60.0).abs() < 1e-9));
    }

    #[test]
    fn rejects_inadmissible_omega() {
        let (g, t) = grids(99, 5);
        let bad = TestFunction::from_coeffs(vec![0.0, 0.0, 1.0, -2.0, 1.0], 1.0).unwrap();
        let traj = Trajectory::from_field(SpaceTimeField::zeros(&g, &t));
        assert!(matches!(moment_q(&traj, &bad), Err(Error::Precondition(_))));
    }

    #[test]
    fn corrected_minus_printed_is_h2_term() {
        let (g, t) = grids(63, 20);
        let w = canonical_omega(1.0, false).unwrap();
        let traj = Trajectory::from_field(SpaceTimeField::from_fn(&g, &t, |tt, x| (tt + x).sin()));
        let mut b = BoundarySet::zeros(&t);
        b.h2 = TimeSeries::from_fn(&t, |tt| 1.0 + tt * tt);
        let h = TimeSeries::zeros(&t);
        let f = SourceSplit::none();
        let c = trace_identity(&traj, &b, &h, &f, &w, IdentityForm::Corrected).unwrap();
        let p = trace_identity(&traj, &b, &h, &f, &w, IdentityForm::Printed).unwrap();
        for m in 0..t.len() {
            let d = c.values()[m] - p.values()[m];
            assert!((d + w.omega_pp_l() * b.h2.values()[m]).abs() < 1e-12);
        }
    }

    #[test]
    fn static_sine_gn_ratio() {
        // u = sin(πx): ‖u‖_X = √(1/2) + π² √(1/2), ‖u²‖_{L²(Q_1)} = √(3/8)
        let (g, t) = grids(399, 50);
        let field = SpaceTimeField::from_fn(&g, &t, |_, x| (std::f64::consts::PI * x).sin());
        let r = gn_ratio(&Trajectory::from_field(field)).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        let nx = 0.5_f64.sqrt() * (1.0 + pi2);
        let expect = (3.0_f64 / 8.0).sqrt() / (2.0 * nx * nx);
        assert!((r - expect).abs() < 1e-4 * expect, "{r} vs {expect}");
    }

    #[test]
    fn derivative_of_quadratic_is_exact() {
        let t = Arc::new(TimeGrid::new(1.0, 10).unwrap());
        let s = TimeSeries::from_fn(&t, |x| 3.0 * x * x - x);
        let d = time_derivative(&s);
        for (tt, v) in t.times().iter().zip(d.values()) {
            assert!((v - (6.0 * tt - 1.0)).abs() < 1e-12);
        }
    }
}
