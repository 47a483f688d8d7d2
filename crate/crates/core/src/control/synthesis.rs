use super::context::{OuterReport, SynthesisContext, SynthesisReport};
use super::picard::{geometric_fit, iterate, PicardOutcome};
use super::smallness::{smallness_diagnostics, DriveData};
use super::target::{InternalControlSpec, TargetObservable};
use crate::error::{Error, Result};
use crate::mesh::{GridFunction, TimeSeries};
use crate::observables::{trace_identity, IdentityForm};
use crate::solver::{norm_x, BoundarySet, SourceSplit, Trajectory};

/// Outer iterations whose differences must grow in a row before the outer
/// loop is declared divergent.
const GROWTH_RUN: usize = 3;

#[derive(Clone, Copy)]
enum Channel<'a> {
    Boundary,
    Internal(&'a InternalControlSpec),
}

impl Channel<'_> {
    fn name(&self) -> &'static str {
        match self {
            Channel::Boundary => "boundary",
            Channel::Internal(_) => "internal",
        }
    }

    /// Solution driven by the control alone, from rest.
    fn response(&self, ctx: &SynthesisContext, c: &TimeSeries) -> Result<Trajectory> {
        match self {
            Channel::Boundary => ctx.solver.solve_linear(&ctx.zero_u, &ctx.zero_b, c, &SourceSplit::none()),
            Channel::Internal(spec) => ctx.solver.solve_linear(
                &ctx.zero_u,
                &ctx.zero_b,
                &ctx.zero_h,
                &SourceSplit::from_f1(spec.source(c)),
            ),
        }
    }

    fn apply_a(&self, ctx: &SynthesisContext, c: &TimeSeries, target: &TargetObservable) -> Result<TimeSeries> {
        let traj = self.response(ctx, c)?;
        let k = ctx.kernel_integrals(traj.field());
        let pp = target.phiprime().values();
        let v: Vec<f64> = match self {
            Channel::Boundary => {
                let d = ctx.omega.omega_pp_l();
                pp.iter().zip(&k).map(|(p, q)| (p - q) / d).collect()
            }
            Channel::Internal(spec) => pp
                .iter()
                .zip(&k)
                .zip(spec.g1().values())
                .map(|((p, q), g)| (p - q) / g)
                .collect(),
        };
        TimeSeries::new(ctx.time(), v)
    }

    fn gamma(&self, ctx: &SynthesisContext, target: &TargetObservable, init: TimeSeries) -> Result<PicardOutcome> {
        iterate(|c| self.apply_a(ctx, c, target), init, &ctx.picard)
    }

    fn check(&self, ctx: &SynthesisContext) -> Result<()> {
        if let Channel::Internal(spec) = self {
            if spec.g().grid().len() != ctx.grid().len() || **spec.g().time() != **ctx.time() {
                return Err(Error::Config("profile g is sampled on mismatched grids".into()));
            }
        }
        Ok(())
    }
}

fn report(
    ctx: &SynthesisContext,
    ch: Channel<'_>,
    out: PicardOutcome,
    field: &Trajectory,
    target: &TargetObservable,
) -> SynthesisReport {
    let gamma = ctx.picard.gamma_for(ctx.time().horizon());
    let residual = ctx.overdetermination_residual(field.field(), target);
    SynthesisReport::from_outcome(ch.name(), out, gamma, residual)
}

fn gamma_report(
    ctx: &SynthesisContext,
    ch: Channel<'_>,
    target: &TargetObservable,
) -> Result<(SynthesisReport, Trajectory)> {
    ch.check(ctx)?;
    ctx.check_target(target)?;
    if target.phi0() != 0.0 {
        return Err(Error::Precondition(format!(
            "the control operator needs φ(0) = 0, got {:e}",
            target.phi0()
        )));
    }
    let out = ch.gamma(ctx, target, ctx.zero_h.clone())?;
    let traj = ch.response(ctx, &out.control)?;
    Ok((report(ctx, ch, out, &traj, target), traj))
}

/// Solution `û` of the uncontrolled problem and the identity `r(û)`.
fn uncontrolled(
    ctx: &SynthesisContext,
    ch: Channel<'_>,
    u0: &GridFunction,
    bset: &BoundarySet,
    h: &TimeSeries,
    f: &SourceSplit,
) -> Result<(Trajectory, TimeSeries)> {
    let hh = match ch {
        Channel::Boundary => &ctx.zero_h,
        Channel::Internal(_) => h,
    };
    let uhat = ctx.solver.solve_linear(u0, bset, hh, f)?;
    let r = trace_identity(&uhat, uhat.boundary(), hh, f, &ctx.omega, IdentityForm::Corrected)?;
    Ok((uhat, r))
}

#[allow(clippy::too_many_arguments)]
fn linear_split(
    ctx: &SynthesisContext,
    ch: Channel<'_>,
    u0: &GridFunction,
    bset: &BoundarySet,
    h: &TimeSeries,
    f: &SourceSplit,
    target: &TargetObservable,
) -> Result<(SynthesisReport, Trajectory)> {
    ch.check(ctx)?;
    ctx.check_target(target)?;
    ctx.check_compatibility(u0, target)?;
    let (uhat, r) = uncontrolled(ctx, ch, u0, bset, h, f)?;
    let shifted = target.shifted(&r)?;
    let mut out = ch.gamma(ctx, &shifted, ctx.zero_h.clone())?;
    let u = uhat.axpby(1.0, &ch.response(ctx, &out.control)?, 1.0);
    let (u, sweeps) = correct_moment(ctx, ch, target, u, &mut out)?;
    let mut rep = report(ctx, ch, out, &u, target);
    rep.moment_corrections = sweeps;
    Ok((rep, u))
}

/// Largest number of defect-correction sweeps on the moment.
const MAX_CORRECTIONS: usize = 2;

/// Removes the part of `φ − q(u)` left by the first time step when the
/// uncontrolled solution starts from data that disagree with the control at
/// the corner. Each sweep controls the defect `e` itself, with a rate `p`
/// whose θ-integral reproduces `e` exactly on the grid.
fn correct_moment(
    ctx: &SynthesisContext,
    ch: Channel<'_>,
    target: &TargetObservable,
    mut u: Trajectory,
    out: &mut PicardOutcome,
) -> Result<(Trajectory, usize)> {
    let theta = ctx.solver_config().theta;
    let dt = ctx.time().dt();
    for sweep in 0..MAX_CORRECTIONS {
        let e = target.phi().axpby(1.0, &ctx.moment(u.field()), -1.0);
        if e.sup_norm() <= 0.5 * ctx.picard.tol {
            return Ok((u, sweep));
        }
        let ev = e.values();
        let mut p = vec![0.0; ev.len()];
        for m in 1..ev.len() {
            p[m] = ((ev[m] - ev[m - 1]) / dt - (1.0 - theta) * p[m - 1]) / theta;
        }
        let fix = ch.gamma(ctx, &TargetObservable::new(0.0, TimeSeries::new(ctx.time(), p)?, theta)?, ctx.zero_h.clone())?;
        u = u.axpby(1.0, &ch.response(ctx, &fix.control)?, 1.0);
        out.control = out.control.axpby(1.0, &fix.control, 1.0);
    }
    Ok((u, MAX_CORRECTIONS))
}

fn with_convection(f: &SourceSplit, v: &Trajectory) -> SourceSplit {
    let half_sq = v.field().map(|x| -0.5 * x * x);
    let f2 = match &f.f2 {
        Some(f2) => f2.axpby(1.0, &half_sq, 1.0),
        None => half_sq,
    };
    SourceSplit {
        f1: f.f1.clone(),
        f2: Some(f2),
    }
}

fn outer_divergence(iterations: usize, diffs: Vec<f64>, rate: f64) -> Error {
    Error::Divergence {
        iterations,
        rate,
        history: diffs,
    }
}

fn recent_rate(diffs: &[f64]) -> f64 {
    let n = diffs.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let k = (n - 1).min(GROWTH_RUN - 1);
    (diffs[n - 1] / diffs[n - 1 - k]).powf(1.0 / k as f64)
}

#[allow(clippy::too_many_arguments)]
fn outer_loop(
    ctx: &SynthesisContext,
    ch: Channel<'_>,
    u0: &GridFunction,
    bset: &BoundarySet,
    h: &TimeSeries,
    f: &SourceSplit,
    target: &TargetObservable,
) -> Result<(SynthesisReport, Trajectory)> {
    ch.check(ctx)?;
    ctx.check_target(target)?;
    ctx.check_compatibility(u0, target)?;
    let data = match ch {
        Channel::Boundary => DriveData::Source(f),
        Channel::Internal(_) => DriveData::Control(h),
    };
    let smallness = smallness_diagnostics(u0, bset, data, target, ctx.constant()?);

    let mut v: Option<Trajectory> = None;
    let mut control = ctx.zero_h.clone();
    let mut diffs: Vec<f64> = Vec::new();
    let mut inner_total = 0;
    for j in 1..=ctx.picard.outer_max {
        let fj = match &v {
            Some(v) => with_convection(f, v),
            None => f.clone(),
        };
        let step = (|| -> Result<(Trajectory, PicardOutcome)> {
            let (uhat, r) = uncontrolled(ctx, ch, u0, bset, h, &fj)?;
            let shifted = target.shifted(&r)?;
            let out = ch.gamma(ctx, &shifted, control.clone())?;
            let w = ch.response(ctx, &out.control)?;
            Ok((uhat.axpby(1.0, &w, 1.0), out))
        })();
        let (u, out) = match step {
            Ok(x) => x,
            Err(e) if j > 1 && (e.is_solver_failure() || e.is_divergence()) => {
                let rate = recent_rate(&diffs).max(1.0);
                return Err(outer_divergence(j, diffs, rate));
            }
            Err(e) => return Err(e),
        };
        inner_total += out.iterations;
        let d = match &v {
            Some(prev) => norm_x(&u.axpby(1.0, prev, -1.0)),
            None => norm_x(&u),
        };
        diffs.push(d);
        if !d.is_finite() || !u.field().is_finite() {
            return Err(outer_divergence(j, diffs, f64::INFINITY));
        }
        control = out.control.clone();
        if d < ctx.picard.outer_tol {
            let (rate, r2) = geometric_fit(&diffs);
            let mut out = out;
            let (u, sweeps) = correct_moment(ctx, ch, target, u, &mut out)?;
            let mut rep = report(ctx, ch, out, &u, target);
            rep.moment_corrections = sweeps;
            rep.smallness = Some(smallness);
            rep.outer = Some(OuterReport {
                iterations: j,
                differences: diffs,
                measured_rate: rate,
                fit_r2: r2,
                inner_iterations: inner_total,
            });
            return Ok((rep, u));
        }
        let n = diffs.len();
        if n > GROWTH_RUN && diffs[n - GROWTH_RUN - 1..].windows(2).all(|w| w[1] > w[0]) {
            let rate = recent_rate(&diffs);
            return Err(outer_divergence(j, diffs, rate));
        }
        v = Some(u);
    }
    let (rate, _) = geometric_fit(&diffs);
    let last = *diffs.last().unwrap_or(&f64::NAN);
    Err(if rate >= 1.0 {
        outer_divergence(diffs.len(), diffs, rate)
    } else {
        Error::FixedPointCap {
            iterations: diffs.len(),
            residual: last,
            rate,
        }
    })
}

/// `(φ′ − ∫ u (ω′ + ω‴ − ω⁽⁵⁾)) / ω″(L)` with `u = S(0, h, 0, 0)`.
pub fn apply_a_boundary(ctx: &SynthesisContext, h: &TimeSeries, target: &TargetObservable) -> Result<TimeSeries> {
    ctx.check_target(target)?;
    Channel::Boundary.apply_a(ctx, h, target)
}

/// Boundary control `h` with `∫ S(0, h, 0, 0) ω = φ`, by damped Picard
/// iteration on `h = A h` from `h = 0`.
pub fn gamma_boundary(ctx: &SynthesisContext, target: &TargetObservable) -> Result<(SynthesisReport, Trajectory)> {
    gamma_report(ctx, Channel::Boundary, target)
}

/// Linear problem with data: solve without control, shift the target by
/// the uncontrolled moment rate, and control the difference.
pub fn controllable_boundary_linear(
    ctx: &SynthesisContext,
    u0: &GridFunction,
    bset: &BoundarySet,
    f: &SourceSplit,
    target: &TargetObservable,
) -> Result<(SynthesisReport, Trajectory)> {
    linear_split(ctx, Channel::Boundary, u0, bset, &ctx.zero_h, f, target)
}

/// Outer fixed point `v ↦ Θ v` for the nonlinear problem, with `u u_x`
/// entering as `∂x(−v²/2)`.
pub fn theta_boundary_nonlinear(
    ctx: &SynthesisContext,
    u0: &GridFunction,
    bset: &BoundarySet,
    f: &SourceSplit,
    target: &TargetObservable,
) -> Result<(SynthesisReport, Trajectory)> {
    outer_loop(ctx, Channel::Boundary, u0, bset, &ctx.zero_h, f, target)
}

/// `(φ′ − ∫ u (ω′ + ω‴ − ω⁽⁵⁾)) / g1` with `u = S(0, 0, f0 g, 0)`.
pub fn apply_a_internal(
    ctx: &SynthesisContext,
    spec: &InternalControlSpec,
    f0: &TimeSeries,
    target: &TargetObservable,
) -> Result<TimeSeries> {
    let ch = Channel::Internal(spec);
    ch.check(ctx)?;
    ctx.check_target(target)?;
    ch.apply_a(ctx, f0, target)
}

pub fn gamma_internal(
    ctx: &SynthesisContext,
    spec: &InternalControlSpec,
    target: &TargetObservable,
) -> Result<(SynthesisReport, Trajectory)> {
    gamma_report(ctx, Channel::Internal(spec), target)
}

pub fn controllable_internal_linear(
    ctx: &SynthesisContext,
    u0: &GridFunction,
    bset: &BoundarySet,
    h: &TimeSeries,
    spec: &InternalControlSpec,
    target: &TargetObservable,
) -> Result<(SynthesisReport, Trajectory)> {
    linear_split(ctx, Channel::Internal(spec), u0, bset, h, &SourceSplit::none(), target)
}

pub fn theta_internal_nonlinear(
    ctx: &SynthesisContext,
    u0: &GridFunction,
    bset: &BoundarySet,
    h: &TimeSeries,
    spec: &InternalControlSpec,
    target: &TargetObservable,
) -> Result<(SynthesisReport, Trajectory)> {
    outer_loop(ctx, Channel::Internal(spec), u0, bset, h, &SourceSplit::none(), target)
}
