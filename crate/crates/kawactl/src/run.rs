use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use kawahara::control::{
    controllable_boundary_linear, controllable_internal_linear, smallness_diagnostics, theta_boundary_nonlinear,
    theta_internal_nonlinear, CalibrationStore, DriveData, InternalControlSpec, SynthesisContext, SynthesisReport,
    TargetObservable,
};
use kawahara::mesh::TimeSeries;
use kawahara::observables::{moment_series, qprime_identity};
use kawahara::solver::{norm_x, SourceSplit, Trajectory};
use kawahara::verify::{convergence_study, manufactured_case, run_property_suite_with, SuiteOptions};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{exit, CliError, ErrorRecord, Provenance};
use crate::inputs::Inputs;
use crate::scenario::{Mode, Scenario, TargetSpec};

/// Overrides the calibration-file location.
pub const CALIBRATION_ENV: &str = "KAWACTL_CALIBRATION";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Replaces the scenario's verify seed.
    pub seed: Option<u64>,
    /// Calibration store; falls back to `$KAWACTL_CALIBRATION`, then to
    /// `calibration.json` in the output directory.
    pub calibration: Option<PathBuf>,
}

impl RunOptions {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self {
            out: out.into(),
            ..Default::default()
        }
    }

    pub fn calibration_path(&self) -> PathBuf {
        self.calibration
            .clone()
            .or_else(|| std::env::var_os(CALIBRATION_ENV).map(PathBuf::from))
            .unwrap_or_else(|| self.out.join("calibration.json"))
    }
}

/// One pass/fail comparison of a run metric against a threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: String,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: &str, value: f64, relation: &str, limit: f64) -> Self {
        let pass = match relation {
            "<=" => value <= limit,
            "<" => value < limit,
            ">=" => value >= limit,
            ">" => value > limit,
            _ => unreachable!("relation {relation}"),
        };
        Self {
            name: name.to_string(),
            value,
            relation: relation.to_string(),
            limit,
            pass,
        }
    }
}

/// Everything known about a finished run; persisted as `run.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub mode: String,
    /// The scenario as run, with paths resolved and overrides applied.
    pub scenario: Scenario,
    pub output: PathBuf,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    /// Files written, relative to `output`. `run.json` itself is not listed.
    pub artifacts: Vec<String>,
    pub summary: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub exit_code: i32,
    pub error: Option<ErrorRecord>,
}

#[derive(Default)]
struct Outcome {
    summary: BTreeMap<String, f64>,
    checks: Vec<Check>,
}

struct Out {
    dir: PathBuf,
    artifacts: Vec<String>,
}

impl Out {
    fn write(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let io = |source| CliError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut w = std::io::BufWriter::new(std::fs::File::create(&path).map_err(io)?);
        body(&mut w).and_then(|_| w.flush()).map_err(io)?;
        if !self.artifacts.iter().any(|a| a == name) {
            self.artifacts.push(name.to_string());
        }
        Ok(())
    }

    fn json(&mut self, name: &str, v: &impl Serialize) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(v).expect("report serializes");
        self.write(name, |w| writeln!(w, "{text}"))
    }

    fn core(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> kawahara::Result<()>) -> Result<(), CliError> {
        let mut err = None;
        self.write(name, |w| {
            body(w).map_err(|e| match e {
                kawahara::Error::Io(e) => e,
                other => {
                    err = Some(other);
                    std::io::Error::other("serialization failed")
                }
            })
        })
        .map_err(|e| err.map(|source| CliError::Core { module: "cli-app", source }).unwrap_or(e))
    }

    fn series(&mut self, name: &str, s: &TimeSeries) -> Result<(), CliError> {
        self.write(name, |w| {
            writeln!(w, "t,value")?;
            for (t, v) in s.time().times().iter().zip(s.values()) {
                writeln!(w, "{t:?},{v:?}")?;
            }
            Ok(())
        })
    }

    fn trajectory(&mut self, traj: &Trajectory) -> Result<(), CliError> {
        self.core("trajectory.csv", |w| traj.write_csv(w))?;
        self.core("traces.csv", |w| traj.write_traces_csv(w))
    }
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

/// Runs a validated scenario and persists its artifacts and `run.json` in
/// `opts.out`. Failures are recorded, never returned.
pub fn run(scenario: &Scenario, opts: &RunOptions) -> RunRecord {
    let started = now_ms();
    let mut sc = scenario.clone();
    if let Some(seed) = opts.seed {
        sc.verify.seed = seed;
    }
    let mode = sc.mode.unwrap_or(Mode::Solve);
    let mut out = Out {
        dir: opts.out.clone(),
        artifacts: Vec::new(),
    };
    let mut diagnostics = BTreeMap::new();
    let result = std::fs::create_dir_all(&out.dir)
        .map_err(|source| CliError::Io {
            path: out.dir.display().to_string(),
            source,
        })
        .and_then(|_| out.write("scenario.json", |w| w.write_all(sc.to_json().as_bytes())))
        .and_then(|_| dispatch(mode, &sc, opts, &mut out, &mut diagnostics));
    let (outcome, error) = match result {
        Ok(o) => (o, None),
        Err(e) => {
            let rec = e.record();
            let mut report = json!({ "mode": mode.name(), "pass": false, "error": rec });
            for (k, v) in diagnostics {
                report[k] = v;
            }
            // best effort: the directory may be what failed
            let _ = out.json("report.json", &report);
            (Outcome::default(), Some(rec))
        }
    };
    let pass = error.is_none() && outcome.checks.iter().all(|c| c.pass);
    let exit_code = match &error {
        Some(e) => e.exit_code,
        None if pass => exit::OK,
        None => exit::CHECK_FAILED,
    };
    let record = RunRecord {
        mode: mode.name().to_string(),
        scenario: sc,
        output: opts.out.clone(),
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        artifacts: out.artifacts.clone(),
        summary: outcome.summary,
        checks: outcome.checks,
        pass,
        exit_code,
        error,
    };
    let _ = out.json("run.json", &record);
    record
}

fn dispatch(
    mode: Mode,
    sc: &Scenario,
    opts: &RunOptions,
    out: &mut Out,
    diag: &mut BTreeMap<String, Value>,
) -> Result<Outcome, CliError> {
    match mode {
        Mode::Verify => verify(sc, out),
        Mode::Convergence => convergence(sc, out),
        _ => {
            let inp = Inputs::build(sc).map_err(CliError::Validation)?;
            match mode {
                Mode::Solve => solve(sc, &inp, out),
                _ => control(sc, &inp, opts, out, diag, mode == Mode::ControlInternal),
            }
        }
    }
}

/// `f` with the convection `u u_x = ∂x(u²/2)` moved into `f2`.
fn fold_convection(f: &SourceSplit, traj: &Trajectory) -> SourceSplit {
    let fold = traj.field().map(|v| -0.5 * v * v);
    let f2 = match &f.f2 {
        Some(f2) => f2.axpby(1.0, &fold, 1.0),
        None => fold,
    };
    SourceSplit {
        f1: f.f1.clone(),
        f2: Some(f2),
    }
}

fn forward(sc: &Scenario, inp: &Inputs, h: &TimeSeries, f: &SourceSplit) -> Result<Trajectory, CliError> {
    let solver = kawahara::solver::KawaharaSolver::new(&inp.grid, &inp.time, sc.solver).in_module("kawahara-solver")?;
    if sc.nonlinear {
        solver.solve_nonlinear(&inp.u0, &inp.bset, h, f)
    } else {
        solver.solve_linear(&inp.u0, &inp.bset, h, f)
    }
    .in_module("kawahara-solver")
}

fn solve(sc: &Scenario, inp: &Inputs, out: &mut Out) -> Result<Outcome, CliError> {
    let traj = forward(sc, inp, &inp.control, &inp.source)?;
    let f = if sc.nonlinear { fold_convection(&inp.source, &traj) } else { inp.source.clone() };
    let ms = moment_series(&traj, &f, &inp.omega).in_module("observables")?;
    out.trajectory(&traj)?;
    out.series("control.csv", &inp.control)?;
    out.write("residuals.csv", |w| {
        writeln!(w, "t,q,dq_fd,r,defect")?;
        for (m, t) in inp.time.times().iter().enumerate() {
            let (q, fd, r) = (ms.q.values()[m], ms.qprime_fd.values()[m], ms.qprime_identity.values()[m]);
            writeln!(w, "{t:?},{q:?},{fd:?},{r:?},{:?}", r - fd)?;
        }
        Ok(())
    })?;
    let defect = ms.qprime_identity.axpby(1.0, &ms.qprime_fd, -1.0).sup_norm();
    let summary = BTreeMap::from([
        ("norm_x".to_string(), norm_x(&traj)),
        ("final_l2".to_string(), traj.final_state().l2_norm()),
        ("max_identity_defect".to_string(), defect),
    ]);
    out.json(
        "report.json",
        &json!({ "mode": "solve", "nonlinear": sc.nonlinear, "pass": true, "summary": summary }),
    )?;
    Ok(Outcome { summary, checks: Vec::new() })
}

/// Target moment, plus the generating control when the target comes from a
/// forward run.
fn build_target(
    sc: &Scenario,
    inp: &Inputs,
    ctx: &SynthesisContext,
    spec: Option<&InternalControlSpec>,
) -> Result<(TargetObservable, Option<TimeSeries>), CliError> {
    let theta = sc.solver.theta;
    match sc.target.as_ref().expect("validated") {
        TargetSpec::Explicit { phi0, phiprime } => {
            let pp = inp.series(phiprime).map_err(|e| CliError::Validation(vec![format!("target: {e}")]))?;
            Ok((TargetObservable::new(*phi0, pp, theta).in_module("control-synthesis")?, None))
        }
        TargetSpec::Forward { control } => {
            let reference = inp.series(control).map_err(|e| CliError::Validation(vec![format!("target: {e}")]))?;
            let (h, f) = match spec {
                None => (reference.clone(), inp.source.clone()),
                Some(spec) => (inp.control.clone(), SourceSplit::from_f1(spec.source(&reference))),
            };
            let traj = forward(sc, inp, &h, &f)?;
            let f = if sc.nonlinear { fold_convection(&f, &traj) } else { f };
            let r = qprime_identity(&traj, &inp.bset, &h, &f, &inp.omega).in_module("observables")?;
            let phi0 = ctx.moment(traj.field()).values()[0];
            Ok((TargetObservable::new(phi0, r, theta).in_module("control-synthesis")?, Some(reference)))
        }
    }
}

fn control(
    sc: &Scenario,
    inp: &Inputs,
    opts: &RunOptions,
    out: &mut Out,
    diag: &mut BTreeMap<String, Value>,
    internal: bool,
) -> Result<Outcome, CliError> {
    let mut ctx = SynthesisContext::new(&inp.grid, &inp.time, inp.omega.clone(), sc.solver, sc.picard)
        .in_module("control-synthesis")?;
    let spec = match &inp.profile {
        Some((g, g0)) if internal => Some(InternalControlSpec::new(g.clone(), *g0, &inp.omega).in_module("control-synthesis")?),
        _ => None,
    };
    let (target, reference) = build_target(sc, inp, &ctx, spec.as_ref())?;
    if sc.nonlinear {
        let path = opts.calibration_path();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
                path: dir.display().to_string(),
                source,
            })?;
        }
        let c = CalibrationStore::get_or_calibrate(&path, &inp.grid, &inp.time, sc.solver).in_module("control-synthesis")?;
        let drive = match spec {
            Some(_) => DriveData::Control(&inp.control),
            None => DriveData::Source(&inp.source),
        };
        let small = smallness_diagnostics(&inp.u0, &inp.bset, drive, &target, c);
        diag.insert("smallness".into(), serde_json::to_value(&small).expect("serializes"));
        ctx = ctx.with_constant(c);
    }
    let (rep, traj) = match (&spec, sc.nonlinear) {
        (None, false) => controllable_boundary_linear(&ctx, &inp.u0, &inp.bset, &inp.source, &target),
        (None, true) => theta_boundary_nonlinear(&ctx, &inp.u0, &inp.bset, &inp.source, &target),
        (Some(s), false) => controllable_internal_linear(&ctx, &inp.u0, &inp.bset, &inp.control, s, &target),
        (Some(s), true) => theta_internal_nonlinear(&ctx, &inp.u0, &inp.bset, &inp.control, s, &target),
    }
    .in_module("control-synthesis")?;

    let recovery = reference.as_ref().map(|r| {
        let scale = r.l2_norm();
        let diff = rep.control.axpby(1.0, r, -1.0).l2_norm();
        if scale > 0.0 {
            diff / scale
        } else {
            diff
        }
    });
    let q = ctx.moment(traj.field());
    out.trajectory(&traj)?;
    out.series("control.csv", &rep.control)?;
    write_residuals(out, &rep)?;
    out.write("moment.csv", |w| {
        writeln!(w, "t,q,phi")?;
        for ((t, a), b) in inp.time.times().iter().zip(q.values()).zip(target.phi().values()) {
            writeln!(w, "{t:?},{a:?},{b:?}")?;
        }
        Ok(())
    })?;

    let ck = &sc.check;
    // the last inner solve of an outer loop starts next to its fixed point,
    // so only the outer rate says anything about contraction there
    let rate = match &rep.outer {
        Some(o) => Check::new("outer_measured_rate", o.measured_rate, "<", 1.0),
        None => Check::new("measured_rate", rep.measured_rate, "<", 1.0),
    };
    let mut checks = vec![
        Check::new("overdetermination_residual", rep.overdetermination_residual, "<=", ck.residual),
        rate,
    ];
    if let (Some(r2), None) = (rep.fit_r2, &rep.outer) {
        checks.push(Check::new("fit_r2", r2, ">", ck.fit_r2));
    }
    if let Some(e) = recovery {
        checks.push(Check::new("recovery_relative_l2", e, "<=", ck.recovery));
    }
    let mut summary = BTreeMap::from([
        ("iterations".to_string(), rep.iterations as f64),
        ("measured_rate".to_string(), rep.measured_rate),
        ("overdetermination_residual".to_string(), rep.overdetermination_residual),
        ("moment_corrections".to_string(), rep.moment_corrections as f64),
        ("norm_x".to_string(), norm_x(&traj)),
    ]);
    if let Some(r2) = rep.fit_r2 {
        summary.insert("fit_r2".into(), r2);
    }
    if let Some(e) = recovery {
        summary.insert("recovery_relative_l2".into(), e);
    }
    if let Some(o) = &rep.outer {
        summary.insert("outer_iterations".into(), o.iterations as f64);
        summary.insert("outer_measured_rate".into(), o.measured_rate);
    }
    let pass = checks.iter().all(|c| c.pass);
    let mut report = json!({
        "mode": if internal { "control-internal" } else { "control-boundary" },
        "nonlinear": sc.nonlinear,
        "pass": pass,
        "checks": checks,
        "recovery_relative_l2": recovery,
        "synthesis": rep,
    });
    for (k, v) in diag.iter() {
        report[k.as_str()] = v.clone();
    }
    out.json("report.json", &report)?;
    Ok(Outcome { summary, checks })
}

fn write_residuals(out: &mut Out, rep: &SynthesisReport) -> Result<(), CliError> {
    out.write("residuals.csv", |w| {
        writeln!(w, "iteration,residual,weighted")?;
        for (i, (a, b)) in rep.residual_history.iter().zip(&rep.weighted_history).enumerate() {
            writeln!(w, "{},{a:?},{b:?}", i + 1)?;
        }
        Ok(())
    })
}

fn verify(sc: &Scenario, out: &mut Out) -> Result<Outcome, CliError> {
    let opts = SuiteOptions {
        corrupt_qprime_sign: sc.verify.corrupt_qprime_sign,
    };
    let report = run_property_suite_with(sc.verify.seed, opts).in_module("verify-harness")?;
    out.write("properties.csv", |w| {
        writeln!(w, "name,pass,margin")?;
        for p in &report.properties {
            writeln!(w, "{},{},{:?}", p.name, p.pass, p.margin)?;
        }
        Ok(())
    })?;
    out.json("report.json", &report)?;
    let checks = report
        .properties
        .iter()
        .map(|p| Check::new(&p.name, p.margin, ">=", 0.0))
        .collect();
    let summary = BTreeMap::from([
        ("seed".to_string(), sc.verify.seed as f64),
        ("properties".to_string(), report.properties.len() as f64),
        ("failed".to_string(), report.properties.iter().filter(|p| !p.pass).count() as f64),
    ]);
    Ok(Outcome { summary, checks })
}

fn convergence(sc: &Scenario, out: &mut Out) -> Result<Outcome, CliError> {
    let c = &sc.convergence;
    let mut tables = Vec::new();
    let mut outcome = Outcome::default();
    for name in &c.cases {
        let case = manufactured_case(name).in_module("verify-harness")?;
        let table = convergence_study(&case, c.levels, c.horizon, sc.solver).in_module("verify-harness")?;
        out.core(&format!("convergence-{name}.csv"), |w| table.write_csv(w))?;
        let key = format!("{name}.fitted_order");
        outcome.checks.push(Check::new(&key, table.fitted_order, ">=", sc.check.min_order));
        outcome.checks.push(Check::new(&key, table.fitted_order, "<=", sc.check.max_order));
        outcome.summary.insert(key, table.fitted_order);
        tables.push(table);
    }
    let pass = outcome.checks.iter().all(|c| c.pass);
    out.json(
        "report.json",
        &json!({ "mode": "convergence", "pass": pass, "checks": outcome.checks, "tables": tables }),
    )?;
    Ok(outcome)
}

/// Parses the scenario at `path` for `mode` and runs it. Only validation
/// problems are returned as errors; everything later lands in the record.
pub fn execute(mode: Mode, path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<RunRecord, CliError> {
    let sc = crate::scenario::parse_scenario_as(path, Some(mode))?;
    let out = out
        .or_else(|| sc.output.clone())
        .unwrap_or_else(|| PathBuf::from("kawactl-out").join(mode.name()));
    Ok(run(&sc, &RunOptions { out, seed, calibration: None }))
}
