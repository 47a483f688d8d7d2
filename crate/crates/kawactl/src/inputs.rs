//! Scenario signals sampled on the run's grids.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use kawahara::mesh::{Grid, GridFunction, SpaceTimeField, TimeGrid, TimeSeries};
use kawahara::solver::{BoundarySet, SourceSplit};
use kawahara::testfn::TestFunction;

use crate::scenario::{FieldSignal, OmegaSpec, Scenario, SpaceSignal, TimeSignal};

/// Tolerance, relative to the larger of the span and 1, for the coordinate
/// columns of CSV inputs.
const COORD_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Inputs {
    pub grid: Arc<Grid>,
    pub time: Arc<TimeGrid>,
    /// The scenario's weight, or the canonical one when none is given.
    pub omega: TestFunction,
    pub u0: GridFunction,
    pub bset: BoundarySet,
    pub control: TimeSeries,
    pub source: SourceSplit,
    pub profile: Option<(SpaceTimeField, f64)>,
}

impl Inputs {
    /// Samples every signal, collecting all problems instead of stopping at
    /// the first.
    pub fn build(sc: &Scenario) -> Result<Self, Vec<String>> {
        let mut issues = Vec::new();
        let g = &sc.grid;
        let grid = match Grid::new(g.length, g.interior) {
            Ok(grid) => Arc::new(grid),
            Err(e) => return Err(vec![format!("grid: {e}")]),
        };
        let time = match g.steps {
            Some(m) => TimeGrid::new(g.horizon, m),
            None => TimeGrid::matching(g.horizon, &grid),
        };
        let time = match time {
            Ok(t) => Arc::new(t),
            Err(e) => return Err(vec![format!("grid: {e}")]),
        };
        let omega = match build_omega(sc.omega.as_ref(), grid.length()) {
            Ok(w) => w,
            Err(e) => {
                issues.push(format!("omega: {e}"));
                // keeps the remaining checks going
                TestFunction::canonical(grid.length(), false).expect("canonical weight")
            }
        };
        let ctx = Sampler { grid: &grid, time: &time, omega: &omega };
        let issues = &mut issues;
        let u0 = take(issues, "u0", ctx.space(&sc.u0));
        let b = &sc.boundary;
        let traces = [
            take(issues, "boundary.h1", ctx.series(&b.h1)),
            take(issues, "boundary.h2", ctx.series(&b.h2)),
            take(issues, "boundary.h3", ctx.series(&b.h3)),
            take(issues, "boundary.h4", ctx.series(&b.h4)),
        ];
        let control = take(issues, "control", ctx.series(sc.control.as_ref().unwrap_or(&TimeSignal::Zero)));
        let f1 = sc.source.f1.as_ref().map(|f| take(issues, "source.f1", ctx.field(f)));
        let f2 = sc.source.f2.as_ref().map(|f| take(issues, "source.f2", ctx.field(f)));
        let profile = sc.profile.as_ref().map(|p| take(issues, "profile.g", ctx.field(&p.g)).map(|g| (g, p.g0)));
        if let Some(t) = &sc.target {
            let s = match t {
                crate::scenario::TargetSpec::Explicit { phiprime, .. } => phiprime,
                crate::scenario::TargetSpec::Forward { control } => control,
            };
            take(issues, "target", ctx.series(s));
        }
        if !issues.is_empty() {
            return Err(std::mem::take(issues));
        }
        let [h1, h2, h3, h4] = traces.map(Option::unwrap);
        let bset = BoundarySet::new(h1, h2, h3, h4).map_err(|e| vec![format!("boundary: {e}")])?;
        let source = SourceSplit {
            f1: f1.flatten(),
            f2: f2.flatten(),
        };
        Ok(Self {
            u0: u0.unwrap(),
            bset,
            control: control.unwrap(),
            source,
            profile: profile.flatten(),
            grid,
            time,
            omega,
        })
    }

    pub fn series(&self, s: &TimeSignal) -> Result<TimeSeries, String> {
        Sampler { grid: &self.grid, time: &self.time, omega: &self.omega }.series(s)
    }
}

fn take<T>(issues: &mut Vec<String>, what: &str, r: Result<T, String>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            issues.push(format!("{what}: {e}"));
            None
        }
    }
}

pub fn build_omega(spec: Option<&OmegaSpec>, length: f64) -> kawahara::Result<TestFunction> {
    let w = match spec {
        None | Some(OmegaSpec::Canonical { normalize: false }) => TestFunction::canonical(length, false)?,
        Some(OmegaSpec::Canonical { normalize: true }) => TestFunction::canonical(length, true)?,
        Some(OmegaSpec::Coeffs { coeffs }) => TestFunction::from_coeffs(coeffs.clone(), length)?,
    };
    w.require_admissible()?;
    Ok(w)
}

struct Sampler<'a> {
    grid: &'a Arc<Grid>,
    time: &'a Arc<TimeGrid>,
    omega: &'a TestFunction,
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

impl Sampler<'_> {
    fn series(&self, s: &TimeSignal) -> Result<TimeSeries, String> {
        let tt = self.time.horizon();
        let t = self.time;
        let out = match s {
            TimeSignal::Zero => TimeSeries::zeros(t),
            TimeSignal::Constant { value } => TimeSeries::from_fn(t, |_| *value),
            TimeSignal::Sine { amplitude, cycles, phase } => {
                let (a, k, p) = (*amplitude, *cycles, *phase);
                TimeSeries::from_fn(t, |s| a * (2.0 * PI * k * s / tt + p).sin())
            }
            TimeSignal::Cosine { amplitude, cycles, phase } => {
                let (a, k, p) = (*amplitude, *cycles, *phase);
                TimeSeries::from_fn(t, |s| a * (2.0 * PI * k * s / tt + p).cos())
            }
            TimeSignal::SineSquared { amplitude, cycles } => {
                let (a, k) = (*amplitude, *cycles);
                TimeSeries::from_fn(t, |s| a * (PI * k * s / tt).sin().powi(2))
            }
            TimeSignal::Polynomial { coeffs } => TimeSeries::from_fn(t, |s| poly(coeffs, s)),
            TimeSignal::Csv { path } => {
                let rows = read_csv(path, &["t", "value"])?;
                check_axis(path, "t", rows.iter().map(|r| r[0]), self.time.times(), tt)?;
                TimeSeries::new(t, rows.iter().map(|r| r[1]).collect()).map_err(|e| e.to_string())?
            }
        };
        if !out.is_finite() {
            return Err("signal has non-finite values".into());
        }
        Ok(out)
    }

    fn space(&self, s: &SpaceSignal) -> Result<GridFunction, String> {
        let l = self.grid.length();
        let g = self.grid;
        let out = match s {
            SpaceSignal::Zero => GridFunction::zeros(g),
            SpaceSignal::Omega { scale } => self.omega.sample(g, 0).map(|v| scale * v),
            SpaceSignal::Sine { amplitude, mode } => {
                let (a, k) = (*amplitude, *mode as f64);
                GridFunction::from_fn(g, |x| a * (k * PI * x / l).sin())
            }
            SpaceSignal::Bump { amplitude, center, width } => {
                if !(*width > 0.0) {
                    return Err(format!("bump width must be positive, got {width}"));
                }
                let (a, c, w) = (*amplitude, *center, *width);
                GridFunction::from_fn(g, |x| a * (-((x - c) / w).powi(2)).exp())
            }
            SpaceSignal::Polynomial { coeffs } => GridFunction::from_fn(g, |x| poly(coeffs, x)),
            SpaceSignal::Csv { path } => {
                let rows = read_csv(path, &["x", "value"])?;
                check_axis(path, "x", rows.iter().map(|r| r[0]), g.nodes(), l)?;
                GridFunction::new(g, rows.iter().map(|r| r[1]).collect()).map_err(|e| e.to_string())?
            }
        };
        if !out.values().iter().all(|v| v.is_finite()) {
            return Err("profile has non-finite values".into());
        }
        Ok(out)
    }

    fn field(&self, s: &FieldSignal) -> Result<SpaceTimeField, String> {
        let out = match s {
            FieldSignal::Zero => SpaceTimeField::zeros(self.grid, self.time),
            FieldSignal::Separable { space, time } => {
                let p = self.space(space).map_err(|e| format!("space: {e}"))?;
                let w = self.series(time).map_err(|e| format!("time: {e}"))?;
                SpaceTimeField::steady(&p, self.time).scale_rows(&w)
            }
            FieldSignal::Csv { path } => {
                let rows = read_csv(path, &["t", "x", "value"])?;
                let nodes = self.grid.nodes();
                let times = self.time.times();
                let expected = nodes.len() * times.len();
                if rows.len() != expected {
                    return Err(format!(
                        "{}: expected {expected} data rows ({} times × {} nodes), found {}",
                        path.display(),
                        times.len(),
                        nodes.len(),
                        rows.len()
                    ));
                }
                let ts = times.iter().flat_map(|&t| nodes.iter().map(move |_| t)).collect::<Vec<_>>();
                let xs = times.iter().flat_map(|_| nodes.iter().copied()).collect::<Vec<_>>();
                check_axis(path, "t", rows.iter().map(|r| r[0]), &ts, self.time.horizon())?;
                check_axis(path, "x", rows.iter().map(|r| r[1]), &xs, self.grid.length())?;
                let vals: Vec<Vec<f64>> = rows.chunks(nodes.len()).map(|c| c.iter().map(|r| r[2]).collect()).collect();
                SpaceTimeField::from_rows(self.grid, self.time, vals).map_err(|e| e.to_string())?
            }
        };
        if !out.is_finite() {
            return Err("field has non-finite values".into());
        }
        Ok(out)
    }
}

/// Numeric rows of a CSV file whose header is exactly `columns`.
fn read_csv(path: &Path, columns: &[&str]) -> Result<Vec<Vec<f64>>, String> {
    let name = path.display();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format!("{name}: {e}"))?;
    let header = rdr.headers().map_err(|e| format!("{name}: {e}"))?.clone();
    if header.iter().ne(columns.iter().copied()) {
        return Err(format!(
            "{name}: header must be {:?}, found {:?}",
            columns.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        ));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| format!("{name}: {e}"))?;
        let row = rec
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| format!("{name}: data row {}: {e}", i + 1))?;
        if let Some(bad) = row.iter().position(|v| !v.is_finite()) {
            return Err(format!("{name}: data row {}: column {} is not finite", i + 1, columns[bad]));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn check_axis(path: &Path, col: &str, got: impl ExactSizeIterator<Item = f64>, want: &[f64], span: f64) -> Result<(), String> {
    if got.len() != want.len() {
        return Err(format!(
            "{}: expected {} data rows, found {}",
            path.display(),
            want.len(),
            got.len()
        ));
    }
    let tol = COORD_TOL * span.max(1.0);
    for (i, (a, b)) in got.zip(want).enumerate() {
        if (a - b).abs() > tol {
            return Err(format!(
                "{}: data row {}: {col} = {a} does not match the grid value {b}",
                path.display(),
                i + 1
            ));
        }
    }
    Ok(())
}
