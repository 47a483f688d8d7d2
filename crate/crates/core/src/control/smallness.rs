use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::target::TargetObservable;
use crate::error::Result;
use crate::mesh::{Grid, GridFunction, SpaceTimeField, TimeGrid, TimeSeries};
use crate::solver::{norm_x, BoundarySet, KawaharaSolver, SolverConfig, SourceSplit};

/// Heuristic reading of the small-data condition `8 C² T^{1/4} c0 ≤ 1` with an
/// empirically calibrated `C`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallnessReport {
    pub c0: f64,
    pub horizon: f64,
    pub constant: f64,
    /// `(1 / (8 C² c0))⁴`; absent when `c0 = 0` (every horizon qualifies).
    pub heuristic_t0: Option<f64>,
    pub r_min: f64,
    pub r_max: f64,
    pub pass: bool,
}

/// The forcing that enters the data size besides `u0`, `h̃` and `φ′`.
#[derive(Debug, Clone, Copy)]
pub enum DriveData<'a> {
    /// Boundary mode: the source, measured in `L²(Q_T)`; `φ′` in `L²(0,T)`.
    Source(&'a SourceSplit),
    /// Internal mode: the boundary control `h` in `L²(0,T)`; `φ′` in `L¹(0,T)`.
    Control(&'a TimeSeries),
}

fn traces_norm(bset: &BoundarySet) -> f64 {
    bset.traces().iter().map(|s| s.l2_norm()).sum()
}

/// Data aggregate `c0`.
pub fn data_size(u0: &GridFunction, bset: &BoundarySet, data: DriveData<'_>, target: &TargetObservable) -> f64 {
    let base = u0.l2_norm() + traces_norm(bset);
    match data {
        DriveData::Source(f) => {
            let fnorm = f.f1.as_ref().map_or(0.0, |f| f.l2_norm()) + f.f2.as_ref().map_or(0.0, |f| f.l2_norm());
            base + fnorm + target.phiprime().l2_norm()
        }
        DriveData::Control(h) => base + h.l2_norm() + target.phiprime().l1_norm(),
    }
}

pub fn smallness_report(c0: f64, horizon: f64, constant: f64) -> SmallnessReport {
    let heuristic_t0 = if c0 > 0.0 {
        Some((1.0 / (8.0 * constant * constant * c0)).powi(4))
    } else {
        None
    };
    let r_min = 2.0 * constant * c0;
    let r_max = 1.0 / (4.0 * constant * horizon.powf(0.25));
    SmallnessReport {
        c0,
        horizon,
        constant,
        heuristic_t0,
        r_min,
        r_max,
        pass: 8.0 * constant * constant * horizon.powf(0.25) * c0 <= 1.0,
    }
}

pub fn smallness_diagnostics(
    u0: &GridFunction,
    bset: &BoundarySet,
    data: DriveData<'_>,
    target: &TargetObservable,
    constant: f64,
) -> SmallnessReport {
    smallness_report(data_size(u0, bset, data, target), target.time().horizon(), constant)
}

/// Largest ratio `‖S(data)‖_X / (data size)` over a fixed set of smooth
/// probes, one per data channel plus one combined.
pub fn calibrate_constant(grid: &Arc<Grid>, time: &Arc<TimeGrid>, config: SolverConfig) -> Result<f64> {
    use std::f64::consts::PI;
    let solver = KawaharaSolver::new(grid, time, config)?;
    let l = grid.length();
    let tt = time.horizon();
    let ramp = |t: f64| (PI * t / tt).sin();
    let zero_u = GridFunction::zeros(grid);
    let zero_b = BoundarySet::zeros(time);
    let zero_h = TimeSeries::zeros(time);
    let none = SourceSplit::none();

    let bump = GridFunction::from_fn(grid, |x| 16.0 * (x / l).powi(2) * (1.0 - x / l).powi(2));
    let h = TimeSeries::from_fn(time, ramp);
    let f = SourceSplit::from_f1(SpaceTimeField::from_fn(grid, time, |t, x| (PI * x / l).sin() * (2.0 * PI * t / tt).cos()));
    let mut probes: Vec<(GridFunction, BoundarySet, TimeSeries, SourceSplit)> = vec![
        (bump.clone(), zero_b.clone(), zero_h.clone(), none.clone()),
        (zero_u.clone(), zero_b.clone(), h.clone(), none.clone()),
        (zero_u.clone(), zero_b.clone(), zero_h.clone(), f.clone()),
    ];
    for k in 0..4 {
        let mut b = zero_b.clone();
        let s = TimeSeries::from_fn(time, |t| ramp(t).powi(2));
        match k {
            0 => b.h1 = s,
            1 => b.h2 = s,
            2 => b.h3 = s,
            _ => b.h4 = s,
        }
        probes.push((zero_u.clone(), b, zero_h.clone(), none.clone()));
    }
    probes.push((bump, zero_b.clone(), h, f));

    let mut c = 0.0_f64;
    for (u0, b, h, f) in &probes {
        let traj = solver.solve_linear(u0, b, h, f)?;
        let fnorm = f.f1.as_ref().map_or(0.0, |x| x.l2_norm());
        let size = u0.l2_norm() + traces_norm(b) + h.l2_norm() + fnorm;
        c = c.max(norm_x(&traj) / size);
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub length: f64,
    pub interior: usize,
    pub steps: usize,
    pub horizon: f64,
    pub constant: f64,
}

/// Calibrated constants keyed by grid and horizon, persisted as JSON.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CalibrationStore {
    pub entries: Vec<CalibrationEntry>,
}

impl CalibrationStore {
    /// A missing file yields an empty store.
    pub fn load(path: &Path) -> Result<Self> {
        match std::fs::read_to_string(path) {
            Ok(s) => Ok(serde_json::from_str(&s)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(e.into()),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn lookup(&self, grid: &Grid, time: &TimeGrid) -> Option<f64> {
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(1.0);
        self.entries
            .iter()
            .find(|e| {
                same(e.length, grid.length())
                    && e.interior == grid.interior()
                    && e.steps == time.steps()
                    && same(e.horizon, time.horizon())
            })
            .map(|e| e.constant)
    }

    pub fn insert(&mut self, grid: &Grid, time: &TimeGrid, constant: f64) {
        self.entries.retain(|e| {
            !(e.interior == grid.interior()
                && e.steps == time.steps()
                && e.length == grid.length()
                && e.horizon == time.horizon())
        });
        self.entries.push(CalibrationEntry {
            length: grid.length(),
            interior: grid.interior(),
            steps: time.steps(),
            horizon: time.horizon(),
            constant,
        });
    }

    /// Stored constant for the grids, calibrating and saving on a miss.
    pub fn get_or_calibrate(
        path: &Path,
        grid: &Arc<Grid>,
        time: &Arc<TimeGrid>,
        config: SolverConfig,
    ) -> Result<f64> {
        let mut store = Self::load(path)?;
        if let Some(c) = store.lookup(grid, time) {
            return Ok(c);
        }
        let c = calibrate_constant(grid, time, config)?;
        store.insert(grid, time, c);
        store.save(path)?;
        Ok(c)
    }
}
