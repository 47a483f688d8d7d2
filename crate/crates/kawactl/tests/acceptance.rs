//! End-to-end acceptance checks. Each test writes one `PASS`/`FAIL` line to
//! stderr (outside the harness capture) and then asserts on the verdict.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use kawactl::{exit, parse_scenario, run, RunOptions, RunRecord};
use kawahara::control::{gamma_boundary, PicardConfig, SynthesisContext, TargetObservable};
use kawahara::mesh::{Grid, GridFunction, TimeGrid, TimeSeries};
use kawahara::observables::{energy_check, gn_ratio, qprime_identity, trace_identity, IdentityForm};
use kawahara::solver::{solve_linear, BoundarySet, KawaharaSolver, SolverConfig, SourceSplit, Trajectory};
use kawahara::testfn::canonical_omega;
use kawahara::verify::random::{random_field, random_series, random_source};
use kawahara::verify::{identity_study, manufactured_case};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn verdict(id: u32, name: &str, pass: bool, started: Instant, budget_s: f64, detail: String) {
    let secs = started.elapsed().as_secs_f64();
    let pass = pass && secs < budget_s;
    let tag = if pass { "PASS" } else { "FAIL" };
    let line = format!("[{id:02}] {tag} {name}: {detail}; {secs:.1}s (budget {budget_s}s)\n");
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    assert!(pass, "{}", line.trim_end());
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run_scenario(name: &str, out: &Path) -> RunRecord {
    let opts = RunOptions {
        out: out.to_path_buf(),
        seed: None,
        calibration: Some(out.join("calibration.json")),
    };
    run(&parse_scenario(&scenario(name)).unwrap(), &opts)
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn grids(interior: usize, horizon: f64) -> (Arc<Grid>, Arc<TimeGrid>) {
    let g = Arc::new(Grid::new(1.0, interior).unwrap());
    let t = Arc::new(TimeGrid::matching(horizon, &g).unwrap());
    (g, t)
}

#[test]
fn c01_manufactured_convergence_order() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let rec = run_scenario("convergence.json", dir.path());
    let orders: Vec<(String, f64)> = ["poly-decay", "nonlinear-poly"]
        .iter()
        .map(|c| (c.to_string(), rec.summary[&format!("{c}.fitted_order")]))
        .collect();
    let pass = rec.exit_code == exit::OK && orders.iter().all(|(_, o)| (1.8..=2.3).contains(o));
    verdict(1, "solver convergence order in [1.8, 2.3], 64→256 intervals", pass, t0, 60.0, format!("{orders:?}"));
}

#[test]
fn c02_homogeneous_decay() {
    let t0 = Instant::now();
    let (g, t) = grids(127, 1.0);
    let u0 = canonical_omega(1.0, true).unwrap().sample(&g, 0);
    let traj = solve_linear(&u0, &BoundarySet::zeros(&t), &TimeSeries::zeros(&t), &SourceSplit::none(), SolverConfig::default(), &g, &t)
        .unwrap();
    let n = traj.l2_series();
    let rise = n.values().windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    verdict(
        2,
        "homogeneous L2 norm nonincreasing, step increase <= 1e-8",
        rise <= 1e-8,
        t0,
        5.0,
        format!("max step increase {rise:.3e}, ‖u(0)‖ {:.3e} → ‖u(T)‖ {:.3e}", n.values()[0], n.values().last().unwrap()),
    );
}

fn energy_worst(interior: usize) -> f64 {
    let (g, t) = grids(interior, 0.5);
    let s = KawaharaSolver::new(&g, &t, SolverConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut worst = f64::INFINITY;
    for _ in 0..20 {
        let h = random_series(&t, &mut rng, 1.0);
        let f1 = random_source(&g, &t, &mut rng, 1.0);
        let traj = s
            .solve_linear(&GridFunction::zeros(&g), &BoundarySet::zeros(&t), &h, &SourceSplit::from_f1(f1.clone()))
            .unwrap();
        worst = worst.min(energy_check(&traj, &h, Some(&f1), 1e-5).unwrap().min_margin);
    }
    worst
}

#[test]
fn c03_energy_inequality() {
    let t0 = Instant::now();
    let (coarse, fine) = (energy_worst(127), energy_worst(255));
    let (d1, d2) = ((-coarse).max(0.0), (-fine).max(0.0));
    let pass = coarse >= -1e-5 && d2 <= 0.5 * d1;
    verdict(
        3,
        "energy inequality over 20 random (h, f1), margin >= -1e-5, deficit halves",
        pass,
        t0,
        120.0,
        format!("min margin {coarse:.3e} (N=128), {fine:.3e} (N=256); deficits {d1:.3e} → {d2:.3e}"),
    );
}

#[test]
fn c04_trace_identity() {
    let t0 = Instant::now();
    let study = identity_study(&manufactured_case("poly-decay").unwrap(), 3, 1.0, SolverConfig::default(), false).unwrap();

    let (g, t) = grids(127, 0.5);
    let mut b = BoundarySet::zeros(&t);
    b.h2 = TimeSeries::from_fn(&t, |s| 0.1 * (2.0 * PI * s / 0.5).sin());
    let (h, f) = (TimeSeries::zeros(&t), SourceSplit::none());
    let traj = solve_linear(&GridFunction::zeros(&g), &b, &h, &f, SolverConfig::default(), &g, &t).unwrap();
    let w = canonical_omega(1.0, false).unwrap();
    let c = trace_identity(&traj, &b, &h, &f, &w, IdentityForm::Corrected).unwrap();
    let p = trace_identity(&traj, &b, &h, &f, &w, IdentityForm::Printed).unwrap();
    let gap = (0..t.len())
        .map(|m| (c.values()[m] - p.values()[m] + w.omega_pp_l() * b.h2.values()[m]).abs())
        .fold(0.0_f64, f64::max);

    let pass = study.fitted_order >= 1.8 && gap <= 1e-12;
    verdict(
        4,
        "trace identity order >= 1.8; corrected − printed = −ω″(L) h2 to 1e-12",
        pass,
        t0,
        30.0,
        format!("errors [{}], order {:.3}; form gap {gap:.3e}", sci(&study.errors), study.fitted_order),
    );
}

fn recovery_detail(rep: &Value) -> (bool, String) {
    let s = &rep["synthesis"];
    let err = rep["recovery_relative_l2"].as_f64().unwrap();
    let resid = s["overdetermination_residual"].as_f64().unwrap();
    let rate = s["measured_rate"].as_f64().unwrap();
    let r2 = s["fit_r2"].as_f64().unwrap_or(f64::NAN);
    let pass = err <= 1e-4 && resid <= 1e-6 && rate < 1.0 && r2 > 0.99;
    (
        pass,
        format!("rel L2 error {err:.3e}, sup|q−φ| {resid:.3e}, ρ {rate:.4}, R² {r2:.4}, {} iterations", s["iterations"]),
    )
}

#[test]
fn c05_boundary_control_recovery() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let rec = run_scenario("boundary-recovery.json", dir.path());
    let (pass, detail) = recovery_detail(&report(dir.path()));
    verdict(5, "boundary control recovery, T=0.5, 128 intervals", pass && rec.exit_code == exit::OK, t0, 120.0, detail);
}

#[test]
fn c06_internal_control_recovery() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let rec = run_scenario("internal-recovery.json", dir.path());
    let (pass, detail) = recovery_detail(&report(dir.path()));
    verdict(6, "internal control recovery with g = ω, T=0.5", pass && rec.exit_code == exit::OK, t0, 120.0, detail);
}

#[test]
fn c07_nonlinear_outer_loop() {
    let t0 = Instant::now();
    let small_dir = tempfile::tempdir().unwrap();
    let small = run_scenario("nonlinear-small.json", small_dir.path());
    let rep = report(small_dir.path());
    let diffs: Vec<f64> = rep["synthesis"]["outer"]["differences"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let ratios: Vec<f64> = diffs.windows(2).map(|w| w[1] / w[0]).collect();
    let geometric = diffs.len() >= 2 && ratios.iter().all(|r| *r < 1.0);
    let small_ok = small.exit_code == exit::OK && geometric && rep["recovery_relative_l2"].as_f64().unwrap() <= 1e-4;

    let large_dir = tempfile::tempdir().unwrap();
    let large = run_scenario("nonlinear-large.json", large_dir.path());
    let rep = report(large_dir.path());
    let smallness_violated = rep["smallness"]["pass"] == false;
    let large_ok = large.exit_code == exit::DIVERGENCE && smallness_violated;

    let err = &rep["error"];
    verdict(
        7,
        "nonlinear outer loop: small data converges geometrically, amplitude 10 exits 4",
        small_ok && large_ok,
        t0,
        300.0,
        format!(
            "small: exit {}, outer diffs [{}]; large: exit {}, {} ({}), smallness c0 {:.3e} C {:.3e} pass={}",
            small.exit_code,
            sci(&diffs),
            large.exit_code,
            err["kind"].as_str().unwrap_or("-"),
            err["message"].as_str().unwrap_or("-"),
            rep["smallness"]["c0"].as_f64().unwrap_or(f64::NAN),
            rep["smallness"]["constant"].as_f64().unwrap_or(f64::NAN),
            rep["smallness"]["pass"],
        ),
    );
}

fn bilinear_bound(interior: usize) -> (f64, f64) {
    let (g, t) = grids(interior, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut r: Vec<f64> = (0..50)
        .map(|_| gn_ratio(&Trajectory::from_field(random_field(&g, &t, &mut rng, 1.0))).unwrap())
        .collect();
    r.sort_by(f64::total_cmp);
    let median = 0.5 * (r[24] + r[25]);
    (r[49], r[49] / median)
}

#[test]
fn c08_bilinear_bound() {
    let t0 = Instant::now();
    let levels: Vec<(f64, f64)> = [63, 127, 255].into_iter().map(bilinear_bound).collect();
    let base = levels[0].0;
    let spread_ok = levels.iter().all(|(_, s)| *s < 20.0);
    let stable = levels.iter().all(|(b, _)| (b / base - 1.0).abs() <= 0.2);
    verdict(
        8,
        "gn_ratio over 50 random fields: max/median < 20, bound stable ±20% over two refinements",
        spread_ok && stable,
        t0,
        60.0,
        format!("(max, max/median) per level {levels:.4?}"),
    );
}

#[test]
fn c09_gamma_linearity() {
    let t0 = Instant::now();
    let (g, t) = grids(127, 0.5);
    let w = canonical_omega(1.0, false).unwrap();
    let ctx = SynthesisContext::new(&g, &t, w.clone(), SolverConfig::default(), PicardConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut target = || {
        let h = random_series(&t, &mut rng, 0.01);
        let traj = ctx
            .solver()
            .solve_linear(&GridFunction::zeros(&g), &BoundarySet::zeros(&t), &h, &SourceSplit::none())
            .unwrap();
        let r = qprime_identity(&traj, traj.boundary(), &h, &SourceSplit::none(), &w).unwrap();
        TargetObservable::new(0.0, r, 0.5).unwrap()
    };
    let (t1, t2) = (target(), target());
    let (a, b) = (0.7, -1.3);
    let g1 = gamma_boundary(&ctx, &t1).unwrap().0.control;
    let g2 = gamma_boundary(&ctx, &t2).unwrap().0.control;
    let g12 = gamma_boundary(&ctx, &t1.axpby(a, &t2, b).unwrap()).unwrap().0.control;
    let err = g12.axpby(1.0, &g1.axpby(a, &g2, b), -1.0).sup_norm();
    let tol = ctx.picard().tol;
    verdict(
        9,
        "Γ superposition error <= 5 tol on two random targets",
        err <= 5.0 * tol,
        t0,
        60.0,
        format!("error {err:.3e}, 5 tol = {:.1e}", 5.0 * tol),
    );
}

#[test]
fn c10_verify_determinism() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let sc = parse_scenario(&scenario("verify.json")).unwrap();
    let runs: Vec<RunRecord> = ["a", "b"]
        .iter()
        .map(|d| {
            let mut o = RunOptions::new(dir.path().join(d));
            o.seed = Some(0);
            run(&sc, &o)
        })
        .collect();
    let same_list = runs[0].artifacts == runs[1].artifacts;
    let differing: Vec<&String> = runs[0]
        .artifacts
        .iter()
        .filter(|a| fs::read(dir.path().join("a").join(a)).unwrap() != fs::read(dir.path().join("b").join(a)).unwrap())
        .collect();
    let pass = runs.iter().all(|r| r.exit_code == exit::OK) && same_list && differing.is_empty();
    verdict(
        10,
        "repeated verify runs with seed 0 give byte-identical artifacts",
        pass,
        t0,
        60.0,
        format!("artifacts {:?}, differing {differing:?}", runs[0].artifacts),
    );
}
