use std::sync::Arc;

use kawahara::mesh::{quad_values, Grid, GridFunction, TimeGrid, TimeSeries};
use kawahara::observables::time_derivative;
use kawahara::solver::{norm_x, solve_linear, BoundarySet, KawaharaSolver, SolverConfig, SourceSplit};
use kawahara::testfn::canonical_omega;
use kawahara::verify::random::{random_profile, random_series, random_source};
use kawahara::verify::{convergence_study, manufactured_case};
use kawahara::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grids(interior: usize, horizon: f64) -> (Arc<Grid>, Arc<TimeGrid>) {
    let g = Arc::new(Grid::new(1.0, interior).unwrap());
    let t = Arc::new(TimeGrid::matching(horizon, &g).unwrap());
    (g, t)
}

#[test]
fn zero_data_gives_zero_solution() {
    let (g, t) = grids(63, 0.5);
    let s = KawaharaSolver::new(&g, &t, SolverConfig::default()).unwrap();
    let z = (GridFunction::zeros(&g), BoundarySet::zeros(&t), TimeSeries::zeros(&t), SourceSplit::none());
    let lin = s.solve_linear(&z.0, &z.1, &z.2, &z.3).unwrap();
    let non = s.solve_nonlinear(&z.0, &z.1, &z.2, &z.3).unwrap();
    assert_eq!(lin.field().sup_norm(), 0.0);
    assert_eq!(non.field().sup_norm(), 0.0);
    assert_eq!(norm_x(&lin), 0.0);
}

#[test]
fn manufactured_cases_converge_at_second_order() {
    for name in ["poly-decay", "nonlinear-poly", "traveling-bump"] {
        let table = convergence_study(&manufactured_case(name).unwrap(), 3, 0.5, SolverConfig::default()).unwrap();
        assert!(
            (1.8..=2.3).contains(&table.fitted_order),
            "{name}: order {}",
            table.fitted_order
        );
        // halving dx and dt roughly quarters the error
        for w in table.rows.windows(2) {
            let ratio = w[0].error / w[1].error;
            assert!((3.0..5.5).contains(&ratio), "{name}: ratio {ratio}");
        }
    }
}

#[test]
fn convergence_study_needs_three_levels() {
    let case = manufactured_case("poly-decay").unwrap();
    assert!(matches!(convergence_study(&case, 2, 0.5, SolverConfig::default()), Err(Error::Config(_))));
}

#[test]
fn homogeneous_norm_is_nonincreasing() {
    let (g, t) = grids(127, 1.0);
    let w = canonical_omega(1.0, true).unwrap();
    let u0 = w.sample(&g, 0);
    let traj = solve_linear(&u0, &BoundarySet::zeros(&t), &TimeSeries::zeros(&t), &SourceSplit::none(), SolverConfig::default(), &g, &t).unwrap();
    let n = traj.l2_series();
    let rise = n.values().windows(2).map(|p| p[1] - p[0]).fold(f64::NEG_INFINITY, f64::max);
    assert!(rise <= 1e-8, "largest per-step increase {rise:e}");
    assert!(n.values().last().unwrap() < &n.values()[0]);
}

#[test]
fn backward_euler_also_decays() {
    let (g, t) = grids(63, 0.5);
    let cfg = SolverConfig { theta: 1.0, ..Default::default() };
    let u0 = random_profile(&g, &mut ChaCha8Rng::seed_from_u64(9), 1.0);
    let traj = solve_linear(&u0, &BoundarySet::zeros(&t), &TimeSeries::zeros(&t), &SourceSplit::none(), cfg, &g, &t).unwrap();
    let n = traj.l2_series();
    assert!(n.values().windows(2).all(|p| p[1] <= p[0] + 1e-12));
}

#[test]
fn theta_below_one_half_is_rejected() {
    let (g, t) = grids(31, 0.5);
    let cfg = SolverConfig { theta: 0.3, ..Default::default() };
    assert!(matches!(KawaharaSolver::new(&g, &t, cfg), Err(Error::Config(_))));
}

#[test]
fn linear_solution_map_is_additive() {
    let (g, t) = grids(63, 0.5);
    let s = KawaharaSolver::new(&g, &t, SolverConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut draw = || {
        let u0 = random_profile(&g, &mut rng, 1.0);
        let b = BoundarySet::new(
            random_series(&t, &mut rng, 1.0),
            random_series(&t, &mut rng, 1.0),
            random_series(&t, &mut rng, 1.0),
            random_series(&t, &mut rng, 1.0),
        )
        .unwrap();
        let h = random_series(&t, &mut rng, 1.0);
        let f = SourceSplit::from_f1(random_source(&g, &t, &mut rng, 1.0)).with_f2(random_source(&g, &t, &mut rng, 1.0));
        (u0, b, h, f)
    };
    let (a, b) = (draw(), draw());
    let sa = s.solve_linear(&a.0, &a.1, &a.2, &a.3).unwrap();
    let sb = s.solve_linear(&b.0, &b.1, &b.2, &b.3).unwrap();
    let sum = s
        .solve_linear(&a.0.axpby(2.0, &b.0, -3.0), &a.1.axpby(2.0, &b.1, -3.0), &a.2.axpby(2.0, &b.2, -3.0), &a.3.axpby(2.0, &b.3, -3.0))
        .unwrap();
    let diff = sum.axpby(1.0, &sa.axpby(2.0, &sb, -3.0), -1.0);
    let scale = sum.field().sup_norm();
    assert!(diff.field().sup_norm() <= 1e-9 * scale, "{:e}", diff.field().sup_norm() / scale);
}

#[test]
fn imposed_traces_are_reproduced_exactly() {
    let (g, t) = grids(63, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let b = BoundarySet::new(
        random_series(&t, &mut rng, 0.1),
        random_series(&t, &mut rng, 0.1),
        random_series(&t, &mut rng, 0.1),
        random_series(&t, &mut rng, 0.1),
    )
    .unwrap();
    let h = random_series(&t, &mut rng, 0.1);
    let s = KawaharaSolver::new(&g, &t, SolverConfig::default()).unwrap();
    for traj in [
        s.solve_linear(&GridFunction::zeros(&g), &b, &h, &SourceSplit::none()).unwrap(),
        s.solve_nonlinear(&GridFunction::zeros(&g), &b, &h, &SourceSplit::none()).unwrap(),
    ] {
        let last = g.len() - 1;
        for m in 0..t.len() {
            let row = traj.field().row(m);
            assert_eq!(row[0], b.h1.values()[m]);
            assert_eq!(row[last], b.h2.values()[m]);
            assert_eq!(traj.uxxl().values()[m], h.values()[m]);
        }
    }
}

/// `d/dt ‖u‖² − (2∫f₁u + h² − u_xx(t,0)²)` in the sup norm over interior
/// steps.
fn energy_law_defect(interior: usize) -> f64 {
    let (g, t) = grids(interior, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    // a slow start keeps the data compatible with the rest state to high order
    let ramp = TimeSeries::from_fn(&t, |tt| (tt / t.horizon()).powi(3));
    let h = random_series(&t, &mut rng, 1.0);
    let h = TimeSeries::new(&t, h.values().iter().zip(ramp.values()).map(|(a, b)| a * b).collect()).unwrap();
    let f1 = random_source(&g, &t, &mut rng, 1.0).scale_rows(&ramp);
    let traj = solve_linear(
        &GridFunction::zeros(&g),
        &BoundarySet::zeros(&t),
        &h,
        &SourceSplit::from_f1(f1.clone()),
        SolverConfig::default(),
        &g,
        &t,
    )
    .unwrap();
    let sq = traj.l2_series().map(|v| v * v);
    let lhs = time_derivative(&sq);
    let dx = g.dx();
    let mut worst = 0.0_f64;
    for m in 1..t.len() - 1 {
        let fu: Vec<f64> = f1.row(m).iter().zip(traj.field().row(m)).map(|(a, b)| a * b).collect();
        let rhs = 2.0 * quad_values(&fu, dx) + h.values()[m].powi(2) - traj.uxx0().values()[m].powi(2);
        worst = worst.max((lhs.values()[m] - rhs).abs());
    }
    worst
}

#[test]
fn discrete_energy_law_holds_to_second_order() {
    let coarse = energy_law_defect(63);
    let fine = energy_law_defect(127);
    let order = (coarse / fine).log2();
    assert!(order >= 1.5, "defects {coarse:e} → {fine:e}, order {order}");
}

#[test]
fn small_data_bound_is_grid_stable() {
    let ratio = |interior: usize| {
        let (g, t) = grids(interior, 1.0);
        let w = canonical_omega(1.0, true).unwrap();
        let raw = w.sample(&g, 0);
        let u0 = raw.map(|v| v * 1e-3 / raw.l2_norm());
        let traj = KawaharaSolver::new(&g, &t, SolverConfig::default())
            .unwrap()
            .solve_nonlinear(&u0, &BoundarySet::zeros(&t), &TimeSeries::zeros(&t), &SourceSplit::none())
            .unwrap();
        norm_x(&traj) / u0.l2_norm()
    };
    let (a, b) = (ratio(63), ratio(127));
    assert!((a / b - 1.0).abs() < 0.1, "{a} vs {b}");
}
