//! Smooth random data: truncated sine series with coefficients decaying like
//! `1/k²`, drawn from a seeded ChaCha stream.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::mesh::{Grid, GridFunction, SpaceTimeField, TimeGrid, TimeSeries};

/// Modes kept in every series.
pub const MODES: usize = 4;

fn coefficients(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (1..=n).map(|k| rng.gen_range(-1.0..1.0) / (k * k) as f64).collect()
}

/// `amp Σ a_k sin(kπt/T)`, vanishing at `t = 0`.
pub fn random_series(time: &Arc<TimeGrid>, rng: &mut ChaCha8Rng, amp: f64) -> TimeSeries {
    let a = coefficients(rng, MODES);
    let tt = time.horizon();
    TimeSeries::from_fn(time, |t| {
        amp * a.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * PI * t / tt).sin()).sum::<f64>()
    })
}

/// `amp Σ b_jk sin(jπx/L) sin(kπt/T)`, vanishing at `t = 0` and at both ends.
pub fn random_source(grid: &Arc<Grid>, time: &Arc<TimeGrid>, rng: &mut ChaCha8Rng, amp: f64) -> SpaceTimeField {
    let b: Vec<f64> = (0..MODES * MODES)
        .map(|i| rng.gen_range(-1.0..1.0) / (((i / MODES + 1) * (i % MODES + 1)).pow(2) as f64))
        .collect();
    let (l, tt) = (grid.length(), time.horizon());
    SpaceTimeField::from_fn(grid, time, |t, x| {
        let mut s = 0.0;
        for j in 0..MODES {
            let sx = ((j + 1) as f64 * PI * x / l).sin();
            for k in 0..MODES {
                s += b[j * MODES + k] * sx * ((k + 1) as f64 * PI * t / tt).sin();
            }
        }
        amp * s
    })
}

/// Sine series damped by `64 (x/L)³ (1 − x/L)³`, so the profile and its
/// first two derivatives vanish at both ends.
pub fn random_profile(grid: &Arc<Grid>, rng: &mut ChaCha8Rng, amp: f64) -> GridFunction {
    let a = coefficients(rng, MODES);
    let l = grid.length();
    GridFunction::from_fn(grid, |x| {
        let s = x / l;
        let envelope = 64.0 * (s * (1.0 - s)).powi(3);
        amp * envelope * a.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * PI * s).sin()).sum::<f64>()
    })
}

/// A field that oscillates in space and drifts in time; nonzero for almost
/// every draw.
pub fn random_field(grid: &Arc<Grid>, time: &Arc<TimeGrid>, rng: &mut ChaCha8Rng, amp: f64) -> SpaceTimeField {
    let b: Vec<f64> = (0..MODES * MODES)
        .map(|i| rng.gen_range(-1.0..1.0) / (((i / MODES + 1) * (i % MODES + 1)).pow(2) as f64))
        .collect();
    let (l, tt) = (grid.length(), time.horizon());
    SpaceTimeField::from_fn(grid, time, |t, x| {
        let mut s = 0.0;
        for j in 0..MODES {
            let sx = ((j + 1) as f64 * PI * x / l).sin();
            for k in 0..MODES {
                s += b[j * MODES + k] * sx * (k as f64 * PI * t / tt).cos();
            }
        }
        amp * s
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn same_seed_same_data() {
        let g = Arc::new(Grid::new(1.0, 31).unwrap());
        let t = Arc::new(TimeGrid::new(1.0, 16).unwrap());
        let a = random_source(&g, &t, &mut ChaCha8Rng::seed_from_u64(3), 1.0);
        let b = random_source(&g, &t, &mut ChaCha8Rng::seed_from_u64(3), 1.0);
        let c = random_source(&g, &t, &mut ChaCha8Rng::seed_from_u64(4), 1.0);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn series_and_profile_vanish_where_promised() {
        let g = Arc::new(Grid::new(2.0, 63).unwrap());
        let t = Arc::new(TimeGrid::new(0.5, 16).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(random_series(&t, &mut rng, 1.0).values()[0], 0.0);
        let p = random_profile(&g, &mut rng, 1.0);
        assert_eq!(p.values()[0], 0.0);
        assert!(p.values().last().unwrap().abs() < 1e-15);
    }
}
