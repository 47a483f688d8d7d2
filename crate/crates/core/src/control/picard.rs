use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::TimeSeries;
use crate::verify::fit_slope;

/// Largest local ratio used in the a-posteriori stopping bound.
const RATIO_CAP: f64 = 0.9999;
/// Residual ratios looked back on when estimating the local rate.
const RATIO_WINDOW: usize = 5;
/// Lookback, in iterations, for recognising a stalled residual.
const STALL_LOOKBACK: usize = 100;
/// The rate fit stops once the weighted residual has dropped this far below
/// its first value; past that point it sits on the round-off floor of the
/// linear solves.
const FIT_SPAN: f64 = 1e-8;

/// Leading part of a weighted residual history used for the rate fit.
pub fn fit_window(weighted: &[f64]) -> &[f64] {
    let Some(&first) = weighted.first() else {
        return weighted;
    };
    let end = weighted
        .iter()
        .position(|&w| w < FIT_SPAN * first)
        .unwrap_or(weighted.len());
    &weighted[..end]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PicardConfig {
    /// Target distance to the fixed point, in the sup norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Relaxation `λ` in `h ← (1 − λ) h + λ A(h)`.
    pub damping: f64,
    /// Weight `γ` of `e^{−γt}` used when measuring the rate; `50 / T` when unset.
    pub gamma: Option<f64>,
    /// Outer nonlinear loop: stop when `‖v_{j+1} − v_j‖_X` drops below this.
    pub outer_tol: f64,
    pub outer_max: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 20_000,
            damping: 1.0,
            gamma: None,
            outer_tol: 1e-7,
            outer_max: 40,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config("picard tol must be positive".into()));
        }
        if self.max_iter == 0 || self.outer_max == 0 {
            return Err(Error::Config("iteration caps must be at least 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if let Some(g) = self.gamma {
            if !(g >= 0.0) {
                return Err(Error::Config("gamma must be nonnegative".into()));
            }
        }
        if !(self.outer_tol > 0.0) {
            return Err(Error::Config("outer_tol must be positive".into()));
        }
        Ok(())
    }

    pub fn gamma_for(&self, horizon: f64) -> f64 {
        self.gamma.unwrap_or(50.0 / horizon)
    }
}

/// Geometric fit `r_k ≈ c ρ^k` over the positive entries: `(ρ, R²)`.
pub fn geometric_fit(history: &[f64]) -> (f64, Option<f64>) {
    let pts: Vec<(f64, f64)> = history
        .iter()
        .enumerate()
        .filter(|(_, &r)| r > 0.0 && r.is_finite())
        .map(|(k, &r)| (k as f64, r.ln()))
        .collect();
    match pts.len() {
        0 | 1 => (0.0, None),
        2 => (((pts[1].1 - pts[0].1) / (pts[1].0 - pts[0].0)).exp(), None),
        _ => {
            let k: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let slope = fit_slope(&k, &y);
            let my = y.iter().sum::<f64>() / y.len() as f64;
            let mk = k.iter().sum::<f64>() / k.len() as f64;
            let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
            let ss_res: f64 = k
                .iter()
                .zip(&y)
                .map(|(a, b)| (b - (my + slope * (a - mk))).powi(2))
                .sum();
            let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
            (slope.exp(), Some(r2))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PicardOutcome {
    pub control: TimeSeries,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub weighted_history: Vec<f64>,
    pub measured_rate: f64,
    pub fit_r2: Option<f64>,
}

/// Damped Picard iteration for `h = map(h)` starting from `init`.
pub(crate) fn iterate(
    mut map: impl FnMut(&TimeSeries) -> Result<TimeSeries>,
    init: TimeSeries,
    cfg: &PicardConfig,
) -> Result<PicardOutcome> {
    cfg.validate()?;
    let time = init.time().clone();
    let gamma = cfg.gamma_for(time.horizon());
    let weights: Vec<f64> = time.times().iter().map(|t| (-gamma * t).exp()).collect();
    let lambda = cfg.damping;

    let mut h = init;
    let mut residuals = Vec::new();
    let mut weighted = Vec::new();
    for k in 1..=cfg.max_iter {
        let a = map(&h)?;
        let next = h.axpby(1.0 - lambda, &a, lambda);
        let (mut res, mut wres) = (0.0_f64, 0.0_f64);
        for ((x, y), w) in next.values().iter().zip(h.values()).zip(&weights) {
            let d = (x - y).abs();
            res = res.max(d);
            wres = wres.max(w * d);
        }
        if !res.is_finite() || !next.is_finite() {
            let (rate, _) = geometric_fit(&weighted);
            residuals.push(res);
            return Err(Error::Divergence {
                iterations: k,
                rate: if rate.is_finite() { rate.max(1.0) } else { f64::INFINITY },
                history: residuals,
            });
        }
        residuals.push(res);
        weighted.push(wres);
        h = next;
        if res == 0.0 {
            break;
        }
        if residuals.len() >= 2 && res < cfg.tol {
            let n = residuals.len();
            let lo = n.saturating_sub(RATIO_WINDOW + 1);
            let rho = residuals[lo..]
                .windows(2)
                .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
                .fold(0.0_f64, f64::max)
                .min(RATIO_CAP);
            // A residual below tol that no longer halves over the lookback sits
            // on the round-off floor of the solves; iterating further only
            // reshuffles rounding noise.
            let stalled = n > STALL_LOOKBACK && res > 0.5 * residuals[n - 1 - STALL_LOOKBACK];
            if rho / (1.0 - rho) * res < cfg.tol || stalled {
                break;
            }
        }
        if k == cfg.max_iter {
            let (rate, _) = geometric_fit(fit_window(&weighted));
            let residual = res;
            return Err(if rate >= 1.0 {
                Error::Divergence {
                    iterations: k,
                    rate,
                    history: residuals,
                }
            } else {
                Error::FixedPointCap {
                    iterations: k,
                    residual,
                    rate,
                }
            });
        }
    }
    let (measured_rate, fit_r2) = geometric_fit(fit_window(&weighted));
    Ok(PicardOutcome {
        control: h,
        iterations: residuals.len(),
        residual_history: residuals,
        weighted_history: weighted,
        measured_rate,
        fit_r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::TimeGrid;
    use std::sync::Arc;

    #[test]
    fn exact_geometric_sequence() {
        let h: Vec<f64> = (0..20).map(|k| 3.0 * 0.7_f64.powi(k)).collect();
        let (rho, r2) = geometric_fit(&h);
        assert!((rho - 0.7).abs() < 1e-12);
        assert!((r2.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_contraction_converges_to_fixed_point() {
        // h = 0.5 h + 1  has fixed point 2
        let t = Arc::new(TimeGrid::new(1.0, 4).unwrap());
        let out = iterate(|h| Ok(h.map(|v| 0.5 * v + 1.0)), TimeSeries::zeros(&t), &PicardConfig::default()).unwrap();
        assert!(out.control.values().iter().all(|v| (v - 2.0).abs() < 1e-8));
        assert!((out.measured_rate - 0.5).abs() < 1e-9);
    }

    #[test]
    fn zero_map_stops_after_one_iteration() {
        let t = Arc::new(TimeGrid::new(1.0, 4).unwrap());
        let out = iterate(|h| Ok(h.scale(0.3)), TimeSeries::zeros(&t), &PicardConfig::default()).unwrap();
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn expansion_is_reported_as_divergence() {
        let t = Arc::new(TimeGrid::new(1.0, 4).unwrap());
        let cfg = PicardConfig {
            max_iter: 50,
            gamma: Some(0.0),
            ..Default::default()
        };
        let err = iterate(|h| Ok(h.map(|v| 2.0 * v + 1.0)), TimeSeries::zeros(&t), &cfg).unwrap_err();
        match err {
            Error::Divergence { rate, .. } => assert!((rate - 2.0).abs() < 1e-6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn damping_guard() {
        let cfg = PicardConfig {
            damping: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
