use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::jet::Jet;
use crate::error::{Error, Result};
use crate::mesh::{Grid, GridFunction, SpaceTimeField, TimeGrid, TimeSeries};
use crate::solver::{BoundarySet, SourceSplit};

pub const CASE_NAMES: [&str; 3] = ["poly-decay", "traveling-bump", "nonlinear-poly"];

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    /// `e^{-t} x^3 (x - L)^2`
    PolyDecay,
    /// `a sech^2(k (x - c t - x0))`
    Bump { a: f64, k: f64, c: f64, x0: f64 },
}

/// Closed-form field with the source and boundary data it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedCase {
    name: String,
    length: f64,
    nonlinear: bool,
    shape: Shape,
    // d^n/dz^n sech^2(z) as polynomials in tanh(z), n = 0..5
    sech2: Vec<Vec<f64>>,
}

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |a, v| a * x + v)
}

fn sech2_derivatives() -> Vec<Vec<f64>> {
    // d/dz P(s) = P'(s) (1 - s^2) with s = tanh z
    let mut out = vec![vec![1.0, 0.0, -1.0]];
    for _ in 0..5 {
        let p = out.last().unwrap();
        let dp: Vec<f64> = p.iter().enumerate().skip(1).map(|(i, v)| i as f64 * v).collect();
        let mut q = vec![0.0; dp.len() + 2];
        for (i, v) in dp.iter().enumerate() {
            q[i] += v;
            q[i + 2] -= v;
        }
        out.push(q);
    }
    out
}

pub fn manufactured_case(name: &str) -> Result<ManufacturedCase> {
    ManufacturedCase::new(name, 1.0)
}

impl ManufacturedCase {
    pub fn new(name: &str, length: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Config(format!("domain length must be positive, got {length}")));
        }
        let (shape, nonlinear) = match name {
            "poly-decay" => (Shape::PolyDecay, false),
            "nonlinear-poly" => (Shape::PolyDecay, true),
            "traveling-bump" => (
                Shape::Bump {
                    a: 0.5,
                    k: 3.0,
                    c: 1.0,
                    x0: 0.4 * length,
                },
                false,
            ),
            other => {
                return Err(Error::Argument(format!(
                    "unknown manufactured case '{other}' (known: {})",
                    CASE_NAMES.join(", ")
                )))
            }
        };
        Ok(Self {
            name: name.to_string(),
            length,
            nonlinear,
            shape,
            sech2: sech2_derivatives(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn is_nonlinear(&self) -> bool {
        self.nonlinear
    }

    /// `[u, u_x, ..., u_xxxxx]` at `(t, x)`.
    pub fn space_derivatives(&self, t: f64, x: f64) -> [f64; 6] {
        let mut d = [0.0; 6];
        match self.shape {
            Shape::PolyDecay => {
                let l = self.length;
                // x^5 - 2L x^4 + L^2 x^3
                let mut c = vec![0.0, 0.0, 0.0, l * l, -2.0 * l, 1.0];
                let e = (-t).exp();
                for v in d.iter_mut() {
                    *v = e * poly_eval(&c, x);
                    c = c.iter().enumerate().skip(1).map(|(i, v)| i as f64 * v).collect();
                }
            }
            Shape::Bump { a, k, c, x0 } => {
                let s = (k * (x - c * t - x0)).tanh();
                for (n, v) in d.iter_mut().enumerate() {
                    *v = a * k.powi(n as i32) * poly_eval(&self.sech2[n], s);
                }
            }
        }
        d
    }

    pub fn u(&self, t: f64, x: f64) -> f64 {
        self.space_derivatives(t, x)[0]
    }

    pub fn ut(&self, t: f64, x: f64) -> f64 {
        match self.shape {
            Shape::PolyDecay => -self.u(t, x),
            Shape::Bump { a, k, c, x0 } => {
                let s = (k * (x - c * t - x0)).tanh();
                -c * a * k * poly_eval(&self.sech2[1], s)
            }
        }
    }

    /// Source that makes the field an exact solution.
    pub fn f(&self, t: f64, x: f64) -> f64 {
        let d = self.space_derivatives(t, x);
        let mut f = self.ut(t, x) + d[1] + d[3] - d[5];
        if self.nonlinear {
            f += d[0] * d[1];
        }
        f
    }

    pub fn exact(&self, grid: &Arc<Grid>, time: &Arc<TimeGrid>) -> SpaceTimeField {
        SpaceTimeField::from_fn(grid, time, |t, x| self.u(t, x))
    }

    pub fn u0(&self, grid: &Arc<Grid>) -> GridFunction {
        GridFunction::from_fn(grid, |x| self.u(0.0, x))
    }

    pub fn source(&self, grid: &Arc<Grid>, time: &Arc<TimeGrid>) -> SourceSplit {
        SourceSplit::from_f1(SpaceTimeField::from_fn(grid, time, |t, x| self.f(t, x)))
    }

    pub fn boundary(&self, time: &Arc<TimeGrid>) -> BoundarySet {
        let l = self.length;
        BoundarySet {
            h1: TimeSeries::from_fn(time, |t| self.u(t, 0.0)),
            h2: TimeSeries::from_fn(time, |t| self.u(t, l)),
            h3: TimeSeries::from_fn(time, |t| self.space_derivatives(t, 0.0)[1]),
            h4: TimeSeries::from_fn(time, |t| self.space_derivatives(t, l)[1]),
        }
    }

    /// The controlled trace `u_xx(t, L)`.
    pub fn control(&self, time: &Arc<TimeGrid>) -> TimeSeries {
        TimeSeries::from_fn(time, |t| self.space_derivatives(t, self.length)[2])
    }

    fn jet_in(&self, t: Jet, x: Jet) -> Jet {
        match self.shape {
            Shape::PolyDecay => {
                let l = self.length;
                let p = x * x * x * (x - Jet::constant(l)) * (x - Jet::constant(l));
                (-t).exp() * p
            }
            Shape::Bump { a, k, c, x0 } => {
                let z = (x - t.scale(c) - Jet::constant(x0)).scale(k);
                let cosh2 = z.exp() + (-z).exp();
                (cosh2 * cosh2).recip().scale(4.0 * a)
            }
        }
    }

    /// Largest PDE residual `|u_t + u_x + u_xxx - u_xxxxx (+ u u_x) - f|`
    /// over `points` random samples in `[0, T] x [0, L]`, with derivatives
    /// taken by Taylor-series arithmetic rather than the closed forms.
    pub fn residual_check(&self, horizon: f64, points: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0_f64;
        for _ in 0..points {
            let t = rng.gen_range(0.0..=horizon);
            let x = rng.gen_range(0.0..=self.length);
            let jx = self.jet_in(Jet::constant(t), Jet::variable(x, 1.0));
            let jt = self.jet_in(Jet::variable(t, 1.0), Jet::constant(x));
            let mut lhs = jt.derivative(1) + jx.derivative(1) + jx.derivative(3) - jx.derivative(5);
            if self.nonlinear {
                lhs += jx.derivative(0) * jx.derivative(1);
            }
            let f = self.f(t, x);
            worst = worst.max((lhs - f).abs() / (1.0 + f.abs()));
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_decay_vanishes_at_origin() {
        let c = manufactured_case("poly-decay").unwrap();
        assert_eq!(c.u(0.0, 0.0), 0.0);
        assert_eq!(c.u(0.7, 1.0), 0.0);
    }

    #[test]
    fn residuals_vanish() {
        for name in CASE_NAMES {
            let c = manufactured_case(name).unwrap();
            let r = c.residual_check(1.0, 100, 7);
            assert!(r <= 1e-10, "{name}: {r}");
        }
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(manufactured_case("soliton"), Err(Error::Argument(_))));
    }

    #[test]
    fn bump_has_nonzero_traces() {
        let c = manufactured_case("traveling-bump").unwrap();
        let time = Arc::new(TimeGrid::new(1.0, 10).unwrap());
        let b = c.boundary(&time);
        assert!(b.traces().iter().all(|s| s.sup_norm() > 1e-3));
    }
}
