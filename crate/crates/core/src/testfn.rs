//! Polynomial weights ω for the moment observable.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{Grid, GridFunction};

/// Highest derivative order the observables need.
pub const MAX_ORDER: usize = 5;

/// Lower bound on |ω″(L)| below which ω is treated as degenerate.
pub const MIN_OMEGA_PP_L: f64 = 1e-8;

const MEMBERSHIP_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    coeffs: Vec<f64>,
    length: f64,
    // derivs[k - 1] holds the coefficients of the k-th derivative
    derivs: Vec<Vec<f64>>,
    normalized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipReport {
    pub omega_0: f64,
    pub omega_l: f64,
    pub omega_p_0: f64,
    pub omega_p_l: f64,
    pub omega_pp_0: f64,
    pub omega_pp_l: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub failures: Vec<String>,
}

fn differentiate(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(p, v)| p as f64 * v).collect()
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * x + v)
}

/// `x^3 (x - L)^2`, divided by `2 L^3` when `normalize` is set.
pub fn canonical_omega(length: f64, normalize: bool) -> Result<TestFunction> {
    TestFunction::canonical(length, normalize)
}

impl TestFunction {
    /// Coefficients in ascending degree.
    pub fn from_coeffs(coeffs: Vec<f64>, length: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Config(format!("domain length must be positive, got {length}")));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("test function coefficients must be finite".into()));
        }
        let mut coeffs = coeffs;
        if coeffs.len() < MAX_ORDER + 1 {
            coeffs.resize(MAX_ORDER + 1, 0.0);
        }
        let mut derivs = Vec::with_capacity(MAX_ORDER);
        let mut cur = coeffs.clone();
        for _ in 0..MAX_ORDER {
            cur = differentiate(&cur);
            derivs.push(cur.clone());
        }
        Ok(Self {
            coeffs,
            length,
            derivs,
            normalized: false,
        })
    }

    pub fn canonical(length: f64, normalize: bool) -> Result<Self> {
        let s = if normalize { 1.0 / (2.0 * length.powi(3)) } else { 1.0 };
        let mut w = Self::from_coeffs(
            vec![0.0, 0.0, 0.0, s * length * length, -2.0 * s * length, s],
            length,
        )?;
        w.normalized = normalize;
        Ok(w)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// `σ ω`.
    pub fn scaled(&self, sigma: f64) -> Result<Self> {
        Self::from_coeffs(self.coeffs.iter().map(|c| sigma * c).collect(), self.length)
    }

    /// `ω^(k)(x)` with argument checks.
    pub fn eval_deriv(&self, k: usize, x: f64) -> Result<f64> {
        if k > MAX_ORDER {
            return Err(Error::Argument(format!("derivative order {k} exceeds {MAX_ORDER}")));
        }
        if !(0.0..=self.length).contains(&x) {
            return Err(Error::Argument(format!(
                "point {x} outside [0, {}]",
                self.length
            )));
        }
        Ok(self.d(k, x))
    }

    /// Unchecked `ω^(k)(x)` for `k <= 5`.
    pub fn d(&self, k: usize, x: f64) -> f64 {
        if k == 0 {
            horner(&self.coeffs, x)
        } else {
            horner(&self.derivs[k - 1], x)
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.d(0, x)
    }

    /// `ω′ + ω‴ − ω⁽⁵⁾`, the weight that pairs with `u` in `dq/dt`.
    pub fn kernel(&self, x: f64) -> f64 {
        self.d(1, x) + self.d(3, x) - self.d(5, x)
    }

    pub fn sample(&self, grid: &Arc<Grid>, k: usize) -> GridFunction {
        GridFunction::from_fn(grid, |x| self.d(k, x))
    }

    pub fn kernel_samples(&self, grid: &Arc<Grid>) -> GridFunction {
        GridFunction::from_fn(grid, |x| self.kernel(x))
    }

    pub fn omega_pp_l(&self) -> f64 {
        self.d(2, self.length)
    }

    fn scale(&self) -> f64 {
        let l = self.length.max(1.0);
        let mag: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(p, c)| c.abs() * l.powi(p as i32) * (p * p).max(1) as f64)
            .sum();
        mag.max(1.0)
    }

    pub fn check_membership(&self) -> MembershipReport {
        let l = self.length;
        let tolerance = MEMBERSHIP_RTOL * self.scale();
        let values = [
            ("omega(0)", self.d(0, 0.0)),
            ("omega(L)", self.d(0, l)),
            ("omega'(0)", self.d(1, 0.0)),
            ("omega'(L)", self.d(1, l)),
            ("omega''(0)", self.d(2, 0.0)),
        ];
        let mut failures: Vec<String> = values
            .iter()
            .filter(|(_, v)| v.abs() > tolerance)
            .map(|(name, v)| format!("{name} = {v:.3e} is not zero"))
            .collect();
        let omega_pp_l = self.omega_pp_l();
        if omega_pp_l.abs() < MIN_OMEGA_PP_L {
            failures.push(format!("|omega''(L)| = {:.3e} below {MIN_OMEGA_PP_L:e}", omega_pp_l.abs()));
        }
        MembershipReport {
            omega_0: values[0].1,
            omega_l: values[1].1,
            omega_p_0: values[2].1,
            omega_p_l: values[3].1,
            omega_pp_0: values[4].1,
            omega_pp_l,
            tolerance,
            pass: failures.is_empty(),
            failures,
        }
    }

    /// Error unless `check_membership` passes.
    pub fn require_admissible(&self) -> Result<()> {
        let r = self.check_membership();
        if r.pass {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "test function not admissible: {}",
                r.failures.join("; ")
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_values() {
        let w = canonical_omega(1.0, false).unwrap();
        assert_eq!(w.eval_deriv(2, 0.0).unwrap(), 0.0);
        assert!((w.omega_pp_l() - 2.0).abs() < 1e-14);
        assert!((w.eval(0.5) - 0.03125).abs() < 1e-15);
        assert_eq!(w.eval_deriv(0, 0.0).unwrap(), 0.0);
        assert_eq!(w.eval_deriv(5, 0.0).unwrap(), 120.0);
    }

    #[test]
    fn normalized_has_unit_second_derivative() {
        for l in [0.5, 1.0, 3.0] {
            let w = canonical_omega(l, true).unwrap();
            assert!((w.eval_deriv(2, l).unwrap() - 1.0).abs() < 1e-12);
            assert!(w.is_normalized());
        }
    }

    #[test]
    fn argument_guards() {
        let w = canonical_omega(1.0, false).unwrap();
        assert!(w.eval_deriv(6, 0.5).is_err());
        assert!(w.eval_deriv(1, 1.5).is_err());
        assert!(w.eval_deriv(1, -0.1).is_err());
        assert!(canonical_omega(0.0, false).is_err());
    }

    #[test]
    fn membership() {
        for l in [1.0, 2.0] {
            let r = canonical_omega(l, false).unwrap().check_membership();
            assert!(r.pass, "{r:?}");
            assert!((r.omega_pp_l - 2.0 * l.powi(3)).abs() < 1e-12 * l.powi(3));
        }
        // x^2 (x - 1)^2 = x^2 - 2x^3 + x^4: second derivative 2 at the origin
        let bad = TestFunction::from_coeffs(vec![0.0, 0.0, 1.0, -2.0, 1.0], 1.0).unwrap();
        let r = bad.check_membership();
        assert!(!r.pass);
        assert!((r.omega_pp_0 - 2.0).abs() < 1e-14);
        let zero = TestFunction::from_coeffs(vec![0.0; 6], 1.0).unwrap();
        assert!(!zero.check_membership().pass);
        assert!(zero.require_admissible().is_err());
    }

    #[test]
    fn kernel_matches_definition() {
        let w = canonical_omega(1.0, false).unwrap();
        // x^5 - 2x^4 + x^3: w' = 5x^4 - 8x^3 + 3x^2, w''' = 60x^2 - 48x + 6, w^(5) = 120
        let x = 0.3_f64;
        let expect = 5.0 * x.powi(4) - 8.0 * x.powi(3) + 3.0 * x * x + 60.0 * x * x - 48.0 * x + 6.0 - 120.0;
        assert!((w.kernel(x) - expect).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn derivatives_match_finite_differences(
            p in prop::array::uniform3(-2.0..2.0f64),
            l in 0.5..3.0f64,
            frac in 0.01..0.99f64,
            k in 1usize..=3,
        ) {
            // x^3 (x - L)^2 (p0 + p1 x + p2 x^2) stays in the admissible set
            let base = [0.0, 0.0, 0.0, l * l, -2.0 * l, 1.0];
            let mut c = vec![0.0; 8];
            for (i, b) in base.iter().enumerate() {
                for (j, q) in p.iter().enumerate() {
                    c[i + j] += b * q;
                }
            }
            let w = TestFunction::from_coeffs(c, l).unwrap();
            let m = w.check_membership();
            prop_assume!(m.pass);
            let x = frac * l;
            let step = 1e-5;
            let fd = (w.d(k - 1, x + step) - w.d(k - 1, x - step)) / (2.0 * step);
            let exact = w.eval_deriv(k, x).unwrap();
            let scale = w.d(k, x).abs().max(w.scale() * 1e-3);
            prop_assert!((fd - exact).abs() <= 1e-6 * scale, "k={k} fd={fd} exact={exact}");
        }
    }
}
