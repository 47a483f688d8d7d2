//! Composite quadrature on uniform samples.
//!
//! An odd number of samples (even number of panels) uses composite Simpson,
//! which is exact for cubics. An even number falls back to the composite
//! trapezoid rule.

use super::{GridFunction, TimeSeries};

/// Integral over `[0, L]` of the sampled function.
pub fn quad(f: &GridFunction) -> f64 {
    quad_values(f.values(), f.grid().dx())
}

/// Integral over `[0, T]` of a time series.
pub fn time_integral(s: &TimeSeries) -> f64 {
    quad_values(s.values(), s.time().dt())
}

pub fn quad_values(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        2 => 0.5 * h * (values[0] + values[1]),
        n if n % 2 == 1 => {
            let mut odd = 0.0;
            let mut even = 0.0;
            for (i, v) in values[1..n - 1].iter().enumerate() {
                if i % 2 == 0 {
                    odd += v;
                } else {
                    even += v;
                }
            }
            h / 3.0 * (values[0] + values[n - 1] + 4.0 * odd + 2.0 * even)
        }
        n => h * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

/// Weights `w` with `quad_values(v, h) == sum(w[i] * v[i])`.
pub fn quad_weights(n: usize, h: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        2 => vec![0.5 * h; 2],
        n if n % 2 == 1 => (0..n)
            .map(|i| {
                let c = if i == 0 || i == n - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * h / 3.0
            })
            .collect(),
        n => (0..n)
            .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
            .collect(),
    }
}

/// Running integral with the theta rule: `c[0] = 0`,
/// `c[m+1] = c[m] + dt * (theta * v[m+1] + (1 - theta) * v[m])`.
///
/// This is the quadrature implied by the theta time stepper, so a moment
/// reconstructed this way balances the stepper exactly.
pub fn cumulative_theta(values: &[f64], dt: f64, theta: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += dt * (theta * w[1] + (1.0 - theta) * w[0]);
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_grid, GridFunction};
    use proptest::prelude::*;
    use std::sync::Arc;

    #[test]
    fn constant_is_exact() {
        let g = Arc::new(make_grid(1.0, 99).unwrap());
        assert_eq!(quad(&GridFunction::from_fn(&g, |_| 1.0)), 1.0);
        let g = Arc::new(make_grid(1.0, 100).unwrap());
        assert!((quad(&GridFunction::from_fn(&g, |_| 1.0)) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn simpson_polynomials() {
        // Antiderivatives: x^2 -> 1/3, x^5 -> 1/6.
        let g = Arc::new(make_grid(1.0, 99).unwrap());
        let sq = quad(&GridFunction::from_fn(&g, |x| x * x));
        assert!((sq - 1.0 / 3.0).abs() < 1e-15);
        let p5 = quad(&GridFunction::from_fn(&g, |x| x.powi(5)));
        assert!((p5 - 1.0 / 6.0).abs() < 1e-8);
    }

    #[test]
    fn weights_match_rule() {
        for n in [2usize, 3, 8, 9, 130, 131] {
            let v: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let w = quad_weights(n, 0.1);
            let via_w: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
            assert!((via_w - quad_values(&v, 0.1)).abs() < 1e-13);
        }
    }

    #[test]
    fn cumulative_trapezoid_of_linear() {
        let v: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let c = cumulative_theta(&v, 0.1, 0.5);
        assert!((c[10] - 0.5).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn linear_in_integrand(a in -5.0..5.0f64, b in -5.0..5.0f64, n in 17usize..80) {
            let g = Arc::new(make_grid(2.0, n).unwrap());
            let f = GridFunction::from_fn(&g, |x| (3.0 * x).sin());
            let h = GridFunction::from_fn(&g, |x| x * x - x);
            let lhs = quad(&f.axpby(a, &h, b));
            let rhs = a * quad(&f) + b * quad(&h);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn simpson_exact_on_cubics(c in prop::array::uniform4(-3.0..3.0f64), half in 9usize..60, len in 0.5..4.0f64) {
            // odd node count: N + 2 = 2 * half + 1
            let g = Arc::new(make_grid(len, 2 * half - 1).unwrap());
            let f = GridFunction::from_fn(&g, |x| c[0] + c[1] * x + c[2] * x * x + c[3] * x.powi(3));
            let exact = c[0] * len + c[1] * len.powi(2) / 2.0 + c[2] * len.powi(3) / 3.0 + c[3] * len.powi(4) / 4.0;
            prop_assert!((quad(&f) - exact).abs() <= 1e-11 * (1.0 + exact.abs()));
        }
    }
}
