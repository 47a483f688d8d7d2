//! Truncated Taylor series in one variable, used to differentiate the
//! manufactured fields along an independent route.

use std::ops::{Add, Mul, Neg, Sub};

pub const ORDER: usize = 5;

/// `c[k] = f^(k)(x0) / k!` for `k <= ORDER`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet(pub [f64; ORDER + 1]);

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; ORDER + 1];
        c[0] = v;
        Jet(c)
    }

    /// The identity `x0 + ε` scaled by `slope`.
    pub fn variable(x0: f64, slope: f64) -> Self {
        let mut c = [0.0; ORDER + 1];
        c[0] = x0;
        c[1] = slope;
        Jet(c)
    }

    pub fn derivative(&self, k: usize) -> f64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.0[k] * fact
    }

    pub fn exp(self) -> Self {
        // e' = e * a'
        let a = self.0;
        let mut e = [0.0; ORDER + 1];
        e[0] = a[0].exp();
        for k in 1..=ORDER {
            let s: f64 = (1..=k).map(|j| j as f64 * a[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        Jet(e)
    }

    pub fn recip(self) -> Self {
        let a = self.0;
        let mut r = [0.0; ORDER + 1];
        r[0] = 1.0 / a[0];
        for k in 1..=ORDER {
            let s: f64 = (1..=k).map(|j| a[j] * r[k - j]).sum();
            r[k] = -s / a[0];
        }
        Jet(r)
    }

    pub fn scale(self, s: f64) -> Self {
        Jet(self.0.map(|v| v * s))
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut c = self.0;
        for (a, b) in c.iter_mut().zip(o.0) {
            *a += b;
        }
        Jet(c)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; ORDER + 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate().take(ORDER + 1 - i) {
                c[i + j] += a * b;
            }
        }
        Jet(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_and_recip() {
        let x = Jet::variable(0.3, 1.0);
        let e = x.exp();
        for k in 0..=ORDER {
            assert!((e.derivative(k) - 0.3_f64.exp()).abs() < 1e-14);
        }
        // 1/x: k-th derivative (-1)^k k! / x^(k+1)
        let r = x.recip();
        let mut fact = 1.0;
        for k in 0..=ORDER {
            if k > 0 {
                fact *= k as f64;
            }
            let expect = if k % 2 == 0 { 1.0 } else { -1.0 } * fact / 0.3_f64.powi(k as i32 + 1);
            assert!((r.derivative(k) - expect).abs() < 1e-9 * expect.abs());
        }
    }
}
