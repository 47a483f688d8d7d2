//! Ghost-node closures.
//!
//! Left: the degree-6 polynomial `P(s)`, `s = x / dx`, with `P(0) = h1`,
//! `P'(0) = dx h3` and `P(j) = u_j` for `j = 1..5`. Ghosts are `P(-1)`, `P(-2)`
//! and `u_xx(0) = P''(0) / dx^2`.
//!
//! Right: the degree-6 polynomial in `s = (x - L) / dx` with `P(0) = h2`,
//! `P'(0) = dx h4`, `P''(0) = dx^2 h` and `P(-j) = u_{N+1-j}` for `j = 1..4`.
//! Ghosts are `P(1)`, `P(2)`.

use crate::mesh::{BandedLu, BandedMatrix};

const DEG: usize = 6;
const NC: usize = DEG + 1;

/// Boundary data layout: `[h1, h2, h3, h4, h]`.
pub(crate) const NB: usize = 5;

#[derive(Clone, Copy)]
enum Cond {
    Value(f64),
    D1(f64),
    D2(f64),
}

fn row(c: Cond) -> [f64; NC] {
    let mut r = [0.0; NC];
    for (p, v) in r.iter_mut().enumerate() {
        let pf = p as f64;
        *v = match c {
            Cond::Value(s) => s.powi(p as i32),
            Cond::D1(s) if p >= 1 => pf * s.powi(p as i32 - 1),
            Cond::D2(s) if p >= 2 => pf * (pf - 1.0) * s.powi(p as i32 - 2),
            _ => 0.0,
        };
    }
    r
}

/// Weights `w` with `target(P) = w · data` where `data` lists the
/// right-hand sides of `conds` in order.
fn weights(conds: &[Cond; NC], target: Cond) -> [f64; NC] {
    // w solves V^T w = target_row
    let rows: Vec<[f64; NC]> = conds.iter().map(|&c| row(c)).collect();
    let vt: Vec<Vec<f64>> = (0..NC).map(|p| rows.iter().map(|r| r[p]).collect()).collect();
    let lu = BandedLu::factor(&BandedMatrix::from_dense(&vt).expect("square"))
        .expect("closure conditions are unisolvent");
    let w = lu.solve(&row(target));
    let mut out = [0.0; NC];
    out.copy_from_slice(&w);
    out
}

/// A value at extended index `e` written as a combination of interior
/// unknowns (0-based column) and boundary data.
pub(crate) struct Expansion {
    pub cols: Vec<(usize, f64)>,
    pub bnd: [f64; NB],
}

#[derive(Debug, Clone)]
pub(crate) struct Closure {
    n: usize,
    dx: f64,
    left: [[f64; NC]; 2],
    left_d2: [f64; NC],
    right: [[f64; NC]; 2],
}

impl Closure {
    pub fn new(n: usize, dx: f64) -> Self {
        let lc = [
            Cond::Value(0.0),
            Cond::D1(0.0),
            Cond::Value(1.0),
            Cond::Value(2.0),
            Cond::Value(3.0),
            Cond::Value(4.0),
            Cond::Value(5.0),
        ];
        let rc = [
            Cond::Value(0.0),
            Cond::D1(0.0),
            Cond::D2(0.0),
            Cond::Value(-1.0),
            Cond::Value(-2.0),
            Cond::Value(-3.0),
            Cond::Value(-4.0),
        ];
        Self {
            n,
            dx,
            left: [weights(&lc, Cond::Value(-1.0)), weights(&lc, Cond::Value(-2.0))],
            left_d2: weights(&lc, Cond::D2(0.0)),
            right: [weights(&rc, Cond::Value(1.0)), weights(&rc, Cond::Value(2.0))],
        }
    }

    /// Extended index `e` runs over `-2 ..= N + 3`.
    pub fn expand(&self, e: isize) -> Expansion {
        let n = self.n as isize;
        let dx = self.dx;
        let mut bnd = [0.0; NB];
        let mut cols = Vec::new();
        if (1..=n).contains(&e) {
            cols.push((e as usize - 1, 1.0));
        } else if e == 0 {
            bnd[0] = 1.0;
        } else if e == n + 1 {
            bnd[1] = 1.0;
        } else if e == -1 || e == -2 {
            let w = &self.left[(-e - 1) as usize];
            bnd[0] = w[0];
            bnd[2] = w[1] * dx;
            for j in 0..5 {
                cols.push((j, w[2 + j]));
            }
        } else if e == n + 2 || e == n + 3 {
            let w = &self.right[(e - n - 2) as usize];
            bnd[1] = w[0];
            bnd[3] = w[1] * dx;
            bnd[4] = w[2] * dx * dx;
            for j in 0..4 {
                cols.push((self.n - 1 - j, w[3 + j]));
            }
        } else {
            panic!("extended index {e} out of range");
        }
        Expansion { cols, bnd }
    }

    /// `u_xx(t, 0)` from `h1`, `h3` and the first interior values.
    pub fn uxx0(&self, h1: f64, h3: f64, interior: &[f64]) -> f64 {
        let w = &self.left_d2;
        let mut s = w[0] * h1 + w[1] * self.dx * h3;
        for j in 0..5 {
            s += w[2 + j] * interior[j];
        }
        s / (self.dx * self.dx)
    }
}
