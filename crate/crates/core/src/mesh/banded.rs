// index loops mirror the textbook band LU and read better than iterator chains
#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};

/// Relative pivot threshold: a pivot below `PIVOT_RTOL * ||A||_inf` is singular.
const PIVOT_RTOL: f64 = 1e-13;

/// Square band matrix in row-major band storage.
///
/// Row `i` keeps columns `i - kl ..= i + ku` at offsets `0 ..= kl + ku`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("band matrix dimension must be positive".into()));
        }
        if kl >= n || ku >= n {
            return Err(Error::Argument(format!(
                "bandwidths ({kl}, {ku}) must be below the dimension {n}"
            )));
        }
        Ok(Self {
            n,
            kl,
            ku,
            data: vec![0.0; n * (kl + ku + 1)],
        })
    }

    pub fn identity(n: usize, kl: usize, ku: usize) -> Result<Self> {
        let mut a = Self::new(n, kl, ku)?;
        for i in 0..n {
            a.set(i, i, 1.0);
        }
        Ok(a)
    }

    /// Dense matrix viewed as a full band.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut a = Self::new(n, n.saturating_sub(1), n.saturating_sub(1))?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Argument("dense matrix must be square".into()));
            }
            for (j, &v) in row.iter().enumerate() {
                a.set(i, j, v);
            }
        }
        Ok(a)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    pub fn storage(&self) -> &[f64] {
        &self.data
    }

    fn width(&self) -> usize {
        self.kl + self.ku + 1
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[i * self.width() + j + self.kl - i]
        } else {
            0.0
        }
    }

    /// Panics when `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let w = self.width();
        self.data[i * w + j + self.kl - i] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let w = self.width();
        self.data[i * w + j + self.kl - i] += v;
    }

    fn row_cols(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.n)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        let w = self.width();
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let row = &self.data[i * w..(i + 1) * w];
            *yi = self
                .row_cols(i)
                .map(|j| row[j + self.kl - i] * x[j])
                .sum();
        }
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row_cols(i).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `alpha * I + beta * self`.
    pub fn shifted(&self, alpha: f64, beta: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= beta);
        for i in 0..self.n {
            out.add(i, i, alpha);
        }
        out
    }
}

/// LU factors of a band matrix with partial pivoting inside the band.
///
/// Row interchanges widen the upper band of `U` to `kl + ku`.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    lu: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn factor(a: &BandedMatrix) -> Result<Self> {
        let (n, kl, ku) = (a.n, a.kl, a.ku);
        let w = 2 * kl + ku + 1;
        let mut lu = vec![0.0; n * w];
        for i in 0..n {
            for j in a.row_cols(i) {
                lu[i * w + j + kl - i] = a.get(i, j);
            }
        }
        let threshold = PIVOT_RTOL * a.norm_inf();
        let at = |i: usize, j: usize| i * w + j + kl - i;
        let mut pivots = vec![0; n];

        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);

            let mut p = k;
            let mut best = lu[at(k, k)].abs();
            for i in k + 1..=last_row {
                let v = lu[at(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= threshold {
                return Err(Error::Singular {
                    row: k,
                    pivot: best,
                    threshold,
                });
            }
            pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    lu.swap(at(k, j), at(p, j));
                }
            }

            let pivot = lu[at(k, k)];
            for i in k + 1..=last_row {
                let l = lu[at(i, k)] / pivot;
                lu[at(i, k)] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        lu[at(i, j)] -= l * lu[at(k, j)];
                    }
                }
            }
        }
        Ok(Self { n, kl, ku, lu, pivots })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let w = 2 * kl + ku + 1;
        let at = |i: usize, j: usize| i * w + j + kl - i;

        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..=(k + kl).min(n - 1) {
                    x[i] -= self.lu[at(i, k)] * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + kl + ku).min(n - 1) {
                s -= self.lu[at(k, j)] * x[j];
            }
            x[k] = s / self.lu[at(k, k)];
        }
    }
}

/// Solve `A x = b` for a band matrix.
pub fn banded_lu_solve(a: &BandedMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.dim() {
        return Err(Error::Argument(format!(
            "right-hand side has length {}, matrix dimension is {}",
            b.len(),
            a.dim()
        )));
    }
    Ok(BandedLu::factor(a)?.solve(b))
}
