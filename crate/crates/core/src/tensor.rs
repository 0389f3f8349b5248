//! Small symmetric matrices (dimension <= 3) stored as upper triangles.

use std::ops::{Add, Mul, Sub};

const IDX: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];

/// Symmetric `dim x dim` matrix, `dim <= 3`. Symmetry holds by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat {
    dim: usize,
    a: [f64; 6],
}

impl SymMat {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=3).contains(&dim));
        Self { dim, a: [0.0; 6] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, 1.0)
    }

    pub fn scalar(dim: usize, s: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.a[IDX[i][i]] = s;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.a[IDX[i][i]] = v;
        }
        m
    }

    /// `u ⊗ u`.
    pub fn outer(u: &[f64]) -> Self {
        let mut m = Self::zeros(u.len());
        for i in 0..u.len() {
            for j in i..u.len() {
                m.a[IDX[i][j]] = u[i] * u[j];
            }
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.a[IDX[i][j]] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[IDX[i][j]]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[IDX[i][j]] = v;
    }

    /// Accumulates `s * (x ⊗ x)`.
    #[inline]
    pub fn add_outer(&mut self, x: &[f64], s: f64) {
        for i in 0..self.dim {
            let sx = s * x[i];
            for j in i..self.dim {
                self.a[IDX[i][j]] += sx * x[j];
            }
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = *self;
        m.a.iter_mut().for_each(|x| *x *= s);
        m
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        let mut r = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                r = r.max(self.get(i, j).abs());
            }
        }
        r
    }

    /// `x^T M x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += x[i] * self.get(i, j) * x[j];
            }
        }
        s
    }

    /// Cholesky factorization; `None` unless the matrix is numerically SPD.
    pub fn cholesky(&self) -> Option<Cholesky> {
        let n = self.dim;
        let mut l = [[0.0f64; 3]; 3];
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l[j][k] * l[j][k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let djj = d.sqrt();
            l[j][j] = djj;
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                l[i][j] = s / djj;
            }
        }
        Some(Cholesky { dim: n, l })
    }
}

impl Add for SymMat {
    type Output = SymMat;
    fn add(mut self, rhs: SymMat) -> SymMat {
        debug_assert_eq!(self.dim, rhs.dim);
        self.a.iter_mut().zip(rhs.a).for_each(|(x, y)| *x += y);
        self
    }
}

impl Sub for SymMat {
    type Output = SymMat;
    fn sub(mut self, rhs: SymMat) -> SymMat {
        debug_assert_eq!(self.dim, rhs.dim);
        self.a.iter_mut().zip(rhs.a).for_each(|(x, y)| *x -= y);
        self
    }
}

impl Mul<f64> for SymMat {
    type Output = SymMat;
    fn mul(self, s: f64) -> SymMat {
        self.scale(s)
    }
}

/// Lower-triangular factor `L` with `M = L L^T`.
#[derive(Debug, Clone, Copy)]
pub struct Cholesky {
    dim: usize,
    l: [[f64; 3]; 3],
}

impl Cholesky {
    pub fn det(&self) -> f64 {
        (0..self.dim).map(|i| self.l[i][i] * self.l[i][i]).product()
    }

    /// `x^T M^{-1} x` via one forward substitution.
    #[inline]
    pub fn inv_quad_form(&self, x: &[f64]) -> f64 {
        let mut y = [0.0f64; 3];
        let mut q = 0.0;
        for i in 0..self.dim {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[i][k] * y[k];
            }
            y[i] = s / self.l[i][i];
            q += y[i] * y[i];
        }
        q
    }
}

/// Dense symmetric positive-definite solve for the small moment Gram systems.
/// `a` is row-major `n x n` and is overwritten by its Cholesky factor.
pub(crate) fn spd_solve_in_place(a: &mut [f64], n: usize, b: &mut [f64]) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let djj = d.sqrt();
        a[j * n + j] = djj;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / djj;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    true
}
