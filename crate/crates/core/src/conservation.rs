//! Weighted L² projection of a sampled Gaussian onto the set of fields with
//! prescribed discrete moments.
//!
//! With `g = G / h` the constraint reads `Z g = a`, where
//! `Z[r][j] = w_j h_j phi_r(v_j)` and `phi = (1, m v, ½ m |v|²)`. The minimum
//! distance correction is `G = G̃ + h ∘ Zᵀ (Z Zᵀ)⁻¹ (a - Z(G̃ / h))`. Rescaling
//! `h` by a constant leaves the result unchanged, so `h` is stored normalized
//! to a unit peak.

use crate::error::{Error, Result};
use crate::grid::VelocityGrid;
use crate::tensor::spd_solve_in_place;

/// Lower bound on the exponent of `h` so far-tail nodes never underflow to zero.
pub const H_EXPONENT_FLOOR: f64 = -700.0;

/// Target moments `(n, ρ u_1..u_D, E)`. May be truncated to its first rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentVector {
    values: [f64; 5],
    len: usize,
}

impl MomentVector {
    pub fn new(n: f64, momentum: &[f64], energy: f64) -> Self {
        let mut values = [0.0; 5];
        values[0] = n;
        values[1..=momentum.len()].copy_from_slice(momentum);
        values[momentum.len() + 1] = energy;
        Self {
            values,
            len: momentum.len() + 2,
        }
    }

    /// Only the first `rows` entries of `full` are constrained.
    pub fn truncated(full: &[f64]) -> Self {
        assert!(!full.is_empty() && full.len() <= 5);
        let mut values = [0.0; 5];
        values[..full.len()].copy_from_slice(full);
        Self {
            values,
            len: full.len(),
        }
    }

    /// Discrete moments of `f` under the grid quadrature.
    pub fn of_field(f: &[f64], grid: &VelocityGrid, mass: f64) -> Self {
        let dim = grid.dim();
        let mut values = [0.0; 5];
        let mut phi = [0.0; 5];
        for (j, v) in grid.nodes().enumerate() {
            monomials(v, grid.sq_norms()[j], mass, &mut phi);
            let wf = grid.weights()[j] * f[j];
            for r in 0..dim + 2 {
                values[r] += wf * phi[r];
            }
        }
        Self { values, len: dim + 2 }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values[..self.len]
    }

    pub fn density(&self) -> f64 {
        self.values[0]
    }

    pub fn energy(&self) -> f64 {
        self.values[self.len - 1]
    }

    /// `max_r |self_r - other_r| / (1 + |other_r|)`.
    pub fn mismatch(&self, other: &MomentVector) -> f64 {
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| (a - b).abs() / (1.0 + b.abs()))
            .fold(0.0, f64::max)
    }
}

#[inline]
fn monomials(v: &[f64], sq_norm: f64, mass: f64, phi: &mut [f64; 5]) {
    let dim = v.len();
    phi[0] = 1.0;
    for d in 0..dim {
        phi[1 + d] = mass * v[d];
    }
    phi[dim + 1] = 0.5 * mass * sq_norm;
}

/// Strictly positive weight field `h` over velocity nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightField {
    values: Vec<f64>,
}

impl WeightField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(j) = values.iter().position(|&h| !(h > 0.0) || !h.is_finite()) {
            return Err(Error::domain(format!("weight field not positive at node {j}")));
        }
        Ok(Self { values })
    }

    pub fn ones(len: usize) -> Self {
        Self {
            values: vec![1.0; len],
        }
    }

    /// Unit-peak Maxwellian shape `exp(-m |v-u|² / 2T)` with a floored exponent.
    pub fn maxwellian(grid: &VelocityGrid, mass: f64, u: &[f64], temperature: f64) -> Result<Self> {
        if !(temperature > 0.0) {
            return Err(Error::domain(format!("weight temperature must be positive, got {temperature}")));
        }
        let mut values = vec![0.0; grid.len()];
        fill_maxwellian_weight(grid, mass, u, temperature, &mut values);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[inline]
pub(crate) fn fill_maxwellian_weight(grid: &VelocityGrid, mass: f64, u: &[f64], temperature: f64, out: &mut [f64]) {
    let dim = grid.dim();
    let k = 0.5 * mass / temperature;
    for (h, v) in out.iter_mut().zip(grid.nodes()) {
        let d2: f64 = (0..dim).map(|d| (v[d] - u[d]).powi(2)).sum();
        *h = (-k * d2).max(H_EXPONENT_FLOOR).exp();
    }
}

/// Dense `(D+2) x M` integration matrix, row-major. May hold fewer rows.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationMatrix {
    rows: usize,
    cols: usize,
    z: Vec<f64>,
}

impl IntegrationMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, j: usize) -> f64 {
        self.z[r * self.cols + j]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.z[r * self.cols..(r + 1) * self.cols]
    }

    /// Keeps only the first `rows` constraints.
    pub fn truncated(&self, rows: usize) -> Self {
        assert!(rows >= 1 && rows <= self.rows);
        Self {
            rows,
            cols: self.cols,
            z: self.z[..rows * self.cols].to_vec(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `Z Zᵀ`, row-major.
    pub fn gram(&self) -> Vec<f64> {
        let k = self.rows;
        let mut g = vec![0.0; k * k];
        for r in 0..k {
            for s in r..k {
                let v: f64 = self.row(r).iter().zip(self.row(s)).map(|(a, b)| a * b).sum();
                g[r * k + s] = v;
                g[s * k + r] = v;
            }
        }
        g
    }
}

pub fn build_integration_matrix(grid: &VelocityGrid, mass: f64, h: &WeightField) -> Result<IntegrationMatrix> {
    let hv = h.values();
    if hv.len() != grid.len() {
        return Err(Error::config("weight field length does not match the velocity grid"));
    }
    let rows = grid.dim() + 2;
    let cols = grid.len();
    let mut z = vec![0.0; rows * cols];
    let mut phi = [0.0; 5];
    for (j, v) in grid.nodes().enumerate() {
        monomials(v, grid.sq_norms()[j], mass, &mut phi);
        let wh = grid.weights()[j] * hv[j];
        for r in 0..rows {
            z[r * cols + j] = wh * phi[r];
        }
    }
    Ok(IntegrationMatrix { rows, cols, z })
}

/// Solves the Gram system after symmetric diagonal equilibration.
fn solve_gram(gram: &mut [f64], k: usize, rhs: &mut [f64]) -> bool {
    let mut s = [0.0f64; 5];
    for r in 0..k {
        let d = gram[r * k + r];
        if !(d > 0.0) {
            return false;
        }
        s[r] = 1.0 / d.sqrt();
    }
    for r in 0..k {
        for c in 0..k {
            gram[r * k + c] *= s[r] * s[c];
        }
        rhs[r] *= s[r];
    }
    if !spd_solve_in_place(gram, k, rhs) {
        return false;
    }
    for r in 0..k {
        rhs[r] *= s[r];
    }
    true
}

/// Returns the field closest to `g_tilde` whose moments are exactly `a`.
pub fn conservative_projection(
    g_tilde: &[f64],
    a: &MomentVector,
    z: &IntegrationMatrix,
    h: &WeightField,
) -> Result<Vec<f64>> {
    let hv = h.values();
    if a.len() != z.rows() || g_tilde.len() != z.cols() || hv.len() != z.cols() {
        return Err(Error::config("projection operands have mismatched shapes"));
    }
    let k = z.rows();
    let scaled: Vec<f64> = g_tilde.iter().zip(hv).map(|(g, h)| g / h).collect();
    let current = z.apply(&scaled);
    let mut lam: Vec<f64> = a.as_slice().iter().zip(&current).map(|(t, c)| t - c).collect();
    let mut gram = z.gram();
    if !solve_gram(&mut gram, k, &mut lam) {
        return Err(Error::GridDegeneracy { cell: 0, species: 0 });
    }
    Ok((0..z.cols())
        .map(|j| {
            let corr: f64 = (0..k).map(|r| z.get(r, j) * lam[r]).sum();
            hv[j] * (scaled[j] + corr)
        })
        .collect())
}

/// Matrix-free projection of `g` in place, with `h` given as raw positive
/// values. Equivalent to [`conservative_projection`] with all `D + 2` rows.
pub(crate) fn project_in_place(
    g: &mut [f64],
    a: &MomentVector,
    grid: &VelocityGrid,
    mass: f64,
    h: &[f64],
) -> Result<()> {
    let dim = grid.dim();
    let k = dim + 2;
    let mut res = [0.0f64; 5];
    res[..k].copy_from_slice(a.as_slice());
    let mut gram = [0.0f64; 25];
    let mut phi = [0.0; 5];
    let w = grid.weights();
    let sq = grid.sq_norms();
    for (j, v) in grid.nodes().enumerate() {
        monomials(v, sq[j], mass, &mut phi);
        let wg = w[j] * g[j];
        let wh = w[j] * h[j];
        let wh2 = wh * wh;
        for r in 0..k {
            res[r] -= wg * phi[r];
            let pr = wh2 * phi[r];
            for s in r..k {
                gram[r * k + s] += pr * phi[s];
            }
        }
    }
    for r in 0..k {
        for s in 0..r {
            gram[r * k + s] = gram[s * k + r];
        }
    }
    if !solve_gram(&mut gram[..k * k], k, &mut res[..k]) {
        return Err(Error::GridDegeneracy { cell: 0, species: 0 });
    }
    for (j, v) in grid.nodes().enumerate() {
        monomials(v, sq[j], mass, &mut phi);
        let corr: f64 = (0..k).map(|r| phi[r] * res[r]).sum();
        g[j] += h[j] * h[j] * w[j] * corr;
    }
    Ok(())
}
