//! Third-order central WENO reconstruction on uniform cells.
//!
//! Per cell the optimal parabola `P_opt` is written as
//! `¼ P_L + ½ P_C + ¼ P_R` with one-sided linears `P_L`, `P_R`; the nonlinear
//! weights replace `(¼, ½, ¼)`. Every polynomial reproduces the cell average.

use serde::{Deserialize, Serialize};

/// Knobs of the nonlinear weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CwenoOptions {
    /// Regularizer relative to the mean square of the stencil data.
    pub eps_rel: f64,
    /// Use the linear weights everywhere (the optimal parabola).
    pub linear_weights: bool,
}

impl Default for CwenoOptions {
    fn default() -> Self {
        Self {
            eps_rel: 1e-6,
            linear_weights: false,
        }
    }
}

/// Floor of the regularizer on normalized data; keeps the cleared
/// denominators representable when `eps_rel` is zero.
const EPS_ABS: f64 = 1e-30;

/// Reconstructed value at the face between `center` and `ahead`, from the
/// stencil `(behind, center, ahead)`.
///
/// The right face of cell `i` is `face_value(u[i-1], u[i], u[i+1])`, its left
/// face `face_value(u[i+1], u[i], u[i-1])`.
#[inline(always)]
pub fn face_value(behind: f64, center: f64, ahead: f64, opts: &CwenoOptions) -> f64 {
    let dl = center - behind;
    let dr = ahead - center;
    let dc = ahead - behind;
    let d2 = (ahead + behind) - 2.0 * center;
    let p_opt = center + 0.25 * dc + d2 / 12.0;
    if opts.linear_weights {
        return p_opt;
    }
    let p_l = center + 0.5 * dl;
    let p_r = center + 0.5 * dr;
    let p_c = 2.0 * (p_opt - 0.25 * (p_l + p_r));

    // Weights depend only on ratios; normalizing keeps β² clear of underflow.
    // A subnormal or zero stencil would overflow 1/scale and carries nothing
    // that matters, so it falls back to the cell value. Selects rather than
    // branches keep the caller's node loop vectorizable.
    let scale = behind.abs().max(center.abs()).max(ahead.abs());
    let normal = scale >= f64::MIN_POSITIVE;
    let inv = 1.0 / if normal { scale } else { 1.0 };
    let (nl, nr, nc, n2) = (dl * inv, dr * inv, dc * inv, d2 * inv);
    let (nb, n0, na) = (behind * inv, center * inv, ahead * inv);
    let beta_l = nl * nl;
    let beta_r = nr * nr;
    let beta_c = 0.25 * nc * nc + (13.0 / 3.0) * n2 * n2;
    let eps = opts.eps_rel * (nb * nb + n0 * n0 + na * na) / 3.0 + EPS_ABS;
    // α_k = d_k / (ε + β_k)², each multiplied by the product of all three
    // denominators; ε ≥ EPS_ABS on normalized data, so nothing underflows
    let q_l = (eps + beta_l) * (eps + beta_l);
    let q_r = (eps + beta_r) * (eps + beta_r);
    let q_c = (eps + beta_c) * (eps + beta_c);
    let a_l = 0.25 * q_r * q_c;
    let a_r = 0.25 * q_l * q_c;
    let a_c = 0.5 * q_l * q_r;
    let blended = (a_l * p_l + a_r * p_r + a_c * p_c) / ((a_l + a_r) + a_c);
    if normal {
        blended
    } else {
        center
    }
}

/// A line of cell averages with two ghost cells on each side.
#[derive(Debug, Clone, PartialEq)]
pub struct Pencil {
    values: Vec<f64>,
}

impl Pencil {
    pub fn new(interior: &[f64], low: [f64; 2], high: [f64; 2]) -> Self {
        let mut values = Vec::with_capacity(interior.len() + 4);
        values.extend_from_slice(&low);
        values.extend_from_slice(interior);
        values.extend_from_slice(&high);
        Self { values }
    }

    pub fn interior_len(&self) -> usize {
        self.values.len() - 4
    }

    /// Value at interior index `i`, which may range over `-2..len+2`.
    pub fn at(&self, i: isize) -> f64 {
        self.values[(i + 2) as usize]
    }
}

/// Left and right face values of every interior cell.
pub fn cweno3_reconstruct(pencil: &Pencil, opts: &CwenoOptions) -> (Vec<f64>, Vec<f64>) {
    let n = pencil.interior_len() as isize;
    let mut left = Vec::with_capacity(n as usize);
    let mut right = Vec::with_capacity(n as usize);
    for i in 0..n {
        let (um, u0, up) = (pencil.at(i - 1), pencil.at(i), pencil.at(i + 1));
        left.push(face_value(up, u0, um, opts));
        right.push(face_value(um, u0, up, opts));
    }
    (left, right)
}
