//! Cell-averaged initial distributions.
//!
//! Every initial distribution is a sum of Maxwellians whose moments vary in
//! space. Cell averages use Gauss–Legendre points on the pieces of the cell
//! between known discontinuities, so piecewise-smooth data is integrated to
//! quadrature accuracy. Each point Maxwellian is projected onto its exact
//! moments, making discrete cell moments equal to the averaged moments.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{InitialData, Scenario};
use crate::conservation::{fill_maxwellian_weight, project_in_place, MomentVector};
use crate::error::{Error, Result};
use crate::field::DistributionField;
use crate::grid::{PhaseSpace, SpatialGrid, VelocityGrid};
use crate::moments::maxwellian_into;
use crate::tensor::spd_solve_in_place;

/// Gauss–Legendre points per piece and axis.
pub const GAUSS_POINTS: usize = 3;

const GL_X: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GL_W: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// Points and weights (summing to 1) of one axis interval, split at `breaks`.
fn axis_rule(lo: f64, hi: f64, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut edges = vec![lo];
    edges.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
    edges.push(hi);
    let width = hi - lo;
    let mut out = Vec::with_capacity(3 * (edges.len() - 1));
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for k in 0..GAUSS_POINTS {
            out.push((mid + half * GL_X[k], 0.5 * GL_W[k] * (b - a) / width));
        }
    }
    out
}

/// Quadrature points `(x, weight)` of `cell`, weights summing to 1.
pub fn cell_quadrature(space: &SpatialGrid, cell: usize, breaks: &[Vec<f64>]) -> Vec<([f64; 2], f64)> {
    match space.dim() {
        0 => vec![([0.0; 2], 1.0)],
        1 => {
            let lo = space.origin()[0] + cell as f64 * space.cell_size()[0];
            axis_rule(lo, lo + space.cell_size()[0], &breaks[0])
                .into_iter()
                .map(|(x, w)| ([x, 0.0], w))
                .collect()
        }
        _ => {
            let nx = space.cells()[0];
            let (ix, iy) = (cell % nx, cell / nx);
            let h = space.cell_size();
            let x0 = space.origin()[0] + ix as f64 * h[0];
            let y0 = space.origin()[1] + iy as f64 * h[1];
            let rx = axis_rule(x0, x0 + h[0], &breaks[0]);
            let ry = axis_rule(y0, y0 + h[1], &breaks[1]);
            let mut out = Vec::with_capacity(rx.len() * ry.len());
            for &(y, wy) in &ry {
                for &(x, wx) in &rx {
                    out.push(([x, y], wx * wy));
                }
            }
            out
        }
    }
}

/// Maxwellian components `(species, n, u, T)` at position `x`.
pub(super) fn components(data: &InitialData, scenario: &Scenario, x: [f64; 2], mut emit: impl FnMut(usize, f64, &[f64], f64)) {
    let masses = &scenario.masses;
    let dv = scenario.velocity.dim;
    let mut u = [0.0f64; 3];
    match data {
        InitialData::Mixture { species } => {
            for (p, comps) in species.iter().enumerate() {
                for c in comps {
                    emit(p, c.n, &c.u, c.temperature);
                }
            }
        }
        InitialData::Bump {
            rho_base,
            rho_amplitude,
            temperature_base,
            temperature_amplitude,
            sharpness,
            center,
        } => {
            let e = (-sharpness * (x[0] - center).powi(2)).exp();
            let rho = rho_base * (1.0 + rho_amplitude * e);
            let t = temperature_base * (1.0 + temperature_amplitude * e);
            for (p, m) in masses.iter().enumerate() {
                emit(p, rho / m, &u[..dv], t);
            }
        }
        InitialData::Riemann {
            left,
            right,
            delta,
            interface,
            ..
        } => {
            let (m1, m2) = (masses[0], masses[1]);
            if x[0] < *interface {
                let rho1 = (1.0 - delta) * left.rho;
                let t = left.p / (rho1 / m1);
                u[0] = left.u;
                emit(0, rho1 / m1, &u[..dv], t);
                emit(1, delta * left.rho / m2, &u[..dv], t);
            } else {
                let rho2 = (1.0 - delta) * right.rho;
                let t = right.p / (rho2 / m2);
                u[0] = right.u;
                emit(0, delta * right.rho / m1, &u[..dv], t);
                emit(1, rho2 / m2, &u[..dv], t);
            }
        }
        InitialData::ShearLayer {
            rho_tilde,
            delta,
            speed,
            amplitude,
            wavenumber,
            interface_fraction,
        } => {
            let (m1, m2) = (masses[0], masses[1]);
            let y_int = scenario.space.origin[1] + interface_fraction * scenario.space.lengths[1];
            u[1] = amplitude * (wavenumber * PI * x[0]).sin();
            let (n1, n2, t) = if x[1] > y_int {
                u[0] = *speed;
                (rho_tilde[0] * (1.0 - delta) / m1, rho_tilde[1] * delta / m2, m1 / rho_tilde[0])
            } else {
                u[0] = -speed;
                (rho_tilde[0] * delta / m1, rho_tilde[1] * (1.0 - delta) / m2, m2 / rho_tilde[1])
            };
            emit(0, n1, &u[..dv], t);
            emit(1, n2, &u[..dv], t);
        }
        InitialData::Uniform { species } => {
            for (p, s) in species.iter().enumerate() {
                emit(p, s.rho / masses[p], &s.u, s.temperature);
            }
        }
        InitialData::Decay {
            amplitude,
            temperature,
            drift,
            wavenumber,
            weights,
        } => {
            let base = 0.25 * (1.0 + amplitude * (wavenumber * PI * x[0]).sin());
            let minus: Vec<f64> = drift.iter().map(|d| -d).collect();
            for (p, w) in weights.iter().enumerate() {
                emit(p, w * base, drift, *temperature);
                emit(p, w * base, &minus, *temperature);
            }
        }
    }
}

/// Positive discrete Maxwellian `exp(α·ψ(v))`, `ψ = (1, c, |c|²/2)` with
/// `c = (v - u)/√(T/m)`, whose discrete moments equal those of `M^{n,u,T}`.
/// Damped Newton on the convex dual, started from the sampled Maxwellian.
fn fit_discrete_maxwellian(n: f64, u: &[f64], t: f64, m: f64, grid: &VelocityGrid, g: &mut [f64]) -> Result<()> {
    let dim = grid.dim();
    let k = dim + 2;
    let s = (t / m).sqrt();
    let psi = |v: &[f64], out: &mut [f64; 5]| {
        out[0] = 1.0;
        let mut c2 = 0.0;
        for d in 0..dim {
            let c = (v[d] - u[d]) / s;
            out[1 + d] = c;
            c2 += c * c;
        }
        out[dim + 1] = 0.5 * c2;
    };
    let mut target = [0.0; 5];
    target[0] = n;
    target[dim + 1] = 0.5 * dim as f64 * n;
    let mut alpha = [0.0; 5];
    alpha[0] = (n / (2.0 * PI * s * s).powf(0.5 * dim as f64)).ln();
    alpha[dim + 1] = -1.0;

    let w = grid.weights();
    let dual = |alpha: &[f64; 5], g: &mut [f64]| -> f64 {
        let mut p = [0.0; 5];
        let mut total = 0.0;
        for (j, v) in grid.nodes().enumerate() {
            psi(v, &mut p);
            let e: f64 = (0..k).map(|r| alpha[r] * p[r]).sum();
            g[j] = e.exp();
            total += w[j] * g[j];
        }
        total - (0..k).map(|r| alpha[r] * target[r]).sum::<f64>()
    };
    let mut phi = dual(&alpha, g);
    let mut norm = f64::INFINITY;
    for _ in 0..100 {
        let mut res = target;
        let mut hess = [0.0; 25];
        let mut p = [0.0; 5];
        for (j, v) in grid.nodes().enumerate() {
            psi(v, &mut p);
            let wg = w[j] * g[j];
            for r in 0..k {
                res[r] -= wg * p[r];
                for q in 0..k {
                    hess[r * k + q] += wg * p[r] * p[q];
                }
            }
        }
        norm = (0..k).map(|r| res[r].abs()).fold(0.0, f64::max);
        if norm <= 1e-15 * n {
            return Ok(());
        }
        let mut step = res;
        if !spd_solve_in_place(&mut hess[..k * k], k, &mut step[..k]) {
            break;
        }
        let mut scale = 1.0;
        loop {
            let mut trial = alpha;
            for r in 0..k {
                trial[r] += scale * step[r];
            }
            let next = dual(&trial, g);
            if next <= phi || scale < 1e-12 {
                alpha = trial;
                phi = next;
                break;
            }
            scale *= 0.5;
        }
        if scale < 1e-12 {
            break;
        }
    }
    // stalled at rounding level
    if norm <= 1e-13 * n {
        return Ok(());
    }
    Err(Error::Numeric(format!(
        "no positive discrete Maxwellian with n = {n}, u = {u:?}, T = {t} on this velocity grid"
    )))
}

/// Known discontinuity positions per space axis.
fn breaks(scenario: &Scenario) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new(); 2];
    match &scenario.initial {
        InitialData::Riemann { interface, .. } => out[0].push(*interface),
        InitialData::ShearLayer { interface_fraction, .. } => {
            out[1].push(scenario.space.origin[1] + interface_fraction * scenario.space.lengths[1]);
        }
        _ => {}
    }
    out
}

/// Cell averages of the initial data; solid cells stay zero.
pub fn initial_field(scenario: &Scenario, phase: &PhaseSpace) -> Result<DistributionField> {
    let grid = &phase.velocity;
    let masses = phase.species.masses();
    let nodes = grid.len();
    let dim = grid.dim();
    let mut f = DistributionField::zeros_like_phase(phase);
    let width = f.width();
    let cuts = breaks(scenario);
    f.data_mut()
        .par_chunks_mut(width)
        .enumerate()
        .try_for_each_init(
            || (vec![0.0; nodes], vec![0.0; nodes], vec![0.0; nodes]),
            |(g, h, backup), (cell, out)| -> Result<()> {
                if phase.space.is_solid(cell) {
                    return Ok(());
                }
                for (x, w) in cell_quadrature(&phase.space, cell, &cuts) {
                    let mut status = Ok(());
                    components(&scenario.initial, scenario, x, |p, n, u, t| {
                        if status.is_err() || n == 0.0 {
                            return;
                        }
                        let m = masses[p];
                        status = (|| {
                            maxwellian_into(n, u, t, m, grid, g)?;
                            let mom: Vec<f64> = u.iter().map(|ud| n * m * ud).collect();
                            let u2: f64 = u.iter().map(|ud| ud * ud).sum();
                            let e = 0.5 * n * m * u2 + 0.5 * dim as f64 * n * t;
                            fill_maxwellian_weight(grid, m, u, t, h);
                            project_in_place(g, &MomentVector::new(n, &mom, e), grid, m, h)?;
                            if g.iter().any(|&v| v < 0.0) {
                                // under-resolved: keep exact moments, restore positivity if
                                // the grid can carry them at all
                                backup.copy_from_slice(g);
                                if let Err(e) = fit_discrete_maxwellian(n, u, t, m, grid, g) {
                                    log::warn!("cell {cell}, species {p}: {e}; keeping projected Maxwellian");
                                    g.copy_from_slice(backup);
                                }
                            }
                            for (o, gv) in out[p * nodes..(p + 1) * nodes].iter_mut().zip(g.iter()) {
                                *o += w * gv;
                            }
                            Ok(())
                        })();
                    });
                    status.map_err(|e: crate::error::Error| e.with_cell(cell))?;
                }
                Ok(())
            },
        )?;
    Ok(f)
}
