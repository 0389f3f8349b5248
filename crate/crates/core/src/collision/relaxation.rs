//! The implicit ES-BGK relaxation stage.
//!
//! For `f = f* + θ/ε (G[f] - f)` with `θ = λ Δt_eff`, the conserved moments of
//! `f` equal those of `f*`, and the second moment obeys a linear relation with
//! a closed-form solution. `G` is therefore computable before `f`, and
//! `f = (ε f* + θ G) / (ε + θ)` needs no nonlinear iteration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conservation::{fill_maxwellian_weight, project_in_place, MomentVector};
use crate::error::{Error, Result};
use crate::field::DistributionField;
use crate::grid::{PhaseSpace, VelocityGrid};
use crate::moments::{gaussian_from_factor, tau_tensors_from_theta, MixtureMoments, RelaxationTensors, N_FLOOR};
use crate::tensor::SymMat;

/// Collision frequency coefficient of the Boltzmann-matched model.
pub const A2: f64 = 0.436;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaModel {
    Constant { value: f64 },
    /// `λ = P / (1 - ν) · A2 3π / (√2 T)`.
    BoltzmannMatched { a2: f64 },
}

impl Default for LambdaModel {
    fn default() -> Self {
        LambdaModel::Constant { value: 1.0 }
    }
}

impl LambdaModel {
    pub fn matched() -> Self {
        LambdaModel::BoltzmannMatched { a2: A2 }
    }
}

pub fn lambda_value(model: &LambdaModel, mix: &MixtureMoments, nu: f64) -> Result<f64> {
    match *model {
        LambdaModel::Constant { value } => {
            if !(value > 0.0) {
                return Err(Error::config(format!("constant λ must be positive, got {value}")));
            }
            Ok(value)
        }
        LambdaModel::BoltzmannMatched { a2 } => {
            if !(mix.temperature > 0.0) {
                return Err(Error::domain(format!(
                    "matched λ needs T > 0, got {}",
                    mix.temperature
                )));
            }
            let p = mix.n * mix.temperature;
            Ok(p / (1.0 - nu) * (a2 * 3.0 * std::f64::consts::PI) / (std::f64::consts::SQRT_2 * mix.temperature))
        }
    }
}

/// Closed-form second moment after relaxation:
/// `[ε Σ* + λΔt(1-ν)(T n I + ρ u⊗u)] / (ε + λΔt(1-ν))`.
pub fn sigma_update(
    sigma_star: &SymMat,
    mix_next: &MixtureMoments,
    lambda: f64,
    dt_eff: f64,
    eps: f64,
    nu: f64,
) -> SymMat {
    let dim = sigma_star.dim();
    let k = lambda * dt_eff * (1.0 - nu);
    let mut target = SymMat::scalar(dim, mix_next.temperature * mix_next.n);
    target.add_outer(mix_next.velocity(), mix_next.rho);
    (*sigma_star * eps + target * k) * (1.0 / (eps + k))
}

/// Physical and numerical parameters of the relaxation operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelaxationParams {
    /// Knudsen number.
    pub eps: f64,
    pub nu: f64,
    pub lambda: LambdaModel,
    /// Restore exact discrete moments of every Gaussian.
    pub projection: bool,
}

impl Default for RelaxationParams {
    fn default() -> Self {
        Self {
            eps: 1.0,
            nu: -0.5,
            lambda: LambdaModel::default(),
            projection: true,
        }
    }
}

impl RelaxationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::config(format!("eps must be positive, got {}", self.eps)));
        }
        if !(-0.5..1.0).contains(&self.nu) && self.nu != -1.0 {
            // ν = -1 is used deliberately for Prandtl matching in 1D-space runs.
            log::warn!("nu = {} outside [-1/2, 1); Gaussians may lose definiteness", self.nu);
        }
        if self.nu >= 1.0 {
            return Err(Error::config(format!("nu must be below 1, got {}", self.nu)));
        }
        Ok(())
    }
}

/// Per-cell data of a relaxation stage.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRelaxation {
    pub mixture: MixtureMoments,
    pub tensors: RelaxationTensors,
    pub lambda: f64,
}

/// Result of one implicit stage.
#[derive(Debug, Clone)]
pub struct StageState {
    pub stage: usize,
    pub f: DistributionField,
    /// `λ (G - f*) / (ε + λΔt_eff)`, when requested.
    pub collision: Option<DistributionField>,
    /// `None` for solid cells.
    pub cells: Vec<Option<CellRelaxation>>,
    /// Largest Gaussian value per species.
    pub gaussian_sup: Vec<f64>,
}

/// Summary of an in-place relaxation pass.
#[derive(Debug, Clone)]
pub(crate) struct RelaxSummary {
    pub cells: Vec<Option<CellRelaxation>>,
    pub gaussian_sup: Vec<f64>,
}

struct Scratch {
    g: Vec<f64>,
    h: Vec<f64>,
}

/// Implicit stage on a copy of `f_star`.
pub fn implicit_relaxation_stage(
    f_star: DistributionField,
    dt_eff: f64,
    params: &RelaxationParams,
    phase: &PhaseSpace,
    stage: usize,
    want_collision: bool,
) -> Result<StageState> {
    let mut f = f_star;
    let mut collision = want_collision.then(|| DistributionField::zeros(f.cells(), f.species_count(), f.nodes()));
    let s = relax_in_place(&mut f, collision.as_mut(), dt_eff, params, phase)?;
    Ok(StageState {
        stage,
        f,
        collision,
        cells: s.cells,
        gaussian_sup: s.gaussian_sup,
    })
}

/// Replaces `f` (holding `f*`) by the stage solution and optionally writes the
/// stage collision term.
pub(crate) fn relax_in_place(
    f: &mut DistributionField,
    collision: Option<&mut DistributionField>,
    dt_eff: f64,
    params: &RelaxationParams,
    phase: &PhaseSpace,
) -> Result<RelaxSummary> {
    if !(dt_eff >= 0.0) {
        return Err(Error::config(format!("stage step must be non-negative, got {dt_eff}")));
    }
    let w = f.width();
    let species = f.species_count();
    let nodes = f.nodes();
    let grid = &phase.velocity;
    let masses = phase.species.masses();
    let space = &phase.space;
    let init = || Scratch {
        g: vec![0.0; nodes],
        h: vec![0.0; nodes],
    };

    let per_cell: Vec<(Option<CellRelaxation>, Vec<f64>)> = match collision {
        Some(r) => f
            .data_mut()
            .par_chunks_mut(w)
            .zip(r.data_mut().par_chunks_mut(w))
            .enumerate()
            .map_init(init, |s, (c, (fc, rc))| {
                if space.is_solid(c) {
                    rc.fill(0.0);
                    return Ok((None, vec![0.0; species]));
                }
                relax_cell(fc, Some(rc), dt_eff, params, grid, masses, s)
                    .map(|(cell, sup)| (Some(cell), sup))
                    .map_err(|e| e.with_cell(c))
            })
            .collect::<Result<_>>()?,
        None => f
            .data_mut()
            .par_chunks_mut(w)
            .enumerate()
            .map_init(init, |s, (c, fc)| {
                if space.is_solid(c) {
                    return Ok((None, vec![0.0; species]));
                }
                relax_cell(fc, None, dt_eff, params, grid, masses, s)
                    .map(|(cell, sup)| (Some(cell), sup))
                    .map_err(|e| e.with_cell(c))
            })
            .collect::<Result<_>>()?,
    };

    let mut gaussian_sup = vec![0.0f64; species];
    let mut cells = Vec::with_capacity(per_cell.len());
    for (cell, sup) in per_cell {
        for (a, b) in gaussian_sup.iter_mut().zip(&sup) {
            *a = a.max(*b);
        }
        cells.push(cell);
    }
    Ok(RelaxSummary { cells, gaussian_sup })
}

/// Conserved moments and raw second moment of one cell.
fn stage_moments(f: &[f64], grid: &VelocityGrid, masses: &[f64], n_p: &mut [f64]) -> Result<MixtureMoments> {
    let dim = grid.dim();
    let nv = grid.len();
    let w = grid.weights();
    let sq = grid.sq_norms();
    let (mut n, mut rho, mut energy) = (0.0, 0.0, 0.0);
    let mut mom = [0.0f64; 3];
    let mut sigma = SymMat::zeros(dim);
    for (p, &m) in masses.iter().enumerate() {
        let fp = &f[p * nv..(p + 1) * nv];
        let (mut np, mut ep) = (0.0, 0.0);
        let mut mp = [0.0f64; 3];
        let mut sp = SymMat::zeros(dim);
        for (j, v) in grid.nodes().enumerate() {
            let wf = w[j] * fp[j];
            np += wf;
            for d in 0..dim {
                mp[d] += wf * v[d];
            }
            ep += wf * sq[j];
            sp.add_outer(v, wf);
        }
        n_p[p] = np;
        n += np;
        rho += m * np;
        for d in 0..dim {
            mom[d] += m * mp[d];
        }
        energy += 0.5 * m * ep;
        sigma = sigma + sp * m;
    }
    if !(rho > N_FLOOR) {
        return Err(Error::Vacuum { cell: 0, rho });
    }
    let mut u = [0.0; 3];
    for d in 0..dim {
        u[d] = mom[d] / rho;
    }
    let u_sq: f64 = u[..dim].iter().map(|x| x * x).sum();
    let temperature = 2.0 * (energy - 0.5 * rho * u_sq) / (dim as f64 * n);
    if !(temperature > 0.0) {
        return Err(Error::PositivityLoss {
            cell: 0,
            species: 0,
            what: format!("mixture temperature {temperature:e} not positive"),
        });
    }
    let mut theta = sigma.scale(1.0 / rho);
    theta.add_outer(&u[..dim], -1.0);
    Ok(MixtureMoments {
        dim,
        n,
        rho,
        u,
        temperature,
        pressure: n * temperature,
        energy,
        theta,
        sigma,
    })
}

fn relax_cell(
    f: &mut [f64],
    collision: Option<&mut [f64]>,
    dt_eff: f64,
    params: &RelaxationParams,
    grid: &VelocityGrid,
    masses: &[f64],
    s: &mut Scratch,
) -> Result<(CellRelaxation, Vec<f64>)> {
    let dim = grid.dim();
    let nv = grid.len();
    let mut n_p = [0.0f64; 16];
    if masses.len() > n_p.len() {
        return Err(Error::config("at most 16 species supported"));
    }
    let star = stage_moments(f, grid, masses, &mut n_p)?;
    let lambda = lambda_value(&params.lambda, &star, params.nu)?;
    let eps = params.eps;
    let theta_dt = lambda * dt_eff;

    let sigma_next = sigma_update(&star.sigma, &star, lambda, dt_eff, eps, params.nu);
    let mut theta_next = sigma_next.scale(1.0 / star.rho);
    theta_next.add_outer(star.velocity(), -1.0);
    let tensors = tau_tensors_from_theta(&star, &theta_next, params.nu, masses)?;

    let a = eps / (eps + theta_dt);
    let b = theta_dt / (eps + theta_dt);
    let c = lambda / (eps + theta_dt);
    let u = star.velocity();
    let mut sup = vec![0.0f64; masses.len()];
    let mut collision = collision;
    for (p, &m) in masses.iter().enumerate() {
        let np = n_p[p];
        if np < -N_FLOOR {
            return Err(Error::PositivityLoss {
                cell: 0,
                species: p,
                what: format!("negative species density {np:e}"),
            });
        }
        let g = &mut s.g;
        if np <= N_FLOOR {
            g.fill(0.0);
        } else {
            let tt = &tensors.tau_tilde[p];
            let chol = tt.cholesky().ok_or_else(|| Error::PositivityLoss {
                cell: 0,
                species: p,
                what: "corrected tensor not positive definite".into(),
            })?;
            gaussian_from_factor(np, u, &chol, grid, g);
            if params.projection {
                let t_h = m * tt.trace() / dim as f64;
                fill_maxwellian_weight(grid, m, u, t_h, &mut s.h);
                let rho_p = m * np;
                let mut mom = [0.0; 3];
                for d in 0..dim {
                    mom[d] = rho_p * u[d];
                }
                let u_sq: f64 = u.iter().map(|x| x * x).sum();
                let target = MomentVector::new(
                    np,
                    &mom[..dim],
                    0.5 * rho_p * u_sq + 0.5 * dim as f64 * np * star.temperature,
                );
                project_in_place(g, &target, grid, m, &s.h).map_err(|e| match e {
                    Error::GridDegeneracy { cell, .. } => Error::GridDegeneracy { cell, species: p },
                    e => e,
                })?;
            }
        }
        let fp = &mut f[p * nv..(p + 1) * nv];
        if let Some(r) = collision.as_deref_mut() {
            let rp = &mut r[p * nv..(p + 1) * nv];
            for j in 0..nv {
                rp[j] = c * (g[j] - fp[j]);
            }
        }
        let mut gmax = 0.0f64;
        for j in 0..nv {
            let (fs, gj) = (fp[j], g[j]);
            // Convex combination; the clamp only removes rounding outside the hull.
            let v = a * fs + b * gj;
            fp[j] = v.clamp(fs.min(gj), fs.max(gj));
            gmax = gmax.max(gj.abs());
        }
        sup[p] = gmax;
    }
    Ok((
        CellRelaxation {
            mixture: star,
            tensors,
            lambda,
        },
        sup,
    ))
}
