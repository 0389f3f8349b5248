//! Self-convergence studies against a finer reference run.

use std::io::Write;
use std::path::Path;

use super::diagnostics::mixture_density;
use super::run::Simulation;
use super::timestep::compute_dt;
use crate::error::{Error, Result};
use crate::scenarios::{ConvergenceKind, Scenario, StepRule};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    /// `Δt` for time studies, `Δx` for space-time studies.
    pub delta: f64,
    /// `‖ρ_i - ρ_ref‖₂` on the run's grid.
    pub error: f64,
    /// `log₂(e_{i-1} / e_i)`; absent on the first row.
    pub observed_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub kind: ConvergenceKind,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Least-squares slope of `log error` against `log delta`.
    pub fn slope(&self) -> f64 {
        let xs: Vec<f64> = self.rows.iter().map(|r| r.delta.ln()).collect();
        let ys: Vec<f64> = self.rows.iter().map(|r| r.error.ln()).collect();
        least_squares_slope(&xs, &ys)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "delta,error,observed_order")?;
        for r in &self.rows {
            let order = r.observed_order.map(|o| o.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{}", r.delta, r.error, order)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn final_density(s: &Scenario) -> Result<Vec<f64>> {
    let mut sim = Simulation::new(s)?;
    sim.advance_to(s.time.final_time, |_, _| Ok(()))?;
    Ok(mixture_density(&sim.state.f, &sim.model.phase))
}

/// Averages consecutive groups of `factor` cells.
fn restrict(fine: &[f64], factor: usize) -> Vec<f64> {
    fine.chunks(factor).map(|c| c.iter().sum::<f64>() / factor as f64).collect()
}

fn l2(a: &[f64], b: &[f64], dx: f64) -> f64 {
    (dx * a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>()).sqrt()
}

/// Runs `refinements + 1` levels plus a reference at half the finest step.
///
/// Time studies halve `Δt` from the base scenario's step on a fixed grid.
/// Space-time studies double the cell count, keeping the step rule, and
/// compare cell averages of the restricted reference.
pub fn convergence_study(base: &Scenario, kind: ConvergenceKind, refinements: usize) -> Result<ConvergenceTable> {
    if base.space.cells.len() != 1 {
        return Err(Error::config("convergence studies need a one-dimensional grid"));
    }
    let levels = refinements + 1;
    let mut errors = Vec::with_capacity(levels);
    let mut deltas = Vec::with_capacity(levels);
    match kind {
        ConvergenceKind::Time => {
            let dt0 = compute_dt(base.time.step, &base.phase_space()?)?;
            let at = |dt: f64| {
                let mut s = base.clone();
                s.time.step = StepRule::Fixed(dt);
                s
            };
            let dt_min = dt0 / (1u64 << refinements) as f64;
            let reference = final_density(&at(0.5 * dt_min))?;
            let dx = base.space.lengths[0] / base.space.cells[0] as f64;
            for i in 0..levels {
                let dt = dt0 / (1u64 << i) as f64;
                errors.push(l2(&final_density(&at(dt))?, &reference, dx));
                deltas.push(dt);
                log::info!("time level {i}: dt = {dt:e}, error = {:e}", errors[i]);
            }
        }
        ConvergenceKind::SpaceTime => {
            let n0 = base.space.cells[0];
            let at = |cells: usize| {
                let mut s = base.clone();
                s.space.cells = vec![cells];
                s
            };
            let n_ref = n0 << levels;
            let reference = final_density(&at(n_ref))?;
            for i in 0..levels {
                let cells = n0 << i;
                let dx = base.space.lengths[0] / cells as f64;
                let coarse_ref = restrict(&reference, n_ref / cells);
                errors.push(l2(&final_density(&at(cells))?, &coarse_ref, dx));
                deltas.push(dx);
                log::info!("space-time level {i}: {cells} cells, error = {:e}", errors[i]);
            }
        }
    }
    let rows = (0..levels)
        .map(|i| ConvergenceRow {
            delta: deltas[i],
            error: errors[i],
            observed_order: (i > 0).then(|| (errors[i - 1] / errors[i]).log2()),
        })
        .collect();
    Ok(ConvergenceTable { kind, rows })
}
