use crate::error::{Error, Result};
use crate::grid::PhaseSpace;
use crate::scenarios::StepRule;

/// Time step from the configured rule. Transport-limited only; ε never enters.
pub fn compute_dt(rule: StepRule, phase: &PhaseSpace) -> Result<f64> {
    let dx_min = phase.space.cell_size().iter().copied().fold(f64::INFINITY, f64::min);
    match rule {
        StepRule::Fixed(dt) => Ok(dt),
        _ if phase.space.dim() == 0 => Err(Error::config("space-homogeneous problems need a fixed time step")),
        StepRule::Cfl(cfl) => Ok(cfl * dx_min / phase.velocity.extent()),
        StepRule::DxFraction(frac) => Ok(frac * dx_min),
    }
}

/// Step bound `min(ε, Δx / v_max)` of a fully explicit integrator.
pub fn explicit_dt_bound(eps: f64, phase: &PhaseSpace) -> f64 {
    let dx_min = phase.space.cell_size().iter().copied().fold(f64::INFINITY, f64::min);
    eps.min(dx_min / phase.velocity.extent())
}

/// Ratio of the IMEX step to the explicit bound.
pub fn speed_up(dt: f64, eps: f64, phase: &PhaseSpace) -> f64 {
    dt / explicit_dt_bound(eps, phase)
}
