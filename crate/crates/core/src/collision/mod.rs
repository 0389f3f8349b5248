//! Implicit relaxation and the IMEX time integrators.

mod imex;
mod relaxation;

pub use imex::{imex_step, imex_step_ars233, imex_step_first_order, ButcherTableau, Integrator, KineticModel, State, StepReport, Workspace};
pub use relaxation::{
    implicit_relaxation_stage, lambda_value, sigma_update, CellRelaxation, LambdaModel, RelaxationParams, StageState, A2,
};
