//! Discrete-velocity solver for the multi-species ES-BGK kinetic model with
//! asymptotic-preserving IMEX time stepping, conservative Gaussian
//! projection and CWENO3 transport.

// `!(x > 0.0)` is used on purpose: it also rejects NaN. Index loops are the
// clearest form for the small dense kernels.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod collision;
pub mod conservation;
pub mod driver;
pub mod error;
pub mod field;
pub mod grid;
pub mod moments;
pub mod riemann;
pub mod scenarios;
pub mod tensor;
pub mod transport;

pub use collision::{
    imex_step, imex_step_ars233, imex_step_first_order, implicit_relaxation_stage, lambda_value, sigma_update,
    ButcherTableau, Integrator, KineticModel, LambdaModel, RelaxationParams, StageState, State, Workspace,
};
pub use conservation::{build_integration_matrix, conservative_projection, IntegrationMatrix, MomentVector, WeightField};
pub use driver::{
    compute_dt, convergence_study, partition_domain, run, speed_up, ConvergenceTable, DiagnosticsRecord, RunOptions,
    RunOutcome, Simulation,
};
pub use error::{Error, Result};
pub use field::DistributionField;
pub use grid::{build_velocity_grid, PhaseSpace, SpatialGrid, SpeciesSet, VelocityGrid};
pub use moments::{mixture_moments, species_moments, tau_tensors, MixtureMoments, SpeciesMoments};
pub use riemann::{exact_riemann, RiemannSolution, RiemannState};
pub use scenarios::{ConvergenceKind, Operator, Scenario, ScenarioName, StepRule};
pub use tensor::SymMat;
pub use transport::{BoundaryKind, BoundarySpec, CwenoOptions, Transport};
