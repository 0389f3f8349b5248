//! Time loop, step control, diagnostics, output and convergence studies.

mod convergence;
mod diagnostics;
mod partition;
mod run;
mod timestep;

pub use convergence::{convergence_study, least_squares_slope, ConvergenceRow, ConvergenceTable};
pub use diagnostics::{
    conserved_totals, diagnostics, diagnostics_header, mixture_density, write_diagnostics, write_snapshot,
    DiagnosticsRecord,
};
pub use partition::partition_domain;
pub use run::{run, snapshot_path, with_threads, RunOptions, RunOutcome, Simulation};
pub use timestep::{compute_dt, explicit_dt_bound, speed_up};
