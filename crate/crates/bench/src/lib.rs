//! Shared fixtures for the benchmarks.

use kinmix_core::scenarios::Setup;
use kinmix_core::{Scenario, ScenarioName};

/// Sod tube with `cells` cells and the default 32-node velocity grid.
pub fn sod(cells: usize) -> Setup {
    let mut s = Scenario::preset(ScenarioName::Sod);
    s.space.cells = vec![cells];
    s.build().expect("sod preset builds")
}

/// Kelvin-Helmholtz layer on `nx × ny` cells with `points²` velocities.
pub fn kelvin_helmholtz(nx: usize, ny: usize, points: usize) -> Setup {
    let mut s = Scenario::preset(ScenarioName::KelvinHelmholtz);
    s.space.cells = vec![nx, ny];
    s.velocity.points = points;
    s.build().expect("kelvin_helmholtz preset builds")
}
