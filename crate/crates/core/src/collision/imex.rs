//! IMEX Runge–Kutta steps: explicit transport, implicit relaxation.

use serde::{Deserialize, Serialize};

use super::relaxation::{relax_in_place, RelaxationParams};
use crate::error::{Error, Result};
use crate::field::DistributionField;
use crate::grid::PhaseSpace;
use crate::transport::{BoundaryFlux, Transport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    /// Forward transport, backward relaxation.
    Imex1,
    /// Three-stage ARS(2,3,3).
    Ars233,
}

impl std::str::FromStr for Integrator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "imex1" => Ok(Integrator::Imex1),
            "ars233" => Ok(Integrator::Ars233),
            _ => Err(Error::config(format!("unknown integrator '{s}' (imex1 | ars233)"))),
        }
    }
}

/// Paired explicit/implicit tableaux with three stages.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    pub stages: usize,
    pub a_exp: [[f64; 3]; 3],
    pub a_imp: [[f64; 3]; 3],
    pub w_exp: [f64; 3],
    pub w_imp: [f64; 3],
    pub c_exp: [f64; 3],
    pub c_imp: [f64; 3],
    pub gamma: f64,
}

impl ButcherTableau {
    pub fn ars233() -> Self {
        let g = (3.0 + 3f64.sqrt()) / 6.0;
        let a_exp = [[0.0; 3], [g, 0.0, 0.0], [g - 1.0, 2.0 - 2.0 * g, 0.0]];
        let a_imp = [[0.0; 3], [0.0, g, 0.0], [0.0, 1.0 - 2.0 * g, g]];
        let row_sum = |a: &[[f64; 3]; 3]| [a[0].iter().sum(), a[1].iter().sum(), a[2].iter().sum()];
        Self {
            stages: 3,
            c_exp: row_sum(&a_exp),
            c_imp: row_sum(&a_imp),
            a_exp,
            a_imp,
            w_exp: [0.0, 0.5, 0.5],
            w_imp: [0.0, 0.5, 0.5],
            gamma: g,
        }
    }

    /// Whether stage `j`'s collision term enters any later stage or the update.
    fn collision_needed(&self, j: usize) -> bool {
        self.w_imp[j] != 0.0 || (j + 1..self.stages).any(|i| self.a_imp[i][j] != 0.0)
    }

    fn transport_needed(&self, j: usize) -> bool {
        self.w_exp[j] != 0.0 || (j + 1..self.stages).any(|i| self.a_exp[i][j] != 0.0)
    }
}

/// Phase space, relaxation parameters and (optional) transport operator.
#[derive(Debug, Clone)]
pub struct KineticModel {
    pub phase: PhaseSpace,
    pub params: RelaxationParams,
    /// `None` for space-homogeneous problems.
    pub transport: Option<Transport>,
}

impl KineticModel {
    pub fn homogeneous(phase: PhaseSpace, params: RelaxationParams) -> Self {
        Self {
            phase,
            params,
            transport: None,
        }
    }

    fn active_transport(&self) -> Option<&Transport> {
        self.transport.as_ref().filter(|t| !t.is_trivial())
    }
}

/// Solution at one time level plus the cumulative outflow through the
/// boundary (per species `(n, m v, ½ m|v|²)` integrated over time).
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub time: f64,
    pub f: DistributionField,
    pub outflow: BoundaryFlux,
}

impl State {
    pub fn new(f: DistributionField) -> Self {
        let species = f.species_count();
        Self {
            time: 0.0,
            f,
            outflow: BoundaryFlux::zeros(species),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// Largest Gaussian value per species in the last implicit stage.
    pub gaussian_sup: Vec<f64>,
}

/// Reusable stage storage.
#[derive(Debug, Clone)]
pub struct Workspace {
    stage: DistributionField,
    transport: Vec<DistributionField>,
    collision: Vec<DistributionField>,
}

impl Workspace {
    pub fn new(like: &DistributionField) -> Self {
        let z = || DistributionField::zeros(like.cells(), like.species_count(), like.nodes());
        Self {
            stage: z(),
            transport: (0..3).map(|_| z()).collect(),
            collision: (0..3).map(|_| z()).collect(),
        }
    }
}

/// First-order step: `f* = fⁿ + Δt T(fⁿ)`, then one implicit stage with `Δt`.
pub fn imex_step_first_order(state: &mut State, dt: f64, model: &KineticModel, ws: &mut Workspace) -> Result<StepReport> {
    if let Some(t) = model.active_transport() {
        let k = &mut ws.transport[0];
        let flux = t.flux_divergence(&state.f, k);
        state.f.axpy(dt, k);
        state.outflow.add_scaled(dt, &flux);
    }
    let summary = relax_in_place(&mut state.f, None, dt, &model.params, &model.phase).map_err(|e| e.at_time(state.time))?;
    state.time += dt;
    Ok(StepReport {
        gaussian_sup: summary.gaussian_sup,
    })
}

/// One ARS(2,3,3) step.
pub fn imex_step_ars233(state: &mut State, dt: f64, model: &KineticModel, ws: &mut Workspace) -> Result<StepReport> {
    let tab = ButcherTableau::ars233();
    let transport = model.active_transport();
    let mut gaussian_sup = vec![0.0; state.f.species_count()];
    let Workspace {
        stage,
        transport: k,
        collision: r,
    } = ws;

    for i in 0..tab.stages {
        stage.data_mut().copy_from_slice(state.f.data());
        for j in 0..i {
            if transport.is_some() && tab.a_exp[i][j] != 0.0 {
                stage.axpy(dt * tab.a_exp[i][j], &k[j]);
            }
            if tab.a_imp[i][j] != 0.0 {
                stage.axpy(dt * tab.a_imp[i][j], &r[j]);
            }
        }
        let aii = tab.a_imp[i][i];
        let need_r = tab.collision_needed(i);
        if aii != 0.0 || need_r {
            let coll = need_r.then_some(&mut r[i]);
            let summary = relax_in_place(stage, coll, dt * aii, &model.params, &model.phase)
                .map_err(|e| e.at_time(state.time + tab.c_imp[i] * dt))?;
            gaussian_sup = summary.gaussian_sup;
        }
        if let Some(t) = transport {
            if tab.transport_needed(i) {
                let flux = t.flux_divergence(stage, &mut k[i]);
                state.outflow.add_scaled(dt * tab.w_exp[i], &flux);
            }
        }
    }

    for i in 0..tab.stages {
        if transport.is_some() && tab.w_exp[i] != 0.0 {
            state.f.axpy(dt * tab.w_exp[i], &k[i]);
        }
        if tab.w_imp[i] != 0.0 {
            state.f.axpy(dt * tab.w_imp[i], &r[i]);
        }
    }
    state.time += dt;
    Ok(StepReport { gaussian_sup })
}

/// Dispatches on the integrator.
pub fn imex_step(
    integrator: Integrator,
    state: &mut State,
    dt: f64,
    model: &KineticModel,
    ws: &mut Workspace,
) -> Result<StepReport> {
    match integrator {
        Integrator::Imex1 => imex_step_first_order(state, dt, model, ws),
        Integrator::Ars233 => imex_step_ars233(state, dt, model, ws),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_velocity_grid, SpatialGrid, SpeciesSet};
    use crate::moments::{maxwellian, species_moments};

    #[test]
    fn ars_tableau_entries() {
        let t = ButcherTableau::ars233();
        let g = t.gamma;
        assert!((g - (3.0 + 3f64.sqrt()) / 6.0).abs() < 1e-16);
        for i in 0..3 {
            for j in i..3 {
                assert_eq!(t.a_exp[i][j], 0.0);
            }
            for j in i + 1..3 {
                assert_eq!(t.a_imp[i][j], 0.0);
            }
        }
        assert_eq!(t.a_imp[0][0], 0.0);
        assert_eq!(t.a_imp[1][1], g);
        assert_eq!(t.a_imp[2][2], g);
        assert_eq!(t.a_exp[2], [g - 1.0, 2.0 - 2.0 * g, 0.0]);
        assert_eq!(t.a_imp[2], [0.0, 1.0 - 2.0 * g, g]);
        assert!(!t.collision_needed(0));
        assert!(t.collision_needed(1) && t.collision_needed(2));
        // explicit order conditions up to three
        let (a, b, c) = (t.a_exp, t.w_exp, t.c_exp);
        assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(((0..3).map(|i| b[i] * c[i]).sum::<f64>() - 0.5).abs() < 1e-15);
        assert!(((0..3).map(|i| b[i] * c[i] * c[i]).sum::<f64>() - 1.0 / 3.0).abs() < 1e-15);
        let bac: f64 = (0..3).map(|i| b[i] * (0..3).map(|j| a[i][j] * c[j]).sum::<f64>()).sum();
        assert!((bac - 1.0 / 6.0).abs() < 1e-15);
    }

    fn relaxation_model(points: usize) -> (KineticModel, DistributionField) {
        let phase = PhaseSpace::new(
            build_velocity_grid(1, 20.0, points).unwrap(),
            SpatialGrid::homogeneous(),
            SpeciesSet::new(vec![1.0, 1.0]).unwrap(),
        )
        .unwrap();
        let g = &phase.velocity;
        let mut f = DistributionField::zeros_like_phase(&phase);
        let f1: Vec<f64> = maxwellian(1.0, &[0.5], 1.0, 1.0, g)
            .unwrap()
            .iter()
            .zip(maxwellian(0.3, &[0.75], 1.3, 1.0, g).unwrap())
            .map(|(a, b)| a + b)
            .collect();
        f.species_mut(0, 0).copy_from_slice(&f1);
        f.species_mut(0, 1).copy_from_slice(&maxwellian(2.0, &[-0.3], 1.4, 1.0, g).unwrap());
        let params = RelaxationParams {
            eps: 1e-3,
            ..Default::default()
        };
        (KineticModel::homogeneous(phase, params), f)
    }

    #[test]
    fn equilibrium_is_stationary_for_both_integrators() {
        let (model, _) = relaxation_model(64);
        let g = &model.phase.velocity;
        let mut f = DistributionField::zeros_like_phase(&model.phase);
        for p in 0..2 {
            f.species_mut(0, p).copy_from_slice(&maxwellian(1.0, &[0.2], 1.1, 1.0, g).unwrap());
        }
        for integ in [Integrator::Imex1, Integrator::Ars233] {
            let mut s = State::new(f.clone());
            let mut ws = Workspace::new(&f);
            for _ in 0..5 {
                imex_step(integ, &mut s, 0.5, &model, &mut ws).unwrap();
            }
            let scale = f.data().iter().fold(0.0f64, |a, x| a.max(*x));
            for (a, b) in s.f.data().iter().zip(f.data()) {
                assert!((a - b).abs() < 1e-12 * scale);
            }
        }
    }

    #[test]
    fn ars_richardson_ratio() {
        // Local error of a single step scales like Δt⁴.
        let (model, f0) = relaxation_model(32);
        let diff = |dt: f64| {
            let mut ws = Workspace::new(&f0);
            let mut one = State::new(f0.clone());
            imex_step_ars233(&mut one, dt, &model, &mut ws).unwrap();
            let mut two = State::new(f0.clone());
            imex_step_ars233(&mut two, dt / 2.0, &model, &mut ws).unwrap();
            imex_step_ars233(&mut two, dt / 2.0, &model, &mut ws).unwrap();
            one.f.data().iter().zip(two.f.data()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        };
        // Δt well below ε = 1e-3, where the asymptotic rate is visible
        let (d1, d2) = (diff(1e-4), diff(5e-5));
        let ratio = d1 / d2;
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn first_order_step_relaxes_temperatures() {
        let (model, f0) = relaxation_model(32);
        let g = &model.phase.velocity;
        let t0: Vec<f64> = (0..2).map(|p| species_moments(f0.species(0, p), g, 1.0).temperature).collect();
        let mut s = State::new(f0.clone());
        let mut ws = Workspace::new(&f0);
        for _ in 0..40 {
            imex_step_first_order(&mut s, 1e-4, &model, &mut ws).unwrap();
        }
        let t1: Vec<f64> = (0..2).map(|p| species_moments(s.f.species(0, p), g, 1.0).temperature).collect();
        assert!((t1[0] - t1[1]).abs() < (t0[0] - t0[1]).abs() * 0.1);
    }
}
