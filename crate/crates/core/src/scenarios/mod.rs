//! Named test problems: grids, boundaries, parameters and initial data.
//!
//! A [`Scenario`] is a plain serde tree. Presets fill it with the reference
//! constants; [`Scenario::set`] and [`Scenario::merge_toml`] change any leaf
//! by dotted key, and unknown keys are rejected on deserialization.

mod init;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use init::{cell_quadrature, initial_field, GAUSS_POINTS};

use crate::collision::{Integrator, KineticModel, LambdaModel, RelaxationParams, State};
use crate::error::{Error, Result};
use crate::grid::{build_velocity_grid, PhaseSpace, SpatialGrid, SpeciesSet};
use crate::riemann::RiemannState;
use crate::transport::{BoundaryKind, BoundarySpec, CwenoOptions, Transport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    Relaxation,
    TimeConvergence,
    SpaceTimeConvergence,
    Sod,
    KelvinHelmholtz,
    Cylinder,
    DecayComparison,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 7] = [
        ScenarioName::Relaxation,
        ScenarioName::TimeConvergence,
        ScenarioName::SpaceTimeConvergence,
        ScenarioName::Sod,
        ScenarioName::KelvinHelmholtz,
        ScenarioName::Cylinder,
        ScenarioName::DecayComparison,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioName::Relaxation => "relaxation",
            ScenarioName::TimeConvergence => "time_convergence",
            ScenarioName::SpaceTimeConvergence => "space_time_convergence",
            ScenarioName::Sod => "sod",
            ScenarioName::KelvinHelmholtz => "kelvin_helmholtz",
            ScenarioName::Cylinder => "cylinder",
            ScenarioName::DecayComparison => "decay_comparison",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|n| n.as_str()).collect();
                Error::config(format!("unknown scenario '{s}' (one of {})", names.join(", ")))
            })
    }
}

/// Convergence study flavour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceKind {
    /// Fixed grid, halved time steps.
    Time,
    /// Doubled cell counts with `Δt ∝ Δx`.
    SpaceTime,
}

impl FromStr for ConvergenceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "time" => Ok(ConvergenceKind::Time),
            "space_time" => Ok(ConvergenceKind::SpaceTime),
            _ => Err(Error::config(format!("unknown convergence kind '{s}' (time | space_time)"))),
        }
    }
}

/// Collision operator of the decay comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    /// ν = -1.
    Esbgk,
    /// ν = 0.
    Bgk,
}

impl Operator {
    pub fn nu(self) -> f64 {
        match self {
            Operator::Esbgk => -1.0,
            Operator::Bgk => 0.0,
        }
    }
}

impl FromStr for Operator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "esbgk" => Ok(Operator::Esbgk),
            "bgk" => Ok(Operator::Bgk),
            _ => Err(Error::config(format!("unknown operator '{s}' (esbgk | bgk)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocityConfig {
    pub dim: usize,
    /// Half-width `L` of the box `[-L, L]^D`.
    pub extent: f64,
    /// Points per direction.
    pub points: usize,
}

/// Empty lists mean a space-homogeneous problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub origin: Vec<f64>,
    pub lengths: Vec<f64>,
    pub cells: Vec<usize>,
}

/// Circular solid centred in cell `⌊fraction · N⌋` per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleConfig {
    pub center_fraction: [f64; 2],
    pub radius: f64,
}

/// Time step selection. Never depends on ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StepRule {
    Fixed(f64),
    /// `Δt = cfl · min Δx / L`.
    Cfl(f64),
    /// `Δt = fraction · min Δx`.
    DxFraction(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub final_time: f64,
    pub step: StepRule,
    pub integrator: Integrator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Snapshot times within `[0, final_time]`.
    pub snapshots: Vec<f64>,
    /// Diagnostics every this many steps (the final state is always recorded).
    pub diagnostics_every: usize,
}

/// Constant Maxwellian `M^{n,u,T}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxwellianComponent {
    pub n: f64,
    pub u: Vec<f64>,
    pub temperature: f64,
}

/// Per-species mass density, velocity and temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowState {
    pub rho: f64,
    pub u: Vec<f64>,
    pub temperature: f64,
}

/// Initial distributions, always sums of (projected) Maxwellians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// Constant components per species.
    Mixture { species: Vec<Vec<MaxwellianComponent>> },
    /// `ρ = ρ₀(1 + a_ρ e)`, `T = T₀(1 + a_T e)`, `e = exp(-s |x - c|²)`,
    /// `n_p = ρ / m_p`, zero velocity.
    Bump {
        rho_base: f64,
        rho_amplitude: f64,
        temperature_base: f64,
        temperature_amplitude: f64,
        sharpness: f64,
        center: f64,
    },
    /// Two-species tube: species 1 fills the left state and species 2 the
    /// right one, each with a trace fraction `delta` of the other.
    Riemann {
        left: RiemannState,
        right: RiemannState,
        delta: f64,
        interface: f64,
        /// Heat-capacity ratio of the hydrodynamic reference.
        gamma: f64,
    },
    /// Two-species shear layer at `y = interface_fraction · L_y` with
    /// `u = (±speed, amplitude · sin(wavenumber · π x))`.
    ShearLayer {
        rho_tilde: [f64; 2],
        delta: f64,
        speed: f64,
        amplitude: f64,
        wavenumber: f64,
        interface_fraction: f64,
    },
    Uniform { species: Vec<FlowState> },
    /// `f_p = w_p (1 + A sin(kπx)) / 4 · [M^{1,u₀,T₀} + M^{1,-u₀,T₀}]`.
    Decay {
        amplitude: f64,
        temperature: f64,
        drift: Vec<f64>,
        wavenumber: f64,
        weights: Vec<f64>,
    },
}

/// Complete description of one run, except threads and output paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: ScenarioName,
    pub masses: Vec<f64>,
    pub velocity: VelocityConfig,
    pub space: SpaceConfig,
    /// `[low, high]` per spatial axis. `inflow` sides freeze the initial
    /// state of the first cell on that side.
    pub boundary: Vec<[BoundaryKind; 2]>,
    pub obstacle: Option<ObstacleConfig>,
    pub relaxation: RelaxationParams,
    pub cweno: CwenoOptions,
    pub time: TimeConfig,
    pub output: OutputConfig,
    pub initial: InitialData,
}

/// Built phase space, operator and initial state.
#[derive(Debug, Clone)]
pub struct Setup {
    pub model: KineticModel,
    pub state: State,
}

const HOMOGENEOUS: SpaceConfig = SpaceConfig {
    origin: Vec::new(),
    lengths: Vec::new(),
    cells: Vec::new(),
};

impl Scenario {
    /// Preset with its default variant.
    pub fn preset(name: ScenarioName) -> Self {
        match name {
            ScenarioName::Relaxation => Self::relaxation(1.0),
            ScenarioName::TimeConvergence => Self::convergence(ConvergenceKind::Time, 1e-3),
            ScenarioName::SpaceTimeConvergence => Self::convergence(ConvergenceKind::SpaceTime, 1e-3),
            ScenarioName::Sod => Self::sod(1.0, 1e-6),
            ScenarioName::KelvinHelmholtz => Self::kelvin_helmholtz(),
            ScenarioName::Cylinder => Self::cylinder(),
            ScenarioName::DecayComparison => Self::decay_comparison(1e-1, Operator::Esbgk),
        }
    }

    /// Space-homogeneous relaxation of two species with `m₂ = mass_ratio`.
    pub fn relaxation(mass_ratio: f64) -> Self {
        let (m1, m2) = (1.0, mass_ratio);
        let (na, ta, va) = (1.0 / m1, 1.0, 0.5);
        let (nb, tb, vb) = (2.0 / m2, 2.0, -0.3);
        let comp = |n: f64, u: f64, temperature: f64| MaxwellianComponent {
            n,
            u: vec![u],
            temperature,
        };
        let eps = 1e-3;
        Self {
            name: ScenarioName::Relaxation,
            masses: vec![m1, m2],
            velocity: VelocityConfig {
                dim: 1,
                extent: 20.0,
                points: if mass_ratio == 1.0 { 32 } else { 256 },
            },
            space: HOMOGENEOUS,
            boundary: vec![],
            obstacle: None,
            relaxation: RelaxationParams {
                eps,
                ..RelaxationParams::default()
            },
            cweno: CwenoOptions::default(),
            time: TimeConfig {
                final_time: 16.0 * eps,
                step: StepRule::Fixed(1e-4),
                integrator: Integrator::Ars233,
            },
            output: OutputConfig {
                snapshots: vec![],
                diagnostics_every: 1,
            },
            initial: InitialData::Mixture {
                species: vec![
                    vec![comp(na, va, ta), comp(0.3 * na, 1.5 * va, 1.3 * ta)],
                    vec![comp(nb, vb, 0.7 * tb), comp(3.0 * nb, 0.5 * vb, 2.0 * tb)],
                ],
            },
        }
    }

    /// Smooth periodic problems of the convergence studies.
    pub fn convergence(kind: ConvergenceKind, eps: f64) -> Self {
        let (name, length, cells, final_time, t_amp, sharpness) = match kind {
            ConvergenceKind::Time => (ScenarioName::TimeConvergence, 10.0, 100, 1.0, 1.0, 3.0),
            ConvergenceKind::SpaceTime => (ScenarioName::SpaceTimeConvergence, 1.0, 50, 0.2, 0.1, 1000.0),
        };
        Self {
            name,
            masses: vec![1.0, 2.0],
            velocity: VelocityConfig {
                dim: 1,
                extent: 10.0,
                points: 40,
            },
            space: SpaceConfig {
                origin: vec![0.0],
                lengths: vec![length],
                cells: vec![cells],
            },
            boundary: vec![[BoundaryKind::Periodic; 2]],
            obstacle: None,
            relaxation: RelaxationParams {
                eps,
                ..RelaxationParams::default()
            },
            cweno: CwenoOptions::default(),
            time: TimeConfig {
                final_time,
                // Δt = Δx / L_v
                step: StepRule::Cfl(1.0),
                integrator: Integrator::Ars233,
            },
            output: OutputConfig {
                snapshots: vec![final_time],
                diagnostics_every: 10,
            },
            initial: InitialData::Bump {
                rho_base: 1.0,
                rho_amplitude: 0.1,
                temperature_base: 0.3,
                temperature_amplitude: t_amp,
                sharpness,
                center: 0.5 * length,
            },
        }
    }

    /// Two-species shock tube with `m₂ = mass_ratio · m₁`.
    pub fn sod(mass_ratio: f64, eps: f64) -> Self {
        let wide = mass_ratio != 1.0;
        Self {
            name: ScenarioName::Sod,
            masses: vec![1.0, mass_ratio],
            velocity: VelocityConfig {
                dim: 1,
                extent: if wide { 40.0 } else { 8.0 },
                points: if wide { 200 } else { 32 },
            },
            space: SpaceConfig {
                origin: vec![0.0],
                lengths: vec![1.0],
                cells: vec![200],
            },
            boundary: vec![[BoundaryKind::FreeFlow; 2]],
            obstacle: None,
            relaxation: RelaxationParams {
                eps,
                ..RelaxationParams::default()
            },
            cweno: CwenoOptions::default(),
            time: TimeConfig {
                final_time: 0.15,
                step: StepRule::DxFraction(if wide { 0.025 } else { 0.1 }),
                integrator: Integrator::Ars233,
            },
            output: OutputConfig {
                snapshots: vec![0.15],
                diagnostics_every: 10,
            },
            initial: InitialData::Riemann {
                left: RiemannState::new(1.0, 0.0, 1.0),
                right: RiemannState::new(0.125, 0.0, 1.0 / 32.0),
                delta: 1e-5,
                interface: 0.5,
                gamma: 3.0,
            },
        }
    }

    pub fn kelvin_helmholtz() -> Self {
        Self {
            name: ScenarioName::KelvinHelmholtz,
            masses: vec![1.0, 2.0],
            velocity: VelocityConfig {
                dim: 2,
                extent: 8.0,
                points: 32,
            },
            space: SpaceConfig {
                origin: vec![0.0, 0.0],
                lengths: vec![1.0, 0.5],
                cells: vec![150, 75],
            },
            boundary: vec![[BoundaryKind::Periodic; 2], [BoundaryKind::FreeFlow; 2]],
            obstacle: None,
            relaxation: RelaxationParams {
                eps: 5e-5,
                ..RelaxationParams::default()
            },
            cweno: CwenoOptions::default(),
            time: TimeConfig {
                final_time: 2.7,
                step: StepRule::Cfl(0.5),
                integrator: Integrator::Ars233,
            },
            output: OutputConfig {
                snapshots: vec![0.9, 1.7, 2.7],
                diagnostics_every: 10,
            },
            initial: InitialData::ShearLayer {
                rho_tilde: [1.0, 2.0],
                delta: 1e-5,
                speed: 0.5,
                amplitude: 0.01,
                wavenumber: 4.0,
                interface_fraction: 0.5,
            },
        }
    }

    pub fn cylinder() -> Self {
        let state = |rho: f64| FlowState {
            rho,
            u: vec![0.8, 0.0],
            temperature: 1.0,
        };
        Self {
            name: ScenarioName::Cylinder,
            masses: vec![1.0, 5.0],
            velocity: VelocityConfig {
                dim: 2,
                extent: 8.0,
                points: 32,
            },
            space: SpaceConfig {
                origin: vec![0.0, 0.0],
                lengths: vec![0.8, 0.8],
                cells: vec![66, 66],
            },
            boundary: vec![
                [BoundaryKind::Inflow, BoundaryKind::FreeFlow],
                [BoundaryKind::FreeFlow, BoundaryKind::FreeFlow],
            ],
            obstacle: Some(ObstacleConfig {
                center_fraction: [0.4, 0.5],
                radius: 0.08,
            }),
            relaxation: RelaxationParams {
                eps: 1e-6,
                ..RelaxationParams::default()
            },
            cweno: CwenoOptions::default(),
            time: TimeConfig {
                final_time: 0.15,
                step: StepRule::Cfl(0.5),
                integrator: Integrator::Ars233,
            },
            output: OutputConfig {
                snapshots: vec![0.05, 0.10, 0.15],
                diagnostics_every: 10,
            },
            initial: InitialData::Uniform {
                species: vec![state(0.8), state(1.0)],
            },
        }
    }

    pub fn decay_comparison(eps: f64, operator: Operator) -> Self {
        Self {
            name: ScenarioName::DecayComparison,
            masses: vec![1.0, 1.0],
            velocity: VelocityConfig {
                dim: 2,
                extent: 8.0,
                points: 64,
            },
            space: SpaceConfig {
                origin: vec![-1.0],
                lengths: vec![2.0],
                cells: vec![100],
            },
            boundary: vec![[BoundaryKind::Periodic; 2]],
            obstacle: None,
            relaxation: RelaxationParams {
                eps,
                nu: operator.nu(),
                lambda: LambdaModel::matched(),
                projection: true,
            },
            cweno: CwenoOptions::default(),
            time: TimeConfig {
                final_time: 10.0,
                step: StepRule::DxFraction(0.1),
                integrator: Integrator::Imex1,
            },
            output: OutputConfig {
                snapshots: vec![],
                diagnostics_every: 10,
            },
            initial: InitialData::Decay {
                amplitude: 0.5,
                temperature: 0.125,
                drift: vec![0.5, 0.5],
                wavenumber: 1.0,
                weights: vec![1.0, 1.0],
            },
        }
    }

    /// Sets one leaf (or subtree) by dotted key. `raw` is read as a TOML value,
    /// falling back to a bare string; numeric segments index arrays.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let value = parse_value(raw);
        let mut tree = toml::Value::try_from(&*self).map_err(|e| Error::config(e.to_string()))?;
        let mut node = &mut tree;
        let parts: Vec<&str> = key.split('.').collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(Error::config(format!("malformed key '{key}'")));
        }
        for (i, part) in parts.iter().enumerate() {
            let last = i + 1 == parts.len();
            node = match node {
                toml::Value::Table(t) => {
                    if last {
                        t.insert(part.to_string(), value);
                        break;
                    }
                    t.entry(part.to_string())
                        .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                }
                toml::Value::Array(a) => {
                    let idx: usize = part
                        .parse()
                        .map_err(|_| Error::config(format!("key '{key}': '{part}' is not an array index")))?;
                    let len = a.len();
                    let slot = a
                        .get_mut(idx)
                        .ok_or_else(|| Error::config(format!("key '{key}': index {idx} out of range ({len})")))?;
                    if last {
                        *slot = value;
                        break;
                    }
                    slot
                }
                _ => return Err(Error::config(format!("key '{key}': '{part}' is below a leaf value"))),
            };
        }
        *self = tree
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(format!("override '{key} = {raw}': {}", e.message())))?;
        Ok(())
    }

    /// Deep-merges a TOML document into this scenario.
    pub fn merge_toml(&mut self, doc: &str) -> Result<()> {
        let patch: toml::Table = toml::from_str(doc).map_err(|e| Error::config(format!("config file: {}", e.message())))?;
        let mut tree = toml::Value::try_from(&*self).map_err(|e| Error::config(e.to_string()))?;
        merge(&mut tree, toml::Value::Table(patch));
        *self = tree
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(format!("config file: {}", e.message())))?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_toml(doc: &str) -> Result<Self> {
        toml::from_str(doc).map_err(|e| Error::config(e.message().to_string()))
    }

    pub fn species_count(&self) -> usize {
        self.masses.len()
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.masses.len();
        let dx = self.space.lengths.len();
        let dv = self.velocity.dim;
        if self.space.origin.len() != dx || self.space.cells.len() != dx {
            return Err(Error::config("space.origin, space.lengths and space.cells must have equal length"));
        }
        if dx > dv {
            return Err(Error::config(format!("{dx} space dimensions need at least as many velocity dimensions")));
        }
        if self.boundary.len() != dx {
            return Err(Error::config(format!("boundary needs one [low, high] pair per space axis ({dx})")));
        }
        if self.obstacle.is_some() && dx != 2 {
            return Err(Error::config("obstacle requires two space dimensions"));
        }
        self.relaxation.validate()?;
        let t = &self.time;
        if !(t.final_time >= 0.0) || !t.final_time.is_finite() {
            return Err(Error::config(format!("time.final_time must be >= 0, got {}", t.final_time)));
        }
        match t.step {
            StepRule::Fixed(v) | StepRule::DxFraction(v) if !(v > 0.0) || !v.is_finite() => {
                return Err(Error::config(format!("time step parameter must be positive, got {v}")));
            }
            StepRule::Cfl(c) if !(c > 0.0 && c <= 1.0) => {
                return Err(Error::config(format!("CFL number must lie in (0, 1], got {c}")));
            }
            StepRule::Cfl(_) | StepRule::DxFraction(_) if dx == 0 => {
                return Err(Error::config("space-homogeneous problems need a fixed time step"));
            }
            _ => {}
        }
        if let Some(&s) = self.output.snapshots.iter().find(|&&s| !(0.0..=t.final_time).contains(&s)) {
            return Err(Error::config(format!("snapshot time {s} outside [0, {}]", t.final_time)));
        }
        if self.output.diagnostics_every == 0 {
            return Err(Error::config("output.diagnostics_every must be at least 1"));
        }
        let species_err = |n: usize| Error::config(format!("initial data describes {n} species, masses list has {p}"));
        let vel_err = |len: usize| Error::config(format!("velocity vectors need {dv} components, got {len}"));
        match &self.initial {
            InitialData::Mixture { species } => {
                if species.len() != p {
                    return Err(species_err(species.len()));
                }
                for c in species.iter().flatten() {
                    if c.u.len() != dv {
                        return Err(vel_err(c.u.len()));
                    }
                    if !(c.n >= 0.0) || !(c.temperature > 0.0) {
                        return Err(Error::config("Maxwellian components need n >= 0 and T > 0"));
                    }
                }
            }
            InitialData::Bump {
                rho_base,
                temperature_base,
                ..
            } => {
                if dx != 1 {
                    return Err(Error::config("bump initial data needs one space dimension"));
                }
                if !(*rho_base > 0.0 && *temperature_base > 0.0) {
                    return Err(Error::config("bump base density and temperature must be positive"));
                }
            }
            InitialData::Riemann {
                left, right, delta, gamma, ..
            } => {
                if dx != 1 || p != 2 {
                    return Err(Error::config("Riemann initial data needs one space dimension and two species"));
                }
                check_delta(*delta)?;
                if !(left.rho > 0.0 && left.p > 0.0 && right.rho > 0.0 && right.p > 0.0 && *gamma > 1.0) {
                    return Err(Error::config("Riemann states need positive density and pressure, gamma > 1"));
                }
            }
            InitialData::ShearLayer { rho_tilde, delta, .. } => {
                if dx != 2 || dv != 2 || p != 2 {
                    return Err(Error::config("shear layer needs two space and velocity dimensions and two species"));
                }
                check_delta(*delta)?;
                if !(rho_tilde[0] > 0.0 && rho_tilde[1] > 0.0) {
                    return Err(Error::config("shear layer densities must be positive"));
                }
            }
            InitialData::Uniform { species } => {
                if species.len() != p {
                    return Err(species_err(species.len()));
                }
                for s in species {
                    if s.u.len() != dv {
                        return Err(vel_err(s.u.len()));
                    }
                    if !(s.rho >= 0.0) || !(s.temperature > 0.0) {
                        return Err(Error::config("uniform states need rho >= 0 and T > 0"));
                    }
                }
            }
            InitialData::Decay {
                amplitude,
                temperature,
                drift,
                weights,
                ..
            } => {
                if dx != 1 {
                    return Err(Error::config("decay initial data needs one space dimension"));
                }
                if weights.len() != p {
                    return Err(species_err(weights.len()));
                }
                if drift.len() != dv {
                    return Err(vel_err(drift.len()));
                }
                if !(amplitude.abs() < 1.0) || !(*temperature > 0.0) || weights.iter().any(|&w| !(w > 0.0)) {
                    return Err(Error::config("decay data needs |A| < 1, T > 0 and positive weights"));
                }
            }
        }
        Ok(())
    }

    pub fn phase_space(&self) -> Result<PhaseSpace> {
        self.validate()?;
        let velocity = build_velocity_grid(self.velocity.dim, self.velocity.extent, self.velocity.points)?;
        let mut space = if self.space.lengths.is_empty() {
            SpatialGrid::homogeneous()
        } else {
            SpatialGrid::new(&self.space.origin, &self.space.lengths, &self.space.cells)?
        };
        if let Some(ob) = &self.obstacle {
            let cells = space.cells();
            let pick = |axis: usize| {
                let x = ob.center_fraction[axis] * cells[axis] as f64;
                // absorb representation error of exact fractions
                (x + 1e-9).floor().max(0.0) as usize
            };
            let center = [pick(0), pick(1)];
            space = space.with_circular_obstacle(center, ob.radius)?;
        }
        PhaseSpace::new(velocity, space, SpeciesSet::new(self.masses.clone())?)
    }

    /// Builds the operator and the initial state.
    pub fn build(&self) -> Result<Setup> {
        let phase = self.phase_space()?;
        let f = initial_field(self, &phase)?;
        let transport = if phase.space.dim() == 0 {
            None
        } else {
            let mut bc = BoundarySpec::new(self.boundary.clone());
            let cells = phase.space.cells().to_vec();
            for (axis, sides) in self.boundary.iter().enumerate() {
                for (side, kind) in sides.iter().enumerate() {
                    if *kind == BoundaryKind::Inflow {
                        let mut idx = [0usize; 2];
                        if side == 1 {
                            idx[axis] = cells[axis] - 1;
                        }
                        let cell = if cells.len() == 2 { idx[1] * cells[0] + idx[0] } else { idx[0] };
                        bc = bc.with_inflow(axis, side, f.cell(cell).to_vec());
                    }
                }
            }
            Some(Transport::new(&phase, bc, self.cweno)?)
        };
        Ok(Setup {
            model: KineticModel {
                phase,
                params: self.relaxation,
                transport,
            },
            state: State::new(f),
        })
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::config(format!(
            "confinement fraction delta must lie in (0, 1/2), got {delta}; delta = 0 leaves vacuum species"
        )));
    }
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn merge(base: &mut toml::Value, patch: toml::Value) {
    match (base, patch) {
        (toml::Value::Table(b), toml::Value::Table(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}
