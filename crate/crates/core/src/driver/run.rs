use std::path::{Path, PathBuf};

use super::diagnostics::{conserved_totals, diagnostics, write_diagnostics, write_snapshot, DiagnosticsRecord};
use super::timestep::compute_dt;
use crate::collision::{imex_step, KineticModel, State, StepReport, Workspace};
use crate::error::{Error, Result};
use crate::scenarios::{InitialData, Scenario};

/// Steps closer than this fraction of `dt` to a stop time land on it.
const STOP_SNAP: f64 = 1e-9;

/// A built scenario advanced step by step.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub scenario: Scenario,
    pub model: KineticModel,
    pub state: State,
    /// Nominal step from the step rule.
    pub dt: f64,
    pub steps: usize,
    workspace: Workspace,
    rho_g: Option<f64>,
    initial_totals: Vec<[f64; 5]>,
}

impl Simulation {
    /// Builds the scenario in the current rayon pool, whose size sets the
    /// transport row blocks.
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let setup = scenario.build()?;
        let dt = compute_dt(scenario.time.step, &setup.model.phase)?;
        let phase = &setup.model.phase;
        let initial_totals = conserved_totals(&setup.state.f, phase);
        let rho_g = matches!(scenario.initial, InitialData::Decay { .. }).then(|| {
            let mass: f64 = initial_totals.iter().zip(phase.species.masses()).map(|(t, m)| m * t[0]).sum();
            mass / phase.space.lengths().iter().product::<f64>()
        });
        Ok(Self {
            scenario: scenario.clone(),
            workspace: Workspace::new(&setup.state.f),
            model: setup.model,
            state: setup.state,
            dt,
            steps: 0,
            rho_g,
            initial_totals,
        })
    }

    /// One step of size `h` with the configured integrator.
    pub fn step(&mut self, h: f64) -> Result<StepReport> {
        let report = imex_step(self.scenario.time.integrator, &mut self.state, h, &self.model, &mut self.workspace)
            .map_err(|e| e.at_time(self.state.time))?;
        self.steps += 1;
        if !self.state.f.is_finite() {
            return Err(Error::Numeric("non-finite distribution values".into()).at_time(self.state.time));
        }
        Ok(report)
    }

    /// Advances to exactly `stop`, shortening the last step if needed, and
    /// calls `after` following every step.
    pub fn advance_to(&mut self, stop: f64, mut after: impl FnMut(&Simulation, &StepReport) -> Result<()>) -> Result<()> {
        while self.state.time < stop {
            let remaining = stop - self.state.time;
            let h = if remaining <= self.dt * (1.0 + STOP_SNAP) { remaining } else { self.dt };
            let report = self.step(h)?;
            if h == remaining {
                self.state.time = stop;
            }
            after(self, &report)?;
        }
        Ok(())
    }

    pub fn diagnostics(&self) -> DiagnosticsRecord {
        diagnostics(self.steps, self.state.time, &self.state.f, &self.model.phase, self.rho_g)
    }

    /// Reference density of the decay diagnostic.
    pub fn reference_density(&self) -> Option<f64> {
        self.rho_g
    }

    /// Current species totals `(n, m v, ½ m|v|²)` in the domain.
    pub fn totals(&self) -> Vec<[f64; 5]> {
        conserved_totals(&self.state.f, &self.model.phase)
    }

    /// Domain totals plus everything that has left through the boundary;
    /// constant in time for a conservative scheme.
    pub fn ledger_totals(&self) -> Vec<[f64; 5]> {
        let mut t = self.totals();
        for (a, b) in t.iter_mut().zip(&self.state.outflow.species) {
            for r in 0..5 {
                a[r] += b[r];
            }
        }
        t
    }

    pub fn initial_totals(&self) -> &[[f64; 5]] {
        &self.initial_totals
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 uses the rayon default.
    pub threads: usize,
    /// Output directory; nothing is written when `None`.
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub simulation: Simulation,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub files: Vec<PathBuf>,
}

/// Runs `f` inside a pool of `threads` workers (0 = default pool).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn snapshot_name(t: f64) -> String {
    format!("snapshot_t{t:.6}.csv")
}

/// Runs a scenario to its final time, writing snapshots, diagnostics and
/// the resolved configuration.
pub fn run(scenario: &Scenario, opts: &RunOptions) -> Result<RunOutcome> {
    scenario.validate()?;
    if let Some(dir) = &opts.out_dir {
        std::fs::create_dir_all(dir)?;
    }
    with_threads(opts.threads, || run_in_pool(scenario, opts))?
}

fn run_in_pool(scenario: &Scenario, opts: &RunOptions) -> Result<RunOutcome> {
    let mut sim = Simulation::new(scenario)?;
    let t_f = scenario.time.final_time;
    let every = scenario.output.diagnostics_every;
    let mut files = Vec::new();
    let out = opts.out_dir.as_deref();

    if let Some(dir) = out {
        let path = dir.join("config.toml");
        let meta = format!(
            "# resolved run configuration\n# threads = {}\n# dt = {}\n{}",
            rayon::current_num_threads(),
            sim.dt,
            scenario.to_toml()
        );
        std::fs::write(&path, meta)?;
        files.push(path);
    }

    let mut stops: Vec<f64> = scenario.output.snapshots.clone();
    stops.push(t_f);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let mut records = vec![sim.diagnostics()];
    log::info!(
        "{}: dt = {:e}, {} species, {} cells, {} velocity nodes",
        scenario.name,
        sim.dt,
        scenario.species_count(),
        sim.state.f.cells(),
        sim.state.f.nodes()
    );
    for &stop in &stops {
        sim.advance_to(stop, |s, _| {
            if s.steps % every == 0 {
                records.push(s.diagnostics());
                log::debug!("step {} t = {:.6}", s.steps, s.state.time);
            }
            Ok(())
        })?;
        if scenario.output.snapshots.contains(&stop) {
            if let Some(dir) = out {
                let path = dir.join(snapshot_name(stop));
                write_snapshot(&path, &sim.state.f, &sim.model.phase)?;
                files.push(path);
            }
        }
    }
    if records.last().map(|r| r.step) != Some(sim.steps) {
        records.push(sim.diagnostics());
    }
    if let Some(dir) = out {
        let path = dir.join("diagnostics.csv");
        write_diagnostics(&path, &records, scenario.species_count(), scenario.velocity.dim)?;
        files.push(path);
    }
    Ok(RunOutcome {
        simulation: sim,
        diagnostics: records,
        files,
    })
}

/// Path of the snapshot written for time `t`.
pub fn snapshot_path(dir: &Path, t: f64) -> PathBuf {
    dir.join(snapshot_name(t))
}
