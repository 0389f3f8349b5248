//! Global diagnostics and CSV output. All reductions run sequentially in
//! cell order, so results do not depend on the thread count.

use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::field::DistributionField;
use crate::grid::PhaseSpace;
use crate::moments::{maxwellian_into, mixture_moments, species_moments};

/// Species totals `(n, m v_1..v_D, ½ m|v|²)` over fluid cells, times cell volume.
pub fn conserved_totals(f: &DistributionField, phase: &PhaseSpace) -> Vec<[f64; 5]> {
    let grid = &phase.velocity;
    let dim = grid.dim();
    let vol = phase.space.cell_volume();
    let w = grid.weights();
    let sq = grid.sq_norms();
    let mut out = vec![[0.0; 5]; f.species_count()];
    for c in 0..f.cells() {
        if phase.space.is_solid(c) {
            continue;
        }
        for (p, &m) in phase.species.masses().iter().enumerate() {
            let mut acc = [0.0; 5];
            for (j, (v, &fj)) in grid.nodes().zip(f.species(c, p)).enumerate() {
                let wf = w[j] * fj;
                acc[0] += wf;
                for d in 0..dim {
                    acc[1 + d] += wf * m * v[d];
                }
                acc[dim + 1] += wf * 0.5 * m * sq[j];
            }
            for r in 0..dim + 2 {
                out[p][r] += vol * acc[r];
            }
        }
    }
    out
}

/// Mixture mass density `Σ_p m_p n_p` per cell (zero in solid cells).
pub fn mixture_density(f: &DistributionField, phase: &PhaseSpace) -> Vec<f64> {
    let w = phase.velocity.weights();
    (0..f.cells())
        .map(|c| {
            phase
                .species
                .masses()
                .iter()
                .enumerate()
                .map(|(p, m)| m * f.species(c, p).iter().zip(w).map(|(a, b)| a * b).sum::<f64>())
                .sum()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    /// Per-species mass `m_p ∫ n_p dx`.
    pub mass: Vec<f64>,
    /// Mixture momentum, one entry per velocity dimension.
    pub momentum: Vec<f64>,
    pub energy: f64,
    pub min_f: f64,
    /// Per species `Σ |f_p - M_p| / Σ |f_p|` over phase space, with `M_p`
    /// the species' own local Maxwellian.
    pub maxwellian_distance: Vec<f64>,
    /// `∫ |ρ - ρ_g| dx` when a reference density is set.
    pub density_l1: Option<f64>,
}

pub fn diagnostics(
    step: usize,
    time: f64,
    f: &DistributionField,
    phase: &PhaseSpace,
    rho_g: Option<f64>,
) -> DiagnosticsRecord {
    let grid = &phase.velocity;
    let dim = grid.dim();
    let totals = conserved_totals(f, phase);
    let masses = phase.species.masses();
    let mass = totals.iter().zip(masses).map(|(t, m)| m * t[0]).collect();
    let momentum = (0..dim).map(|d| totals.iter().map(|t| t[1 + d]).sum()).collect();
    let energy = totals.iter().map(|t| t[dim + 1]).sum();

    let w = grid.weights();
    let mut dist = vec![0.0; masses.len()];
    let mut norm = vec![0.0; masses.len()];
    let mut m_buf = vec![0.0; grid.len()];
    let mut min_f = f64::INFINITY;
    for c in 0..f.cells() {
        if phase.space.is_solid(c) {
            continue;
        }
        for (p, &m) in masses.iter().enumerate() {
            let fp = f.species(c, p);
            min_f = fp.iter().copied().fold(min_f, f64::min);
            let sm = species_moments(fp, grid, m);
            let l1: f64 = fp.iter().zip(w).map(|(a, b)| a.abs() * b).sum();
            norm[p] += l1;
            if sm.degenerate || !(sm.temperature > 0.0) {
                dist[p] += l1;
                continue;
            }
            maxwellian_into(sm.n, &sm.velocity[..dim], sm.temperature, m, grid, &mut m_buf)
                .expect("positive temperature");
            dist[p] += fp.iter().zip(&m_buf).zip(w).map(|((a, b), wj)| (a - b).abs() * wj).sum::<f64>();
        }
    }
    let maxwellian_distance = dist.iter().zip(&norm).map(|(d, n)| if *n > 0.0 { d / n } else { 0.0 }).collect();
    let density_l1 = rho_g.map(|g| {
        let vol = phase.space.cell_volume();
        mixture_density(f, phase)
            .iter()
            .enumerate()
            .filter(|(c, _)| !phase.space.is_solid(*c))
            .map(|(_, r)| vol * (r - g).abs())
            .sum()
    });
    DiagnosticsRecord {
        step,
        time,
        mass,
        momentum,
        energy,
        min_f,
        maxwellian_distance,
        density_l1,
    }
}

pub fn diagnostics_header(species: usize, dim: usize, with_l1: bool) -> String {
    let mut cols = vec!["step".to_string(), "time".to_string()];
    cols.extend((1..=species).map(|p| format!("mass_{p}")));
    cols.extend(["momentum_x", "momentum_y", "momentum_z"][..dim].iter().map(|s| s.to_string()));
    cols.push("energy".into());
    cols.push("min_f".into());
    cols.extend((1..=species).map(|p| format!("maxwellian_distance_{p}")));
    if with_l1 {
        cols.push("density_l1".into());
    }
    cols.join(",")
}

impl DiagnosticsRecord {
    pub fn csv_row(&self) -> String {
        let mut cols = vec![self.step.to_string(), self.time.to_string()];
        cols.extend(self.mass.iter().map(|v| v.to_string()));
        cols.extend(self.momentum.iter().map(|v| v.to_string()));
        cols.push(self.energy.to_string());
        cols.push(self.min_f.to_string());
        cols.extend(self.maxwellian_distance.iter().map(|v| v.to_string()));
        if let Some(l1) = self.density_l1 {
            cols.push(l1.to_string());
        }
        cols.join(",")
    }
}

pub fn write_diagnostics(path: &Path, records: &[DiagnosticsRecord], species: usize, dim: usize) -> Result<()> {
    let with_l1 = records.first().is_some_and(|r| r.density_l1.is_some());
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", diagnostics_header(species, dim, with_l1))?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    out.flush()?;
    Ok(())
}

/// Cell-centre coordinates, per-species `rho, u, T`, then mixture `rho, u, T, P`.
/// Solid cells carry `nan` moments.
pub fn write_snapshot(path: &Path, f: &DistributionField, phase: &PhaseSpace) -> Result<()> {
    let grid = &phase.velocity;
    let dim = grid.dim();
    let sdim = phase.space.dim();
    let masses = phase.species.masses();
    let comp = ["x", "y", "z"];
    let mut cols: Vec<String> = comp[..sdim].iter().map(|s| s.to_string()).collect();
    for p in 1..=masses.len() {
        cols.push(format!("rho_{p}"));
        cols.extend(comp[..dim].iter().map(|c| format!("u{c}_{p}")));
        cols.push(format!("T_{p}"));
    }
    cols.push("rho".into());
    cols.extend(comp[..dim].iter().map(|c| format!("u{c}")));
    cols.push("T".into());
    cols.push("P".into());

    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", cols.join(","))?;
    let nan_cols = masses.len() * (dim + 2) + dim + 3;
    for c in 0..f.cells() {
        let centre = phase.space.center(c);
        let mut row: Vec<String> = centre[..sdim].iter().map(|v| v.to_string()).collect();
        let mix = (!phase.space.is_solid(c)).then(|| mixture_moments(f.cell(c), grid, masses).ok()).flatten();
        match mix {
            None => row.extend(std::iter::repeat_n("nan".to_string(), nan_cols)),
            Some(mix) => {
                for (p, &m) in masses.iter().enumerate() {
                    let s = species_moments(f.species(c, p), grid, m);
                    row.push(s.rho.to_string());
                    row.extend(s.velocity[..dim].iter().map(|v| v.to_string()));
                    row.push(s.temperature.to_string());
                }
                row.push(mix.rho.to_string());
                row.extend(mix.u[..dim].iter().map(|v| v.to_string()));
                row.push(mix.temperature.to_string());
                row.push(mix.pressure.to_string());
            }
        }
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{Operator, Scenario, ScenarioName};

    #[test]
    fn equilibrium_has_zero_distance_and_decay_reference() {
        let mut s = Scenario::decay_comparison(1e-1, Operator::Esbgk);
        s.velocity.points = 32;
        let setup = s.build().unwrap();
        let phase = &setup.model.phase;
        let r = diagnostics(0, 0.0, &setup.state.f, phase, Some(1.0));
        // two counter-drifting Maxwellians are far from one Maxwellian
        assert!(r.maxwellian_distance[0] > 0.1);
        // ∫|ρ - 1| = ∫ A |sin(πx)| dx over [-1, 1] = 4A/π, up to the cell average
        let l1 = r.density_l1.unwrap();
        assert!((l1 - 2.0 / std::f64::consts::PI).abs() < 1e-3, "{l1}");
        assert!(r.momentum.iter().all(|m| m.abs() < 1e-12));

        let mut sod = Scenario::preset(ScenarioName::Sod);
        sod.space.cells = vec![20];
        let setup = sod.build().unwrap();
        let r = diagnostics(0, 0.0, &setup.state.f, &setup.model.phase, None);
        assert!(r.maxwellian_distance.iter().all(|&d| d < 1e-2));
        assert!(r.density_l1.is_none());
        assert_eq!(r.mass.len(), 2);
    }

    #[test]
    fn csv_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Scenario::preset(ScenarioName::Cylinder);
        s.velocity.points = 8;
        s.space.cells = vec![12, 12];
        let setup = s.build().unwrap();
        let phase = &setup.model.phase;
        let path = dir.path().join("snap.csv");
        write_snapshot(&path, &setup.state.f, phase).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert_eq!(
            header,
            "x,y,rho_1,ux_1,uy_1,T_1,rho_2,ux_2,uy_2,T_2,rho,ux,uy,T,P"
        );
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 144);
        assert!(rows.iter().all(|r| r.split(',').count() == 15));
        assert!(rows.iter().any(|r| r.contains("nan")));

        let rec = diagnostics(3, 0.5, &setup.state.f, phase, None);
        let path = dir.path().join("diag.csv");
        write_diagnostics(&path, &[rec.clone(), rec], 2, 2).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let head = text.lines().next().unwrap();
        assert_eq!(head.split(',').count(), text.lines().nth(1).unwrap().split(',').count());
    }
}
