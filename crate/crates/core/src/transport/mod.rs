//! Finite-volume advection `-v·∇ₓ f` with CWENO3 face values and upwind fluxes.
//!
//! Each `(species, node)` column of the field is an independent scalar advected
//! at the node velocity. Sweeps are dimension by dimension. Along every line
//! the fluid cells split into segments separated by solid cells; each segment
//! is padded with two ghost cells per end and reconstructed on its own, so an
//! obstacle face behaves exactly like a specular domain wall.
//!
//! Work is split into contiguous blocks of rows along the last spatial axis.
//! A block writes only its own rows and reads a two-row halo, so blocks run in
//! parallel. Face fluxes through walls and open boundaries are accumulated per
//! row and reduced in row order, which keeps the ledger independent of the
//! block layout.

pub mod cweno;

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cweno::{cweno3_reconstruct, face_value, CwenoOptions, Pencil};

use crate::error::{Error, Result};
use crate::field::DistributionField;
use crate::grid::PhaseSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Periodic,
    Specular,
    FreeFlow,
    /// Ghost cells hold a frozen state vector.
    Inflow,
}

/// Boundary conditions per spatial axis as `[low, high]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub sides: Vec<[BoundaryKind; 2]>,
    /// Cell vectors (`species x nodes`) for the `Inflow` sides.
    pub inflow: Vec<[Option<Vec<f64>>; 2]>,
}

impl BoundarySpec {
    pub fn new(sides: Vec<[BoundaryKind; 2]>) -> Self {
        let inflow = vec![[None, None]; sides.len()];
        Self { sides, inflow }
    }

    pub fn uniform(dim: usize, kind: BoundaryKind) -> Self {
        Self::new(vec![[kind; 2]; dim])
    }

    pub fn with_inflow(mut self, axis: usize, side: usize, state: Vec<f64>) -> Self {
        self.sides[axis][side] = BoundaryKind::Inflow;
        self.inflow[axis][side] = Some(state);
        self
    }

    fn validate(&self, phase: &PhaseSpace) -> Result<()> {
        let dim = phase.space.dim();
        if self.sides.len() != dim || self.inflow.len() != dim {
            return Err(Error::config(format!("boundary spec needs {dim} axes")));
        }
        for (axis, s) in self.sides.iter().enumerate() {
            if (s[0] == BoundaryKind::Periodic) != (s[1] == BoundaryKind::Periodic) {
                return Err(Error::config(format!("axis {axis}: periodic sides must come in pairs")));
            }
            if s[0] == BoundaryKind::Periodic && phase.space.obstacle_mask().is_some() {
                return Err(Error::config("periodic boundaries cannot be combined with an obstacle"));
            }
            for side in 0..2 {
                if s[side] == BoundaryKind::Inflow {
                    match &self.inflow[axis][side] {
                        Some(v) if v.len() == phase.cell_width() => {}
                        _ => return Err(Error::config(format!("axis {axis}: inflow side needs a state vector"))),
                    }
                }
            }
        }
        Ok(())
    }
}

/// Outward moment fluxes per species: `(n, m v_1..v_D, ½ m |v|²)` per unit time.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFlux {
    pub species: Vec<[f64; 5]>,
}

impl BoundaryFlux {
    pub fn zeros(species: usize) -> Self {
        Self {
            species: vec![[0.0; 5]; species],
        }
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, s: f64, other: &BoundaryFlux) {
        for (a, b) in self.species.iter_mut().zip(&other.species) {
            for r in 0..5 {
                a[r] += s * b[r];
            }
        }
    }
}

/// A fluid segment of one line padded with its ghost cells.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedSegment {
    /// Inclusive range of line positions covered by fluid cells.
    pub start: usize,
    pub end: usize,
    /// First line position held in `data` (may be `start - 2`).
    pub first: isize,
    /// Cell vectors for positions `first..`, `width` values each.
    pub data: Vec<f64>,
}

/// Precomputed advection operator for one phase space and boundary set.
#[derive(Debug, Clone)]
pub struct Transport {
    dim: usize,
    cells: Vec<usize>,
    cell_size: Vec<f64>,
    species: usize,
    nodes: usize,
    width: usize,
    bc: BoundarySpec,
    opts: CwenoOptions,
    /// Node velocity along each spatial axis, repeated per species.
    speeds: Vec<Vec<f64>>,
    /// Column permutation mirroring the velocity along each axis.
    mirror: Vec<Vec<usize>>,
    /// Per column `w_j (1, m v, ½ m |v|²)` with `D_V + 2` entries.
    ledger_weights: Vec<[f64; 5]>,
    moments: usize,
    solid: Option<Vec<bool>>,
    /// Fluid segments per axis per line.
    segments: Vec<Vec<Vec<(usize, usize)>>>,
    blocks: Vec<Range<usize>>,
}

impl Transport {
    pub fn new(phase: &PhaseSpace, bc: BoundarySpec, opts: CwenoOptions) -> Result<Self> {
        bc.validate(phase)?;
        if !(opts.eps_rel >= 0.0 && opts.eps_rel.is_finite()) {
            return Err(Error::config(format!("cweno.eps_rel must be finite and non-negative, got {}", opts.eps_rel)));
        }
        let space = &phase.space;
        let vel = &phase.velocity;
        let dim = space.dim();
        let (species, nodes) = (phase.species.len(), vel.len());
        let width = species * nodes;

        let mut speeds = Vec::new();
        let mut mirror = Vec::new();
        for axis in 0..dim {
            let comp = vel.component(axis);
            speeds.push((0..width).map(|c| comp[c % nodes]).collect());
            let perm = vel.reflection_index(axis);
            mirror.push((0..width).map(|c| (c / nodes) * nodes + perm[c % nodes]).collect());
        }
        let vdim = vel.dim();
        let ledger_weights = (0..width)
            .map(|c| {
                let (p, j) = (c / nodes, c % nodes);
                let m = phase.species.masses()[p];
                let w = vel.weights()[j];
                let v = vel.node(j);
                let mut out = [0.0; 5];
                out[0] = w;
                for d in 0..vdim {
                    out[1 + d] = w * m * v[d];
                }
                out[vdim + 1] = w * 0.5 * m * vel.sq_norms()[j];
                out
            })
            .collect();

        let solid = space.obstacle_mask().map(|m| m.to_vec());
        let cells = space.cells().to_vec();
        let mut segments = Vec::new();
        for axis in 0..dim {
            let lines = line_count(&cells, axis);
            let len = cells[axis];
            let mut per_line = Vec::with_capacity(lines);
            for line in 0..lines {
                let mut segs = Vec::new();
                let mut start = None;
                for pos in 0..len {
                    let fluid = !solid.as_ref().is_some_and(|m| m[cell_index(&cells, axis, line, pos)]);
                    match (fluid, start) {
                        (true, None) => start = Some(pos),
                        (false, Some(s)) => {
                            segs.push((s, pos - 1));
                            start = None;
                        }
                        _ => {}
                    }
                }
                if let Some(s) = start {
                    segs.push((s, len - 1));
                }
                per_line.push(segs);
            }
            segments.push(per_line);
        }

        let rows = space.rows();
        Ok(Self {
            dim,
            cell_size: space.cell_size().to_vec(),
            cells,
            species,
            nodes,
            width,
            bc,
            opts,
            speeds,
            mirror,
            ledger_weights,
            moments: vdim + 2,
            solid,
            segments,
            blocks: crate::driver::partition_domain(rows, rayon::current_num_threads().max(1)),
        })
    }

    /// Replaces the row-block decomposition.
    pub fn with_blocks(mut self, blocks: Vec<Range<usize>>) -> Self {
        self.blocks = blocks;
        self
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn options(&self) -> &CwenoOptions {
        &self.opts
    }

    pub fn boundary(&self) -> &BoundarySpec {
        &self.bc
    }

    pub fn is_trivial(&self) -> bool {
        self.dim == 0
    }

    fn row_len(&self) -> usize {
        if self.dim == 2 {
            self.cells[0]
        } else {
            1
        }
    }

    fn is_solid(&self, cell: usize) -> bool {
        self.solid.as_ref().is_some_and(|m| m[cell])
    }

    /// Builds the padded segments of one line covering positions needed for
    /// the faces of cells in `[lo, hi)`.
    fn pad_line(&self, src: &[f64], axis: usize, line: usize, lo: usize, hi: usize) -> Vec<PaddedSegment> {
        let w = self.width;
        let len = self.cells[axis];
        let mut out = Vec::new();
        for &(s, e) in &self.segments[axis][line] {
            if e < lo || s >= hi {
                continue;
            }
            let first = s.max(lo) as isize - 2;
            let last = (e + 1).min(hi) as isize + 1;
            let mut data = vec![0.0; (last - first + 1) as usize * w];
            for pos in first..=last {
                let dst = &mut data[(pos - first) as usize * w..][..w];
                if pos >= s as isize && pos <= e as isize {
                    let c = cell_index(&self.cells, axis, line, pos as usize);
                    dst.copy_from_slice(&src[c * w..(c + 1) * w]);
                    continue;
                }
                let high = pos > e as isize;
                // distance beyond the segment end: 0 for the first ghost
                let k = if high { pos - e as isize - 1 } else { s as isize - 1 - pos } as usize;
                let at_edge = if high { e == len - 1 } else { s == 0 };
                let kind = if at_edge {
                    self.bc.sides[axis][high as usize]
                } else {
                    BoundaryKind::Specular
                };
                match kind {
                    BoundaryKind::Periodic => {
                        let wrapped = pos.rem_euclid(len as isize) as usize;
                        let c = cell_index(&self.cells, axis, line, wrapped);
                        dst.copy_from_slice(&src[c * w..(c + 1) * w]);
                    }
                    BoundaryKind::FreeFlow => {
                        let c = cell_index(&self.cells, axis, line, if high { e } else { s });
                        dst.copy_from_slice(&src[c * w..(c + 1) * w]);
                    }
                    BoundaryKind::Specular => {
                        let mpos = if high { e.saturating_sub(k).max(s) } else { (s + k).min(e) };
                        let c = cell_index(&self.cells, axis, line, mpos);
                        let cell = &src[c * w..(c + 1) * w];
                        for (d, &m) in dst.iter_mut().zip(&self.mirror[axis]) {
                            *d = cell[m];
                        }
                    }
                    BoundaryKind::Inflow => {
                        dst.copy_from_slice(self.bc.inflow[axis][high as usize].as_ref().unwrap());
                    }
                }
            }
            out.push(PaddedSegment {
                start: s,
                end: e,
                first,
                data,
            });
        }
        out
    }

    /// Computes the upwind flux at the face between positions `k-1` and `k`.
    #[inline]
    fn face_flux(&self, seg: &PaddedSegment, axis: usize, k: isize, out: &mut [f64]) {
        let w = self.width;
        let base = (k - seg.first) as usize;
        let at = |off: usize| &seg.data[(base + off - 2) * w..][..w];
        let (um2, um1, u0, up1) = (at(0), at(1), at(2), at(3));
        let speeds = &self.speeds[axis];
        let o = &self.opts;
        // Stencil chosen by select so the loop vectorizes; v = 0 gives a zero
        // flux because face values are always finite.
        for c in 0..w {
            let v = speeds[c];
            let pos = v > 0.0;
            let behind = if pos { um2[c] } else { up1[c] };
            let center = if pos { um1[c] } else { u0[c] };
            let ahead = if pos { u0[c] } else { um1[c] };
            out[c] = v * face_value(behind, center, ahead, o);
        }
    }

    #[inline]
    fn record(&self, flux: &[f64], sign: f64, acc: &mut [[f64; 5]]) {
        for (c, &f) in flux.iter().enumerate() {
            if f == 0.0 {
                continue;
            }
            let lw = &self.ledger_weights[c];
            let a = &mut acc[c / self.nodes];
            for r in 0..self.moments {
                a[r] += sign * f * lw[r];
            }
        }
    }

    /// Sweeps one line, writing `-dF/dx` for the cells in `[lo, hi)` through
    /// `emit(pos, values)` and recording wall fluxes per line position.
    #[allow(clippy::too_many_arguments)]
    fn sweep_line(
        &self,
        src: &[f64],
        axis: usize,
        line: usize,
        lo: usize,
        hi: usize,
        buf: &mut (Vec<f64>, Vec<f64>, Vec<f64>),
        mut emit: impl FnMut(usize, &[f64]),
        mut ledger: impl FnMut(usize, &[f64], f64),
    ) {
        let inv_dx = 1.0 / self.cell_size[axis];
        let (prev, next, div) = buf;
        for seg in self.pad_line(src, axis, line, lo, hi) {
            let k0 = seg.start.max(lo);
            let k1 = (seg.end + 1).min(hi);
            self.face_flux(&seg, axis, k0 as isize, prev);
            if k0 == seg.start {
                ledger(seg.start, prev, -1.0);
            }
            for pos in k0..k1 {
                self.face_flux(&seg, axis, pos as isize + 1, next);
                for c in 0..self.width {
                    div[c] = -(next[c] - prev[c]) * inv_dx;
                }
                emit(pos, div);
                if pos == seg.end {
                    ledger(pos, next, 1.0);
                }
                std::mem::swap(prev, next);
            }
        }
    }

    /// Writes `-v·∇ₓ f` into `out` and returns the outward boundary fluxes.
    pub fn flux_divergence(&self, f: &DistributionField, out: &mut DistributionField) -> BoundaryFlux {
        let mut total = BoundaryFlux::zeros(self.species);
        if self.dim == 0 {
            out.data_mut().fill(0.0);
            return total;
        }
        let w = self.width;
        let row_len = self.row_len();
        let src = f.data();
        let pa = self.dim - 1;

        // Split the output into the blocks' disjoint row ranges.
        let mut chunks: Vec<(&Range<usize>, &mut [f64])> = Vec::with_capacity(self.blocks.len());
        let mut rest = out.data_mut();
        for b in &self.blocks {
            let (head, tail) = rest.split_at_mut(b.len() * row_len * w);
            chunks.push((b, head));
            rest = tail;
        }

        let row_ledgers: Vec<Vec<Vec<[f64; 5]>>> = chunks
            .into_par_iter()
            .map(|(rows, dst)| {
                let mut ledger = vec![vec![[0.0; 5]; self.species]; rows.len()];
                let mut buf = (vec![0.0; w], vec![0.0; w], vec![0.0; w]);
                let cell0 = rows.start * row_len;
                dst.fill(0.0);
                // Sweeps across the partition axis: full lines within the block.
                for axis in 0..pa {
                    for row in rows.clone() {
                        let r = row - rows.start;
                        self.sweep_line(
                            src,
                            axis,
                            row,
                            0,
                            self.cells[axis],
                            &mut buf,
                            |pos, d| {
                                let c = cell_index(&self.cells, axis, row, pos) - cell0;
                                dst[c * w..(c + 1) * w].iter_mut().zip(d).for_each(|(o, x)| *o += x);
                            },
                            |_, flux, sign| {
                                let area = self.face_area(axis);
                                self.record(flux, sign * area, &mut ledger[r]);
                            },
                        );
                    }
                }
                // Sweep along the partition axis: windowed, with halo reads.
                let lines = line_count(&self.cells, pa);
                for line in 0..lines {
                    self.sweep_line(
                        src,
                        pa,
                        line,
                        rows.start,
                        rows.end,
                        &mut buf,
                        |pos, d| {
                            let c = cell_index(&self.cells, pa, line, pos) - cell0;
                            dst[c * w..(c + 1) * w].iter_mut().zip(d).for_each(|(o, x)| *o += x);
                        },
                        |pos, flux, sign| {
                            let area = self.face_area(pa);
                            self.record(flux, sign * area, &mut ledger[pos - rows.start]);
                        },
                    );
                }
                ledger
            })
            .collect();

        for block in &row_ledgers {
            for row in block {
                for (t, r) in total.species.iter_mut().zip(row) {
                    for k in 0..5 {
                        t[k] += r[k];
                    }
                }
            }
        }
        total
    }

    fn face_area(&self, axis: usize) -> f64 {
        (0..self.dim).filter(|&d| d != axis).map(|d| self.cell_size[d]).product()
    }

    /// Padded fluid segments of one full line, ghosts included.
    pub fn padded_line(&self, f: &DistributionField, axis: usize, line: usize) -> Vec<PaddedSegment> {
        self.pad_line(f.data(), axis, line, 0, self.cells[axis])
    }

    /// Species totals `(n, m v, ½ m|v|²)` integrated over fluid cells.
    pub fn totals(&self, f: &DistributionField) -> BoundaryFlux {
        let vol: f64 = self.cell_size.iter().product();
        let mut t = BoundaryFlux::zeros(self.species);
        for c in 0..f.cells() {
            if self.is_solid(c) {
                continue;
            }
            self.record(f.cell(c), vol, &mut t.species);
        }
        t
    }
}

/// Ghost layers of one line; free-function form of [`Transport::padded_line`].
pub fn fill_ghosts(f: &DistributionField, transport: &Transport, axis: usize, line: usize) -> Vec<PaddedSegment> {
    transport.padded_line(f, axis, line)
}

/// Writes `-v·∇ₓ f` for every species of `f` into `out`.
pub fn flux_divergence(f: &DistributionField, transport: &Transport, out: &mut DistributionField) -> BoundaryFlux {
    transport.flux_divergence(f, out)
}

fn line_count(cells: &[usize], axis: usize) -> usize {
    cells.iter().enumerate().filter(|&(d, _)| d != axis).map(|(_, &n)| n).product()
}

/// Global cell index of position `pos` on `line` along `axis`; cells are
/// row-major with `x` fastest.
#[inline]
fn cell_index(cells: &[usize], axis: usize, line: usize, pos: usize) -> usize {
    match (cells.len(), axis) {
        (1, _) => pos,
        (_, 0) => line * cells[0] + pos,
        _ => pos * cells[0] + line,
    }
}
