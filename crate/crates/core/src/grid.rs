//! Velocity and spatial discretizations.
//!
//! Velocity nodes are cell-centred on `[-L, L]^D`, so the node set is exactly
//! symmetric under `v -> -v` and every odd moment of an even function cancels
//! pairwise. Quadrature is the product midpoint rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform tensor-product velocity lattice with midpoint quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    dim: usize,
    extent: f64,
    points: Vec<usize>,
    spacing: Vec<f64>,
    /// Row-major node coordinates, `dim` entries per node; first axis slowest.
    nodes: Vec<f64>,
    weights: Vec<f64>,
    sq_norms: Vec<f64>,
}

/// Builds a velocity grid with the same number of points along every axis.
pub fn build_velocity_grid(dim: usize, extent: f64, points_per_dim: usize) -> Result<VelocityGrid> {
    VelocityGrid::new(dim, extent, &vec![points_per_dim; dim.max(1)])
}

impl VelocityGrid {
    pub fn new(dim: usize, extent: f64, points: &[usize]) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::config(format!("velocity dimension {dim} not in 1..=3")));
        }
        if points.len() != dim {
            return Err(Error::config(format!(
                "expected {dim} point counts, got {}",
                points.len()
            )));
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::config(format!("velocity extent must be positive, got {extent}")));
        }
        if let Some(&m) = points.iter().find(|&&m| m < 2) {
            return Err(Error::config(format!("need at least 2 velocity points per axis, got {m}")));
        }

        let spacing: Vec<f64> = points.iter().map(|&m| 2.0 * extent / m as f64).collect();
        // (i + 1/2 - M/2) is an exact half-integer, so v_{M-1-i} == -v_i bit for bit.
        let axes: Vec<Vec<f64>> = points
            .iter()
            .zip(&spacing)
            .map(|(&m, &dv)| {
                (0..m)
                    .map(|i| (i as f64 + 0.5 - 0.5 * m as f64) * dv)
                    .collect()
            })
            .collect();

        let total: usize = points.iter().product();
        let weight: f64 = spacing.iter().product();
        let mut nodes = Vec::with_capacity(total * dim);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            for d in 0..dim {
                nodes.push(axes[d][idx[d]]);
            }
            for d in (0..dim).rev() {
                idx[d] += 1;
                if idx[d] < points[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        let sq_norms = nodes
            .chunks_exact(dim)
            .map(|v| v.iter().map(|x| x * x).sum())
            .collect();

        Ok(Self {
            dim,
            extent,
            points: points.to_vec(),
            spacing,
            nodes,
            weights: vec![weight; total],
            sq_norms,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, j: usize) -> &[f64] {
        &self.nodes[j * self.dim..(j + 1) * self.dim]
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.nodes.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `|v_j|^2` per node.
    pub fn sq_norms(&self) -> &[f64] {
        &self.sq_norms
    }

    /// Velocity component along `axis` for every node.
    pub fn component(&self, axis: usize) -> Vec<f64> {
        self.nodes().map(|v| v[axis]).collect()
    }

    /// Largest admissible speed bound: the box half-width.
    pub fn max_speed(&self) -> f64 {
        self.extent
    }

    /// Permutation mapping node `j` to the node mirrored in `axis`.
    pub fn reflection_index(&self, axis: usize) -> Vec<usize> {
        assert!(axis < self.dim, "axis {axis} out of range");
        let stride: usize = self.points[axis + 1..].iter().product();
        let m = self.points[axis];
        (0..self.len())
            .map(|j| {
                let i = (j / stride) % m;
                j - i * stride + (m - 1 - i) * stride
            })
            .collect()
    }
}

/// Free-function form of [`VelocityGrid::reflection_index`].
pub fn reflection_index(grid: &VelocityGrid, axis: usize) -> Vec<usize> {
    grid.reflection_index(axis)
}

/// Cartesian finite-volume grid in 0, 1 or 2 space dimensions.
///
/// Cells are stored row-major with `x` fastest: `cell = iy * nx + ix`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    dim: usize,
    origin: Vec<f64>,
    lengths: Vec<f64>,
    cells: Vec<usize>,
    cell_size: Vec<f64>,
    obstacle: Option<Vec<bool>>,
}

impl SpatialGrid {
    /// Single cell, no spatial structure.
    pub fn homogeneous() -> Self {
        Self {
            dim: 0,
            origin: vec![],
            lengths: vec![],
            cells: vec![],
            cell_size: vec![],
            obstacle: None,
        }
    }

    pub fn new(origin: &[f64], lengths: &[f64], cells: &[usize]) -> Result<Self> {
        let dim = lengths.len();
        if dim > 2 || origin.len() != dim || cells.len() != dim {
            return Err(Error::config("spatial grid needs matching origin/length/cell lists of size <= 2"));
        }
        if lengths.iter().any(|&l| !(l > 0.0)) || cells.contains(&0) {
            return Err(Error::config("spatial lengths and cell counts must be positive"));
        }
        Ok(Self {
            dim,
            origin: origin.to_vec(),
            lengths: lengths.to_vec(),
            cells: cells.to_vec(),
            cell_size: lengths.iter().zip(cells).map(|(&l, &n)| l / n as f64).collect(),
            obstacle: None,
        })
    }

    /// Marks as solid every cell whose centre lies within `radius` of the
    /// centre of cell `center` (stair-step geometry).
    pub fn with_circular_obstacle(mut self, center: [usize; 2], radius: f64) -> Result<Self> {
        if self.dim != 2 {
            return Err(Error::config("obstacles require a 2D spatial grid"));
        }
        let (nx, ny) = (self.cells[0], self.cells[1]);
        if center[0] >= nx || center[1] >= ny {
            return Err(Error::config("obstacle centre outside the grid"));
        }
        let c = self.center(center[1] * nx + center[0]);
        let mask: Vec<bool> = (0..self.len())
            .map(|k| {
                let p = self.center(k);
                let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
                dx * dx + dy * dy <= radius * radius
            })
            .collect();
        for iy in 0..ny {
            for ix in 0..nx {
                let edge = ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1;
                if edge && mask[iy * nx + ix] {
                    return Err(Error::config("obstacle must lie strictly inside the domain"));
                }
            }
        }
        self.obstacle = Some(mask);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn cell_size(&self) -> &[f64] {
        &self.cell_size
    }

    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume (1 for the homogeneous grid).
    pub fn cell_volume(&self) -> f64 {
        self.cell_size.iter().product()
    }

    /// Number of rows used for domain partitioning (`ny` in 2D, cells in 1D).
    pub fn rows(&self) -> usize {
        match self.dim {
            0 => 1,
            1 => self.cells[0],
            _ => self.cells[1],
        }
    }

    /// Cells per row (`nx` in 2D, 1 otherwise).
    pub fn row_len(&self) -> usize {
        if self.dim == 2 {
            self.cells[0]
        } else {
            1
        }
    }

    pub fn center(&self, cell: usize) -> [f64; 2] {
        match self.dim {
            0 => [0.0, 0.0],
            1 => [self.origin[0] + (cell as f64 + 0.5) * self.cell_size[0], 0.0],
            _ => {
                let (ix, iy) = (cell % self.cells[0], cell / self.cells[0]);
                [
                    self.origin[0] + (ix as f64 + 0.5) * self.cell_size[0],
                    self.origin[1] + (iy as f64 + 0.5) * self.cell_size[1],
                ]
            }
        }
    }

    pub fn obstacle_mask(&self) -> Option<&[bool]> {
        self.obstacle.as_deref()
    }

    pub fn is_solid(&self, cell: usize) -> bool {
        self.obstacle.as_ref().is_some_and(|m| m[cell])
    }
}

/// Particle masses, one per species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesSet {
    masses: Vec<f64>,
}

impl SpeciesSet {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::config("at least one species required"));
        }
        if masses.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(Error::config("species masses must be positive"));
        }
        Ok(Self { masses })
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }
}

/// The full phase-space discretization shared by every kernel.
#[derive(Debug, Clone)]
pub struct PhaseSpace {
    pub velocity: VelocityGrid,
    pub space: SpatialGrid,
    pub species: SpeciesSet,
}

impl PhaseSpace {
    pub fn new(velocity: VelocityGrid, space: SpatialGrid, species: SpeciesSet) -> Result<Self> {
        if space.dim() > velocity.dim() {
            return Err(Error::config(format!(
                "{}D space needs at least {}D velocities",
                space.dim(),
                space.dim()
            )));
        }
        Ok(Self {
            velocity,
            space,
            species,
        })
    }

    /// Values per cell: species x velocity nodes.
    pub fn cell_width(&self) -> usize {
        self.species.len() * self.velocity.len()
    }
}
