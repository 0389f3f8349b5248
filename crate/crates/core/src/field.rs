use crate::grid::PhaseSpace;

/// Phase-space values for all species, laid out `[cell][species][node]`.
///
/// Each cell owns one contiguous slice of `species * nodes` values, so per-cell
/// kernels (moments, relaxation) see contiguous memory and transport can treat
/// every `(species, node)` column as an independent advected scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField {
    cells: usize,
    species: usize,
    nodes: usize,
    data: Vec<f64>,
}

impl DistributionField {
    pub fn zeros(cells: usize, species: usize, nodes: usize) -> Self {
        Self {
            cells,
            species,
            nodes,
            data: vec![0.0; cells * species * nodes],
        }
    }

    pub fn zeros_like_phase(phase: &PhaseSpace) -> Self {
        Self::zeros(phase.space.len(), phase.species.len(), phase.velocity.len())
    }

    pub fn from_vec(cells: usize, species: usize, nodes: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), cells * species * nodes);
        Self {
            cells,
            species,
            nodes,
            data,
        }
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn species_count(&self) -> usize {
        self.species
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Values per cell.
    pub fn width(&self) -> usize {
        self.species * self.nodes
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn cell(&self, c: usize) -> &[f64] {
        let w = self.width();
        &self.data[c * w..(c + 1) * w]
    }

    pub fn cell_mut(&mut self, c: usize) -> &mut [f64] {
        let w = self.width();
        &mut self.data[c * w..(c + 1) * w]
    }

    pub fn species(&self, c: usize, p: usize) -> &[f64] {
        let start = (c * self.species + p) * self.nodes;
        &self.data[start..start + self.nodes]
    }

    pub fn species_mut(&mut self, c: usize, p: usize) -> &mut [f64] {
        let start = (c * self.species + p) * self.nodes;
        &mut self.data[start..start + self.nodes]
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &DistributionField) {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(y, x)| *y += s * x);
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Supremum norm of species `p` over all cells.
    pub fn sup_species(&self, p: usize) -> f64 {
        (0..self.cells)
            .flat_map(|c| self.species(c, p).iter())
            .fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Sums all species into a single-species field.
    pub fn summed_species(&self) -> DistributionField {
        let mut out = DistributionField::zeros(self.cells, 1, self.nodes);
        for c in 0..self.cells {
            let dst = out.species_mut(c, 0);
            for p in 0..self.species {
                let src = &self.data[(c * self.species + p) * self.nodes..][..self.nodes];
                dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
            }
        }
        out
    }
}
