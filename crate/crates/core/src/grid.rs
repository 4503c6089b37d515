//! Discretized configuration spaces and the cell sets used by the
//! projection-valued measure: regions (single cell masks) and partitions
//! (total labelings of the cells).

use serde::{Deserialize, Serialize};

use crate::error::{PsdError, Result};

/// One uniform axis: `cells` cells of equal width covering `[min, min + extent)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub extent: f64,
    pub cells: usize,
}

impl Axis {
    pub fn new(min: f64, extent: f64, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(PsdError::InvalidArgument("axis needs at least one cell".into()));
        }
        if !(extent.is_finite() && extent > 0.0) || !min.is_finite() {
            return Err(PsdError::InvalidArgument(format!("axis extent must be positive and finite, got {extent}")));
        }
        Ok(Self { min, extent, cells })
    }

    /// Axis centered on the origin.
    pub fn centered(extent: f64, cells: usize) -> Result<Self> {
        Self::new(-0.5 * extent, extent, cells)
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.min + (i as f64 + 0.5) * self.spacing()
    }

    pub fn max(&self) -> f64 {
        self.min + self.extent
    }

    /// Angular wave numbers in FFT order.
    pub fn wave_numbers(&self) -> Vec<f64> {
        let n = self.cells;
        let dk = 2.0 * std::f64::consts::PI / self.extent;
        (0..n)
            .map(|j| {
                let m = if j <= (n - 1) / 2 { j as i64 } else { j as i64 - n as i64 };
                m as f64 * dk
            })
            .collect()
    }
}

/// A one- or two-dimensional uniform grid. Cells are stored row-major:
/// index = i0 * cells(1) + i1. A 1D grid carries a unit-width single-cell
/// second axis so that shapes and volumes stay uniform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    axes: [Axis; 2],
}

const UNIT_AXIS: Axis = Axis { min: -0.5, extent: 1.0, cells: 1 };

impl Grid {
    pub fn one_d(axis: Axis) -> Self {
        Self { dim: 1, axes: [axis, UNIT_AXIS] }
    }

    pub fn two_d(axis0: Axis, axis1: Axis) -> Self {
        Self { dim: 2, axes: [axis0, axis1] }
    }

    /// Centered 1D grid.
    pub fn line(extent: f64, cells: usize) -> Result<Self> {
        Ok(Self::one_d(Axis::centered(extent, cells)?))
    }

    /// Centered 2D grid.
    pub fn plane(extent: [f64; 2], cells: [usize; 2]) -> Result<Self> {
        Ok(Self::two_d(Axis::centered(extent[0], cells[0])?, Axis::centered(extent[1], cells[1])?))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes[..self.dim]
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.axes[0].cells, self.axes[1].cells]
    }

    pub fn len(&self) -> usize {
        self.axes[0].cells * self.axes[1].cells
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes().iter().map(Axis::spacing).product()
    }

    pub fn index(&self, i0: usize, i1: usize) -> usize {
        i0 * self.axes[1].cells + i1
    }

    pub fn unravel(&self, idx: usize) -> (usize, usize) {
        let n1 = self.axes[1].cells;
        (idx / n1, idx % n1)
    }

    /// Physical coordinates of a cell center. The second entry is 0 on 1D grids.
    pub fn position(&self, idx: usize) -> [f64; 2] {
        let (i0, i1) = self.unravel(idx);
        let y = if self.dim == 2 { self.axes[1].center(i1) } else { 0.0 };
        [self.axes[0].center(i0), y]
    }

    pub fn positions(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.len()).map(move |i| self.position(i))
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(PsdError::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// A raw cell mask. Empty masks are allowed; partitions are where
/// non-emptiness matters.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    grid: Grid,
    mask: Vec<bool>,
}

impl Region {
    pub fn new(grid: Grid, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(PsdError::InvalidArgument(format!("mask has {} cells, grid has {}", mask.len(), grid.len())));
        }
        Ok(Self { grid, mask })
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> bool) -> Self {
        let mask = grid.positions().map(f).collect();
        Self { grid, mask }
    }

    pub fn all(grid: Grid) -> Self {
        Self { grid, mask: vec![true; grid.len()] }
    }

    pub fn none(grid: Grid) -> Self {
        Self { grid, mask: vec![false; grid.len()] }
    }

    pub fn complement(&self) -> Self {
        Self { grid: self.grid, mask: self.mask.iter().map(|m| !m).collect() }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.mask[idx]
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// A total labeling of grid cells into `n` blocks.
///
/// Blocks may be empty here: optimizer outputs can legitimately leave a
/// block unused (e.g. two components with identical profiles). Operations
/// that need non-empty blocks check [`Partition::require_nonempty`].
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    grid: Grid,
    labels: Vec<usize>,
    n: usize,
}

impl Partition {
    pub fn new(grid: Grid, labels: Vec<usize>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(PsdError::InvalidArgument("partition needs at least one block".into()));
        }
        if labels.len() != grid.len() {
            return Err(PsdError::InvalidArgument(format!(
                "labeling has {} cells, grid has {}",
                labels.len(),
                grid.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n) {
            return Err(PsdError::InvalidArgument(format!("label {bad} out of range 0..{n}")));
        }
        Ok(Self { grid, labels, n })
    }

    /// The one-block partition {𝒳}.
    pub fn trivial(grid: Grid) -> Self {
        Self { grid, labels: vec![0; grid.len()], n: 1 }
    }

    pub fn from_fn(grid: Grid, n: usize, f: impl Fn([f64; 2]) -> usize) -> Result<Self> {
        let labels = grid.positions().map(f).collect();
        Self::new(grid, labels, n)
    }

    /// Two blocks split at `x = at` along axis 0: block 0 is `x < at`.
    pub fn split_axis0(grid: Grid, at: f64) -> Self {
        let labels = grid.positions().map(|p| usize::from(p[0] >= at)).collect();
        Self { grid, labels, n: 2 }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_blocks(&self) -> usize {
        self.n
    }

    pub fn block(&self, i: usize) -> Region {
        Region { grid: self.grid, mask: self.labels.iter().map(|&l| l == i).collect() }
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn require_nonempty(&self) -> Result<()> {
        match self.block_sizes().iter().position(|&s| s == 0) {
            Some(block) => Err(PsdError::EmptyBlock { block }),
            None => Ok(()),
        }
    }

    /// Run-length encoding of the labels as `(label, run)` pairs.
    pub fn run_length(&self) -> Vec<(usize, usize)> {
        let mut runs: Vec<(usize, usize)> = Vec::new();
        for &l in &self.labels {
            match runs.last_mut() {
                Some((label, run)) if *label == l => *run += 1,
                _ => runs.push((l, 1)),
            }
        }
        runs
    }

    /// Relabels blocks so that they appear in order of their first cell.
    /// Empty blocks are dropped.
    pub fn canonical(&self) -> Self {
        let mut map = vec![usize::MAX; self.n];
        let mut next = 0;
        for &l in &self.labels {
            if map[l] == usize::MAX {
                map[l] = next;
                next += 1;
            }
        }
        Self { grid: self.grid, labels: self.labels.iter().map(|&l| map[l]).collect(), n: next.max(1) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_volume() {
        let g = Grid::plane([8.0, 4.0], [16, 8]).unwrap();
        assert_eq!(g.len(), 128);
        assert_eq!(g.axis(0).spacing(), 0.5);
        assert_eq!(g.cell_volume(), 0.25);
        assert_eq!(g.position(0), [-3.75, -1.75]);
        let line = Grid::line(10.0, 10).unwrap();
        assert_eq!(line.cell_volume(), 1.0);
        assert_eq!(line.position(9), [4.5, 0.0]);
    }

    #[test]
    fn wave_numbers_fft_order() {
        let a = Axis::centered(2.0 * std::f64::consts::PI, 4).unwrap();
        assert_eq!(a.wave_numbers(), vec![0.0, 1.0, -2.0, -1.0]);
    }

    #[test]
    fn rejects_bad_labels() {
        let g = Grid::line(4.0, 4).unwrap();
        assert!(Partition::new(g, vec![0, 1, 2, 0], 2).is_err());
        assert!(Partition::new(g, vec![0, 1], 2).is_err());
        let p = Partition::new(g, vec![0, 0, 0, 0], 2).unwrap();
        assert!(matches!(p.require_nonempty(), Err(PsdError::EmptyBlock { block: 1 })));
    }

    #[test]
    fn run_length_and_canonical() {
        let g = Grid::line(6.0, 6).unwrap();
        let p = Partition::new(g, vec![2, 2, 0, 0, 0, 2], 3).unwrap();
        assert_eq!(p.run_length(), vec![(2, 2), (0, 3), (2, 1)]);
        let c = p.canonical();
        assert_eq!(c.labels(), &[0, 0, 1, 1, 1, 0]);
        assert_eq!(c.n_blocks(), 2);
    }
}
