use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regular 2D focus grid with square cells, lying in the plane `z = plane_offset_m`
/// of the array frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusGrid {
    pub origin: [f64; 2],
    pub spacing: f64,
    pub n1: usize,
    pub n2: usize,
    pub plane_offset_m: f64,
}

impl FocusGrid {
    pub fn new(origin: [f64; 2], spacing: f64, n1: usize, n2: usize, plane_offset_m: f64) -> Result<Self> {
        let g = Self {
            origin,
            spacing,
            n1,
            n2,
            plane_offset_m,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grid covering `[lo, hi]` on both axes with the given spacing (bounds snapped outward).
    pub fn covering(lo: [f64; 2], hi: [f64; 2], spacing: f64, plane_offset_m: f64) -> Result<Self> {
        let n = |a: f64, b: f64| ((b - a) / spacing).round() as usize + 1;
        Self::new(lo, spacing, n(lo[0], hi[0]), n(lo[1], hi[1]), plane_offset_m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return Err(Error::Config(format!("grid spacing must be > 0, got {}", self.spacing)));
        }
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::Config("grid needs at least one cell per axis".into()));
        }
        if !self.origin.iter().all(|v| v.is_finite()) || !self.plane_offset_m.is_finite() {
            return Err(Error::Config("grid origin must be finite".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Physical position of cell `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> Result<[f64; 2]> {
        if i >= self.n1 || j >= self.n2 {
            return Err(Error::Range(format!(
                "cell ({i}, {j}) outside {}x{} grid",
                self.n1, self.n2
            )));
        }
        Ok(self.point_unchecked(i, j))
    }

    #[inline]
    pub(crate) fn point_unchecked(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.spacing,
            self.origin[1] + j as f64 * self.spacing,
        ]
    }

    /// Point of the cell with linear index `k`, as a 3D position in the array frame.
    pub fn point3_linear(&self, k: usize) -> [f64; 3] {
        let (i, j) = self.cell_of_linear(k);
        let [x1, x2] = self.point_unchecked(i, j);
        [x1, x2, self.plane_offset_m]
    }

    /// Linear index, x₂ fastest.
    #[inline]
    pub fn linear(&self, i: usize, j: usize) -> usize {
        i * self.n2 + j
    }

    #[inline]
    pub fn cell_of_linear(&self, k: usize) -> (usize, usize) {
        (k / self.n2, k % self.n2)
    }

    /// Continuous (fractional) cell coordinates of a position.
    #[inline]
    pub fn fractional_cell(&self, x1: f64, x2: f64) -> (f64, f64) {
        (
            (x1 - self.origin[0]) / self.spacing,
            (x2 - self.origin[1]) / self.spacing,
        )
    }

    /// Nearest cell to a position, or `None` when the position is off the grid.
    pub fn nearest_cell(&self, x1: f64, x2: f64) -> Option<(usize, usize)> {
        let (u, v) = self.fractional_cell(x1, x2);
        let (i, j) = (u.round(), v.round());
        if !(i >= 0.0 && j >= 0.0 && (i as usize) < self.n1 && (j as usize) < self.n2) {
            return None;
        }
        Some((i as usize, j as usize))
    }

    /// Cell for a position that is expected to lie exactly on a grid point.
    pub fn snap(&self, x1: f64, x2: f64) -> Option<(usize, usize)> {
        let (i, j) = self.nearest_cell(x1, x2)?;
        let [p1, p2] = self.point_unchecked(i, j);
        let tol = 1e-6 * self.spacing;
        ((p1 - x1).abs() <= tol && (p2 - x2).abs() <= tol).then_some((i, j))
    }

    pub(crate) fn linear_index_of(&self, x1: f64, x2: f64) -> usize {
        self.nearest_cell(x1, x2).map(|(i, j)| self.linear(i, j)).unwrap_or(usize::MAX)
    }

    /// All cell centres, in linear order.
    pub fn points(&self) -> Vec<[f64; 2]> {
        (0..self.len())
            .map(|k| {
                let (i, j) = self.cell_of_linear(k);
                self.point_unchecked(i, j)
            })
            .collect()
    }

    /// Width of the grid along each axis, metres.
    pub fn extent(&self) -> [f64; 2] {
        [
            (self.n1 - 1) as f64 * self.spacing,
            (self.n2 - 1) as f64 * self.spacing,
        ]
    }
}

/// Per-cell counts of source-parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram2D {
    counts: Vec<u64>,
    grid: FocusGrid,
}

impl Histogram2D {
    pub fn zeros(grid: FocusGrid) -> Self {
        Self {
            counts: vec![0; grid.len()],
            grid,
        }
    }

    pub fn from_counts(grid: FocusGrid, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} counts for a grid of {} cells",
                counts.len(),
                grid.len()
            )));
        }
        Ok(Self { counts, grid })
    }

    pub fn grid(&self) -> &FocusGrid {
        &self.grid
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[self.grid.linear(i, j)]
    }

    pub(crate) fn increment(&mut self, i: usize, j: usize) {
        let k = self.grid.linear(i, j);
        self.counts[k] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn max(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// Counts as floats, linear order.
    pub fn to_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }
}
