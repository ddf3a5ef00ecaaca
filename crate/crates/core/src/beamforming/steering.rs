use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ArrayGeometry, FocusGrid};

/// Steering vector formulation. Only the power-correct monopole form is provided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SteeringFormulation {
    /// `g_m = exp(-i k r_m) / r_m`, `w = g / ‖g‖²`.
    MonopolePower,
}

/// Steering information for every focus cell and analysis frequency.
///
/// Vectors are generated per frequency on demand from the stored distances;
/// the frequency-independent norms are precomputed.
#[derive(Debug, Clone)]
pub struct SteeringSet {
    freqs_hz: Vec<f64>,
    speed_of_sound: f64,
    grid: FocusGrid,
    n_mics: usize,
    distances: Vec<f64>,
    norm2: Vec<f64>,
    sum4: Vec<f64>,
    formulation: SteeringFormulation,
}

/// Builds the steering set for `geometry` looking at `grid`.
pub fn steering_vectors(geometry: &ArrayGeometry, grid: &FocusGrid, freqs_hz: &[f64], c: f64) -> Result<SteeringSet> {
    if !(c > 0.0) {
        return Err(Error::Config(format!("speed of sound must be > 0, got {c}")));
    }
    grid.validate()?;
    let n_mics = geometry.len();
    let mut distances = Vec::with_capacity(grid.len() * n_mics);
    let mut norm2 = Vec::with_capacity(grid.len());
    let mut sum4 = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let p = grid.point3_linear(k);
        let d = geometry.distances_to(p);
        if d.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::Singularity(format!("focus point {p:?} coincides with a microphone")));
        }
        norm2.push(d.iter().map(|r| r.powi(-2)).sum());
        sum4.push(d.iter().map(|r| r.powi(-4)).sum());
        distances.extend(d);
    }
    Ok(SteeringSet {
        freqs_hz: freqs_hz.to_vec(),
        speed_of_sound: c,
        grid: grid.clone(),
        n_mics,
        distances,
        norm2,
        sum4,
        formulation: SteeringFormulation::MonopolePower,
    })
}

impl SteeringSet {
    pub fn freqs_hz(&self) -> &[f64] {
        &self.freqs_hz
    }

    pub fn grid(&self) -> &FocusGrid {
        &self.grid
    }

    pub fn n_mics(&self) -> usize {
        self.n_mics
    }

    pub fn n_cells(&self) -> usize {
        self.norm2.len()
    }

    pub fn formulation(&self) -> SteeringFormulation {
        self.formulation
    }

    pub fn distances(&self, cell: usize) -> &[f64] {
        &self.distances[cell * self.n_mics..(cell + 1) * self.n_mics]
    }

    /// `‖g‖²` of a cell.
    pub fn norm2(&self, cell: usize) -> f64 {
        self.norm2[cell]
    }

    /// Map normalisation: `‖g‖⁴`, or `‖g‖⁴ − Σ|g_m|⁴` with diagonal removal.
    pub fn normalization(&self, cell: usize, diagonal_removal: bool) -> f64 {
        let n2 = self.norm2[cell];
        if diagonal_removal {
            n2 * n2 - self.sum4[cell]
        } else {
            n2 * n2
        }
    }

    /// `|g_m|²` summed with weights, i.e. `Σ |g_m|² a_m`.
    pub(crate) fn weighted_gain(&self, cell: usize, a: &[f64]) -> f64 {
        self.distances(cell).iter().zip(a).map(|(r, a)| a / (r * r)).sum()
    }

    /// Steering vector of one cell at an arbitrary frequency.
    pub fn vector(&self, freq_hz: f64, cell: usize) -> Vec<Complex64> {
        let k = 2.0 * std::f64::consts::PI * freq_hz / self.speed_of_sound;
        self.distances(cell)
            .iter()
            .map(|&r| Complex64::from_polar(1.0 / r, -k * r))
            .collect()
    }

    /// All steering vectors at `freq_hz`, row-major `[cell][mic]`.
    pub fn vectors_at(&self, freq_hz: f64) -> Vec<Complex64> {
        let k = 2.0 * std::f64::consts::PI * freq_hz / self.speed_of_sound;
        self.distances
            .iter()
            .map(|&r| Complex64::from_polar(1.0 / r, -k * r))
            .collect()
    }
}
