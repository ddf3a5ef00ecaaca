//! Core domain types shared by every stage of the pipeline.
//!
//! Everything here is plain immutable data: once built, values are only read,
//! so they can be shared freely across worker threads.

mod grid;
mod io;
mod result;

pub use grid::{FocusGrid, Histogram2D};
pub use io::{read_parts_csv, write_parts_csv, PARTS_CSV_HEADER};
pub use result::{
    Assignment, ClusterSource, GaussianSource, IdentificationResult, IdentifiedSource, Method,
    MethodParams, Spectrum,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of sound in dry air at 300 K.
pub const DEFAULT_SPEED_OF_SOUND: f64 = 347.2;

/// Power spectral density in dB re 1 Pa²/Hz to linear Pa²/Hz.
#[inline]
pub fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear Pa²/Hz to dB. Non-positive power maps to `-inf`.
#[inline]
pub fn power_to_db(p: f64) -> f64 {
    10.0 * p.log10()
}

/// Power-sums a set of dB levels.
pub fn power_sum_db(levels: impl IntoIterator<Item = f64>) -> f64 {
    power_to_db(levels.into_iter().map(db_to_power).sum())
}

/// One flow configuration of a measurement campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementConfig {
    pub mach: f64,
    #[serde(default)]
    pub alpha_deg: f64,
    pub sample_rate_hz: f64,
    pub block_size: usize,
    #[serde(default = "default_overlap")]
    pub overlap_fraction: f64,
    #[serde(default = "default_c")]
    pub speed_of_sound_mps: f64,
    pub reference_length_m: f64,
    #[serde(default)]
    pub label: String,
}

fn default_overlap() -> f64 {
    0.5
}

fn default_c() -> f64 {
    DEFAULT_SPEED_OF_SOUND
}

impl MeasurementConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.mach >= 0.0) || !self.mach.is_finite() {
            return bad(format!("mach must be >= 0, got {}", self.mach));
        }
        if !self.block_size.is_power_of_two() || self.block_size < 64 {
            return bad(format!(
                "block_size must be a power of two >= 64, got {}",
                self.block_size
            ));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return bad(format!(
                "overlap_fraction must be in [0, 1), got {}",
                self.overlap_fraction
            ));
        }
        if !(self.reference_length_m > 0.0) {
            return bad("reference_length_m must be > 0".into());
        }
        if !(self.sample_rate_hz > 0.0) || !(self.speed_of_sound_mps > 0.0) {
            return bad("sample rate and speed of sound must be > 0".into());
        }
        Ok(())
    }

    /// Spacing of the one-sided FFT bins.
    pub fn bin_width_hz(&self) -> f64 {
        self.sample_rate_hz / self.block_size as f64
    }

    /// Analysis frequencies: one-sided FFT bins without DC and Nyquist.
    pub fn analysis_freqs(&self) -> Vec<f64> {
        let df = self.bin_width_hz();
        (1..self.block_size / 2).map(|k| k as f64 * df).collect()
    }
}

/// Strouhal number `f·D₀ / (M·c)`.
pub fn strouhal(freq_hz: f64, config: &MeasurementConfig) -> Result<f64> {
    if !(config.mach > 0.0) {
        return Err(Error::UndefinedStrouhal);
    }
    if !(freq_hz > 0.0) {
        return Err(Error::Input(format!("frequency must be > 0, got {freq_hz}")));
    }
    Ok(freq_hz * config.reference_length_m / (config.mach * config.speed_of_sound_mps))
}

/// Helmholtz number `f·D₀ / c`.
pub fn helmholtz(freq_hz: f64, config: &MeasurementConfig) -> f64 {
    freq_hz * config.reference_length_m / config.speed_of_sound_mps
}

/// Microphone array layout. Coordinates are in the array frame, metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    mic_positions: Vec<[f64; 3]>,
    center: [f64; 3],
}

impl ArrayGeometry {
    pub fn new(mic_positions: Vec<[f64; 3]>) -> Result<Self> {
        if mic_positions.len() < 2 {
            return Err(Error::Config("an array needs at least 2 microphones".into()));
        }
        if mic_positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config("microphone positions must be finite".into()));
        }
        let n = mic_positions.len() as f64;
        let mut center = [0.0; 3];
        for p in &mic_positions {
            for k in 0..3 {
                center[k] += p[k] / n;
            }
        }
        Ok(Self {
            mic_positions,
            center,
        })
    }

    /// Equidistant `nx × ny` array centred on `center`, lying in the plane `z = center[2]`.
    pub fn rectangular(nx: usize, ny: usize, aperture_x: f64, aperture_y: f64, center: [f64; 3]) -> Result<Self> {
        let step = |n: usize, ap: f64| if n > 1 { ap / (n - 1) as f64 } else { 0.0 };
        let (dx, dy) = (step(nx, aperture_x), step(ny, aperture_y));
        let mut pos = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                pos.push([
                    center[0] - aperture_x / 2.0 + ix as f64 * dx,
                    center[1] - aperture_y / 2.0 + iy as f64 * dy,
                    center[2],
                ]);
            }
        }
        Self::new(pos)
    }

    pub fn mic_positions(&self) -> &[[f64; 3]] {
        &self.mic_positions
    }

    pub fn center(&self) -> [f64; 3] {
        self.center
    }

    pub fn len(&self) -> usize {
        self.mic_positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mic_positions.is_empty()
    }

    /// Distance from every microphone to `p`.
    pub fn distances_to(&self, p: [f64; 3]) -> Vec<f64> {
        self.mic_positions.iter().map(|m| distance3(*m, p)).collect()
    }
}

pub(crate) fn distance3(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// One non-zero entry of a sparse beamforming map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourcePart {
    pub x1: f64,
    pub x2: f64,
    pub freq_hz: f64,
    pub alpha_deg: f64,
    pub mach: f64,
    pub psd_db: f64,
    pub config_id: usize,
}

impl SourcePart {
    pub fn position(&self) -> [f64; 2] {
        [self.x1, self.x2]
    }
}

/// All source-parts of a dataset together with the grid and flow configurations
/// they refer to. Parts are kept sorted by (config, frequency, grid cell).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourcePartSet {
    parts: Vec<SourcePart>,
    grid: FocusGrid,
    configs: Vec<MeasurementConfig>,
}

impl SourcePartSet {
    pub fn new(mut parts: Vec<SourcePart>, grid: FocusGrid, configs: Vec<MeasurementConfig>) -> Result<Self> {
        for (k, p) in parts.iter().enumerate() {
            if p.config_id >= configs.len() {
                return Err(Error::Input(format!(
                    "part {k}: config_id {} out of range ({} configs)",
                    p.config_id,
                    configs.len()
                )));
            }
            if !p.psd_db.is_finite() {
                return Err(Error::Input(format!("part {k}: psd_db must be finite")));
            }
            if !(p.freq_hz > 0.0) {
                return Err(Error::Input(format!("part {k}: freq_hz must be > 0")));
            }
            if grid.snap(p.x1, p.x2).is_none() {
                return Err(Error::Input(format!(
                    "part {k}: position ({}, {}) is not on the focus grid",
                    p.x1, p.x2
                )));
            }
        }
        parts.sort_by(|a, b| {
            let ka = (a.config_id, a.freq_hz, grid.linear_index_of(a.x1, a.x2));
            let kb = (b.config_id, b.freq_hz, grid.linear_index_of(b.x1, b.x2));
            ka.partial_cmp(&kb).expect("finite keys")
        });
        Ok(Self { parts, grid, configs })
    }

    pub fn empty(grid: FocusGrid, configs: Vec<MeasurementConfig>) -> Self {
        Self {
            parts: Vec::new(),
            grid,
            configs,
        }
    }

    pub fn parts(&self) -> &[SourcePart] {
        &self.parts
    }

    pub fn grid(&self) -> &FocusGrid {
        &self.grid
    }

    pub fn configs(&self) -> &[MeasurementConfig] {
        &self.configs
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Sorted distinct frequencies that appear in the set.
    pub fn frequencies(&self) -> Vec<f64> {
        let mut f: Vec<f64> = self.parts.iter().map(|p| p.freq_hz).collect();
        f.sort_by(|a, b| a.partial_cmp(b).unwrap());
        f.dedup();
        f
    }

    /// Same set with every part position replaced by `f(part)`, re-snapped to the grid.
    /// Parts mapped outside the grid are dropped.
    pub fn map_positions(&self, f: impl Fn(&SourcePart) -> [f64; 2]) -> Self {
        let parts = self
            .parts
            .iter()
            .filter_map(|p| {
                let [x1, x2] = f(p);
                let (i, j) = self.grid.nearest_cell(x1, x2)?;
                let [x1, x2] = self.grid.point(i, j).ok()?;
                Some(SourcePart { x1, x2, ..*p })
            })
            .collect();
        Self::new(parts, self.grid.clone(), self.configs.clone()).expect("re-snapped parts stay valid")
    }
}
