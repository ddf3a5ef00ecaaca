use std::path::Path;

use serde::{Deserialize, Serialize};

use super::monopole::MonopoleSpec;
use super::mix_seed;
use crate::error::{Error, Result};
use crate::model::{ArrayGeometry, FocusGrid, MeasurementConfig};

/// Microphone layout of a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "lowercase")]
pub enum ArraySpec {
    /// Equidistant `nx × ny` grid in the plane `z = center[2]`.
    Rectangular {
        nx: usize,
        ny: usize,
        aperture_x_m: f64,
        aperture_y_m: f64,
        center: [f64; 3],
    },
    Explicit { positions: Vec<[f64; 3]> },
}

impl ArraySpec {
    pub fn geometry(&self) -> Result<ArrayGeometry> {
        match self {
            ArraySpec::Rectangular {
                nx,
                ny,
                aperture_x_m,
                aperture_y_m,
                center,
            } => ArrayGeometry::rectangular(*nx, *ny, *aperture_x_m, *aperture_y_m, *center),
            ArraySpec::Explicit { positions } => ArrayGeometry::new(positions.clone()),
        }
    }
}

fn no_noise() -> f64 {
    f64::NEG_INFINITY
}

/// One flow configuration plus its synthetic "flow noise" floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEntry {
    #[serde(flatten)]
    pub config: MeasurementConfig,
    /// Sensor noise PSD, dB re 1 Pa²/Hz. Omitted means no sensor noise.
    #[serde(default = "no_noise")]
    pub noise_floor_db: f64,
    /// Displacement applied to every source in this configuration, metres.
    /// Emulates a flow-dependent apparent source shift.
    #[serde(default)]
    pub source_offset_m: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceEntry {
    #[serde(default)]
    pub name: String,
    #[serde(flatten)]
    pub monopole: MonopoleSpec,
}

/// A synthetic measurement campaign as read from a TOML scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub duration_s: f64,
    pub array: ArraySpec,
    pub grid: FocusGrid,
    pub configs: Vec<ConfigEntry>,
    #[serde(default)]
    pub sources: Vec<SourceEntry>,
}

impl Scenario {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(s)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let geometry = self.array.geometry()?;
        if self.configs.is_empty() {
            return Err(Error::Config("scenario defines no configurations".into()));
        }
        if !(self.duration_s > 0.0) {
            return Err(Error::Config("duration_s must be > 0".into()));
        }
        for (c, entry) in self.configs.iter().enumerate() {
            entry.config.validate()?;
            if entry.noise_floor_db.is_nan() || entry.noise_floor_db == f64::INFINITY {
                return Err(Error::Config(format!("config {c}: noise_floor_db must be finite or -inf")));
            }
            for s in self.monopoles_for(c) {
                s.validate(entry.config.sample_rate_hz)?;
                if geometry.distances_to(s.position).contains(&0.0) {
                    return Err(Error::Config(format!("source at {:?} sits on a microphone", s.position)));
                }
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        self.array.geometry()
    }

    pub fn measurement_configs(&self) -> Vec<MeasurementConfig> {
        self.configs.iter().map(|c| c.config.clone()).collect()
    }

    /// Sources as emitted in configuration `config_id`: offset applied and
    /// seeds mixed with the scenario seed and configuration index.
    pub fn monopoles_for(&self, config_id: usize) -> Vec<MonopoleSpec> {
        let entry = &self.configs[config_id];
        self.sources
            .iter()
            .map(|s| {
                let mut m = s.monopole.clone();
                for k in 0..3 {
                    m.position[k] += entry.source_offset_m[k];
                }
                m.rng_seed = mix_seed(&[self.seed, s.monopole.rng_seed, config_id as u64]);
                m
            })
            .collect()
    }

    /// Configuration with the lowest Mach number (first on ties).
    pub fn reference_config(&self) -> usize {
        let mut best = 0;
        for (i, c) in self.configs.iter().enumerate() {
            if c.config.mach < self.configs[best].config.mach {
                best = i;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"
name = "two"
seed = 5
duration_s = 1.0

[array]
layout = "rectangular"
nx = 3
ny = 3
aperture_x_m = 0.4
aperture_y_m = 0.4
center = [0.0, 0.0, 0.0]

[grid]
origin = [-0.1, -0.1]
spacing = 0.005
n1 = 41
n2 = 41
plane_offset_m = 0.65

[[configs]]
mach = 0.1
sample_rate_hz = 32768
block_size = 256
reference_length_m = 0.1
noise_floor_db = -60

[[configs]]
mach = 0
sample_rate_hz = 32768
block_size = 256
reference_length_m = 0.1
source_offset_m = [0.01, 0.0, 0.0]

[[sources]]
name = "a"
position = [0.0, 0.0, 0.65]
band_low_hz = 500
band_high_hz = 4000
rolloff_low_db_per_oct = 24
rolloff_high_db_per_oct = 24
level_db = 0
rng_seed = 1
"#;

    #[test]
    fn parses_and_applies_offsets() {
        let sc = Scenario::from_toml_str(TEXT).unwrap();
        assert_eq!(sc.configs.len(), 2);
        assert_eq!(sc.configs[0].noise_floor_db, -60.0);
        assert_eq!(sc.configs[1].noise_floor_db, f64::NEG_INFINITY);
        assert_eq!(sc.configs[1].config.overlap_fraction, 0.5);
        assert_eq!(sc.geometry().unwrap().len(), 9);
        let m0 = sc.monopoles_for(0);
        let m1 = sc.monopoles_for(1);
        assert_eq!(m0[0].position, [0.0, 0.0, 0.65]);
        assert!((m1[0].position[0] - 0.01).abs() < 1e-15);
        assert_ne!(m0[0].rng_seed, m1[0].rng_seed);
        assert_eq!(sc.reference_config(), 1);
    }

    #[test]
    fn rejects_band_above_nyquist() {
        let bad = TEXT.replace("band_high_hz = 4000", "band_high_hz = 20000");
        assert!(matches!(Scenario::from_toml_str(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_malformed_toml() {
        assert!(Scenario::from_toml_str("duration_s = ").unwrap_err().is_config());
    }
}
