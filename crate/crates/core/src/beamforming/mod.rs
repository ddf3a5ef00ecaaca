//! Conventional frequency-domain beamforming and CLEAN-SC deconvolution.
//!
//! Steering uses the free-field monopole transfer function
//! `g_m = exp(-i 2π f r_m / c) / r_m` with weights `w = g / ‖g‖²`, so a point
//! source at a focus point is mapped to its emitted power at 1 m.

mod clean_sc;
mod dense;
mod extract;
mod steering;

use serde::{Deserialize, Serialize};

pub use clean_sc::{clean_sc, clean_sc_frequency, CleanScBin, SparseMap};
pub use dense::{conventional_map, read_dense_maps, write_dense_maps, DenseMap, DENSE_MAGIC};
pub use extract::extract_source_parts;
pub use steering::{steering_vectors, SteeringFormulation, SteeringSet};

use crate::error::{Error, Result};

/// Beamforming and deconvolution settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamformingParams {
    pub diagonal_removal: bool,
    pub loop_gain: f64,
    pub max_iter: usize,
    /// Stop once the dirty-map maximum is this many dB below its initial value.
    pub stop_db: f64,
    /// Parts more than this many dB below the per-frequency maximum are dropped.
    pub extraction_floor_db: f64,
}

impl Default for BeamformingParams {
    fn default() -> Self {
        Self {
            diagonal_removal: true,
            loop_gain: 0.9,
            max_iter: 100,
            stop_db: 20.0,
            extraction_floor_db: 40.0,
        }
    }
}

impl BeamformingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.loop_gain > 0.0 && self.loop_gain <= 1.0) {
            return Err(Error::Config(format!("loop_gain must be in (0, 1], got {}", self.loop_gain)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be >= 1".into()));
        }
        if !(self.stop_db > 0.0) || !(self.extraction_floor_db > 0.0) {
            return Err(Error::Config("stop_db and extraction_floor_db must be > 0".into()));
        }
        Ok(())
    }
}

/// Largest tolerated relative Hermitian defect of an input CSM.
const HERMITIAN_TOL: f64 = 1e-6;

fn check_inputs(csm: &crate::synth::CrossSpectralMatrix, steering: &SteeringSet) -> Result<()> {
    if csm.n_mics() != steering.n_mics() {
        return Err(Error::Shape(format!(
            "CSM has {} microphones, steering has {}",
            csm.n_mics(),
            steering.n_mics()
        )));
    }
    if csm.freqs_hz() != steering.freqs_hz() {
        return Err(Error::Shape("CSM and steering frequency axes differ".into()));
    }
    let err = csm.max_hermitian_error();
    if err > HERMITIAN_TOL {
        return Err(Error::Input(format!("CSM is not Hermitian (relative defect {err:e})")));
    }
    Ok(())
}
