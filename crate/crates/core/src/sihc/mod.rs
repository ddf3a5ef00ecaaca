//! Source identification by hierarchical density-based clustering.
//!
//! Each source-part becomes a point in a normalised 4D feature space
//! (position, normalised frequency, Mach-scaled level). HDBSCAN groups dense
//! regions into clusters; members whose membership probability falls below
//! the `exp(-k²/2)` cutoff are treated as noise.

mod assign;
mod features;
mod hdbscan;
mod kdtree;

use serde::{Deserialize, Serialize};

pub use assign::assign_parts_sihc;
pub use features::{build_features, mach_scale, FeatureRanges, FeatureSet, FrequencyAxis};
pub use hdbscan::{hdbscan_cluster, ClusterSelection, Clustering, CondensedRow, CondensedTree};
pub use kdtree::KdTree;

use crate::error::{Error, Result};
use crate::model::{Assignment, IdentificationResult, Method, MethodParams, SourcePartSet};

/// Clustering thresholds and feature options of the SIHC method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SihcParams {
    /// Minimum cluster size.
    pub t: usize,
    /// Neighbour count for core distances; `None` ties it to `t`.
    pub min_samples: Option<usize>,
    /// Membership cutoff `k`: probabilities below `exp(-k²/2)` become noise.
    pub t_sigma_level: f64,
    /// Exponent `n` of the Mach scaling `PSD − 10·n·log₁₀M`.
    pub mach_exponent: f64,
    pub mach_scaling: bool,
    pub frequency_axis: FrequencyAxis,
    /// Min-max normalise each configuration separately instead of globally.
    pub per_config_normalization: bool,
    pub cluster_selection: ClusterSelection,
    /// Normalisation ranges of the last run; filled in on output, ignored on input.
    pub normalization_ranges: Vec<FeatureRanges>,
}

impl Default for SihcParams {
    fn default() -> Self {
        Self {
            t: 100,
            min_samples: None,
            t_sigma_level: 3.0,
            mach_exponent: 5.5,
            mach_scaling: true,
            frequency_axis: FrequencyAxis::Strouhal,
            per_config_normalization: false,
            cluster_selection: ClusterSelection::ExcessOfMass,
            normalization_ranges: Vec::new(),
        }
    }
}

impl SihcParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.t < 2 {
            return bad(format!("t must be >= 2, got {}", self.t));
        }
        if self.min_samples == Some(0) {
            return bad("min_samples must be >= 1".into());
        }
        if !(self.mach_exponent > 0.0) {
            return bad(format!("mach_exponent must be > 0, got {}", self.mach_exponent));
        }
        if !(1.0..=5.0).contains(&self.t_sigma_level) {
            return bad(format!("t_sigma_level must be in [1, 5], got {}", self.t_sigma_level));
        }
        Ok(())
    }

    pub fn min_samples(&self) -> usize {
        self.min_samples.unwrap_or(self.t)
    }

    pub fn confidence_cutoff(&self) -> f64 {
        (-self.t_sigma_level * self.t_sigma_level / 2.0).exp()
    }
}

/// Everything produced by one SIHC run over a part set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SihcRun {
    pub result: IdentificationResult,
    pub clustering: Clustering,
}

/// Full SIHC pass: features, clustering and assignment.
pub fn run_sihc(parts: &SourcePartSet, params: &SihcParams) -> Result<SihcRun> {
    params.validate()?;
    if parts.len() < params.t {
        let mut used = params.clone();
        used.normalization_ranges.clear();
        return Ok(SihcRun {
            result: IdentificationResult {
                method_tag: Method::Sihc,
                sources: Vec::new(),
                assignment: vec![Assignment::Noise; parts.len()],
                params_used: MethodParams::Sihc(used),
            },
            clustering: Clustering::all_noise(parts.len()),
        });
    }
    let features = build_features(parts, params)?;
    let clustering = hdbscan_cluster(&features.points, params.t, params.min_samples(), params.cluster_selection);
    let mut used = params.clone();
    used.normalization_ranges = features.ranges.clone();
    let result = assign_parts_sihc(parts, &clustering, &used);
    Ok(SihcRun { result, clustering })
}
