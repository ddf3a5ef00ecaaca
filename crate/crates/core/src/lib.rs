//! Automatic identification of acoustic sources in sparse (deconvolved)
//! beamforming maps, plus the synthetic measurement chain used to validate it.
//!
//! The crate is organised along the processing chain:
//!
//! * [`model`]: shared domain types, grid geometry and interchange formats.
//! * [`synth`]: synthetic monopole measurements and Welch cross-spectral matrices.
//! * [`beamforming`]: conventional beamforming with diagonal removal and CLEAN-SC.
//! * [`sind`]: greedy fitting of spatial normal distributions to source-part histograms.
//! * [`sihc`]: HDBSCAN clustering of source-parts in position/frequency/level space.
//! * [`metrics`]: spectrum integration, ground truth and error metrics.
//! * [`pipeline`]: end-to-end runs over a scenario file.
//!
//! Heavy loops (per frequency bin, per microphone, per point block) go through
//! [`par`], which uses rayon when the default `parallel` feature is enabled.

// `!(x > 0.0)` is used on purpose so NaN is rejected as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod beamforming;
pub mod error;
pub mod metrics;
pub mod model;
pub mod optimize;
pub mod par;
pub mod pipeline;
pub mod sihc;
pub mod sind;
pub mod synth;

pub use error::{Error, Result};
