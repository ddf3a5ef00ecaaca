//! Source spectra, ground truth and evaluation metrics.

mod report;
mod spectrum;
mod truth;

pub use report::{
    angular_position_error, cumulative_snr_histogram, evaluate, failed_reconstruction_snr_histogram, match_sources,
    BinEvaluation, EvaluationReport, SourceEvaluation, EVALUATION_CSV_HEADER,
};
pub use spectrum::{integrate_spectrum, scaled_spectrum_view, spectrum_error, ScaledCurve, SpectrumError};
pub use truth::{ground_truth_psd, snr_per_source, GroundTruth, TrueSource};
