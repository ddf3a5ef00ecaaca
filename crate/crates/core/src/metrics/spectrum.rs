use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    db_to_power, helmholtz, power_to_db, strouhal, IdentificationResult, MeasurementConfig, SourcePartSet, Spectrum,
};
use crate::sihc::{mach_scale, FrequencyAxis};

fn bin_of(freqs: &[f64], f: f64) -> Option<usize> {
    let k = freqs.partition_point(|&x| x < f * (1.0 - 1e-12));
    (k < freqs.len() && (freqs[k] - f).abs() <= 1e-9 * f.abs().max(1.0)).then_some(k)
}

/// Power sum of the parts assigned to `source` in configuration `config_id`,
/// per bin of `freqs_hz`. Bins without parts are ABSENT.
pub fn integrate_spectrum(
    parts: &SourcePartSet,
    result: &IdentificationResult,
    source: usize,
    config_id: usize,
    freqs_hz: &[f64],
) -> Result<Spectrum> {
    if result.assignment.len() != parts.len() {
        return Err(Error::Shape("assignment does not match the part set".into()));
    }
    let mut acc = vec![0.0; freqs_hz.len()];
    let mut hit = vec![false; freqs_hz.len()];
    for (p, a) in parts.parts().iter().zip(&result.assignment) {
        if p.config_id != config_id || a.source() != Some(source) {
            continue;
        }
        if let Some(k) = bin_of(freqs_hz, p.freq_hz) {
            acc[k] += db_to_power(p.psd_db);
            hit[k] = true;
        }
    }
    let psd = acc.into_iter().zip(hit).map(|(v, h)| h.then(|| power_to_db(v))).collect();
    Spectrum::new(freqs_hz.to_vec(), psd, config_id)
}

/// `|ε|` statistics of one reconstructed spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumError {
    /// Mean of `|PSD_method − PSD_true|` over reconstructed bins; `None` if there are none.
    pub mean_abs_db: Option<f64>,
    pub std_abs_db: Option<f64>,
    /// Reconstructed bins over considered bins.
    pub reconstructed_fraction: f64,
    pub considered_bins: usize,
}

/// Compares a spectrum against true levels over the bins where `mask` is true
/// (all bins if `None`). Bins whose truth is not finite count towards `f_r`
/// but not towards `|ε|`.
pub fn spectrum_error(reconstructed: &Spectrum, truth_db: &[f64], mask: Option<&[bool]>) -> Result<SpectrumError> {
    if truth_db.len() != reconstructed.psd_db.len() || mask.is_some_and(|m| m.len() != truth_db.len()) {
        return Err(Error::Shape("spectrum, truth and mask lengths differ".into()));
    }
    let mut errs = Vec::new();
    let mut considered = 0;
    let mut n_rec = 0;
    for (k, (r, t)) in reconstructed.psd_db.iter().zip(truth_db).enumerate() {
        if mask.is_some_and(|m| !m[k]) {
            continue;
        }
        considered += 1;
        if let Some(r) = r {
            n_rec += 1;
            if t.is_finite() {
                errs.push((r - t).abs());
            }
        }
    }
    Ok(stats(&errs, n_rec, considered))
}

pub(crate) fn stats(errs: &[f64], reconstructed: usize, considered: usize) -> SpectrumError {
    let n = errs.len();
    let (mean, std) = if n == 0 {
        (None, None)
    } else {
        let m = errs.iter().sum::<f64>() / n as f64;
        let v = errs.iter().map(|e| (e - m) * (e - m)).sum::<f64>() / n as f64;
        (Some(m), Some(v.sqrt()))
    };
    SpectrumError {
        mean_abs_db: mean,
        std_abs_db: std,
        reconstructed_fraction: if considered == 0 { 0.0 } else { reconstructed as f64 / considered as f64 },
        considered_bins: considered,
    }
}

/// Spectrum on a Strouhal or Helmholtz abscissa with Mach-scaled levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledCurve {
    pub axis: FrequencyAxis,
    pub x: Vec<f64>,
    pub y_db: Vec<Option<f64>>,
}

pub fn scaled_spectrum_view(
    spectrum: &Spectrum,
    config: &MeasurementConfig,
    n: f64,
    axis: FrequencyAxis,
) -> Result<ScaledCurve> {
    let x = spectrum
        .freqs_hz
        .iter()
        .map(|&f| match axis {
            FrequencyAxis::Strouhal => strouhal(f, config),
            FrequencyAxis::Helmholtz => Ok(helmholtz(f, config)),
        })
        .collect::<Result<Vec<_>>>()?;
    let y_db = spectrum
        .psd_db
        .iter()
        .map(|v| v.map(|v| mach_scale(v, config.mach, n)).transpose())
        .collect::<Result<Vec<_>>>()?;
    Ok(ScaledCurve { axis, x, y_db })
}
