use num_complex::Complex64;
use rustfft::FftPlanner;

use super::csm::CrossSpectralMatrix;
use crate::error::{Error, Result};
use crate::model::MeasurementConfig;
use crate::par;

/// Periodic Hann window of length `n`.
pub fn hann_periodic(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

/// Welch estimate of the one-sided cross-spectral density matrix, Pa²/Hz.
///
/// Segments of `block_size` samples are Hann-windowed with the configured
/// overlap. Only the analysis bins (DC and Nyquist excluded) are kept. The
/// geometry hash of the result is left at 0.
pub fn welch_csm(signals: &[Vec<f64>], config: &MeasurementConfig) -> Result<CrossSpectralMatrix> {
    config.validate()?;
    let n_mics = signals.len();
    if n_mics == 0 {
        return Err(Error::Estimation("no signals".into()));
    }
    let len = signals[0].len();
    if signals.iter().any(|s| s.len() != len) {
        return Err(Error::Shape("signals differ in length".into()));
    }
    let block = config.block_size;
    if len < 2 * block {
        return Err(Error::Estimation(format!(
            "signal of {len} samples is shorter than two blocks of {block}"
        )));
    }
    let step = ((block as f64) * (1.0 - config.overlap_fraction)).round().max(1.0) as usize;
    let n_seg = (len - block) / step + 1;
    let window = hann_periodic(block);
    let fs = config.sample_rate_hz;
    let scale = 2.0 / (fs * window.iter().map(|w| w * w).sum::<f64>()) / n_seg as f64;
    let n_bins = block / 2 - 1;

    let fft = FftPlanner::<f64>::new().plan_fft_forward(block);
    // spectra[m][seg * n_bins + (k - 1)]
    let spectra: Vec<Vec<Complex64>> = par::map_slice(signals, |x| {
        let mut out = Vec::with_capacity(n_seg * n_bins);
        let mut buf = vec![Complex64::new(0.0, 0.0); block];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for s in 0..n_seg {
            let seg = &x[s * step..s * step + block];
            for ((b, v), w) in buf.iter_mut().zip(seg).zip(&window) {
                *b = Complex64::new(v * w, 0.0);
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            out.extend_from_slice(&buf[1..=n_bins]);
        }
        out
    });

    let mats = par::map_range(n_bins, |k| {
        let mut c = vec![Complex64::new(0.0, 0.0); n_mics * n_mics];
        let mut col = vec![Complex64::new(0.0, 0.0); n_mics];
        for s in 0..n_seg {
            for (m, sp) in spectra.iter().enumerate() {
                col[m] = sp[s * n_bins + k];
            }
            for m in 0..n_mics {
                let xm = col[m];
                for n in m..n_mics {
                    c[m * n_mics + n] += xm * col[n].conj();
                }
            }
        }
        for m in 0..n_mics {
            c[m * n_mics + m] = Complex64::new(c[m * n_mics + m].re * scale, 0.0);
            for n in m + 1..n_mics {
                let v = c[m * n_mics + n] * scale;
                c[m * n_mics + n] = v;
                c[n * n_mics + m] = v.conj();
            }
        }
        c
    });
    CrossSpectralMatrix::new(config.analysis_freqs(), n_mics, mats.concat(), n_seg, 0)
}
