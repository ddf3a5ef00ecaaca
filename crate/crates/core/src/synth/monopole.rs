use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::filter::BandFilter;
use super::mix_seed;
use crate::error::{Error, Result};
use crate::model::{db_to_power, ArrayGeometry, MeasurementConfig};
use crate::par;

/// Number of taps of the windowed-sinc fractional-delay interpolator.
pub const FRACTIONAL_DELAY_TAPS: usize = 31;
const HALF_TAPS: isize = (FRACTIONAL_DELAY_TAPS / 2) as isize;
const KAISER_BETA: f64 = 5.65;
const FILTER_WARMUP: usize = 4096;

/// A band-limited white-noise monopole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonopoleSpec {
    /// Source position in the array frame, metres.
    pub position: [f64; 3],
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    /// Roll-off below `band_low_hz`, dB per octave.
    pub rolloff_low_db_per_oct: f64,
    /// Roll-off above `band_high_hz`, dB per octave.
    pub rolloff_high_db_per_oct: f64,
    /// Pass-band emission PSD at 1 m, dB re 1 Pa²/Hz.
    pub level_db: f64,
    pub rng_seed: u64,
}

impl MonopoleSpec {
    pub fn validate(&self, sample_rate: f64) -> Result<()> {
        if !(self.band_low_hz > 0.0 && self.band_low_hz < self.band_high_hz) {
            return Err(Error::Config(format!(
                "band edges must satisfy 0 < low < high, got {} / {}",
                self.band_low_hz, self.band_high_hz
            )));
        }
        if !(self.band_high_hz < sample_rate / 2.0) {
            return Err(Error::Config(format!(
                "band edge {} Hz is above Nyquist ({} Hz)",
                self.band_high_hz,
                sample_rate / 2.0
            )));
        }
        if !(self.rolloff_low_db_per_oct > 0.0 && self.rolloff_high_db_per_oct > 0.0) {
            return Err(Error::Config("roll-offs must be positive".into()));
        }
        if !self.level_db.is_finite() || !self.position.iter().all(|v| v.is_finite()) {
            return Err(Error::Config("source level and position must be finite".into()));
        }
        Ok(())
    }

    pub fn filter(&self, sample_rate: f64) -> BandFilter {
        BandFilter::new(
            sample_rate,
            self.band_low_hz,
            self.rolloff_low_db_per_oct,
            self.band_high_hz,
            self.rolloff_high_db_per_oct,
        )
    }

    /// Emission PSD at 1 m including the band filter, dB.
    pub fn emission_db(&self, freq_hz: f64, sample_rate: f64) -> f64 {
        self.level_db + self.filter(sample_rate).gain_db(freq_hz, sample_rate)
    }
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Kaiser-windowed sinc taps for a delay of `frac` samples (`0 <= frac < 1`);
/// tap `i` multiplies input sample `t - n0 - (i - 15)`.
pub fn fractional_delay_taps(frac: f64) -> [f64; FRACTIONAL_DELAY_TAPS] {
    let half_len = (HALF_TAPS + 1) as f64;
    let norm = bessel_i0(KAISER_BETA);
    let mut taps = [0.0; FRACTIONAL_DELAY_TAPS];
    for (i, t) in taps.iter_mut().enumerate() {
        let x = (i as isize - HALF_TAPS) as f64 - frac;
        let sinc = if x.abs() < 1e-12 {
            1.0
        } else {
            (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x)
        };
        let r = (x / half_len).clamp(-1.0, 1.0);
        *t = sinc * bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / norm;
    }
    taps
}

fn white_noise(seed: u64, len: usize, std_dev: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * std_dev
        })
        .collect()
}

/// Microphone pressure time series for a set of uncorrelated monopoles plus
/// independent white sensor noise at `noise_floor_db` (PSD, dB re 1 Pa²/Hz;
/// `-inf` disables it). Output is one `Vec` per microphone.
pub fn synthesize_time_signals(
    specs: &[MonopoleSpec],
    geometry: &ArrayGeometry,
    config: &MeasurementConfig,
    duration_s: f64,
    noise_floor_db: f64,
    noise_seed: u64,
) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    let fs = config.sample_rate_hz;
    let n = (duration_s * fs).round() as usize;
    if !(n >= 100 * config.block_size) {
        return Err(Error::Config(format!(
            "duration {duration_s} s gives {n} samples; need at least {} for Welch averaging",
            100 * config.block_size
        )));
    }
    for s in specs {
        s.validate(fs)?;
    }
    let c = config.speed_of_sound_mps;

    // per source and mic: integer delay, fractional taps, 1/r gain
    let delays: Vec<Vec<(usize, [f64; FRACTIONAL_DELAY_TAPS], f64)>> = specs
        .iter()
        .map(|s| {
            geometry
                .distances_to(s.position)
                .into_iter()
                .map(|r| {
                    let d = r / c * fs;
                    let n0 = d.floor();
                    (n0 as usize, fractional_delay_taps(d - n0), 1.0 / r)
                })
                .collect()
        })
        .collect();
    for (s, ds) in specs.iter().zip(&delays) {
        if ds.iter().any(|&(_, _, g)| !g.is_finite()) {
            return Err(Error::Singularity(format!(
                "source at {:?} coincides with a microphone",
                s.position
            )));
        }
    }
    let max_delay = delays.iter().flatten().map(|d| d.0).max().unwrap_or(0);
    let pre = FILTER_WARMUP + max_delay + HALF_TAPS as usize + 1;
    let buf_len = pre + n + HALF_TAPS as usize + 1;

    let sources: Vec<Vec<f64>> = par::map_slice(specs, |s| {
        let std_dev = (db_to_power(s.level_db) * fs / 2.0).sqrt();
        let mut x = white_noise(s.rng_seed, buf_len, std_dev);
        s.filter(fs).apply(&mut x);
        x
    });

    let sensor_std = if noise_floor_db.is_finite() {
        (db_to_power(noise_floor_db) * fs / 2.0).sqrt()
    } else {
        0.0
    };

    let signals = par::map_range(geometry.len(), |m| {
        let mut out = if sensor_std > 0.0 {
            white_noise(mix_seed(&[noise_seed, m as u64]), n, sensor_std)
        } else {
            vec![0.0; n]
        };
        for (src, ds) in sources.iter().zip(&delays) {
            let (n0, taps, gain) = ds[m];
            for (t, o) in out.iter_mut().enumerate() {
                // y[t] = sum_k x[t - n0 - k] h(k - frac), k in -15..=15
                let base = pre + t - n0;
                let mut acc = 0.0;
                for (i, h) in taps.iter().enumerate() {
                    acc += src[base + HALF_TAPS as usize - i] * h;
                }
                *o += gain * acc;
            }
        }
        out
    });
    Ok(signals)
}
