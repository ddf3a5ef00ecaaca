use serde::{Deserialize, Serialize};

use super::SihcParams;
use crate::error::{Error, Result};
use crate::model::{helmholtz, strouhal, SourcePartSet};

/// Normalised frequency used as the third feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyAxis {
    Strouhal,
    Helmholtz,
}

/// Min-max ranges of the four raw feature axes
/// (x₁ m, x₂ m, normalised frequency, scaled PSD dB).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanges {
    /// `None` for global normalisation.
    pub config_id: Option<usize>,
    pub min: [f64; 4],
    pub max: [f64; 4],
    /// Axes with `max == min`, mapped to 0.5.
    pub degenerate: [bool; 4],
}

/// Normalised features in part order, plus the ranges used.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub points: Vec<[f64; 4]>,
    pub ranges: Vec<FeatureRanges>,
}

/// `PSD − 10·n·log₁₀(M)`.
pub fn mach_scale(psd_db: f64, mach: f64, n: f64) -> Result<f64> {
    if !(mach > 0.0) {
        return Err(Error::MachScaling(mach));
    }
    Ok(psd_db - 10.0 * n * mach.log10())
}

fn normalize(raw: &[[f64; 4]], idx: &[usize], out: &mut [[f64; 4]], config_id: Option<usize>) -> FeatureRanges {
    let mut min = [f64::INFINITY; 4];
    let mut max = [f64::NEG_INFINITY; 4];
    for &i in idx {
        for a in 0..4 {
            min[a] = min[a].min(raw[i][a]);
            max[a] = max[a].max(raw[i][a]);
        }
    }
    let degenerate = std::array::from_fn(|a| !(max[a] > min[a]));
    for &i in idx {
        for a in 0..4 {
            out[i][a] = if degenerate[a] {
                0.5
            } else {
                ((raw[i][a] - min[a]) / (max[a] - min[a])).clamp(0.0, 1.0)
            };
        }
    }
    FeatureRanges {
        config_id,
        min,
        max,
        degenerate,
    }
}

/// Normalised `(x₁, x₂, frequency, level)` features of every part.
pub fn build_features(parts: &SourcePartSet, params: &SihcParams) -> Result<FeatureSet> {
    if parts.is_empty() {
        return Err(Error::Input("cannot build features of an empty part set".into()));
    }
    let configs = parts.configs();
    let raw = parts
        .parts()
        .iter()
        .map(|p| {
            let cfg = &configs[p.config_id];
            let f = match params.frequency_axis {
                FrequencyAxis::Strouhal => strouhal(p.freq_hz, cfg)?,
                FrequencyAxis::Helmholtz => helmholtz(p.freq_hz, cfg),
            };
            let level = if params.mach_scaling {
                mach_scale(p.psd_db, cfg.mach, params.mach_exponent)?
            } else {
                p.psd_db
            };
            Ok([p.x1, p.x2, f, level])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut points = vec![[0.0; 4]; raw.len()];
    let ranges = if params.per_config_normalization {
        (0..configs.len())
            .filter_map(|c| {
                let idx: Vec<usize> = (0..raw.len()).filter(|&i| parts.parts()[i].config_id == c).collect();
                (!idx.is_empty()).then(|| normalize(&raw, &idx, &mut points, Some(c)))
            })
            .collect()
    } else {
        let idx: Vec<usize> = (0..raw.len()).collect();
        vec![normalize(&raw, &idx, &mut points, None)]
    };
    Ok(FeatureSet { points, ranges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FocusGrid, MeasurementConfig, SourcePart};

    fn cfg(mach: f64) -> MeasurementConfig {
        MeasurementConfig {
            mach,
            alpha_deg: 0.0,
            sample_rate_hz: 32768.0,
            block_size: 256,
            overlap_fraction: 0.5,
            speed_of_sound_mps: 343.0,
            reference_length_m: 0.1,
            label: String::new(),
        }
    }

    fn set(parts: Vec<SourcePart>, machs: &[f64]) -> SourcePartSet {
        let g = FocusGrid::new([0.0, 0.0], 0.005, 10, 10, 0.65).unwrap();
        SourcePartSet::new(parts, g, machs.iter().map(|&m| cfg(m)).collect()).unwrap()
    }

    fn part(x1: f64, f: f64, db: f64, c: usize, mach: f64) -> SourcePart {
        SourcePart {
            x1,
            x2: 0.0,
            freq_hz: f,
            alpha_deg: 0.0,
            mach,
            psd_db: db,
            config_id: c,
        }
    }

    #[test]
    fn mach_scaling_examples() {
        assert_eq!(mach_scale(60.0, 1.0, 3.0).unwrap(), 60.0);
        assert!((mach_scale(60.0, 0.2, 5.5).unwrap() - 98.45).abs() < 0.01);
        assert!(matches!(mach_scale(60.0, 0.0, 5.5), Err(Error::MachScaling(_))));
    }

    #[test]
    fn single_part_is_degenerate() {
        let s = set(vec![part(0.0, 1000.0, 50.0, 0, 0.1)], &[0.1]);
        let f = build_features(&s, &SihcParams::default()).unwrap();
        assert_eq!(f.points, vec![[0.5; 4]]);
        assert!(f.ranges[0].degenerate.iter().all(|&d| d));
    }

    #[test]
    fn psd_endpoints() {
        let s = set(vec![part(0.0, 1000.0, 50.0, 0, 0.1), part(0.0, 1000.0, 70.0, 0, 0.1)], &[0.1]);
        let f = build_features(&s, &SihcParams::default()).unwrap();
        let mut psd: Vec<f64> = f.points.iter().map(|p| p[3]).collect();
        psd.sort_by(f64::total_cmp);
        assert_eq!(psd, vec![0.0, 1.0]);
    }

    #[test]
    fn mach_scaled_levels_collapse() {
        let n = 5.5;
        let lvl = |m: f64| 40.0 + 10.0 * n * f64::log10(m);
        let parts = vec![
            part(0.0, 1000.0, lvl(0.1), 0, 0.1),
            part(0.0, 2000.0, lvl(0.2), 1, 0.2),
            part(0.045, 4000.0, 10.0, 0, 0.1),
        ];
        let f = build_features(&set(parts, &[0.1, 0.2]), &SihcParams::default()).unwrap();
        let (a, b): (Vec<&[f64; 4]>, Vec<&[f64; 4]>) = f.points.iter().partition(|p| p[0] < 0.5);
        assert_eq!(b.len(), 1);
        assert!((a[0][3] - a[1][3]).abs() < 0.05);
        assert!((a[0][2] - a[1][2]).abs() < 1e-12);
    }

    #[test]
    fn strouhal_needs_flow() {
        let s = set(vec![part(0.0, 1000.0, 50.0, 0, 0.0)], &[0.0]);
        assert!(matches!(build_features(&s, &SihcParams::default()), Err(Error::UndefinedStrouhal)));
        let p = SihcParams {
            frequency_axis: FrequencyAxis::Helmholtz,
            mach_scaling: false,
            ..Default::default()
        };
        assert!(build_features(&s, &p).is_ok());
    }

    #[test]
    fn per_config_ranges() {
        let parts = vec![
            part(0.0, 1000.0, 50.0, 0, 0.1),
            part(0.01, 1000.0, 60.0, 0, 0.1),
            part(0.02, 1000.0, 30.0, 1, 0.2),
        ];
        let p = SihcParams {
            per_config_normalization: true,
            ..Default::default()
        };
        let f = build_features(&set(parts, &[0.1, 0.2]), &p).unwrap();
        assert_eq!(f.ranges.len(), 2);
        assert_eq!(f.ranges[1].config_id, Some(1));
    }
}
