use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{db_to_power, power_to_db, ArrayGeometry};
use crate::synth::CrossSpectralMatrix;

/// Microphone-averaged source level back-projected to 1 m:
/// `⟨10·log₁₀ C_mm + 20·log₁₀ r_m⟩_m`, averaged in dB. Returns per-bin mean
/// and standard deviation over microphones; bins with no positive
/// auto-spectrum are `-inf`.
pub fn ground_truth_psd(
    csm: &CrossSpectralMatrix,
    geometry: &ArrayGeometry,
    source_pos: [f64; 3],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if csm.n_mics() != geometry.len() {
        return Err(Error::Shape("CSM and geometry disagree on microphone count".into()));
    }
    let r = geometry.distances_to(source_pos);
    if r.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::Singularity(format!("source at {source_pos:?} coincides with a microphone")));
    }
    let mut mean = Vec::with_capacity(csm.n_freqs());
    let mut std = Vec::with_capacity(csm.n_freqs());
    for f in 0..csm.n_freqs() {
        let v: Vec<f64> = (0..csm.n_mics())
            .filter_map(|m| {
                let c = csm.auto_spectrum(f, m);
                (c > 0.0).then(|| power_to_db(c) + 20.0 * r[m].log10())
            })
            .collect();
        if v.is_empty() {
            mean.push(f64::NEG_INFINITY);
            std.push(0.0);
            continue;
        }
        let m = v.iter().sum::<f64>() / v.len() as f64;
        mean.push(m);
        std.push((v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt());
    }
    Ok((mean, std))
}

/// `SNR_i = PSD_i − 10·log₁₀ Σ_j 10^(PSD_j/10)` per source and bin,
/// evaluated relative to `PSD_i` so a lone source gives exactly 0 dB.
pub fn snr_per_source(psd_db: &[Vec<f64>]) -> Vec<Vec<f64>> {
    psd_db
        .iter()
        .map(|s| {
            s.iter()
                .enumerate()
                .map(|(k, &p)| {
                    if p == f64::NEG_INFINITY {
                        return p;
                    }
                    let rel: f64 = psd_db.iter().map(|o| db_to_power(o[k] - p)).sum();
                    -power_to_db(rel)
                })
                .collect()
        })
        .collect()
}

/// One true source of a synthetic scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueSource {
    pub name: String,
    /// Position per configuration, metres.
    pub positions: Vec<[f64; 3]>,
    /// Silent bins (`-inf`) are stored as `null`.
    #[serde(with = "db_vec")]
    pub psd_db: Vec<f64>,
    #[serde(with = "db_vec")]
    pub psd_std_db: Vec<f64>,
}

mod db_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let o: Vec<Option<f64>> = v.iter().map(|x| x.is_finite().then_some(*x)).collect();
        o.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let o = Vec::<Option<f64>>::deserialize(d)?;
        Ok(o.into_iter().map(|x| x.unwrap_or(f64::NEG_INFINITY)).collect())
    }
}

/// True positions and emission levels of every source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub freqs_hz: Vec<f64>,
    pub array_center: [f64; 3],
    pub sources: Vec<TrueSource>,
}

impl GroundTruth {
    /// SNR of every source per bin.
    pub fn snr_db(&self) -> Vec<Vec<f64>> {
        let psd: Vec<Vec<f64>> = self.sources.iter().map(|s| s.psd_db.clone()).collect();
        snr_per_source(&psd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn silent_bins_round_trip_through_json() {
        let t = TrueSource {
            name: "S1".into(),
            positions: vec![[0.0; 3]],
            psd_db: vec![f64::NEG_INFINITY, 3.0],
            psd_std_db: vec![0.0, 0.5],
        };
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.contains("[null,3.0]"));
        assert_eq!(serde_json::from_str::<TrueSource>(&s).unwrap(), t);
    }

    #[test]
    fn snr_identities() {
        let single = snr_per_source(&[vec![40.0, 55.0]]);
        assert_eq!(single, vec![vec![0.0, 0.0]]);
        let two = snr_per_source(&[vec![40.0], vec![40.0]]);
        assert!((two[0][0] + 3.0103).abs() < 1e-4);
        let weak = snr_per_source(&[vec![60.0], vec![40.0]]);
        assert!((weak[1][0] + 20.0432).abs() < 1e-3);
    }

    #[test]
    fn unit_distance_leaves_level() {
        let g = ArrayGeometry::new(vec![[0.0, 0.0, 0.0], [5.0, 0.0, 0.0]]).unwrap();
        let d = vec![
            Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0),
        ];
        let csm = CrossSpectralMatrix::new(vec![100.0], 2, d, 1, 0).unwrap();
        let (m, s) = ground_truth_psd(&csm, &g, [0.0, 0.0, 1.0]).unwrap();
        assert!((m[0] - power_to_db(2.0)).abs() < 1e-12);
        assert_eq!(s[0], 0.0);
    }

    #[test]
    fn back_projection_equalises_distances() {
        let g = ArrayGeometry::new(vec![[0.0, 0.0, 0.0], [0.0, 0.0, 9.0]]).unwrap();
        let p = 3.0;
        let d = vec![
            Complex64::new(p, 0.0), Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0), Complex64::new(p / 100.0, 0.0),
        ];
        let csm = CrossSpectralMatrix::new(vec![100.0], 2, d, 1, 0).unwrap();
        let (m, s) = ground_truth_psd(&csm, &g, [0.0, 0.0, -1.0]).unwrap();
        assert!((m[0] - power_to_db(p)).abs() < 1e-9);
        assert!(s[0] < 1e-9);
        assert!(matches!(ground_truth_psd(&csm, &g, [0.0; 3]), Err(Error::Singularity(_))));
    }
}
