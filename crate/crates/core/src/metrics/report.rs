use std::path::Path;

use serde::{Deserialize, Serialize};

use super::spectrum::{integrate_spectrum, stats, SpectrumError};
use super::truth::GroundTruth;
use crate::error::{Error, Result};
use crate::model::{IdentificationResult, IdentifiedSource, Method, SourcePartSet, Spectrum};

/// Angle in degrees between the rays from `center` to `a` and to `b`.
pub fn angular_position_error(a: [f64; 3], b: [f64; 3], center: [f64; 3]) -> Result<f64> {
    let u = [a[0] - center[0], a[1] - center[1], a[2] - center[2]];
    let v = [b[0] - center[0], b[1] - center[1], b[2] - center[2]];
    let norm = |w: [f64; 3]| (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    if !(norm(u) > 0.0) || !(norm(v) > 0.0) {
        return Err(Error::Input("position coincides with the array centre".into()));
    }
    let cross = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    Ok(norm(cross).atan2(dot).to_degrees())
}

/// Cumulative fraction of `snr_db` values at or below each distinct value,
/// as `(snr, fraction)` steps. Empty input gives an empty histogram.
pub fn cumulative_snr_histogram(snr_db: &[f64]) -> Vec<(f64, f64)> {
    let mut v: Vec<f64> = snr_db.iter().copied().filter(|s| !s.is_nan()).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (k, s) in v.iter().enumerate() {
        let frac = (k + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *s => last.1 = frac,
            _ => out.push((*s, frac)),
        }
    }
    out
}

/// Cumulative SNR histogram over every ABSENT bin of the given reports.
pub fn failed_reconstruction_snr_histogram(reports: &[EvaluationReport]) -> Vec<(f64, f64)> {
    let snrs: Vec<f64> = reports
        .iter()
        .flat_map(|r| &r.rows)
        .flat_map(|row| &row.bins)
        .filter(|b| b.reconstructed_db.is_none())
        .map(|b| b.snr_db)
        .collect();
    cumulative_snr_histogram(&snrs)
}

/// Greedy one-to-one matching of true positions to identified sources by
/// ascending distance. Entry `i` is the identified source matched to truth `i`.
pub fn match_sources(truth: &[[f64; 2]], identified: &[IdentifiedSource]) -> Vec<Option<usize>> {
    let mut pairs = Vec::with_capacity(truth.len() * identified.len());
    for (i, t) in truth.iter().enumerate() {
        for (j, s) in identified.iter().enumerate() {
            let p = s.position();
            pairs.push(((p[0] - t[0]).hypot(p[1] - t[1]), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = vec![None; truth.len()];
    let mut used = vec![false; identified.len()];
    for (_, i, j) in pairs {
        if out[i].is_none() && !used[j] {
            out[i] = Some(j);
            used[j] = true;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinEvaluation {
    pub freq_hz: f64,
    pub snr_db: f64,
    pub truth_db: f64,
    /// `None` is an ABSENT bin.
    pub reconstructed_db: Option<f64>,
    pub error_db: Option<f64>,
}

/// One true source in one flow configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceEvaluation {
    pub source_name: String,
    pub true_index: usize,
    pub identified_index: Option<usize>,
    pub config_id: usize,
    pub mach: f64,
    pub position_error_deg: Option<f64>,
    pub mean_abs_spectrum_error_db: Option<f64>,
    pub std_abs_spectrum_error_db: Option<f64>,
    pub reconstructed_fraction: f64,
    pub bins: Vec<BinEvaluation>,
}

impl SourceEvaluation {
    /// `|ε|` and `f_r` restricted to bins with `snr_db >= min_snr_db`.
    pub fn error_above_snr(&self, min_snr_db: f64) -> SpectrumError {
        let (errs, rec, n) = collect(std::iter::once(self), min_snr_db);
        stats(&errs, rec, n)
    }
}

fn collect<'a>(rows: impl Iterator<Item = &'a SourceEvaluation>, min_snr_db: f64) -> (Vec<f64>, usize, usize) {
    let mut errs = Vec::new();
    let (mut rec, mut n) = (0, 0);
    for b in rows.flat_map(|r| &r.bins).filter(|b| b.snr_db >= min_snr_db) {
        n += 1;
        if b.reconstructed_db.is_some() {
            rec += 1;
        }
        if let Some(e) = b.error_db {
            errs.push(e.abs());
        }
    }
    (errs, rec, n)
}

pub const EVALUATION_CSV_HEADER: [&str; 9] = [
    "method",
    "source",
    "identified",
    "config_id",
    "mach",
    "position_error_deg",
    "mean_abs_spectrum_error_db",
    "std_abs_spectrum_error_db",
    "reconstructed_fraction",
];

#[derive(Serialize)]
struct CsvRow<'a> {
    method: &'a str,
    source: &'a str,
    identified: Option<usize>,
    config_id: usize,
    mach: f64,
    position_error_deg: Option<f64>,
    mean_abs_spectrum_error_db: Option<f64>,
    std_abs_spectrum_error_db: Option<f64>,
    reconstructed_fraction: f64,
}

/// Comparison of one identification result against ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub method: Method,
    pub n_identified: usize,
    pub rows: Vec<SourceEvaluation>,
    /// Pooled over every row and bin.
    pub total: SpectrumError,
    pub failed_snr_histogram: Vec<(f64, f64)>,
}

impl EvaluationReport {
    /// Pooled `|ε|` and `f_r` of one true source over all configurations,
    /// restricted to bins with `snr_db >= min_snr_db`.
    pub fn source_error(&self, true_index: usize, min_snr_db: f64) -> SpectrumError {
        let (errs, rec, n) = collect(self.rows.iter().filter(|r| r.true_index == true_index), min_snr_db);
        stats(&errs, rec, n)
    }

    pub fn max_position_error_deg(&self) -> Option<f64> {
        let v: Vec<f64> = self.rows.iter().map(|r| r.position_error_deg).collect::<Option<_>>()?;
        v.into_iter().reduce(f64::max)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(EVALUATION_CSV_HEADER)?;
        for r in &self.rows {
            w.serialize(CsvRow {
                method: self.method.as_str(),
                source: &r.source_name,
                identified: r.identified_index,
                config_id: r.config_id,
                mach: r.mach,
                position_error_deg: r.position_error_deg,
                mean_abs_spectrum_error_db: r.mean_abs_spectrum_error_db,
                std_abs_spectrum_error_db: r.std_abs_spectrum_error_db,
                reconstructed_fraction: r.reconstructed_fraction,
            })?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }
}

/// Evaluates `result` on `parts` against `truth`. True sources are matched to
/// identified ones by nearest position; estimated positions per configuration
/// are confidence-weighted means of the assigned parts.
pub fn evaluate(parts: &SourcePartSet, result: &IdentificationResult, truth: &GroundTruth) -> Result<EvaluationReport> {
    result.validate(parts.len())?;
    let configs = parts.configs();
    for s in &truth.sources {
        if s.positions.len() != configs.len() {
            return Err(Error::Shape(format!(
                "source {} has {} positions for {} configurations",
                s.name,
                s.positions.len(),
                configs.len()
            )));
        }
        if s.psd_db.len() != truth.freqs_hz.len() {
            return Err(Error::Shape(format!("truth spectrum of {} has the wrong length", s.name)));
        }
    }
    let plane = parts.grid().plane_offset_m;
    let snr = truth.snr_db();
    let mean_xy: Vec<[f64; 2]> = truth
        .sources
        .iter()
        .map(|s| {
            let n = s.positions.len().max(1) as f64;
            let sx = s.positions.iter().map(|p| p[0]).sum::<f64>();
            let sy = s.positions.iter().map(|p| p[1]).sum::<f64>();
            [sx / n, sy / n]
        })
        .collect();
    let matched = match_sources(&mean_xy, &result.sources);

    let mut rows = Vec::with_capacity(truth.sources.len() * configs.len());
    for (i, src) in truth.sources.iter().enumerate() {
        for (c, cfg) in configs.iter().enumerate() {
            let spectrum = match matched[i] {
                Some(j) => integrate_spectrum(parts, result, j, c, &truth.freqs_hz)?,
                None => Spectrum::new(truth.freqs_hz.clone(), vec![None; truth.freqs_hz.len()], c)?,
            };
            let position_error_deg = match matched[i].and_then(|j| estimated_position(parts, result, j, c, plane)) {
                Some(est) => Some(angular_position_error(est, src.positions[c], truth.array_center)?),
                None => None,
            };
            let bins: Vec<BinEvaluation> = (0..truth.freqs_hz.len())
                .map(|k| {
                    let rec = spectrum.psd_db[k];
                    let t = src.psd_db[k];
                    BinEvaluation {
                        freq_hz: truth.freqs_hz[k],
                        snr_db: snr[i][k],
                        truth_db: t,
                        reconstructed_db: rec,
                        error_db: rec.filter(|_| t.is_finite()).map(|r| r - t),
                    }
                })
                .collect();
            let mut row = SourceEvaluation {
                source_name: src.name.clone(),
                true_index: i,
                identified_index: matched[i],
                config_id: c,
                mach: cfg.mach,
                position_error_deg,
                mean_abs_spectrum_error_db: None,
                std_abs_spectrum_error_db: None,
                reconstructed_fraction: 0.0,
                bins,
            };
            let e = row.error_above_snr(f64::NEG_INFINITY);
            row.mean_abs_spectrum_error_db = e.mean_abs_db;
            row.std_abs_spectrum_error_db = e.std_abs_db;
            row.reconstructed_fraction = e.reconstructed_fraction;
            rows.push(row);
        }
    }
    let (errs, rec, n) = collect(rows.iter(), f64::NEG_INFINITY);
    let mut report = EvaluationReport {
        method: result.method_tag,
        n_identified: result.sources.len(),
        rows,
        total: stats(&errs, rec, n),
        failed_snr_histogram: Vec::new(),
    };
    report.failed_snr_histogram = failed_reconstruction_snr_histogram(std::slice::from_ref(&report));
    Ok(report)
}

fn estimated_position(
    parts: &SourcePartSet,
    result: &IdentificationResult,
    source: usize,
    config_id: usize,
    plane: f64,
) -> Option<[f64; 3]> {
    let (mut w, mut sx, mut sy, mut n, mut ux, mut uy) = (0.0, 0.0, 0.0, 0usize, 0.0, 0.0);
    for (p, a) in parts.parts().iter().zip(&result.assignment) {
        if p.config_id != config_id || a.source() != Some(source) {
            continue;
        }
        let c = a.confidence();
        w += c;
        sx += c * p.x1;
        sy += c * p.x2;
        n += 1;
        ux += p.x1;
        uy += p.x2;
    }
    match (w > 0.0, n > 0) {
        (true, _) => Some([sx / w, sy / w, plane]),
        (false, true) => Some([ux / n as f64, uy / n as f64, plane]),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_cell_at_plane_distance() {
        let c = [0.0, 0.0, 0.0];
        let e = angular_position_error([0.005, 0.0, 0.65], [0.0, 0.0, 0.65], c).unwrap();
        assert!((e - 0.4407).abs() < 1e-3);
        let e = angular_position_error([0.01, 0.0, 0.65], [0.0, 0.0, 0.65], c).unwrap();
        assert!((e - 0.881).abs() < 1e-3);
        assert_eq!(angular_position_error([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], c).unwrap(), 0.0);
        assert!(angular_position_error(c, [1.0, 0.0, 0.0], c).is_err());
    }

    #[test]
    fn histogram_steps() {
        assert!(cumulative_snr_histogram(&[]).is_empty());
        assert_eq!(cumulative_snr_histogram(&[-40.0]), vec![(-40.0, 1.0)]);
        let h = cumulative_snr_histogram(&[-3.0, -1.0, -2.0, -4.0]);
        assert_eq!(h, vec![(-4.0, 0.25), (-3.0, 0.5), (-2.0, 0.75), (-1.0, 1.0)]);
        assert_eq!(cumulative_snr_histogram(&[-1.0, -1.0]), vec![(-1.0, 1.0)]);
    }

    #[test]
    fn matching_is_one_to_one() {
        use crate::model::ClusterSource;
        let mk = |id, x: f64| {
            IdentifiedSource::Cluster(ClusterSource {
                cluster_id: id,
                midpoint: [x, 0.0],
                member_count: 1,
                persistence: 1.0,
            })
        };
        let ids = [mk(0, 0.16), mk(1, 0.01)];
        let m = match_sources(&[[0.0, 0.0], [0.15, 0.0], [0.3, 0.0]], &ids);
        assert_eq!(m, vec![Some(1), Some(0), None]);
    }
}
