use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sihc::SihcParams;
use crate::sind::SindParams;

/// A fitted, rotated 2D normal distribution over the source-part histogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSource {
    /// Peak height in histogram counts.
    pub amplitude: f64,
    /// Standard deviation along the first principal axis, metres.
    pub sigma1: f64,
    /// Standard deviation along the second principal axis, metres.
    pub sigma2: f64,
    /// Rotation of the first principal axis against x₁, radians in `[0, π)`.
    pub theta: f64,
    pub center: [f64; 2],
    /// Integral of the fitted surface, counts·m².
    pub area: f64,
    /// Position in extraction order (0 = first found).
    pub order_index: usize,
}

impl GaussianSource {
    pub fn new(amplitude: f64, sigma1: f64, sigma2: f64, theta: f64, center: [f64; 2], order_index: usize) -> Result<Self> {
        if !(amplitude > 0.0) || !(sigma1 > 0.0) || !(sigma2 > 0.0) {
            return Err(Error::Input(format!(
                "gaussian needs positive amplitude and sigmas, got A={amplitude} s1={sigma1} s2={sigma2}"
            )));
        }
        if !theta.is_finite() || !center.iter().all(|c| c.is_finite()) {
            return Err(Error::Input("gaussian parameters must be finite".into()));
        }
        Ok(Self {
            amplitude,
            sigma1,
            sigma2,
            theta: theta.rem_euclid(PI),
            center,
            area: 2.0 * PI * amplitude * sigma1 * sigma2,
            order_index,
        })
    }
}

/// Cluster found by hierarchical density clustering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterSource {
    pub cluster_id: usize,
    /// Confidence-weighted mean position of surviving members, metres.
    pub midpoint: [f64; 2],
    pub member_count: usize,
    /// Excess-of-mass stability of the cluster in the condensed tree.
    pub persistence: f64,
}

/// One identified source, whichever method produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IdentifiedSource {
    Gaussian(GaussianSource),
    Cluster(ClusterSource),
}

impl IdentifiedSource {
    /// Representative position: Gaussian centre or cluster midpoint.
    pub fn position(&self) -> [f64; 2] {
        match self {
            IdentifiedSource::Gaussian(g) => g.center,
            IdentifiedSource::Cluster(c) => c.midpoint,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Sind,
    Sihc,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Sind => "SIND",
            Method::Sihc => "SIHC",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SIND" => Ok(Method::Sind),
            "SIHC" => Ok(Method::Sihc),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

/// Thresholds a result was computed with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "UPPERCASE")]
pub enum MethodParams {
    Sind(SindParams),
    Sihc(SihcParams),
}

/// What happened to one source-part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Assignment {
    Source { source: usize, confidence: f64 },
    Noise,
}

impl Assignment {
    pub fn source(&self) -> Option<usize> {
        match *self {
            Assignment::Source { source, .. } => Some(source),
            Assignment::Noise => None,
        }
    }

    pub fn confidence(&self) -> f64 {
        match *self {
            Assignment::Source { confidence, .. } => confidence,
            Assignment::Noise => 0.0,
        }
    }

    pub fn is_noise(&self) -> bool {
        matches!(self, Assignment::Noise)
    }
}

/// Output of either identification method: sources plus a per-part assignment,
/// aligned with the order of the input [`SourcePartSet`](super::SourcePartSet).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationResult {
    pub method_tag: Method,
    pub sources: Vec<IdentifiedSource>,
    pub assignment: Vec<Assignment>,
    pub params_used: MethodParams,
}

impl IdentificationResult {
    pub fn validate(&self, n_parts: usize) -> Result<()> {
        if self.assignment.len() != n_parts {
            return Err(Error::Shape(format!(
                "{} assignments for {n_parts} parts",
                self.assignment.len()
            )));
        }
        for a in &self.assignment {
            if let Assignment::Source { source, confidence } = *a {
                if source >= self.sources.len() || !(0.0..=1.0).contains(&confidence) {
                    return Err(Error::Input(format!(
                        "invalid assignment to source {source} with confidence {confidence}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn noise_count(&self) -> usize {
        self.assignment.iter().filter(|a| a.is_noise()).count()
    }

    /// Indices of the parts assigned to `source`.
    pub fn members(&self, source: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, a)| a.source() == Some(source))
            .map(|(k, _)| k)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Per-frequency levels of one source in one flow configuration.
/// `None` marks a bin where no part contributed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub freqs_hz: Vec<f64>,
    pub psd_db: Vec<Option<f64>>,
    pub config_id: usize,
}

impl Spectrum {
    pub fn new(freqs_hz: Vec<f64>, psd_db: Vec<Option<f64>>, config_id: usize) -> Result<Self> {
        if freqs_hz.len() != psd_db.len() {
            return Err(Error::Shape(format!(
                "{} frequencies but {} levels",
                freqs_hz.len(),
                psd_db.len()
            )));
        }
        if freqs_hz.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Input("spectrum frequencies must be strictly increasing".into()));
        }
        Ok(Self {
            freqs_hz,
            psd_db,
            config_id,
        })
    }

    pub fn reconstructed_bins(&self) -> usize {
        self.psd_db.iter().filter(|v| v.is_some()).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn area_is_closed_form() {
        let g = GaussianSource::new(10.0, 0.02, 0.01, 0.3, [0.0, 0.0], 0).unwrap();
        assert_relative_eq!(g.area, 2.0 * PI * 10.0 * 0.02 * 0.01, max_relative = 1e-12);
        assert_relative_eq!(g.area, 0.012566, max_relative = 1e-4);
    }

    #[test]
    fn theta_is_wrapped() {
        let g = GaussianSource::new(1.0, 1.0, 1.0, -0.5, [0.0, 0.0], 0).unwrap();
        assert!((0.0..PI).contains(&g.theta));
        assert_relative_eq!(g.theta, PI - 0.5);
        assert!(GaussianSource::new(0.0, 1.0, 1.0, 0.0, [0.0, 0.0], 0).is_err());
    }

    #[test]
    fn assignment_json_shape() {
        let a = serde_json::to_string(&Assignment::Source { source: 2, confidence: 0.5 }).unwrap();
        assert_eq!(a, r#"{"status":"source","source":2,"confidence":0.5}"#);
        assert_eq!(serde_json::to_string(&Assignment::Noise).unwrap(), r#"{"status":"noise"}"#);
    }

    #[test]
    fn spectrum_checks_axis() {
        assert!(Spectrum::new(vec![1.0, 2.0], vec![None], 0).is_err());
        assert!(Spectrum::new(vec![2.0, 1.0], vec![None, None], 0).is_err());
        let s = Spectrum::new(vec![1.0, 2.0], vec![None, Some(3.0)], 0).unwrap();
        assert_eq!(s.reconstructed_bins(), 1);
        assert_eq!(serde_json::to_string(&s.psd_db).unwrap(), "[null,3.0]");
    }
}
