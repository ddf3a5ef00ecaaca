//! Source identification by greedy fitting of spatial normal distributions.
//!
//! Source-part positions are histogrammed on the focus grid. The highest
//! histogram peak seeds a bounded L1 fit of a rotated 2D Gaussian, the fitted
//! surface is subtracted, and the loop repeats until the highest remaining
//! count drops below `t_I`. Sources whose integrated area is below `t_A` are
//! discarded, and every part is then assigned to the source with the highest
//! normalised PDF value, or to noise below the `exp(-k²/2)` contour.

mod align;
mod assign;
mod extract;
mod fit;
mod gaussian;
mod histogram;

use serde::{Deserialize, Serialize};

pub use align::{align_maps, AlignmentTransform};
pub use assign::assign_parts_sind;
pub use extract::{sind_extract, sind_extract_traced, SindExtraction};
pub use fit::{fit_gaussian, FitOutcome};
pub use gaussian::{ellipse_polylines, gaussian2d, pdf_value, source_area, EllipsePolyline};
pub use histogram::{build_histogram, oaspl_map};

use crate::error::{Error, Result};
use crate::model::{
    FocusGrid, Histogram2D, IdentificationResult, IdentifiedSource, SourcePartSet,
};

/// Thresholds and fit bounds of the SIND method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SindParams {
    /// Stop once the highest remaining histogram count is below this.
    #[serde(rename = "t_I")]
    pub t_i: f64,
    /// Minimum integrated source area, counts·m².
    #[serde(rename = "t_A")]
    pub t_a: f64,
    /// Assignment contour `k`: parts below `exp(-k²/2)` are noise.
    pub t_sigma_level: f64,
    /// Amplitude bound half-width as a fraction of the starting peak.
    pub eps_a: f64,
    /// Centre bound half-width, metres. `None` means five grid cells.
    pub eps_x_m: Option<f64>,
    pub max_sources: usize,
    /// Objective evaluations per fit.
    pub max_evals: usize,
    /// Run the greedy loop on `ln(1 + count)` instead of raw counts.
    pub log_counts: bool,
    /// Align per-configuration histograms to a reference before pooling.
    pub align: bool,
    /// Reference configuration for alignment; `None` picks the lowest Mach number.
    pub reference_config: Option<usize>,
}

impl Default for SindParams {
    fn default() -> Self {
        Self {
            t_i: 20.0,
            t_a: 0.0,
            t_sigma_level: 3.0,
            eps_a: 0.5,
            eps_x_m: None,
            max_sources: 20,
            max_evals: 2000,
            log_counts: false,
            align: false,
            reference_config: None,
        }
    }
}

impl SindParams {
    pub fn validate(&self, grid: &FocusGrid) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.t_i > 0.0) {
            return bad(format!("t_I must be > 0, got {}", self.t_i));
        }
        if !(self.t_a >= 0.0) {
            return bad(format!("t_A must be >= 0, got {}", self.t_a));
        }
        if !(1.0..=5.0).contains(&self.t_sigma_level) {
            return bad(format!("t_sigma_level must be in [1, 5], got {}", self.t_sigma_level));
        }
        if !(self.eps_a > 0.0 && self.eps_a < 1.0) {
            return bad(format!("eps_a must be in (0, 1), got {}", self.eps_a));
        }
        if self.eps_x(grid) < grid.spacing * (1.0 - 1e-9) {
            return bad(format!(
                "eps_x_m must be at least one grid spacing ({} m)",
                grid.spacing
            ));
        }
        if self.max_sources == 0 || self.max_evals < 10 {
            return bad("max_sources must be >= 1 and max_evals >= 10".into());
        }
        Ok(())
    }

    pub fn eps_x(&self, grid: &FocusGrid) -> f64 {
        self.eps_x_m.unwrap_or(5.0 * grid.spacing)
    }

    /// Confidence below which a part is classified as noise.
    pub fn confidence_cutoff(&self) -> f64 {
        (-self.t_sigma_level * self.t_sigma_level / 2.0).exp()
    }
}

/// Everything produced by one SIND run over a part set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SindRun {
    pub result: IdentificationResult,
    /// Histogram the sources were fitted to (after alignment, if enabled).
    pub histogram: Histogram2D,
    /// One transform per configuration; identity when alignment is off.
    pub alignment: Vec<AlignmentTransform>,
    pub extraction: SindExtraction,
}

impl SindRun {
    pub fn gaussians(&self) -> Vec<crate::model::GaussianSource> {
        self.result
            .sources
            .iter()
            .filter_map(|s| match s {
                IdentifiedSource::Gaussian(g) => Some(*g),
                IdentifiedSource::Cluster(_) => None,
            })
            .collect()
    }
}

/// Full SIND pass: optional alignment, pooled histogram, greedy extraction and assignment.
pub fn run_sind(parts: &SourcePartSet, params: &SindParams) -> Result<SindRun> {
    let grid = parts.grid();
    params.validate(grid)?;
    let n_cfg = parts.configs().len();
    let alignment = if params.align && n_cfg >= 2 {
        let reference = match params.reference_config {
            Some(r) if r < n_cfg => r,
            Some(r) => return Err(Error::Config(format!("reference_config {r} out of range"))),
            None => lowest_mach(parts),
        };
        let hists = crate::par::map_range(n_cfg, |c| {
            let sub: Vec<_> = parts.parts().iter().filter(|p| p.config_id == c).copied().collect();
            build_histogram(&sub, grid)
        });
        let hists = hists.into_iter().collect::<Result<Vec<_>>>()?;
        align_maps(&hists, reference)?
    } else {
        (0..n_cfg).map(|c| AlignmentTransform::identity(c, 0)).collect()
    };
    let positions: Vec<[f64; 2]> = parts
        .parts()
        .iter()
        .map(|p| alignment[p.config_id].to_reference(p.position()))
        .collect();
    let mut histogram = Histogram2D::zeros(grid.clone());
    for &[x1, x2] in &positions {
        if let Some((i, j)) = grid.nearest_cell(x1, x2) {
            histogram.increment(i, j);
        }
    }
    let extraction = sind_extract_traced(&histogram, params)?;
    let result = assign::assign_positions(&positions, &extraction.sources, params);
    Ok(SindRun {
        result,
        histogram,
        alignment,
        extraction,
    })
}

fn lowest_mach(parts: &SourcePartSet) -> usize {
    let cfg = parts.configs();
    (0..cfg.len())
        .min_by(|&a, &b| cfg[a].mach.total_cmp(&cfg[b].mach))
        .unwrap_or(0)
}
