//! End-to-end driver: scenario synthesis, CSM estimation, CLEAN-SC,
//! source-part extraction, identification and evaluation.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::beamforming::{clean_sc, extract_source_parts, steering_vectors, BeamformingParams, SparseMap};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, ground_truth_psd, integrate_spectrum, EvaluationReport, GroundTruth, TrueSource};
use crate::model::{
    ArrayGeometry, FocusGrid, IdentificationResult, IdentifiedSource, MeasurementConfig, Method, MethodParams,
    SourcePartSet, Spectrum,
};
use crate::sihc::{run_sihc, SihcParams, SihcRun};
use crate::sind::{run_sind, SindParams, SindRun};
use crate::synth::{
    denoise_csm, mix_seed, superpose_csms, synthesize_time_signals, welch_csm, CrossSpectralMatrix, Scenario,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MethodSelection {
    Sind,
    Sihc,
    #[default]
    Both,
}

impl MethodSelection {
    pub fn methods(&self) -> Vec<Method> {
        match self {
            MethodSelection::Sind => vec![Method::Sind],
            MethodSelection::Sihc => vec![Method::Sihc],
            MethodSelection::Both => vec![Method::Sind, Method::Sihc],
        }
    }
}

impl FromStr for MethodSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SIND" => Ok(MethodSelection::Sind),
            "SIHC" => Ok(MethodSelection::Sihc),
            "BOTH" => Ok(MethodSelection::Both),
            other => Err(Error::Config(format!("unknown method selection {other:?}"))),
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Settings of a pipeline run, usually read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub scenario: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub method: MethodSelection,
    /// Overrides the scenario seed when set.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub beamforming: BeamformingParams,
    #[serde(default)]
    pub sind: SindParams,
    #[serde(default)]
    pub sihc: SihcParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            scenario: None,
            output_dir: default_output_dir(),
            method: MethodSelection::default(),
            seed: None,
            beamforming: BeamformingParams::default(),
            sind: SindParams::default(),
            sihc: SihcParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    /// Loads a config file. Relative scenario paths resolve against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let (Some(s), Some(dir)) = (cfg.scenario.as_mut(), path.parent()) {
            if s.is_relative() {
                *s = dir.join(&*s);
            }
        }
        Ok(cfg)
    }

    /// Checks parameters that do not depend on the dataset.
    pub fn validate(&self) -> Result<()> {
        self.beamforming.validate()?;
        self.sihc.validate()?;
        if let Some(s) = &self.scenario {
            if !s.exists() {
                return Err(Error::Config(format!("scenario {} does not exist", s.display())));
            }
        }
        Ok(())
    }

    pub fn load_scenario(&self) -> Result<Scenario> {
        let path = self
            .scenario
            .as_ref()
            .ok_or_else(|| Error::Config("no scenario given".into()))?;
        let mut sc = Scenario::load(path)?;
        if let Some(seed) = self.seed {
            sc.seed = seed;
        }
        Ok(sc)
    }
}

/// Synthesized CSMs of a scenario plus its ground truth.
#[derive(Debug, Clone)]
pub struct SynthesizedDataset {
    pub geometry: ArrayGeometry,
    pub grid: FocusGrid,
    pub configs: Vec<MeasurementConfig>,
    /// Per configuration: background-floor CSM of a source-free run.
    pub floors: Vec<CrossSpectralMatrix>,
    /// Per configuration and source: denoised CSM of the isolated source.
    pub isolated: Vec<Vec<CrossSpectralMatrix>>,
    /// Per configuration: superposition of the isolated CSMs, or the floor
    /// itself when the scenario has no sources.
    pub csms: Vec<CrossSpectralMatrix>,
    pub truth: GroundTruth,
}

/// Runs one floor measurement and one isolated measurement per source for
/// every configuration, denoises and superposes them.
pub fn synthesize(scenario: &Scenario) -> Result<SynthesizedDataset> {
    scenario.validate()?;
    let geometry = scenario.geometry()?;
    let configs = scenario.measurement_configs();
    let estimate = |signals: Vec<Vec<f64>>, cfg: &MeasurementConfig| welch_csm(&signals, cfg)?.with_geometry(&geometry);

    let mut floors = Vec::with_capacity(configs.len());
    let mut isolated = Vec::with_capacity(configs.len());
    let mut csms = Vec::with_capacity(configs.len());
    for (c, entry) in scenario.configs.iter().enumerate() {
        let cfg = &entry.config;
        let noise = entry.noise_floor_db;
        let seed = |run: u64| mix_seed(&[scenario.seed, c as u64, run]);
        let floor = estimate(
            synthesize_time_signals(&[], &geometry, cfg, scenario.duration_s, noise, seed(0))?,
            cfg,
        )?;
        let mut iso = Vec::with_capacity(scenario.sources.len());
        for (s, spec) in scenario.monopoles_for(c).into_iter().enumerate() {
            let signals = synthesize_time_signals(
                std::slice::from_ref(&spec),
                &geometry,
                cfg,
                scenario.duration_s,
                noise,
                seed(s as u64 + 1),
            )?;
            iso.push(denoise_csm(&estimate(signals, cfg)?, &floor)?);
        }
        csms.push(if iso.is_empty() { floor.clone() } else { superpose_csms(&iso)? });
        floors.push(floor);
        isolated.push(iso);
    }

    let r = scenario.reference_config();
    let per_config: Vec<_> = (0..configs.len()).map(|c| scenario.monopoles_for(c)).collect();
    let mut sources = Vec::with_capacity(scenario.sources.len());
    for (s, entry) in scenario.sources.iter().enumerate() {
        let (psd_db, psd_std_db) = ground_truth_psd(&isolated[r][s], &geometry, per_config[r][s].position)?;
        sources.push(TrueSource {
            name: if entry.name.is_empty() { format!("S{}", s + 1) } else { entry.name.clone() },
            positions: per_config.iter().map(|m| m[s].position).collect(),
            psd_db,
            psd_std_db,
        });
    }
    let truth = GroundTruth {
        freqs_hz: csms[r].freqs_hz().to_vec(),
        array_center: geometry.center(),
        sources,
    };
    Ok(SynthesizedDataset {
        geometry,
        grid: scenario.grid.clone(),
        configs,
        floors,
        isolated,
        csms,
        truth,
    })
}

/// CLEAN-SC maps and the extracted source-parts of a set of CSMs.
#[derive(Debug, Clone)]
pub struct BeamformOutput {
    pub maps: Vec<SparseMap>,
    pub parts: SourcePartSet,
}

/// Beamforms every configuration's CSM onto `grid` and extracts source-parts.
pub fn beamform(
    csms: &[CrossSpectralMatrix],
    geometry: &ArrayGeometry,
    grid: &FocusGrid,
    configs: &[MeasurementConfig],
    params: &BeamformingParams,
) -> Result<BeamformOutput> {
    params.validate()?;
    if csms.len() != configs.len() {
        return Err(Error::Shape(format!("{} CSMs for {} configurations", csms.len(), configs.len())));
    }
    let mut maps = Vec::with_capacity(csms.len());
    for (c, (csm, cfg)) in csms.iter().zip(configs).enumerate() {
        if csm.geometry_hash() != 0 && csm.geometry_hash() != crate::synth::geometry_hash(geometry) {
            return Err(Error::Input(format!("CSM of config {c} was recorded with a different array")));
        }
        let steering = steering_vectors(geometry, grid, csm.freqs_hz(), cfg.speed_of_sound_mps)?;
        maps.push(clean_sc(csm, &steering, params, c)?);
    }
    let parts = if maps.is_empty() {
        SourcePartSet::empty(grid.clone(), configs.to_vec())
    } else {
        extract_source_parts(&maps, configs, params.extraction_floor_db)?
    };
    Ok(BeamformOutput { maps, parts })
}

/// Output of one identification method, with its method-specific internals.
#[derive(Debug, Clone)]
pub enum MethodRun {
    Sind(SindRun),
    Sihc(SihcRun),
}

impl MethodRun {
    pub fn result(&self) -> &IdentificationResult {
        match self {
            MethodRun::Sind(r) => &r.result,
            MethodRun::Sihc(r) => &r.result,
        }
    }

    pub fn method(&self) -> Method {
        self.result().method_tag
    }
}

/// Runs one method on `parts`.
pub fn identify(parts: &SourcePartSet, method: Method, config: &PipelineConfig) -> Result<MethodRun> {
    Ok(match method {
        Method::Sind => MethodRun::Sind(run_sind(parts, &config.sind)?),
        Method::Sihc => MethodRun::Sihc(run_sihc(parts, &config.sihc)?),
    })
}

/// Every artifact of a full synthetic run.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub dataset: SynthesizedDataset,
    pub beamform: BeamformOutput,
    pub runs: Vec<MethodRun>,
    pub reports: Vec<EvaluationReport>,
}

impl ScenarioRun {
    pub fn run(&self, method: Method) -> Option<&MethodRun> {
        self.runs.iter().find(|r| r.method() == method)
    }

    pub fn report(&self, method: Method) -> Option<&EvaluationReport> {
        self.reports.iter().find(|r| r.method == method)
    }
}

/// Synthesis through evaluation for every selected method.
pub fn run_scenario(scenario: &Scenario, config: &PipelineConfig) -> Result<ScenarioRun> {
    config.beamforming.validate()?;
    let dataset = synthesize(scenario)?;
    let bf = beamform(&dataset.csms, &dataset.geometry, &dataset.grid, &dataset.configs, &config.beamforming)?;
    let mut runs = Vec::new();
    let mut reports = Vec::new();
    for m in config.method.methods() {
        let run = identify(&bf.parts, m, config)?;
        reports.push(evaluate(&bf.parts, run.result(), &dataset.truth)?);
        runs.push(run);
    }
    Ok(ScenarioRun {
        dataset,
        beamform: bf,
        runs,
        reports,
    })
}

/// Spectrum of every identified source in every configuration, on the
/// configuration's analysis axis. Ordered by source, then configuration.
pub fn source_spectra(parts: &SourcePartSet, result: &IdentificationResult) -> Result<Vec<(usize, Spectrum)>> {
    let mut out = Vec::with_capacity(result.sources.len() * parts.configs().len());
    for s in 0..result.sources.len() {
        for (c, cfg) in parts.configs().iter().enumerate() {
            out.push((s, integrate_spectrum(parts, result, s, c, &cfg.analysis_freqs())?));
        }
    }
    Ok(out)
}

pub const SPECTRA_CSV_HEADER: &str = "source,config_id,freq_hz,psd_db";

/// Long-format spectra table; ABSENT bins have an empty `psd_db`.
pub fn write_spectra_csv<W: Write>(mut w: W, spectra: &[(usize, Spectrum)]) -> Result<()> {
    writeln!(w, "{SPECTRA_CSV_HEADER}")?;
    for (s, sp) in spectra {
        for (f, v) in sp.freqs_hz.iter().zip(&sp.psd_db) {
            match v {
                Some(v) => writeln!(w, "{s},{},{f},{v}", sp.config_id)?,
                None => writeln!(w, "{s},{},{f},", sp.config_id)?,
            }
        }
    }
    Ok(())
}

/// One region of interest in an export file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Roi {
    /// `k`-sigma ellipse of a fitted Gaussian.
    Ellipse {
        source: usize,
        center: [f64; 2],
        sigma1: f64,
        sigma2: f64,
        theta: f64,
        k: f64,
    },
    /// Grid cells holding at least one member part.
    Cells {
        source: usize,
        center: [f64; 2],
        cells: Vec<[usize; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoiExport {
    pub method: Method,
    pub grid: FocusGrid,
    pub regions: Vec<Roi>,
}

/// Region-of-interest definitions for every source of `result`.
pub fn roi_export(parts: &SourcePartSet, result: &IdentificationResult) -> Result<RoiExport> {
    result.validate(parts.len())?;
    let grid = parts.grid();
    let k = match &result.params_used {
        MethodParams::Sind(p) => p.t_sigma_level,
        MethodParams::Sihc(p) => p.t_sigma_level,
    };
    let regions = result
        .sources
        .iter()
        .enumerate()
        .map(|(s, src)| match src {
            IdentifiedSource::Gaussian(g) => Roi::Ellipse {
                source: s,
                center: g.center,
                sigma1: g.sigma1,
                sigma2: g.sigma2,
                theta: g.theta,
                k,
            },
            IdentifiedSource::Cluster(c) => {
                let cells: BTreeSet<[usize; 2]> = result
                    .members(s)
                    .filter_map(|p| {
                        let part = &parts.parts()[p];
                        grid.nearest_cell(part.x1, part.x2).map(|(i, j)| [i, j])
                    })
                    .collect();
                Roi::Cells {
                    source: s,
                    center: c.midpoint,
                    cells: cells.into_iter().collect(),
                }
            }
        })
        .collect();
    Ok(RoiExport {
        method: result.method_tag,
        grid: grid.clone(),
        regions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = r#"
        name = "tiny"
        seed = 7
        duration_s = 0.5
        [array]
        layout = "rectangular"
        nx = 4
        ny = 4
        aperture_x_m = 0.3
        aperture_y_m = 0.3
        center = [0.0, 0.0, 0.0]
        [grid]
        origin = [-0.05, -0.05]
        spacing = 0.01
        n1 = 11
        n2 = 11
        plane_offset_m = 0.5
        [[configs]]
        mach = 0.0
        alpha_deg = 0.0
        sample_rate_hz = 16384.0
        block_size = 64
        reference_length_m = 0.1
        noise_floor_db = -60.0
        [[sources]]
        name = "a"
        position = [0.0, 0.0, 0.5]
        band_low_hz = 1000.0
        band_high_hz = 5000.0
        rolloff_low_db_per_oct = 24.0
        rolloff_high_db_per_oct = 24.0
        level_db = 0.0
        rng_seed = 1
    "#;

    #[test]
    fn tiny_scenario_runs_end_to_end() {
        let sc = Scenario::from_toml_str(TINY).unwrap();
        let cfg = PipelineConfig::default();
        let run = run_scenario(&sc, &cfg).unwrap();
        assert_eq!(run.dataset.csms.len(), 1);
        assert_eq!(run.dataset.truth.sources.len(), 1);
        assert!(!run.beamform.parts.is_empty());
        assert_eq!(run.reports.len(), 2);
        let roi = roi_export(&run.beamform.parts, run.runs[0].result()).unwrap();
        assert_eq!(roi.regions.len(), run.runs[0].result().sources.len());
    }

    #[test]
    fn empty_scenario_is_noise_only() {
        let text = TINY.split("[[sources]]").next().unwrap();
        let sc = Scenario::from_toml_str(text).unwrap();
        let ds = synthesize(&sc).unwrap();
        assert!(ds.truth.sources.is_empty());
        assert!(ds.csms[0].auto_spectrum(10, 0) > 0.0);
    }

    #[test]
    fn method_selection_parses() {
        assert_eq!("both".parse::<MethodSelection>().unwrap().methods().len(), 2);
        assert!("x".parse::<MethodSelection>().is_err());
        let c = PipelineConfig::from_toml_str("method = \"SIND\"\n[sind]\nt_I = 70.0\n").unwrap();
        assert_eq!(c.method, MethodSelection::Sind);
        assert_eq!(c.sind.t_i, 70.0);
        assert!(PipelineConfig::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn spectra_csv_marks_absent() {
        let sp = Spectrum::new(vec![1.0, 2.0], vec![Some(3.0), None], 0).unwrap();
        let mut buf = Vec::new();
        write_spectra_csv(&mut buf, &[(0, sp)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "source,config_id,freq_hz,psd_db\n0,0,1,3\n0,0,2,\n");
    }
}
