use std::io::{BufWriter, Write};

use aeroroi::metrics::{evaluate, EvaluationReport};
use aeroroi::model::{write_parts_csv, IdentificationResult, SourcePartSet};
use aeroroi::pipeline::{beamform, identify, roi_export, source_spectra, synthesize, write_spectra_csv, PipelineConfig};
use aeroroi::synth::write_csm;
use log::{info, warn};

use crate::error::{CliError, CliResult};
use crate::layout::{create, write_json, DatasetInfo, Layout};

/// Synthesizes the scenario and writes CSMs, background floors, dataset info and ground truth.
pub fn cmd_synth(cfg: &PipelineConfig) -> CliResult<DatasetInfo> {
    let scenario = cfg.load_scenario()?;
    let ds = synthesize(&scenario)?;
    let out = Layout::new(&cfg.output_dir);
    let info = DatasetInfo {
        name: scenario.name.clone(),
        seed: scenario.seed,
        geometry: ds.geometry.clone(),
        grid: ds.grid.clone(),
        configs: ds.configs.clone(),
    };
    for (c, (csm, floor)) in ds.csms.iter().zip(&ds.floors).enumerate() {
        for (path, m) in [(out.csm(c), csm), (out.floor_csm(c), floor)] {
            let mut w = BufWriter::new(create(&path)?);
            write_csm(&mut w, m)?;
            w.flush().map_err(aeroroi::Error::from)?;
        }
    }
    write_json(&out.dataset(), &info)?;
    write_json(&out.truth(), &ds.truth)?;
    info!(
        "synthesized {} configuration(s), {} source(s) into {}",
        info.configs.len(),
        ds.truth.sources.len(),
        out.root.display()
    );
    Ok(info)
}

/// CLEAN-SC over every stored CSM, then source-part extraction into `parts.csv`.
pub fn cmd_beamform(cfg: &PipelineConfig) -> CliResult<SourcePartSet> {
    let out = Layout::new(&cfg.output_dir);
    let info = out.read_dataset()?;
    let csms = out.read_csms(info.configs.len())?;
    let bf = beamform(&csms, &info.geometry, &info.grid, &info.configs, &cfg.beamforming)?;
    let mut w = BufWriter::new(create(&out.parts())?);
    write_parts_csv(&mut w, bf.parts.parts())?;
    w.flush().map_err(aeroroi::Error::from)?;
    info!("wrote {} source-parts to {}", bf.parts.len(), out.parts().display());
    Ok(bf.parts)
}

/// Runs the selected methods on `parts.csv`. Writes one result, spectra table and
/// ROI file per method, and an evaluation when `truth.json` is present.
pub fn cmd_identify(cfg: &PipelineConfig) -> CliResult<Vec<IdentificationResult>> {
    let out = Layout::new(&cfg.output_dir);
    let info = out.read_dataset()?;
    let parts = out.read_parts(&info)?;
    if parts.is_empty() {
        warn!("{} holds no source-parts; results will be empty", out.parts().display());
    }
    let truth = out.truth().exists().then(|| out.read_truth()).transpose()?;
    let mut results = Vec::new();
    for method in cfg.method.methods() {
        let run = identify(&parts, method, cfg)?;
        let result = run.result().clone();
        write_json(&out.result(method), &result)?;
        let spectra = source_spectra(&parts, &result)?;
        let mut w = BufWriter::new(create(&out.spectra(method))?);
        write_spectra_csv(&mut w, &spectra)?;
        w.flush().map_err(aeroroi::Error::from)?;
        write_json(&out.roi(method), &roi_export(&parts, &result)?)?;
        if let Some(truth) = &truth {
            write_evaluation(&out, &evaluate(&parts, &result, truth)?)?;
        }
        info!("{}: {} source(s)", method.as_str(), result.sources.len());
        results.push(result);
    }
    Ok(results)
}

/// Scores stored results against `truth.json`.
pub fn cmd_evaluate(cfg: &PipelineConfig) -> CliResult<Vec<EvaluationReport>> {
    let out = Layout::new(&cfg.output_dir);
    let info = out.read_dataset()?;
    let parts = out.read_parts(&info)?;
    let truth = out.read_truth()?;
    let mut reports = Vec::new();
    for method in cfg.method.methods() {
        let result = out.read_result(method)?;
        if result.method_tag != method {
            return Err(CliError::Input(format!(
                "{} holds a {} result",
                out.result(method).display(),
                result.method_tag.as_str()
            )));
        }
        let report = evaluate(&parts, &result, &truth)?;
        write_evaluation(&out, &report)?;
        info!(
            "{}: {} identified, f_r {:.3}, mean |eps| {}",
            method.as_str(),
            report.n_identified,
            report.total.reconstructed_fraction,
            report.total.mean_abs_db.map_or("n/a".into(), |v| format!("{v:.2} dB"))
        );
        reports.push(report);
    }
    Ok(reports)
}

fn write_evaluation(out: &Layout, report: &EvaluationReport) -> CliResult<()> {
    report.write_csv(out.evaluation_csv(report.method))?;
    std::fs::write(out.evaluation_json(report.method), report.to_json_pretty()?).map_err(aeroroi::Error::from)?;
    Ok(())
}

