mod common;

use std::process::Command;

use aeroroi::model::Method;
use aeroroi::pipeline::{MethodSelection, SPECTRA_CSV_HEADER};
use aeroroi_cli::{cmd_beamform, cmd_identify, cmd_synth, ConfigArgs, Layout};
use common::{tiny_scenario, write_setup};

fn args(cfg: &std::path::Path) -> ConfigArgs {
    ConfigArgs { config: Some(cfg.to_path_buf()), ..Default::default() }
}

#[test]
fn same_seed_gives_byte_identical_csms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_setup(dir.path(), &tiny_scenario(true), "");
    let mut a = args(&cfg);
    let first = a.resolve().unwrap();
    cmd_synth(&first).unwrap();
    let out = Layout::new(&first.output_dir);
    let csm = std::fs::read(out.csm(0)).unwrap();
    let floor = std::fs::read(out.floor_csm(0)).unwrap();
    a.output_dir = Some(dir.path().join("again"));
    let second = a.resolve().unwrap();
    cmd_synth(&second).unwrap();
    let again = Layout::new(&second.output_dir);
    assert_eq!(csm, std::fs::read(again.csm(0)).unwrap());
    assert_eq!(floor, std::fs::read(again.floor_csm(0)).unwrap());
    a.seed = Some(8);
    a.output_dir = Some(dir.path().join("other"));
    let third = a.resolve().unwrap();
    cmd_synth(&third).unwrap();
    assert_ne!(csm, std::fs::read(Layout::new(&third.output_dir).csm(0)).unwrap());
}

#[test]
fn pipeline_finds_both_sources() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_setup(dir.path(), &tiny_scenario(true), "method = \"BOTH\"\n[sihc]\nt = 20\n");
    let cfg = args(&cfg).resolve().unwrap();
    cmd_synth(&cfg).unwrap();
    let parts = cmd_beamform(&cfg).unwrap();
    assert!(!parts.is_empty());
    let results = cmd_identify(&cfg).unwrap();
    assert_eq!(results.len(), 2);
    let out = Layout::new(&cfg.output_dir);
    for (r, m) in results.iter().zip([Method::Sind, Method::Sihc]) {
        assert_eq!(r.method_tag, m);
        assert_eq!(r.sources.len(), 2, "{m:?}");
        for truth in [-0.06, 0.06] {
            assert!(
                r.sources.iter().any(|s| (s.position()[0] - truth).hypot(s.position()[1]) < 0.015),
                "{m:?} misses the source at x1 = {truth}"
            );
        }
        assert_eq!(&out.read_result(m).unwrap(), r);
        let spectra = std::fs::read_to_string(out.spectra(m)).unwrap();
        assert_eq!(spectra.lines().next(), Some(SPECTRA_CSV_HEADER));
        assert!(out.roi(m).exists() && out.evaluation_csv(m).exists() && out.evaluation_json(m).exists());
    }
}

#[test]
fn empty_scenario_is_noise_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_setup(dir.path(), &tiny_scenario(false), "");
    let cfg = args(&cfg).resolve().unwrap();
    let info = cmd_synth(&cfg).unwrap();
    assert_eq!(info.configs.len(), 1);
    let truth = Layout::new(&cfg.output_dir).read_truth().unwrap();
    assert!(truth.sources.is_empty());
    cmd_beamform(&cfg).unwrap();
    let results = cmd_identify(&cfg).unwrap();
    assert!(results.iter().all(|r| r.sources.is_empty()));
}

#[test]
fn empty_parts_give_empty_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_setup(dir.path(), &tiny_scenario(true), "");
    let cfg = args(&cfg).resolve().unwrap();
    cmd_synth(&cfg).unwrap();
    let out = Layout::new(&cfg.output_dir);
    std::fs::write(out.parts(), format!("{}\n", aeroroi::model::PARTS_CSV_HEADER)).unwrap();
    let results = cmd_identify(&cfg).unwrap();
    assert_eq!(results.len(), 2);
    assert!(results.iter().all(|r| r.sources.is_empty() && r.assignment.is_empty()));
}

#[test]
fn sihc_with_oversized_cluster_size_is_all_noise() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_setup(dir.path(), &tiny_scenario(true), "");
    let mut a = args(&cfg);
    a.method = Some(MethodSelection::Sihc);
    a.set = vec!["sihc.t=1000000".into()];
    let cfg = a.resolve().unwrap();
    cmd_synth(&cfg).unwrap();
    cmd_beamform(&cfg).unwrap();
    let r = cmd_identify(&cfg).unwrap();
    assert_eq!(r.len(), 1);
    assert!(r[0].sources.is_empty());
    assert!(r[0].assignment.iter().all(|a| a.is_noise()));
}

fn exit_code(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_aeroroi"))
        .args(args)
        .env("RUST_LOG", "off")
        .status()
        .unwrap()
        .code()
        .unwrap()
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_setup(dir.path(), &tiny_scenario(true), "");
    let cfg = cfg.to_str().unwrap();
    let missing = dir.path().join("missing");
    let missing = missing.to_str().unwrap();
    assert_eq!(exit_code(&["beamform", "-o", missing]), 3);
    assert_eq!(exit_code(&["synth", "--scenario", missing]), 2);
    assert_eq!(exit_code(&["synth", "--no-such-flag"]), 2);
    assert_eq!(exit_code(&["identify", "-c", cfg, "--set", "sind.nonsense=1"]), 2);
    assert_eq!(exit_code(&["synth", "-c", cfg]), 0);
    assert_eq!(exit_code(&["identify", "-c", cfg]), 3);
    assert_eq!(exit_code(&["beamform", "-c", cfg]), 0);
    assert_eq!(exit_code(&["identify", "-c", cfg, "--set", "sind.t_I=-1"]), 2);
    assert_eq!(exit_code(&["evaluate", "-c", cfg]), 3);
    assert_eq!(exit_code(&["identify", "-c", cfg, "-m", "sind"]), 0);
    assert_eq!(exit_code(&["evaluate", "-c", cfg, "-m", "SIND"]), 0);
}
