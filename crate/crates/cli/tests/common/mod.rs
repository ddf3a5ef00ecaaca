use std::path::Path;

/// Two monopoles, one flow configuration, a coarse grid: quick to run end to end.
pub fn tiny_scenario(with_source: bool) -> String {
    let mut s = String::from(
        r#"
name = "tiny"
seed = 7
duration_s = 1.0

[array]
layout = "rectangular"
nx = 5
ny = 5
aperture_x_m = 0.5
aperture_y_m = 0.5
center = [0.0, 0.0, 0.0]

[grid]
origin = [-0.1, -0.05]
spacing = 0.01
n1 = 21
n2 = 11
plane_offset_m = 0.65

[[configs]]
label = "M0.05"
mach = 0.05
alpha_deg = 0.0
sample_rate_hz = 32768.0
block_size = 256
overlap_fraction = 0.5
reference_length_m = 0.1
noise_floor_db = 20.0
"#,
    );
    if with_source {
        s.push_str(
            r#"
[[sources]]
name = "S1"
position = [-0.06, 0.0, 0.65]
band_low_hz = 4000.0
band_high_hz = 10000.0
rolloff_low_db_per_oct = 48.0
rolloff_high_db_per_oct = 48.0
level_db = 45.0
rng_seed = 1

[[sources]]
name = "S2"
position = [0.06, 0.0, 0.65]
band_low_hz = 4000.0
band_high_hz = 10000.0
rolloff_low_db_per_oct = 48.0
rolloff_high_db_per_oct = 48.0
level_db = 42.0
rng_seed = 2
"#,
        );
    }
    s
}

/// Writes a scenario and a pipeline config pointing at it; returns the config path.
pub fn write_setup(dir: &Path, scenario: &str, extra: &str) -> std::path::PathBuf {
    std::fs::write(dir.join("scenario.toml"), scenario).unwrap();
    let cfg = dir.join("pipeline.toml");
    std::fs::write(&cfg, format!("scenario = \"scenario.toml\"\noutput_dir = \"out\"\n{extra}")).unwrap();
    cfg
}
