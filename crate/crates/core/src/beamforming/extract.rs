use super::SparseMap;
use crate::error::{Error, Result};
use crate::model::{MeasurementConfig, SourcePart, SourcePartSet};

/// Flattens per-configuration sparse maps into one part set.
///
/// Entries more than `floor_db` below their bin's maximum are dropped.
pub fn extract_source_parts(maps: &[SparseMap], configs: &[MeasurementConfig], floor_db: f64) -> Result<SourcePartSet> {
    let Some(first) = maps.first() else {
        return Err(Error::Input("no sparse maps given".into()));
    };
    let grid = first.grid.clone();
    let mut parts = Vec::new();
    for map in maps {
        if map.grid != grid {
            return Err(Error::Shape(format!("map of config {} uses a different grid", map.config_id)));
        }
        let cfg = configs
            .get(map.config_id)
            .ok_or_else(|| Error::Input(format!("unknown config_id {}", map.config_id)))?;
        for (f, entries) in map.freqs_hz.iter().zip(&map.entries) {
            let top = entries.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
            for &(cell, db) in entries {
                if !db.is_finite() || db < top - floor_db {
                    continue;
                }
                let (i, j) = grid.cell_of_linear(cell);
                let [x1, x2] = grid.point(i, j)?;
                parts.push(SourcePart {
                    x1,
                    x2,
                    freq_hz: *f,
                    alpha_deg: cfg.alpha_deg,
                    mach: cfg.mach,
                    psd_db: db,
                    config_id: map.config_id,
                });
            }
        }
    }
    SourcePartSet::new(parts, grid, configs.to_vec())
}
