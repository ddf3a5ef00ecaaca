//! Source-part CSV interchange.
//!
//! Header `config_id,x1_m,x2_m,freq_hz,alpha_deg,mach,psd_db`, UTF-8, LF line
//! endings. Floats are written in Rust's shortest round-trip form, so a
//! write/read cycle reproduces every value bit for bit.

use std::io::{Read, Write};

use serde::Deserialize;

use super::{FocusGrid, MeasurementConfig, SourcePart, SourcePartSet};
use crate::error::{Error, Result};

pub const PARTS_CSV_HEADER: &str = "config_id,x1_m,x2_m,freq_hz,alpha_deg,mach,psd_db";

pub fn write_parts_csv<W: Write>(mut w: W, parts: &[SourcePart]) -> Result<()> {
    writeln!(w, "{PARTS_CSV_HEADER}")?;
    for p in parts {
        writeln!(
            w,
            "{},{:?},{:?},{:?},{:?},{:?},{:?}",
            p.config_id, p.x1, p.x2, p.freq_hz, p.alpha_deg, p.mach, p.psd_db
        )?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct Row {
    config_id: usize,
    x1_m: f64,
    x2_m: f64,
    freq_hz: f64,
    alpha_deg: f64,
    mach: f64,
    psd_db: f64,
}

/// Reads a parts CSV and validates it against the grid and configs.
pub fn read_parts_csv<R: Read>(r: R, grid: FocusGrid, configs: Vec<MeasurementConfig>) -> Result<SourcePartSet> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != PARTS_CSV_HEADER {
        return Err(Error::Format(format!(
            "unexpected parts CSV header {:?}, expected {PARTS_CSV_HEADER:?}",
            header.join(",")
        )));
    }
    let mut parts = Vec::new();
    for row in rdr.deserialize() {
        let row: Row = row?;
        parts.push(SourcePart {
            x1: row.x1_m,
            x2: row.x2_m,
            freq_hz: row.freq_hz,
            alpha_deg: row.alpha_deg,
            mach: row.mach,
            psd_db: row.psd_db,
            config_id: row.config_id,
        });
    }
    SourcePartSet::new(parts, grid, configs)
}
