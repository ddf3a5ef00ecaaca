use std::io::{Read, Write};

use num_complex::Complex64;

use super::{check_inputs, SteeringSet};
use crate::error::{Error, Result};
use crate::model::{power_to_db, FocusGrid};
use crate::par;
use crate::synth::CrossSpectralMatrix;

/// Magic bytes of the dense-map debug dump.
pub const DENSE_MAGIC: &[u8; 8] = b"AERODMP1";

/// Dirty beamforming maps, linear Pa²/Hz, row-major `[freq][cell]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMap {
    pub freqs_hz: Vec<f64>,
    pub grid: FocusGrid,
    pub power: Vec<f64>,
}

impl DenseMap {
    pub fn at(&self, f: usize) -> &[f64] {
        let n = self.grid.len();
        &self.power[f * n..(f + 1) * n]
    }

    /// Level in dB; non-positive power maps to `-inf`.
    pub fn psd_db(&self, f: usize, cell: usize) -> f64 {
        let p = self.at(f)[cell];
        if p > 0.0 {
            power_to_db(p)
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Index and value of the largest entry in bin `f`.
    pub fn argmax(&self, f: usize) -> (usize, f64) {
        argmax(self.at(f))
    }
}

pub(crate) fn argmax(v: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &x) in v.iter().enumerate() {
        if x > best.1 {
            best = (i, x);
        }
    }
    best
}

/// `g^H C g` with the diagonal of `C` optionally skipped. Returns the real part.
pub(crate) fn quad_form(c: &[Complex64], g: &[Complex64], skip_diagonal: bool) -> f64 {
    let m = g.len();
    let mut acc = 0.0;
    for i in 0..m {
        let row = &c[i * m..(i + 1) * m];
        let mut s = Complex64::new(0.0, 0.0);
        for (j, (cij, gj)) in row.iter().zip(g).enumerate() {
            if skip_diagonal && i == j {
                continue;
            }
            s += cij * gj;
        }
        acc += (g[i].conj() * s).re;
    }
    acc
}

/// Conventional beamforming map `b = w^H C w`, `w = g / ‖g‖²`.
///
/// With `diagonal_removal` the CSM diagonal is ignored and the map is
/// normalised by `‖g‖⁴ − Σ|g_m|⁴`, which keeps point-source levels exact.
pub fn conventional_map(csm: &CrossSpectralMatrix, steering: &SteeringSet, diagonal_removal: bool) -> Result<DenseMap> {
    check_inputs(csm, steering)?;
    let m = steering.n_mics();
    let n_cells = steering.n_cells();
    let rows = par::map_range(csm.n_freqs(), |f| {
        let c = csm.matrix(f);
        let g = steering.vectors_at(csm.freqs_hz()[f]);
        (0..n_cells)
            .map(|k| {
                let gk = &g[k * m..(k + 1) * m];
                quad_form(c, gk, diagonal_removal) / steering.normalization(k, diagonal_removal)
            })
            .collect::<Vec<f64>>()
    });
    Ok(DenseMap {
        freqs_hz: csm.freqs_hz().to_vec(),
        grid: steering.grid().clone(),
        power: rows.concat(),
    })
}

/// Writes dense maps: magic, `u32` version, `u32` bin count, `u32` n1, `u32` n2,
/// `f64` frequencies, then `f32` dB values `[freq][cell]`, all little-endian.
pub fn write_dense_maps<W: Write>(mut w: W, map: &DenseMap) -> Result<()> {
    w.write_all(DENSE_MAGIC)?;
    for v in [1, map.freqs_hz.len(), map.grid.n1, map.grid.n2] {
        let v = u32::try_from(v).map_err(|_| Error::Format("dimension does not fit in u32".into()))?;
        w.write_all(&v.to_le_bytes())?;
    }
    for f in &map.freqs_hz {
        w.write_all(&f.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(map.power.len() * 4);
    for &p in &map.power {
        let db = if p > 0.0 { power_to_db(p) } else { f64::NEG_INFINITY };
        buf.extend_from_slice(&(db as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads a dump written by [`write_dense_maps`] into frequencies and dB rows.
pub fn read_dense_maps<R: Read>(mut r: R) -> Result<(Vec<f64>, usize, usize, Vec<f32>)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let trunc = || Error::Format("truncated dense map dump".into());
    if bytes.len() < 24 || &bytes[..8] != DENSE_MAGIC {
        return Err(Error::Format("not a dense map dump".into()));
    }
    let u = |i: usize| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap()) as usize;
    if u(0) != 1 {
        return Err(Error::Format(format!("unsupported dump version {}", u(0))));
    }
    let (nf, n1, n2) = (u(1), u(2), u(3));
    let mut off = 24;
    let need = off + nf * 8 + nf * n1 * n2 * 4;
    if bytes.len() != need {
        return Err(trunc());
    }
    let freqs = (0..nf)
        .map(|i| f64::from_le_bytes(bytes[off + 8 * i..off + 8 * i + 8].try_into().unwrap()))
        .collect();
    off += nf * 8;
    let vals = bytes[off..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((freqs, n1, n2, vals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::steering_vectors;
    use crate::model::ArrayGeometry;

    fn setup() -> (SteeringSet, FocusGrid) {
        let g = ArrayGeometry::rectangular(4, 4, 0.5, 0.5, [0.0; 3]).unwrap();
        let grid = FocusGrid::new([-0.05, -0.05], 0.01, 11, 11, 0.6).unwrap();
        (steering_vectors(&g, &grid, &[2000.0, 4000.0], 343.0).unwrap(), grid)
    }

    fn rank_one(s: &SteeringSet, cell: usize, p: f64) -> CrossSpectralMatrix {
        let m = s.n_mics();
        let mut data = Vec::new();
        for &f in s.freqs_hz() {
            let g = s.vector(f, cell);
            for i in 0..m {
                for j in 0..m {
                    data.push(g[i] * g[j].conj() * p);
                }
            }
        }
        CrossSpectralMatrix::new(s.freqs_hz().to_vec(), m, data, 1, 0).unwrap()
    }

    #[test]
    fn zero_csm_gives_empty_map() {
        let (s, _) = setup();
        let csm = CrossSpectralMatrix::zeros(s.freqs_hz().to_vec(), s.n_mics(), 0);
        let map = conventional_map(&csm, &s, true).unwrap();
        assert!(map.power.iter().all(|&p| p == 0.0));
        assert_eq!(map.psd_db(0, 0), f64::NEG_INFINITY);
    }

    #[test]
    fn rank_one_source_level_is_exact() {
        let (s, grid) = setup();
        let cell = grid.linear(3, 7);
        let csm = rank_one(&s, cell, 2.5);
        for dr in [false, true] {
            let map = conventional_map(&csm, &s, dr).unwrap();
            for f in 0..2 {
                let (k, p) = map.argmax(f);
                assert_eq!(k, cell);
                assert!((power_to_db(p) - power_to_db(2.5)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn non_hermitian_input_rejected() {
        let (s, _) = setup();
        let mut csm = rank_one(&s, 0, 1.0);
        let mut d = csm.data().to_vec();
        d[1] += Complex64::new(1.0, 0.0);
        csm = CrossSpectralMatrix::new(csm.freqs_hz().to_vec(), s.n_mics(), d, 1, 0).unwrap();
        assert!(matches!(conventional_map(&csm, &s, false), Err(Error::Input(_))));
    }

    #[test]
    fn dump_round_trip() {
        let (s, grid) = setup();
        let map = conventional_map(&rank_one(&s, 5, 1.0), &s, true).unwrap();
        let mut buf = Vec::new();
        write_dense_maps(&mut buf, &map).unwrap();
        let (f, n1, n2, v) = read_dense_maps(buf.as_slice()).unwrap();
        assert_eq!(f, map.freqs_hz);
        assert_eq!((n1, n2), (grid.n1, grid.n2));
        assert_eq!(v.len(), map.power.len());
        assert!(read_dense_maps(&buf[..buf.len() - 2]).is_err());
    }
}
