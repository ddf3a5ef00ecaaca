use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::dense::{argmax, quad_form};
use super::{check_inputs, BeamformingParams, SteeringSet};
use crate::error::Result;
use crate::model::{power_to_db, FocusGrid};
use crate::par;
use crate::synth::CrossSpectralMatrix;

/// Deconvolved map: per frequency, `(cell, psd_db)` entries sorted by cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMap {
    pub grid: FocusGrid,
    pub config_id: usize,
    pub freqs_hz: Vec<f64>,
    pub entries: Vec<Vec<(usize, f64)>>,
    /// Bins whose iteration was stopped by a growing residual map.
    pub unconverged: Vec<bool>,
}

impl SparseMap {
    pub fn n_entries(&self) -> usize {
        self.entries.iter().map(Vec::len).sum()
    }

    /// Linear power sum of all entries of bin `f`.
    pub fn total_power(&self, f: usize) -> f64 {
        self.entries[f].iter().map(|(_, db)| crate::model::db_to_power(*db)).sum()
    }
}

/// Outcome of CLEAN-SC at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanScBin {
    /// `(cell, linear power)` accumulated per cell, sorted by cell.
    pub entries: Vec<(usize, f64)>,
    pub converged: bool,
    pub iterations: usize,
    /// Spatial sum of `|dirty map|` at the start and after each accepted iteration.
    pub map_sums: Vec<f64>,
}

const SOURCE_ITER: usize = 50;

/// Coherent source component `h` for the current maximum (Sijtsma's fixed point).
fn source_component(d: &[Complex64], g: &[Complex64], norm: f64, p_max: f64, dr: bool) -> Vec<Complex64> {
    let m = g.len();
    let s = norm.sqrt();
    let w: Vec<Complex64> = g.iter().map(|v| v / s).collect();
    let mut dw = vec![Complex64::new(0.0, 0.0); m];
    for i in 0..m {
        let row = &d[i * m..(i + 1) * m];
        for (j, (dij, wj)) in row.iter().zip(&w).enumerate() {
            if !(dr && i == j) {
                dw[i] += dij * wj;
            }
        }
        dw[i] /= p_max;
    }
    if !dr {
        return dw;
    }
    let mut h = dw.clone();
    for _ in 0..SOURCE_ITER {
        let hw: f64 = h.iter().zip(&w).map(|(h, w)| h.norm_sqr() * w.norm_sqr()).sum();
        let scale = 1.0 / (1.0 + hw).sqrt();
        let next: Vec<Complex64> = dw
            .iter()
            .zip(&w)
            .zip(&h)
            .map(|((dw, w), h)| (dw + w * h.norm_sqr()) * scale)
            .collect();
        let diff: f64 = next.iter().zip(&h).map(|(a, b)| (a - b).norm_sqr()).sum();
        let size: f64 = next.iter().map(|a| a.norm_sqr()).sum();
        h = next;
        if diff <= 1e-24 * size {
            break;
        }
    }
    h
}

fn clean_bin(c: &[Complex64], g: &[Complex64], steering: &SteeringSet, params: &BeamformingParams) -> CleanScBin {
    let m = steering.n_mics();
    let n_cells = steering.n_cells();
    let dr = params.diagonal_removal;
    let phi = params.loop_gain;
    let norms: Vec<f64> = (0..n_cells).map(|k| steering.normalization(k, dr)).collect();
    let mut d = c.to_vec();
    let mut map: Vec<f64> = (0..n_cells)
        .map(|k| quad_form(&d, &g[k * m..(k + 1) * m], dr) / norms[k])
        .collect();

    let (_, initial_max) = argmax(&map);
    let mut sum: f64 = map.iter().map(|v| v.abs()).sum();
    let mut out = CleanScBin {
        entries: Vec::new(),
        converged: true,
        iterations: 0,
        map_sums: vec![sum],
    };
    if !(initial_max > 0.0) {
        return out;
    }
    let threshold = initial_max * 10f64.powf(-params.stop_db / 10.0);
    let mut parts: Vec<(usize, f64)> = Vec::new();
    let mut accepted_len = 0;
    let mut accepted_iter = 0;
    let mut growth = 0;

    for it in 1..=params.max_iter {
        let (k, p_max) = argmax(&map);
        if !(p_max > threshold) {
            break;
        }
        let gk = &g[k * m..(k + 1) * m];
        let h = source_component(&d, gk, norms[k], p_max, dr);
        let amp = phi * p_max;
        parts.push((k, amp));
        for i in 0..m {
            for j in 0..m {
                d[i * m + j] -= h[i] * h[j].conj() * amp;
            }
        }
        let h2: Vec<f64> = h.iter().map(|v| v.norm_sqr()).collect();
        for (x, p) in map.iter_mut().enumerate() {
            let gx = &g[x * m..(x + 1) * m];
            let gh: Complex64 = gx.iter().zip(&h).map(|(a, b)| a.conj() * b).sum();
            let mut coh = gh.norm_sqr();
            if dr {
                coh -= steering.weighted_gain(x, &h2);
            }
            *p -= amp * coh / norms[x];
        }
        let s: f64 = map.iter().map(|v| v.abs()).sum();
        if s < sum {
            sum = s;
            accepted_len = parts.len();
            accepted_iter = it;
            growth = 0;
            out.map_sums.push(s);
        } else {
            growth += 1;
            if growth >= 2 {
                out.converged = false;
                break;
            }
        }
    }
    parts.truncate(accepted_len);
    out.iterations = accepted_iter;
    let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
    for (k, p) in parts {
        *acc.entry(k).or_insert(0.0) += p;
    }
    out.entries = acc.into_iter().collect();
    out
}

/// CLEAN-SC at frequency index `f` of `csm`.
pub fn clean_sc_frequency(
    csm: &CrossSpectralMatrix,
    steering: &SteeringSet,
    f: usize,
    params: &BeamformingParams,
) -> Result<CleanScBin> {
    params.validate()?;
    check_inputs(csm, steering)?;
    let g = steering.vectors_at(csm.freqs_hz()[f]);
    Ok(clean_bin(csm.matrix(f), &g, steering, params))
}

/// CLEAN-SC over every frequency of `csm`, bins processed independently.
pub fn clean_sc(
    csm: &CrossSpectralMatrix,
    steering: &SteeringSet,
    params: &BeamformingParams,
    config_id: usize,
) -> Result<SparseMap> {
    params.validate()?;
    check_inputs(csm, steering)?;
    let bins = par::map_range(csm.n_freqs(), |f| {
        let g = steering.vectors_at(csm.freqs_hz()[f]);
        clean_bin(csm.matrix(f), &g, steering, params)
    });
    Ok(SparseMap {
        grid: steering.grid().clone(),
        config_id,
        freqs_hz: csm.freqs_hz().to_vec(),
        unconverged: bins.iter().map(|b| !b.converged).collect(),
        entries: bins
            .into_iter()
            .map(|b| b.entries.into_iter().map(|(k, p)| (k, power_to_db(p))).collect())
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::{conventional_map, steering_vectors};
    use crate::model::{ArrayGeometry, FocusGrid};

    fn setup(freqs: &[f64]) -> SteeringSet {
        let g = ArrayGeometry::rectangular(7, 7, 0.54, 0.54, [0.0; 3]).unwrap();
        let grid = FocusGrid::new([-0.1, -0.05], 0.005, 41, 21, 0.65).unwrap();
        steering_vectors(&g, &grid, freqs, 343.0).unwrap()
    }

    fn csm_of(s: &SteeringSet, sources: &[(usize, f64)]) -> CrossSpectralMatrix {
        let m = s.n_mics();
        let mut data = Vec::new();
        for &f in s.freqs_hz() {
            let mut c = vec![Complex64::new(0.0, 0.0); m * m];
            for &(cell, p) in sources {
                let g = s.vector(f, cell);
                for i in 0..m {
                    for j in 0..m {
                        c[i * m + j] += g[i] * g[j].conj() * p;
                    }
                }
            }
            data.extend(c);
        }
        CrossSpectralMatrix::new(s.freqs_hz().to_vec(), m, data, 1, 0).unwrap()
    }

    #[test]
    fn zero_csm_gives_empty_map() {
        let s = setup(&[1000.0]);
        let csm = CrossSpectralMatrix::zeros(vec![1000.0], s.n_mics(), 0);
        let map = clean_sc(&csm, &s, &BeamformingParams::default(), 0).unwrap();
        assert_eq!(map.n_entries(), 0);
    }

    #[test]
    fn rank_one_source_is_recovered() {
        let s = setup(&[2000.0, 5000.0]);
        let cell = s.grid().linear(20, 10);
        let csm = csm_of(&s, &[(cell, 3.0)]);
        for dr in [false, true] {
            let params = BeamformingParams {
                diagonal_removal: dr,
                ..Default::default()
            };
            let map = clean_sc(&csm, &s, &params, 0).unwrap();
            let dirty = conventional_map(&csm, &s, dr).unwrap();
            for f in 0..2 {
                let (k, _) = map.entries[f].iter().copied().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
                assert_eq!(k, cell);
                let total = map.total_power(f);
                assert!((power_to_db(total) - power_to_db(3.0)).abs() < 1.0);
                let ratio = total / dirty.argmax(f).1;
                assert!((0.8..=1.05).contains(&ratio), "ratio {ratio}");
                assert!(!map.unconverged[f]);
            }
        }
    }

    #[test]
    fn two_sources_are_separated() {
        let s = setup(&[6000.0]);
        let a = s.grid().linear(5, 10);
        let b = s.grid().linear(35, 10);
        let csm = csm_of(&s, &[(a, 1.0), (b, 0.5)]);
        let map = clean_sc(&csm, &s, &BeamformingParams::default(), 0).unwrap();
        let near = |t: usize| {
            let (ti, tj) = s.grid().cell_of_linear(t);
            map.entries[0]
                .iter()
                .filter(|(k, _)| {
                    let (i, j) = s.grid().cell_of_linear(*k);
                    i.abs_diff(ti) <= 1 && j.abs_diff(tj) <= 1
                })
                .map(|e| crate::model::db_to_power(e.1))
                .sum::<f64>()
        };
        assert!((power_to_db(near(a)) - 0.0).abs() < 1.0);
        assert!((power_to_db(near(b)) - power_to_db(0.5)).abs() < 1.0);
    }

    #[test]
    fn accepted_map_sums_never_grow() {
        let s = setup(&[3000.0]);
        let csm = csm_of(&s, &[(100, 1.0), (500, 0.3), (700, 0.05)]);
        let bin = clean_sc_frequency(&csm, &s, 0, &BeamformingParams::default()).unwrap();
        assert!(bin.map_sums.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn parallel_matches_sequential() {
        let s = setup(&[1500.0, 3000.0, 4500.0]);
        let csm = csm_of(&s, &[(100, 1.0), (600, 0.3)]);
        let p = BeamformingParams::default();
        let a = clean_sc(&csm, &s, &p, 0).unwrap();
        let b = par::with_sequential(|| clean_sc(&csm, &s, &p, 0).unwrap());
        assert_eq!(a, b);
    }
}
