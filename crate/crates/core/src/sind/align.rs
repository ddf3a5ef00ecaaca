use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Histogram2D;
use crate::optimize::{minimize_bounded, NelderMeadOptions};
use crate::par;

/// Affine per-axis map between a configuration and the reference:
/// `x_config = a · x_reference + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentTransform {
    pub config_id: usize,
    pub reference_config_id: usize,
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    /// Normalised cross-correlation reached.
    pub correlation: f64,
    /// Set when an empty histogram forced the identity.
    pub identity_fallback: bool,
}

impl AlignmentTransform {
    pub fn identity(config_id: usize, reference_config_id: usize) -> Self {
        Self {
            config_id,
            reference_config_id,
            a1: 1.0,
            a2: 1.0,
            b1: 0.0,
            b2: 0.0,
            correlation: 1.0,
            identity_fallback: false,
        }
    }

    /// Reference-frame position to configuration frame.
    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        [self.a1 * p[0] + self.b1, self.a2 * p[1] + self.b2]
    }

    /// Configuration-frame position back to the reference frame.
    pub fn to_reference(&self, p: [f64; 2]) -> [f64; 2] {
        [(p[0] - self.b1) / self.a1, (p[1] - self.b2) / self.a2]
    }
}

const COARSE_CELLS: isize = 8;
const REFINE_CELLS: f64 = 2.0;
const STRETCH: (f64, f64) = (0.9, 1.1);

fn ncc(t: &[f64], r: &[f64]) -> f64 {
    let n = t.len() as f64;
    let (mt, mr) = (t.iter().sum::<f64>() / n, r.iter().sum::<f64>() / n);
    let (mut num, mut dt, mut dr) = (0.0, 0.0, 0.0);
    for (a, b) in t.iter().zip(r) {
        num += (a - mt) * (b - mr);
        dt += (a - mt) * (a - mt);
        dr += (b - mr) * (b - mr);
    }
    if dt > 0.0 && dr > 0.0 {
        num / (dt * dr).sqrt()
    } else {
        0.0
    }
}

fn bilinear(v: &[f64], n1: usize, n2: usize, u: f64, w: f64) -> f64 {
    let (i0, j0) = (u.floor(), w.floor());
    let (fu, fw) = (u - i0, w - j0);
    let at = |i: f64, j: f64| {
        if i < 0.0 || j < 0.0 || i >= n1 as f64 || j >= n2 as f64 {
            0.0
        } else {
            v[i as usize * n2 + j as usize]
        }
    };
    at(i0, j0) * (1.0 - fu) * (1.0 - fw)
        + at(i0 + 1.0, j0) * fu * (1.0 - fw)
        + at(i0, j0 + 1.0) * (1.0 - fu) * fw
        + at(i0 + 1.0, j0 + 1.0) * fu * fw
}

/// Per-configuration transforms maximising the normalised cross-correlation
/// with the reference histogram. The reference itself gets the identity.
pub fn align_maps(hists: &[Histogram2D], reference_id: usize) -> Result<Vec<AlignmentTransform>> {
    if hists.len() < 2 {
        return Err(Error::Input("alignment needs at least two configurations".into()));
    }
    let reference = hists
        .get(reference_id)
        .ok_or_else(|| Error::Config(format!("reference configuration {reference_id} out of range")))?;
    let grid = reference.grid();
    if hists.iter().any(|h| h.grid() != grid) {
        return Err(Error::Shape("histograms use different grids".into()));
    }
    let (n1, n2) = (grid.n1, grid.n2);
    let r = reference.to_f64();
    // stretch pivots about the grid centre, in cell units
    let (c1, c2) = ((n1 - 1) as f64 / 2.0, (n2 - 1) as f64 / 2.0);

    Ok(par::map_range(hists.len(), |c| {
        if c == reference_id {
            return AlignmentTransform::identity(c, reference_id);
        }
        let t = hists[c].to_f64();
        if hists[c].total() == 0 || reference.total() == 0 {
            return AlignmentTransform {
                identity_fallback: true,
                correlation: 0.0,
                ..AlignmentTransform::identity(c, reference_id)
            };
        }
        let resample = |p: &[f64]| -> Vec<f64> {
            let mut out = Vec::with_capacity(n1 * n2);
            for i in 0..n1 {
                let u = p[0] * (i as f64 - c1) + c1 + p[2];
                for j in 0..n2 {
                    let w = p[1] * (j as f64 - c2) + c2 + p[3];
                    out.push(bilinear(&t, n1, n2, u, w));
                }
            }
            out
        };

        let mut best = ((0isize, 0isize), f64::NEG_INFINITY);
        for s1 in -COARSE_CELLS..=COARSE_CELLS {
            for s2 in -COARSE_CELLS..=COARSE_CELLS {
                let score = ncc(&resample(&[1.0, 1.0, s1 as f64, s2 as f64]), &r);
                let closer = (s1.abs() + s2.abs()) < (best.0 .0.abs() + best.0 .1.abs());
                if score > best.1 || (score == best.1 && closer) {
                    best = ((s1, s2), score);
                }
            }
        }
        let (s1, s2) = (best.0 .0 as f64, best.0 .1 as f64);
        let x0 = [1.0, 1.0, s1, s2];
        let lo = [STRETCH.0, STRETCH.0, s1 - REFINE_CELLS, s2 - REFINE_CELLS];
        let hi = [STRETCH.1, STRETCH.1, s1 + REFINE_CELLS, s2 + REFINE_CELLS];
        let opts = NelderMeadOptions {
            max_evals: 600,
            initial_step: vec![0.02, 0.02, 0.5, 0.5],
            ..Default::default()
        };
        let m = minimize_bounded(|p| -ncc(&resample(p), &r), &x0, &lo, &hi, &opts);
        let p = if -m.value > best.1 { m.x } else { x0.to_vec() };
        let corr = (-m.value).max(best.1);
        let sp = grid.spacing;
        // x_cfg = a (x_ref − pivot) + pivot + shift, in metres
        let pivot1 = grid.origin[0] + c1 * sp;
        let pivot2 = grid.origin[1] + c2 * sp;
        AlignmentTransform {
            config_id: c,
            reference_config_id: reference_id,
            a1: p[0],
            a2: p[1],
            b1: pivot1 * (1.0 - p[0]) + p[2] * sp,
            b2: pivot2 * (1.0 - p[1]) + p[3] * sp,
            correlation: corr,
            identity_fallback: false,
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FocusGrid, GaussianSource};
    use crate::sind::gaussian2d;

    fn blobs(shift: [f64; 2]) -> Histogram2D {
        let g = FocusGrid::new([-0.1, -0.05], 0.005, 61, 31, 0.65).unwrap();
        let s = [
            GaussianSource::new(60.0, 0.01, 0.006, 0.3, [-0.05 + shift[0], 0.0 + shift[1]], 0).unwrap(),
            GaussianSource::new(30.0, 0.008, 0.008, 0.0, [0.08 + shift[0], 0.02 + shift[1]], 0).unwrap(),
        ];
        let c = g
            .points()
            .iter()
            .map(|p| s.iter().map(|s| gaussian2d(s, p[0], p[1])).sum::<f64>().round() as u64)
            .collect();
        Histogram2D::from_counts(g, c).unwrap()
    }

    #[test]
    fn self_alignment_is_identity() {
        let h = blobs([0.0, 0.0]);
        let t = align_maps(&[h.clone(), h], 0).unwrap();
        assert!((t[1].a1 - 1.0).abs() < 1e-3 && (t[1].a2 - 1.0).abs() < 1e-3);
        assert!(t[1].b1.abs() < 0.0005 && t[1].b2.abs() < 0.0005);
    }

    #[test]
    fn recovers_shift() {
        let t = align_maps(&[blobs([0.0, 0.0]), blobs([0.015, 0.0])], 0).unwrap();
        assert!((t[1].b1 - 0.015).abs() < 0.0025, "{:?}", t[1]);
        let back = t[1].to_reference([0.015 - 0.05, 0.0]);
        assert!((back[0] + 0.05).abs() < 0.0025);
    }

    #[test]
    fn empty_histogram_falls_back() {
        let h = blobs([0.0, 0.0]);
        let z = Histogram2D::zeros(h.grid().clone());
        let t = align_maps(&[h, z], 0).unwrap();
        assert!(t[1].identity_fallback);
        assert_eq!((t[1].a1, t[1].b1), (1.0, 0.0));
    }
}
