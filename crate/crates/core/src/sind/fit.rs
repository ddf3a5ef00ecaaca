use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::gaussian::{coefficients, eval};
use super::SindParams;
use crate::error::{Error, Result};
use crate::model::{FocusGrid, GaussianSource, Histogram2D};
use crate::optimize::{minimize_bounded, NelderMeadOptions};

/// Result of one bounded Gaussian fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub source: GaussianSource,
    /// L1 residual `Σ |hist − N|` at the optimum.
    pub residual: f64,
    /// True when the optimiser ran out of budget before converging.
    pub degraded: bool,
    pub evals: usize,
}

/// Cells around the centre that carry non-negligible mass of the surface.
const BOX_SIGMAS: f64 = 5.0;

/// Fits one rotated Gaussian to `hist`, seeded at `start_cell`.
pub fn fit_gaussian(hist: &Histogram2D, start_cell: (usize, usize), params: &SindParams) -> Result<FitOutcome> {
    fit_values(&hist.to_f64(), hist.grid(), start_cell, params, f64::INFINITY)
}

/// Core fit on a float surface (raw, log or partially subtracted counts).
/// `amp_cap` further limits the amplitude's upper bound.
pub(crate) fn fit_values(
    values: &[f64],
    grid: &FocusGrid,
    start_cell: (usize, usize),
    params: &SindParams,
    amp_cap: f64,
) -> Result<FitOutcome> {
    let (i0, j0) = start_cell;
    if i0 >= grid.n1 || j0 >= grid.n2 || values.len() != grid.len() {
        return Err(Error::Range(format!("start cell ({i0}, {j0}) outside the grid")));
    }
    let a0 = values[grid.linear(i0, j0)];
    if !(a0 > 0.0) {
        return Err(Error::Input("fit start cell holds no counts".into()));
    }
    let (n1, n2) = (grid.n1 as isize, grid.n2 as isize);
    let total: f64 = values.iter().map(|v| v.abs()).sum();
    // everything below runs in cell units
    let objective = |p: &[f64]| {
        let (amp, s1, s2, th, u0, v0) = (p[0], p[1], p[2], p[3], p[4], p[5]);
        let coef = coefficients(s1, s2, th);
        let half = (BOX_SIGMAS * s1.max(s2)).ceil() as isize;
        let (ilo, ihi) = ((u0.round() as isize - half).max(0), (u0.round() as isize + half).min(n1 - 1));
        let (jlo, jhi) = ((v0.round() as isize - half).max(0), (v0.round() as isize + half).min(n2 - 1));
        let mut r = total;
        for i in ilo..=ihi {
            for j in jlo..=jhi {
                let h = values[(i * n2 + j) as usize];
                let model = eval(amp, coef, [u0, v0], i as f64, j as f64);
                r += (h - model).abs() - h.abs();
            }
        }
        r
    };

    let eps_cells = params.eps_x(grid) / grid.spacing;
    let extent = ((grid.n1.max(grid.n2) - 1) as f64 / 2.0).max(1.0);
    let amp_lo = a0 * (1.0 - params.eps_a);
    let amp_hi = (a0 * (1.0 + params.eps_a)).min(amp_cap).max(amp_lo);
    let lo = [amp_lo, 0.5, 0.5, 0.0, i0 as f64 - eps_cells, j0 as f64 - eps_cells];
    let hi = [amp_hi, extent, extent, PI, i0 as f64 + eps_cells, j0 as f64 + eps_cells];
    let a_init = a0.clamp(amp_lo, amp_hi);
    // isotropic widths, then elongated shapes at four orientations
    let mut starts = Vec::new();
    for s in [0.5f64, 1.0, 2.0, 4.0, 8.0] {
        let s = s.min(extent);
        starts.push([a_init, s, s, 0.0, i0 as f64, j0 as f64]);
        if s >= 1.0 {
            for k in 0..4 {
                starts.push([a_init, s, 0.5 * s, k as f64 * PI / 4.0, i0 as f64, j0 as f64]);
            }
        }
    }
    let x0 = starts
        .into_iter()
        .min_by(|a, b| objective(a).total_cmp(&objective(b)))
        .expect("non-empty shape scan");
    let step_s = (0.5 * x0[2]).max(0.25);
    let opts = NelderMeadOptions {
        max_evals: params.max_evals,
        initial_step: vec![0.1 * a0, step_s, step_s, 0.3, 0.5, 0.5],
        ..Default::default()
    };
    let m = minimize_bounded(objective, &x0, &lo, &hi, &opts);
    let p = &m.x;
    let source = GaussianSource::new(
        p[0],
        p[1] * grid.spacing,
        p[2] * grid.spacing,
        p[3],
        [grid.origin[0] + p[4] * grid.spacing, grid.origin[1] + p[5] * grid.spacing],
        0,
    )?;
    Ok(FitOutcome {
        source,
        residual: m.value,
        degraded: !m.converged,
        evals: m.evals,
    })
}
