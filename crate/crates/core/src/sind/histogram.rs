use crate::error::{Error, Result};
use crate::model::{db_to_power, power_to_db, FocusGrid, Histogram2D, SourcePart};

/// Counts how many parts sit on each grid cell.
pub fn build_histogram(parts: &[SourcePart], grid: &FocusGrid) -> Result<Histogram2D> {
    let mut h = Histogram2D::zeros(grid.clone());
    for p in parts {
        let (i, j) = grid
            .snap(p.x1, p.x2)
            .ok_or_else(|| Error::Input(format!("part at ({}, {}) is off the grid", p.x1, p.x2)))?;
        h.increment(i, j);
    }
    Ok(h)
}

/// Per-cell power sum over all parts, dB; `None` for empty cells.
pub fn oaspl_map(parts: &[SourcePart], grid: &FocusGrid) -> Result<Vec<Option<f64>>> {
    let mut acc = vec![0.0; grid.len()];
    let mut hit = vec![false; grid.len()];
    for p in parts {
        let (i, j) = grid
            .snap(p.x1, p.x2)
            .ok_or_else(|| Error::Input(format!("part at ({}, {}) is off the grid", p.x1, p.x2)))?;
        let k = grid.linear(i, j);
        acc[k] += db_to_power(p.psd_db);
        hit[k] = true;
    }
    Ok(acc
        .into_iter()
        .zip(hit)
        .map(|(p, h)| h.then(|| power_to_db(p)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(x1: f64, x2: f64, db: f64) -> SourcePart {
        SourcePart {
            x1,
            x2,
            freq_hz: 1000.0,
            alpha_deg: 0.0,
            mach: 0.1,
            psd_db: db,
            config_id: 0,
        }
    }

    fn grid() -> FocusGrid {
        FocusGrid::new([0.0, 0.0], 0.005, 10, 8, 0.65).unwrap()
    }

    #[test]
    fn counting() {
        let g = grid();
        assert_eq!(build_histogram(&[], &g).unwrap().total(), 0);
        let p = part(0.01, 0.005, 60.0);
        let h = build_histogram(&[p, p, p, part(0.0, 0.0, 1.0)], &g).unwrap();
        assert_eq!(h.get(2, 1), 3);
        assert_eq!(h.total(), 4);
        assert!(build_histogram(&[part(0.0012, 0.0, 1.0)], &g).is_err());
    }

    #[test]
    fn oaspl_power_sum() {
        let g = grid();
        let m = oaspl_map(&[part(0.01, 0.005, 60.0)], &g).unwrap();
        assert_eq!(m[g.linear(2, 1)], Some(60.0));
        assert_eq!(m.iter().flatten().count(), 1);
        let m = oaspl_map(&[part(0.01, 0.005, 60.0), part(0.01, 0.005, 60.0)], &g).unwrap();
        assert!((m[g.linear(2, 1)].unwrap() - 63.0103).abs() < 1e-4);
        assert!(oaspl_map(&[], &g).unwrap().iter().all(Option::is_none));
    }
}
