use aeroroi::beamforming::{
    clean_sc, conventional_map, read_dense_maps, steering_vectors, write_dense_maps, BeamformingParams,
};
use aeroroi::model::{db_to_power, power_to_db, ArrayGeometry, FocusGrid};
use aeroroi::synth::CrossSpectralMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn setup() -> (ArrayGeometry, FocusGrid) {
    (
        ArrayGeometry::rectangular(7, 7, 0.54, 0.54, [0.0; 3]).unwrap(),
        FocusGrid::new([-0.1, -0.1], 0.01, 21, 21, 0.65).unwrap(),
    )
}

/// `Σ p_s a_s a_sᴴ` with `a_m = exp(-ikr)/r`, built independently of the steering code.
fn monopole_csm(geom: &ArrayGeometry, freqs: &[f64], sources: &[([f64; 3], f64)], c: f64) -> CrossSpectralMatrix {
    let n = geom.len();
    let mut data = vec![Complex64::new(0.0, 0.0); freqs.len() * n * n];
    for (fi, &f) in freqs.iter().enumerate() {
        let k = 2.0 * std::f64::consts::PI * f / c;
        for &(pos, p) in sources {
            let a: Vec<Complex64> = geom
                .mic_positions()
                .iter()
                .map(|m| {
                    let r = ((m[0] - pos[0]).powi(2) + (m[1] - pos[1]).powi(2) + (m[2] - pos[2]).powi(2)).sqrt();
                    Complex64::from_polar(1.0 / r, -k * r)
                })
                .collect();
            for i in 0..n {
                for j in 0..n {
                    data[fi * n * n + i * n + j] += a[i] * a[j].conj() * p;
                }
            }
        }
    }
    CrossSpectralMatrix::new(freqs.to_vec(), n, data, 1, 0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rank_one_peak_sits_on_the_source(i in 0usize..21, j in 0usize..21, fk in 10usize..60, db in 20.0f64..80.0) {
        let (geom, grid) = setup();
        let f = 128.0 * fk as f64;
        let cell = grid.linear(i, j);
        let csm = monopole_csm(&geom, &[f], &[(grid.point3_linear(cell), db_to_power(db))], 343.0);
        let st = steering_vectors(&geom, &grid, &[f], 343.0).unwrap();
        for dr in [false, true] {
            let map = conventional_map(&csm, &st, dr).unwrap();
            prop_assert_eq!(map.argmax(0).0, cell);
            prop_assert!((map.psd_db(0, cell) - db).abs() < 0.1);
        }
        let sparse = clean_sc(&csm, &st, &BeamformingParams::default(), 0).unwrap();
        prop_assert!((power_to_db(sparse.total_power(0)) - db).abs() < 1.0);
    }

    #[test]
    fn conventional_map_scales_linearly(scale_db in -30.0f64..30.0) {
        let (geom, grid) = setup();
        let src = grid.point3_linear(grid.linear(5, 9));
        let a = monopole_csm(&geom, &[3000.0], &[(src, 1.0)], 343.0);
        let b = monopole_csm(&geom, &[3000.0], &[(src, db_to_power(scale_db))], 343.0);
        let st = steering_vectors(&geom, &grid, &[3000.0], 343.0).unwrap();
        let ma = conventional_map(&a, &st, true).unwrap();
        let mb = conventional_map(&b, &st, true).unwrap();
        for k in 0..grid.len() {
            if ma.at(0)[k] > 1e-12 {
                prop_assert!((mb.psd_db(0, k) - ma.psd_db(0, k) - scale_db).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn two_uncorrelated_sources_are_separated() {
    let (geom, grid) = setup();
    let s1 = grid.linear(3, 10);
    let s2 = grid.linear(18, 10);
    let freqs = [4096.0, 6144.0, 8192.0];
    let csm = monopole_csm(
        &geom,
        &freqs,
        &[(grid.point3_linear(s1), db_to_power(60.0)), (grid.point3_linear(s2), db_to_power(57.0))],
        343.0,
    );
    let st = steering_vectors(&geom, &grid, &freqs, 343.0).unwrap();
    let map = clean_sc(&csm, &st, &BeamformingParams::default(), 0).unwrap();
    for f in 0..freqs.len() {
        let near = |s: usize| -> f64 {
            let (si, sj) = grid.cell_of_linear(s);
            map.entries[f]
                .iter()
                .filter(|(k, _)| {
                    let (i, j) = grid.cell_of_linear(*k);
                    (i as isize - si as isize).abs() <= 1 && (j as isize - sj as isize).abs() <= 1
                })
                .map(|(_, db)| db_to_power(*db))
                .sum()
        };
        assert!((power_to_db(near(s1)) - 60.0).abs() < 1.0, "f {f}");
        assert!((power_to_db(near(s2)) - 57.0).abs() < 1.0, "f {f}");
    }
}

#[test]
fn dense_dump_round_trips() {
    let (geom, grid) = setup();
    let src = grid.point3_linear(grid.linear(10, 10));
    let csm = monopole_csm(&geom, &[2048.0, 4096.0], &[(src, 1.0)], 343.0);
    let st = steering_vectors(&geom, &grid, &[2048.0, 4096.0], 343.0).unwrap();
    let map = conventional_map(&csm, &st, false).unwrap();
    let mut buf = Vec::new();
    write_dense_maps(&mut buf, &map).unwrap();
    let (freqs, n1, n2, db) = read_dense_maps(&buf[..]).unwrap();
    assert_eq!((freqs, n1, n2), (vec![2048.0, 4096.0], 21, 21));
    for f in 0..2 {
        for k in 0..grid.len() {
            let v = map.psd_db(f, k);
            if v.is_finite() {
                assert!((db[f * grid.len() + k] as f64 - v).abs() < 1e-3);
            }
        }
    }
}

#[test]
fn zero_csm_yields_no_parts() {
    let (geom, grid) = setup();
    let csm = CrossSpectralMatrix::zeros(vec![1000.0, 2000.0], geom.len(), 0);
    let st = steering_vectors(&geom, &grid, csm.freqs_hz(), 343.0).unwrap();
    let map = clean_sc(&csm, &st, &BeamformingParams::default(), 0).unwrap();
    assert_eq!(map.n_entries(), 0);
}
