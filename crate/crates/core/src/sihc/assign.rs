use super::hdbscan::Clustering;
use super::SihcParams;
use crate::model::{
    Assignment, ClusterSource, IdentificationResult, IdentifiedSource, Method, MethodParams, SourcePartSet,
};

/// Turns a clustering into an identification result. Members below the
/// confidence cutoff become noise; clusters left without members are dropped.
pub fn assign_parts_sihc(parts: &SourcePartSet, clustering: &Clustering, params: &SihcParams) -> IdentificationResult {
    let cutoff = params.confidence_cutoff();
    let k = clustering.n_clusters();
    let mut weight = vec![0.0; k];
    let mut sum = vec![[0.0; 2]; k];
    let mut count = vec![0usize; k];
    let kept: Vec<Option<(usize, f64)>> = clustering
        .labels
        .iter()
        .zip(&clustering.probabilities)
        .map(|(l, &p)| l.filter(|_| p >= cutoff).map(|c| (c, p)))
        .collect();
    for (part, a) in parts.parts().iter().zip(&kept) {
        if let Some((c, p)) = *a {
            weight[c] += p;
            sum[c][0] += p * part.x1;
            sum[c][1] += p * part.x2;
            count[c] += 1;
        }
    }
    let mut new_index = vec![usize::MAX; k];
    let mut sources = Vec::new();
    for c in 0..k {
        if count[c] == 0 {
            continue;
        }
        new_index[c] = sources.len();
        sources.push(IdentifiedSource::Cluster(ClusterSource {
            cluster_id: c,
            midpoint: [sum[c][0] / weight[c], sum[c][1] / weight[c]],
            member_count: count[c],
            persistence: clustering.persistence[c],
        }));
    }
    let assignment = kept
        .iter()
        .map(|a| match *a {
            Some((c, p)) => Assignment::Source {
                source: new_index[c],
                confidence: p,
            },
            None => Assignment::Noise,
        })
        .collect();
    IdentificationResult {
        method_tag: Method::Sihc,
        sources,
        assignment,
        params_used: MethodParams::Sihc(params.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FocusGrid, MeasurementConfig, SourcePart};
    use crate::sihc::Clustering;

    fn parts(n: usize) -> SourcePartSet {
        let g = FocusGrid::new([0.0, 0.0], 0.005, 10, 10, 0.65).unwrap();
        let cfg = MeasurementConfig {
            mach: 0.1,
            alpha_deg: 0.0,
            sample_rate_hz: 32768.0,
            block_size: 256,
            overlap_fraction: 0.5,
            speed_of_sound_mps: 343.0,
            reference_length_m: 0.1,
            label: String::new(),
        };
        let p = (0..n)
            .map(|i| SourcePart {
                x1: 0.005 * i as f64,
                x2: 0.0,
                freq_hz: 1000.0,
                alpha_deg: 0.0,
                mach: 0.1,
                psd_db: 40.0,
                config_id: 0,
            })
            .collect();
        SourcePartSet::new(p, g, vec![cfg]).unwrap()
    }

    fn clustering(labels: Vec<Option<usize>>, probs: Vec<f64>, k: usize) -> Clustering {
        let mut c = Clustering::all_noise(labels.len());
        c.labels = labels;
        c.probabilities = probs;
        c.persistence = vec![1.0; k];
        c
    }

    #[test]
    fn cutoff_moves_weak_members_to_noise() {
        let c = clustering(vec![Some(0), Some(0), Some(0)], vec![1.0, 0.001, 0.5], 1);
        let r = assign_parts_sihc(&parts(3), &c, &SihcParams::default());
        assert_eq!(r.assignment[0], Assignment::Source { source: 0, confidence: 1.0 });
        assert!(r.assignment[1].is_noise());
        let IdentifiedSource::Cluster(s) = r.sources[0] else { panic!() };
        assert_eq!(s.member_count, 2);
        assert!((s.midpoint[0] - 0.01 * 0.5 / 1.5).abs() < 1e-12);
    }

    #[test]
    fn full_confidence_is_untouched() {
        let c = clustering(vec![Some(1), Some(0), None], vec![1.0, 1.0, 0.0], 2);
        let r = assign_parts_sihc(&parts(3), &c, &SihcParams::default());
        assert_eq!(r.sources.len(), 2);
        assert_eq!(r.assignment[0].source(), Some(1));
        assert_eq!(r.noise_count(), 1);
    }

    #[test]
    fn empty_clusters_are_dropped() {
        let c = clustering(vec![Some(0), Some(1)], vec![0.001, 1.0], 2);
        let r = assign_parts_sihc(&parts(2), &c, &SihcParams::default());
        assert_eq!(r.sources.len(), 1);
        assert_eq!(r.assignment[1].source(), Some(0));
    }
}
