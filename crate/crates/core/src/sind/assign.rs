use super::gaussian::pdf_value;
use super::SindParams;
use crate::model::{
    Assignment, GaussianSource, IdentificationResult, IdentifiedSource, Method, MethodParams, SourcePartSet,
};
use crate::par;

/// Assigns each part to the source of highest PDF value, or to noise below
/// the `exp(-k²/2)` contour. Ties go to the lowest `order_index`.
pub fn assign_parts_sind(parts: &SourcePartSet, sources: &[GaussianSource], params: &SindParams) -> IdentificationResult {
    let positions: Vec<[f64; 2]> = parts.parts().iter().map(|p| p.position()).collect();
    assign_positions(&positions, sources, params)
}

pub(crate) fn assign_positions(positions: &[[f64; 2]], sources: &[GaussianSource], params: &SindParams) -> IdentificationResult {
    let cutoff = params.confidence_cutoff();
    let mut order: Vec<usize> = (0..sources.len()).collect();
    order.sort_by_key(|&i| sources[i].order_index);
    let assignment = par::map_slice(positions, |&[x1, x2]| {
        let mut best: Option<(usize, f64)> = None;
        for &i in &order {
            let c = pdf_value(&sources[i], x1, x2);
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((i, c));
            }
        }
        match best {
            Some((source, confidence)) if confidence >= cutoff => Assignment::Source {
                source,
                confidence: confidence.clamp(0.0, 1.0),
            },
            _ => Assignment::Noise,
        }
    });
    IdentificationResult {
        method_tag: Method::Sind,
        sources: sources.iter().map(|s| IdentifiedSource::Gaussian(*s)).collect(),
        assignment,
        params_used: MethodParams::Sind(params.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn src(x: f64, order: usize) -> GaussianSource {
        GaussianSource::new(10.0, 0.01, 0.01, 0.0, [x, 0.0], order).unwrap()
    }

    #[test]
    fn centre_part_has_full_confidence() {
        let r = assign_positions(&[[0.0, 0.0]], &[src(0.0, 0)], &SindParams::default());
        assert_eq!(r.assignment[0], Assignment::Source { source: 0, confidence: 1.0 });
    }

    #[test]
    fn ties_go_to_first_extracted() {
        let s = [src(0.02, 1), src(-0.02, 0)];
        let r = assign_positions(&[[0.0, 0.0]], &s, &SindParams::default());
        assert_eq!(r.assignment[0].source(), Some(1));
    }

    #[test]
    fn far_parts_are_noise() {
        let r = assign_positions(&[[0.05, 0.0]], &[src(0.0, 0)], &SindParams::default());
        assert!(r.assignment[0].is_noise());
        let r = assign_positions(&[[0.0, 0.0]], &[], &SindParams::default());
        assert!(r.assignment[0].is_noise());
    }
}
