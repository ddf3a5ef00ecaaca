use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::model::GaussianSource;

/// Quadratic-form coefficients `(a, b, c)` of a rotated Gaussian.
pub(crate) fn coefficients(sigma1: f64, sigma2: f64, theta: f64) -> (f64, f64, f64) {
    let (s, c) = theta.sin_cos();
    let (s1, s2) = (sigma1 * sigma1, sigma2 * sigma2);
    let a = c * c / (2.0 * s1) + s * s / (2.0 * s2);
    let b = -(2.0 * theta).sin() / (4.0 * s1) + (2.0 * theta).sin() / (4.0 * s2);
    let cc = s * s / (2.0 * s1) + c * c / (2.0 * s2);
    (a, b, cc)
}

#[inline]
pub(crate) fn eval(amplitude: f64, (a, b, c): (f64, f64, f64), center: [f64; 2], x1: f64, x2: f64) -> f64 {
    let d1 = x1 - center[0];
    let d2 = x2 - center[1];
    amplitude * (-(a * d1 * d1 + 2.0 * b * d1 * d2 + c * d2 * d2)).exp()
}

/// Height of the fitted surface at `(x1, x2)`, counts.
pub fn gaussian2d(src: &GaussianSource, x1: f64, x2: f64) -> f64 {
    eval(src.amplitude, coefficients(src.sigma1, src.sigma2, src.theta), src.center, x1, x2)
}

/// Amplitude-normalised surface, 1 at the centre.
pub fn pdf_value(src: &GaussianSource, x1: f64, x2: f64) -> f64 {
    eval(1.0, coefficients(src.sigma1, src.sigma2, src.theta), src.center, x1, x2)
}

/// Integral of the fitted surface over the plane, `2π Â σ₁ σ₂`.
pub fn source_area(src: &GaussianSource) -> f64 {
    2.0 * PI * src.amplitude * src.sigma1 * src.sigma2
}

/// Closed `k`-σ contour of one source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsePolyline {
    pub source: usize,
    pub k: f64,
    pub points: Vec<[f64; 2]>,
}

/// Contours at each level in `levels` for every source, `n` vertices each
/// (first vertex repeated at the end).
pub fn ellipse_polylines(sources: &[GaussianSource], levels: &[f64], n: usize) -> Vec<EllipsePolyline> {
    let n = n.max(3);
    let mut out = Vec::with_capacity(sources.len() * levels.len());
    for (idx, s) in sources.iter().enumerate() {
        let (sn, cs) = s.theta.sin_cos();
        // principal axes matching the sign convention of `coefficients`
        let u = [cs, -sn];
        let v = [sn, cs];
        for &k in levels {
            let points = (0..=n)
                .map(|t| {
                    let phi = 2.0 * PI * (t % n) as f64 / n as f64;
                    let (a, b) = (k * s.sigma1 * phi.cos(), k * s.sigma2 * phi.sin());
                    [s.center[0] + a * u[0] + b * v[0], s.center[1] + a * u[1] + b * v[1]]
                })
                .collect();
            out.push(EllipsePolyline { source: idx, k, points });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn src(a: f64, s1: f64, s2: f64, th: f64) -> GaussianSource {
        GaussianSource::new(a, s1, s2, th, [0.0, 0.0], 0).unwrap()
    }

    #[test]
    fn peak_and_one_sigma() {
        let s = src(1.0, 1.0, 1.0, 0.0);
        assert_eq!(gaussian2d(&s, 0.0, 0.0), 1.0);
        assert_relative_eq!(gaussian2d(&s, 1.0, 0.0), 0.60653, epsilon = 1e-5);
    }

    #[test]
    fn rotated_matches_principal_axes() {
        let th = PI / 4.0;
        let s = src(1.0, 2.0, 1.0, th);
        let (x, y) = (1.0, 1.0);
        let u = th.cos() * x - th.sin() * y;
        let v = th.sin() * x + th.cos() * y;
        let expect = (-(u * u / 8.0 + v * v / 2.0)).exp();
        assert_relative_eq!(gaussian2d(&s, x, y), expect, epsilon = 1e-14);
    }

    #[test]
    fn pdf_contours() {
        let s = src(7.0, 0.02, 0.01, 0.0);
        assert_eq!(pdf_value(&s, 0.0, 0.0), 1.0);
        assert_relative_eq!(pdf_value(&s, 0.04, 0.0), (-2.0f64).exp(), epsilon = 1e-14);
        assert_relative_eq!(pdf_value(&s, 0.0, 0.03), 0.011109, epsilon = 1e-6);
    }

    #[test]
    fn area_closed_form_against_quadrature() {
        assert_relative_eq!(source_area(&src(1.0, 1.0, 1.0, 0.0)), 2.0 * PI);
        let s = src(10.0, 0.02, 0.01, 0.7);
        let h = 0.0005;
        let mut q = 0.0;
        for i in -400..=400 {
            for j in -400..=400 {
                q += gaussian2d(&s, i as f64 * h, j as f64 * h) * h * h;
            }
        }
        assert_relative_eq!(source_area(&s), 0.012566, epsilon = 1e-6);
        assert!((q / source_area(&s) - 1.0).abs() < 1e-3);
        assert_relative_eq!(source_area(&src(20.0, 0.02, 0.01, 0.7)), 2.0 * source_area(&s), epsilon = 1e-15);
    }

    #[test]
    fn ellipse_points_lie_on_contour() {
        let s = GaussianSource::new(5.0, 0.03, 0.01, 0.4, [0.1, -0.2], 0).unwrap();
        let lines = ellipse_polylines(&[s], &[1.0, 2.0, 3.0], 32);
        assert_eq!(lines.len(), 3);
        for l in &lines {
            assert_eq!(l.points.first(), l.points.last());
            for p in &l.points {
                assert_relative_eq!(pdf_value(&s, p[0], p[1]), (-l.k * l.k / 2.0).exp(), epsilon = 1e-12);
            }
        }
    }
}
