//! Butterworth band-limiting filters built from bilinear-transform biquads.

use std::f64::consts::PI;

/// Direct-form-I second-order section, normalised so `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn normalised(b: [f64; 3], a: [f64; 3]) -> Self {
        let a0 = a[0];
        Self {
            b: [b[0] / a0, b[1] / a0, b[2] / a0],
            a: [1.0, a[1] / a0, a[2] / a0],
        }
    }

    fn lowpass(w0: f64, q: f64) -> Self {
        let (s, c) = w0.sin_cos();
        let alpha = s / (2.0 * q);
        Self::normalised(
            [(1.0 - c) / 2.0, 1.0 - c, (1.0 - c) / 2.0],
            [1.0 + alpha, -2.0 * c, 1.0 - alpha],
        )
    }

    fn highpass(w0: f64, q: f64) -> Self {
        let (s, c) = w0.sin_cos();
        let alpha = s / (2.0 * q);
        Self::normalised(
            [(1.0 + c) / 2.0, -(1.0 + c), (1.0 + c) / 2.0],
            [1.0 + alpha, -2.0 * c, 1.0 - alpha],
        )
    }

    // first-order sections stored with b[2] = a[2] = 0
    fn lowpass1(w0: f64) -> Self {
        let k = (w0 / 2.0).tan();
        Self::normalised([k, k, 0.0], [1.0 + k, k - 1.0, 0.0])
    }

    fn highpass1(w0: f64) -> Self {
        let k = (w0 / 2.0).tan();
        Self::normalised([1.0, -1.0, 0.0], [1.0 + k, k - 1.0, 0.0])
    }

    /// Complex gain at normalised angular frequency `w`.
    fn response(&self, w: f64) -> (f64, f64) {
        let z1 = (w.cos(), -w.sin());
        let z2 = ((2.0 * w).cos(), -(2.0 * w).sin());
        let num = (
            self.b[0] + self.b[1] * z1.0 + self.b[2] * z2.0,
            self.b[1] * z1.1 + self.b[2] * z2.1,
        );
        let den = (
            self.a[0] + self.a[1] * z1.0 + self.a[2] * z2.0,
            self.a[1] * z1.1 + self.a[2] * z2.1,
        );
        let d = den.0 * den.0 + den.1 * den.1;
        (
            (num.0 * den.0 + num.1 * den.1) / d,
            (num.1 * den.0 - num.0 * den.1) / d,
        )
    }
}

fn butterworth_sections(order: usize, w0: f64, high: bool) -> Vec<Biquad> {
    let mut out = Vec::new();
    for k in 1..=order / 2 {
        let q = 1.0 / (2.0 * ((2 * k - 1) as f64 * PI / (2 * order) as f64).sin());
        out.push(if high { Biquad::highpass(w0, q) } else { Biquad::lowpass(w0, q) });
    }
    if order % 2 == 1 {
        out.push(if high { Biquad::highpass1(w0) } else { Biquad::lowpass1(w0) });
    }
    out
}

/// Butterworth high-pass at `low_hz` cascaded with a Butterworth low-pass at `high_hz`.
/// Each edge's order is its roll-off in dB/octave divided by 6.
#[derive(Debug, Clone, PartialEq)]
pub struct BandFilter {
    sections: Vec<Biquad>,
}

impl BandFilter {
    pub fn new(sample_rate: f64, low_hz: f64, low_rolloff_db: f64, high_hz: f64, high_rolloff_db: f64) -> Self {
        let order = |r: f64| ((r / 6.0).round() as usize).max(1);
        let w = |f: f64| 2.0 * PI * f / sample_rate;
        let mut sections = butterworth_sections(order(low_rolloff_db), w(low_hz), true);
        sections.extend(butterworth_sections(order(high_rolloff_db), w(high_hz), false));
        Self { sections }
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Magnitude response in dB at `freq_hz`.
    pub fn gain_db(&self, freq_hz: f64, sample_rate: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / sample_rate;
        self.sections
            .iter()
            .map(|s| {
                let (re, im) = s.response(w);
                10.0 * (re * re + im * im).log10()
            })
            .sum()
    }

    /// Filters `x` in place.
    pub fn apply(&self, x: &mut [f64]) {
        for s in &self.sections {
            let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
            for v in x.iter_mut() {
                let x0 = *v;
                let y0 = s.b[0] * x0 + s.b[1] * x1 + s.b[2] * x2 - s.a[1] * y1 - s.a[2] * y2;
                x2 = x1;
                x1 = x0;
                y2 = y1;
                y1 = y0;
                *v = y0;
            }
        }
    }
}
