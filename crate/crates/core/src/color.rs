//! Color conversions and the quantized HSV histogram used to describe
//! superpixel appearance.

use crate::error::{Error, Result};
use crate::frame::Frame;

/// Number of histogram bins: 6 hue x 6 saturation x 6 value.
pub const HSV_BINS: usize = 216;

/// Standard hexcone RGB -> HSV. Hue is degrees in [0, 360), saturation and
/// value in [0, 1]. Achromatic inputs (s = 0) report hue 0.
pub fn rgb_to_hsv(r: u8, g: u8, b: u8) -> (f64, f64, f64) {
    let rf = r as f64 / 255.0;
    let gf = g as f64 / 255.0;
    let bf = b as f64 / 255.0;
    let max = rf.max(gf).max(bf);
    let min = rf.min(gf).min(bf);
    let delta = max - min;

    let v = max;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta <= 0.0 {
        0.0
    } else if max == rf {
        60.0 * ((gf - bf) / delta).rem_euclid(6.0)
    } else if max == gf {
        60.0 * ((bf - rf) / delta + 2.0)
    } else {
        60.0 * ((rf - gf) / delta + 4.0)
    };
    (h.rem_euclid(360.0), s, v)
}

/// sRGB (8-bit, D65) to CIELAB. Used by the segmentation backend.
pub fn rgb_to_lab(r: u8, g: u8, b: u8) -> [f64; 3] {
    // The gamma curve only ever sees the 256 8-bit inputs; table it.
    static LINEAR: std::sync::LazyLock<[f64; 256]> = std::sync::LazyLock::new(|| {
        let mut table = [0.0; 256];
        for (i, out) in table.iter_mut().enumerate() {
            let c = i as f64 / 255.0;
            *out = if c <= 0.04045 {
                c / 12.92
            } else {
                ((c + 0.055) / 1.055).powf(2.4)
            };
        }
        table
    });
    let rl = LINEAR[r as usize];
    let gl = LINEAR[g as usize];
    let bl = LINEAR[b as usize];

    let x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
    let y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
    let z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;

    fn f(t: f64) -> f64 {
        const EPS: f64 = 216.0 / 24389.0;
        const KAPPA: f64 = 24389.0 / 27.0;
        if t > EPS {
            t.cbrt()
        } else {
            (KAPPA * t + 16.0) / 116.0
        }
    }
    // D65 reference white
    let fx = f(x / 0.95047);
    let fy = f(y / 1.0);
    let fz = f(z / 1.08883);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Normalized 6x6x6 HSV color histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct HsvHistogram {
    bins: [f64; HSV_BINS],
}

impl HsvHistogram {
    /// Index layout: floor(h/60)*36 + floor(s*6)*6 + floor(v*6), with
    /// s = 1 and v = 1 clamped into the top bin.
    pub fn bin_index(h: f64, s: f64, v: f64) -> usize {
        let hb = ((h / 60.0) as usize).min(5);
        let sb = ((s * 6.0) as usize).min(5);
        let vb = ((v * 6.0) as usize).min(5);
        hb * 36 + sb * 6 + vb
    }

    pub fn from_bins(bins: [f64; HSV_BINS]) -> Result<Self> {
        let total = neumaier_sum(&bins);
        if total <= 0.0 || bins.iter().any(|&b| b < 0.0) {
            return Err(Error::EmptyRegion);
        }
        let mut bins = bins;
        for b in bins.iter_mut() {
            *b /= total;
        }
        Ok(HsvHistogram { bins })
    }

    pub fn bins(&self) -> &[f64; HSV_BINS] {
        &self.bins
    }

    pub fn sum(&self) -> f64 {
        neumaier_sum(&self.bins)
    }

    /// Bin-wise interpolation toward `other` followed by renormalization.
    pub fn blend(&mut self, other: &HsvHistogram, alpha: f64) {
        for (b, o) in self.bins.iter_mut().zip(other.bins.iter()) {
            *b = (1.0 - alpha) * *b + alpha * o;
        }
        let total = neumaier_sum(&self.bins);
        for b in self.bins.iter_mut() {
            *b /= total;
        }
    }
}

/// Builds the normalized HSV histogram of the given pixels.
pub fn histogram(frame: &Frame, pixels: &[(u32, u32)]) -> Result<HsvHistogram> {
    if pixels.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mut counts = [0u32; HSV_BINS];
    for &(x, y) in pixels {
        let [r, g, b] = frame.rgb(x, y);
        let (h, s, v) = rgb_to_hsv(r, g, b);
        counts[HsvHistogram::bin_index(h, s, v)] += 1;
    }
    let total = pixels.len() as f64;
    let mut bins = [0.0f64; HSV_BINS];
    for (bin, &c) in bins.iter_mut().zip(counts.iter()) {
        *bin = c as f64 / total;
    }
    Ok(HsvHistogram { bins })
}

/// Histogram over every pixel whose center lies inside `bbox`.
pub fn histogram_in_box(frame: &Frame, bbox: &crate::geom::BoundingBox) -> Result<HsvHistogram> {
    let x0 = bbox.x.floor().max(0.0) as u32;
    let y0 = bbox.y.floor().max(0.0) as u32;
    let x1 = ((bbox.x + bbox.w).ceil() as i64).clamp(0, frame.width() as i64) as u32;
    let y1 = ((bbox.y + bbox.h).ceil() as i64).clamp(0, frame.height() as i64) as u32;
    let mut pixels = Vec::new();
    for y in y0..y1 {
        for x in x0..x1 {
            if bbox.contains_pixel(x, y) {
                pixels.push((x, y));
            }
        }
    }
    histogram(frame, &pixels)
}

/// Bhattacharyya distance `d = sqrt(1 - sum_b sqrt(h_i[b] * h_j[b]))`,
/// clamped to [0, 1] against rounding.
pub fn bhattacharyya(h_i: &HsvHistogram, h_j: &HsvHistogram) -> f64 {
    // Compensated summation keeps d(h, h) at the 1e-8 level.
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (a, b) in h_i.bins.iter().zip(h_j.bins.iter()) {
        let term = (a * b).sqrt();
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    let bc = (sum + comp).clamp(0.0, 1.0);
    (1.0 - bc).max(0.0).sqrt().clamp(0.0, 1.0)
}

fn neumaier_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hsv_primaries() {
        assert_eq!(rgb_to_hsv(255, 0, 0), (0.0, 1.0, 1.0));
        let (h, s, v) = rgb_to_hsv(128, 128, 128);
        assert_eq!((h, s), (0.0, 0.0));
        assert!((v - 128.0 / 255.0).abs() < 1e-12);
        assert_eq!(rgb_to_hsv(0, 255, 255), (180.0, 1.0, 1.0));
    }

    #[test]
    fn hsv_hue_stays_in_range() {
        for &(r, g, b) in &[(255, 0, 1), (1, 0, 255), (0, 1, 255), (255, 1, 0)] {
            let (h, s, v) = rgb_to_hsv(r, g, b);
            assert!((0.0..360.0).contains(&h), "hue {h} for {r},{g},{b}");
            assert!((0.0..=1.0).contains(&s));
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn uniform_region_single_bin() {
        let f = Frame::filled(4, 4, [255, 0, 0], 0).unwrap();
        let pixels: Vec<_> = (0..4).flat_map(|y| (0..4).map(move |x| (x, y))).collect();
        let h = histogram(&f, &pixels).unwrap();
        let idx = HsvHistogram::bin_index(0.0, 1.0, 1.0);
        assert_eq!(h.bins()[idx], 1.0);
        assert_eq!(h.bins().iter().filter(|&&b| b > 0.0).count(), 1);
    }

    #[test]
    fn two_color_region_splits_evenly() {
        let mut f = Frame::filled(2, 1, [255, 0, 0], 0).unwrap();
        f.set_rgb(1, 0, [0, 255, 255]);
        let h = histogram(&f, &[(0, 0), (1, 0)]).unwrap();
        let red = HsvHistogram::bin_index(0.0, 1.0, 1.0);
        let cyan = HsvHistogram::bin_index(180.0, 1.0, 1.0);
        assert_eq!(h.bins()[red], 0.5);
        assert_eq!(h.bins()[cyan], 0.5);
    }

    #[test]
    fn checkerboard_splits_evenly() {
        // 10x10 checkerboard: 50 pixels per color, two bins at exactly 0.5.
        let mut f = Frame::filled(10, 10, [0, 0, 0], 0).unwrap();
        let mut pixels = Vec::new();
        for y in 0..10 {
            for x in 0..10 {
                if (x + y) % 2 == 0 {
                    f.set_rgb(x, y, [255, 0, 0]);
                } else {
                    f.set_rgb(x, y, [0, 0, 255]);
                }
                pixels.push((x, y));
            }
        }
        let h = histogram(&f, &pixels).unwrap();
        let red = HsvHistogram::bin_index(0.0, 1.0, 1.0);
        let blue = HsvHistogram::bin_index(240.0, 1.0, 1.0);
        assert_eq!(h.bins()[red], 0.5);
        assert_eq!(h.bins()[blue], 0.5);
    }

    #[test]
    fn empty_region_is_an_error() {
        let f = Frame::filled(2, 2, [1, 2, 3], 0).unwrap();
        assert!(matches!(histogram(&f, &[]), Err(Error::EmptyRegion)));
    }

    #[test]
    fn bhattacharyya_hand_value() {
        let mut a = [0.0; HSV_BINS];
        let mut b = [0.0; HSV_BINS];
        a[0] = 0.5;
        a[1] = 0.5;
        b[0] = 1.0;
        let ha = HsvHistogram::from_bins(a).unwrap();
        let hb = HsvHistogram::from_bins(b).unwrap();
        let expected = (1.0 - 0.5f64.sqrt()).sqrt(); // 0.5411961...
        assert!((bhattacharyya(&ha, &hb) - expected).abs() < 1e-12);
        assert!((expected - 0.5412).abs() < 1e-4);
    }

    #[test]
    fn bhattacharyya_extremes() {
        let mut a = [0.0; HSV_BINS];
        let mut b = [0.0; HSV_BINS];
        a[3] = 1.0;
        b[7] = 1.0;
        let ha = HsvHistogram::from_bins(a).unwrap();
        let hb = HsvHistogram::from_bins(b).unwrap();
        assert_eq!(bhattacharyya(&ha, &ha), 0.0);
        assert_eq!(bhattacharyya(&ha, &hb), 1.0);
    }

    fn arbitrary_histogram() -> impl Strategy<Value = HsvHistogram> {
        proptest::collection::vec(0.0f64..1.0, HSV_BINS).prop_filter_map("needs mass", |v| {
            let mut bins = [0.0; HSV_BINS];
            bins.copy_from_slice(&v);
            HsvHistogram::from_bins(bins).ok()
        })
    }

    proptest! {
        #[test]
        fn histogram_normalization(h in arbitrary_histogram()) {
            prop_assert!((h.sum() - 1.0).abs() < 1e-6);
        }

        #[test]
        fn bhattacharyya_identity(h in arbitrary_histogram()) {
            prop_assert!(bhattacharyya(&h, &h) <= 1e-7);
        }

        #[test]
        fn bhattacharyya_symmetry(a in arbitrary_histogram(), b in arbitrary_histogram()) {
            let d_ab = bhattacharyya(&a, &b);
            let d_ba = bhattacharyya(&b, &a);
            prop_assert_eq!(d_ab, d_ba);
            prop_assert!((0.0..=1.0).contains(&d_ab));
        }

        #[test]
        fn blend_keeps_normalization(
            mut a in arbitrary_histogram(),
            b in arbitrary_histogram(),
            alpha in 0.0f64..=1.0,
        ) {
            a.blend(&b, alpha);
            prop_assert!((a.sum() - 1.0).abs() < 1e-9);
        }
    }
}
