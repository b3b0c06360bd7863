//! Oriented keypoint detection, description, and ratio-test matching.
//!
//! The reference backend detects single-octave Harris corners with
//! blockwise non-maximum suppression and describes them with a 4x4-cell,
//! 8-orientation gradient histogram (128-D) sampled in a 16x16 window
//! rotated to the keypoint's principal orientation. Any backend with
//! repeatable oriented points can stand in through [`FeatureBackend`].

use crate::frame::Frame;
use crate::geom::Vec2;
use rayon::prelude::*;
use std::f64::consts::TAU;

pub const DESCRIPTOR_LEN: usize = 128;

/// Keypoints closer than this to the frame edge cannot be described.
const DESCRIPTOR_BORDER: f64 = 14.0;
/// Absolute cap on descriptor distance when the ratio test has no
/// second neighbor to compare against.
const SINGLETON_DISTANCE_CAP: f64 = 0.7;

/// A salient point with principal orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub position: Vec2,
    /// Radians in [0, 2pi), dominant local gradient direction.
    pub orientation: f64,
    pub response: f64,
    /// Sampling scale in pixels (single octave in the reference backend).
    pub scale: f64,
}

/// L2-normalized descriptor vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    values: [f32; DESCRIPTOR_LEN],
}

impl Descriptor {
    pub fn new(values: [f32; DESCRIPTOR_LEN]) -> Self {
        Descriptor { values }
    }

    pub fn values(&self) -> &[f32; DESCRIPTOR_LEN] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values
            .iter()
            .map(|&v| v as f64 * v as f64)
            .sum::<f64>()
            .sqrt()
    }

    pub fn distance(&self, other: &Descriptor) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(&a, &b)| {
                let d = a as f64 - b as f64;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Interpolates toward `other` and renormalizes to unit length.
    pub fn blend(&mut self, other: &Descriptor, alpha: f64) {
        for (v, o) in self.values.iter_mut().zip(other.values.iter()) {
            *v = ((1.0 - alpha) * *v as f64 + alpha * *o as f64) as f32;
        }
        let norm = self.norm();
        if norm > 0.0 {
            for v in self.values.iter_mut() {
                *v = (*v as f64 / norm) as f32;
            }
        }
    }
}

/// An accepted correspondence between two descriptor sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeypointMatch {
    pub index_a: usize,
    pub index_b: usize,
    pub distance: f64,
}

/// Result of describing a keypoint set: border keypoints are dropped and
/// reported by input index.
#[derive(Debug, Clone, Default)]
pub struct Described {
    pub keypoints: Vec<Keypoint>,
    pub descriptors: Vec<Descriptor>,
    pub dropped: Vec<usize>,
}

/// Detector/descriptor contract the tracker depends on.
pub trait FeatureBackend {
    fn detect(&self, frame: &Frame, max_keypoints: usize) -> Vec<Keypoint>;
    fn describe(&self, frame: &Frame, keypoints: &[Keypoint]) -> Described;

    fn detect_and_describe(&self, frame: &Frame, max_keypoints: usize) -> Described {
        let kps = self.detect(frame, max_keypoints);
        self.describe(frame, &kps)
    }
}

/// Reference backend: Harris corners + rotated gradient-histogram
/// descriptors.
#[derive(Debug, Clone, Copy)]
pub struct GradientFeatures {
    /// Cell size for blockwise non-maximum suppression, in pixels.
    pub nms_cell: u32,
}

impl Default for GradientFeatures {
    fn default() -> Self {
        GradientFeatures { nms_cell: 8 }
    }
}

impl GradientFeatures {
    pub fn new(nms_cell: u32) -> Self {
        GradientFeatures {
            nms_cell: nms_cell.max(2),
        }
    }
}

struct GradientField {
    w: usize,
    h: usize,
    gx: Vec<f64>,
    gy: Vec<f64>,
}

impl GradientField {
    fn compute(frame: &Frame) -> GradientField {
        let w = frame.width() as usize;
        let h = frame.height() as usize;
        let raw = frame.raw();
        let mut gray = vec![0.0f64; w * h];
        for (g, px) in gray.iter_mut().zip(raw.chunks_exact(3)) {
            *g = 0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64;
        }
        let smoothed = gaussian_blur(&gray, w, h, 1.0);
        let mut gx = vec![0.0f64; w * h];
        let mut gy = vec![0.0f64; w * h];
        for y in 1..h.saturating_sub(1) {
            for x in 1..w.saturating_sub(1) {
                let i = y * w + x;
                gx[i] = (smoothed[i + 1] - smoothed[i - 1]) / 2.0;
                gy[i] = (smoothed[i + w] - smoothed[i - w]) / 2.0;
            }
        }
        GradientField { w, h, gx, gy }
    }

    /// Bilinear gradient sample in pixel-center coordinates: the value at
    /// index (i, j) sits at position (i + 0.5, j + 0.5). Caller keeps
    /// coordinates in bounds.
    fn sample(&self, x: f64, y: f64) -> (f64, f64) {
        let x = x - 0.5;
        let y = y - 0.5;
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let xi = x0 as usize;
        let yi = y0 as usize;
        let i = yi * self.w + xi;
        let lerp = |g: &[f64]| -> f64 {
            let top = g[i] * (1.0 - fx) + g[i + 1] * fx;
            let bot = g[i + self.w] * (1.0 - fx) + g[i + self.w + 1] * fx;
            top * (1.0 - fy) + bot * fy
        };
        (lerp(&self.gx), lerp(&self.gy))
    }
}

impl FeatureBackend for GradientFeatures {
    /// Harris response with per-cell maxima, strongest first. Uniform
    /// frames yield an empty list.
    fn detect(&self, frame: &Frame, max_keypoints: usize) -> Vec<Keypoint> {
        self.detect_in(&GradientField::compute(frame), max_keypoints)
    }

    fn describe(&self, frame: &Frame, keypoints: &[Keypoint]) -> Described {
        self.describe_in(&GradientField::compute(frame), keypoints)
    }

    /// Both stages share one gradient computation.
    fn detect_and_describe(&self, frame: &Frame, max_keypoints: usize) -> Described {
        let field = GradientField::compute(frame);
        let keypoints = self.detect_in(&field, max_keypoints);
        self.describe_in(&field, &keypoints)
    }
}

impl GradientFeatures {
    fn detect_in(&self, field: &GradientField, max_keypoints: usize) -> Vec<Keypoint> {
        let (w, h) = (field.w, field.h);
        if w < 3 || h < 3 {
            return Vec::new();
        }

        let mut ixx = vec![0.0f64; w * h];
        let mut ixy = vec![0.0f64; w * h];
        let mut iyy = vec![0.0f64; w * h];
        for i in 0..w * h {
            ixx[i] = field.gx[i] * field.gx[i];
            ixy[i] = field.gx[i] * field.gy[i];
            iyy[i] = field.gy[i] * field.gy[i];
        }
        let ixx = gaussian_blur(&ixx, w, h, 2.0);
        let ixy = gaussian_blur(&ixy, w, h, 2.0);
        let iyy = gaussian_blur(&iyy, w, h, 2.0);

        let mut response = vec![0.0f64; w * h];
        let mut max_r = 0.0f64;
        for i in 0..w * h {
            let det = ixx[i] * iyy[i] - ixy[i] * ixy[i];
            let tr = ixx[i] + iyy[i];
            response[i] = det - 0.04 * tr * tr;
            if response[i] > max_r {
                max_r = response[i];
            }
        }
        let threshold = (0.01 * max_r).max(1.0);

        let cell = self.nms_cell.max(2) as usize;
        let mut winners = Vec::new();
        let mut cy = 0;
        while cy < h {
            let mut cx = 0;
            while cx < w {
                let mut best = threshold;
                let mut best_pos = None;
                for y in cy..(cy + cell).min(h) {
                    for x in cx..(cx + cell).min(w) {
                        let r = response[y * w + x];
                        if r > best {
                            best = r;
                            best_pos = Some((x, y));
                        }
                    }
                }
                if let Some((x, y)) = best_pos {
                    winners.push((x, y, best));
                }
                cx += cell;
            }
            cy += cell;
        }

        winners.sort_by(|a, b| {
            b.2.partial_cmp(&a.2)
                .unwrap()
                .then(a.1.cmp(&b.1))
                .then(a.0.cmp(&b.0))
        });
        winners.truncate(max_keypoints);

        winners
            .into_iter()
            .map(|(x, y, r)| Keypoint {
                position: Vec2::new(x as f64 + 0.5, y as f64 + 0.5),
                orientation: dominant_orientation(field, x, y),
                response: r,
                scale: 8.0,
            })
            .collect()
    }

    fn describe_in(&self, field: &GradientField, keypoints: &[Keypoint]) -> Described {
        let results: Vec<Option<Descriptor>> = keypoints
            .par_iter()
            .map(|kp| describe_one(field, kp))
            .collect();

        let mut out = Described::default();
        for (i, (kp, desc)) in keypoints.iter().zip(results).enumerate() {
            match desc {
                Some(d) => {
                    out.keypoints.push(*kp);
                    out.descriptors.push(d);
                }
                None => out.dropped.push(i),
            }
        }
        out
    }
}

/// Peak of the magnitude-weighted 36-bin gradient direction histogram in a
/// Gaussian window around (x, y), refined by parabolic interpolation.
fn dominant_orientation(field: &GradientField, x: usize, y: usize) -> f64 {
    const BINS: usize = 36;
    const RADIUS: i64 = 8;
    let mut hist = [0.0f64; BINS];
    for dy in -RADIUS..=RADIUS {
        for dx in -RADIUS..=RADIUS {
            let px = x as i64 + dx;
            let py = y as i64 + dy;
            if px < 1 || py < 1 || px >= field.w as i64 - 1 || py >= field.h as i64 - 1 {
                continue;
            }
            let i = py as usize * field.w + px as usize;
            let mag = field.gx[i].hypot(field.gy[i]);
            if mag == 0.0 {
                continue;
            }
            let angle = field.gy[i].atan2(field.gx[i]).rem_euclid(TAU);
            let weight = (-((dx * dx + dy * dy) as f64) / (2.0 * 16.0)).exp();
            let bin = ((angle / TAU * BINS as f64) as usize).min(BINS - 1);
            hist[bin] += mag * weight;
        }
    }
    // Circular smoothing stabilizes the peak on noisy textures.
    for _ in 0..2 {
        let prev = hist;
        for b in 0..BINS {
            hist[b] = (prev[(b + BINS - 1) % BINS] + 2.0 * prev[b] + prev[(b + 1) % BINS]) / 4.0;
        }
    }
    let peak = hist
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
        .map(|(b, _)| b)
        .unwrap_or(0);
    let l = hist[(peak + BINS - 1) % BINS];
    let c = hist[peak];
    let r = hist[(peak + 1) % BINS];
    let denom = l - 2.0 * c + r;
    let offset = if denom.abs() > 1e-12 {
        (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    ((peak as f64 + 0.5 + offset) / BINS as f64 * TAU).rem_euclid(TAU)
}

/// 16x16 sample window rotated to the keypoint orientation, pooled into
/// 4x4 spatial cells and 8 orientation bins with trilinear weighting, then
/// normalized with 0.2 clipping.
fn describe_one(field: &GradientField, kp: &Keypoint) -> Option<Descriptor> {
    let pos = kp.position;
    if pos.x < DESCRIPTOR_BORDER
        || pos.y < DESCRIPTOR_BORDER
        || pos.x > field.w as f64 - DESCRIPTOR_BORDER
        || pos.y > field.h as f64 - DESCRIPTOR_BORDER
    {
        return None;
    }
    let (sin, cos) = kp.orientation.sin_cos();
    let mut acc = [0.0f64; DESCRIPTOR_LEN];
    for sv in 0..16 {
        for su in 0..16 {
            let u = su as f64 - 7.5;
            let v = sv as f64 - 7.5;
            let rx = u * cos - v * sin;
            let ry = u * sin + v * cos;
            let (gx, gy) = field.sample(pos.x + rx, pos.y + ry);
            let mag = gx.hypot(gy);
            if mag == 0.0 {
                continue;
            }
            let angle = (gy.atan2(gx) - kp.orientation).rem_euclid(TAU);
            let weight = (-(u * u + v * v) / (2.0 * 64.0)).exp() * mag;

            // Trilinear soft binning over (cell_u, cell_v, orientation).
            let cu = (u + 8.0) / 4.0 - 0.5;
            let cv = (v + 8.0) / 4.0 - 0.5;
            let ob = angle / (TAU / 8.0);
            let cu0 = cu.floor();
            let cv0 = cv.floor();
            let ob0 = ob.floor();
            let fu = cu - cu0;
            let fv = cv - cv0;
            let fo = ob - ob0;
            for (du, wu) in [(0i64, 1.0 - fu), (1, fu)] {
                let ui = cu0 as i64 + du;
                if !(0..4).contains(&ui) || wu == 0.0 {
                    continue;
                }
                for (dv, wv) in [(0i64, 1.0 - fv), (1, fv)] {
                    let vi = cv0 as i64 + dv;
                    if !(0..4).contains(&vi) || wv == 0.0 {
                        continue;
                    }
                    for (do_, wo) in [(0i64, 1.0 - fo), (1, fo)] {
                        let oi = (ob0 as i64 + do_).rem_euclid(8);
                        acc[(vi as usize * 4 + ui as usize) * 8 + oi as usize] +=
                            weight * wu * wv * wo;
                    }
                }
            }
        }
    }

    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return None;
    }
    for v in acc.iter_mut() {
        *v = (*v / norm).min(0.2);
    }
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut values = [0.0f32; DESCRIPTOR_LEN];
    for (out, v) in values.iter_mut().zip(acc.iter()) {
        *out = (v / norm) as f32;
    }
    Some(Descriptor::new(values))
}

/// Lowe ratio matching with one-to-one pruning.
///
/// For each entry of `set_a` the nearest and second nearest neighbors in
/// `set_b` are found by Euclidean distance; the candidate survives iff
/// d1 < ratio * d2 (or d1 < 0.7 when `set_b` has a single entry). Each
/// `set_b` index then keeps only its smallest-distance candidate.
pub fn match_descriptors(set_a: &[Descriptor], set_b: &[Descriptor], ratio: f64) -> Vec<KeypointMatch> {
    assert!(ratio > 0.0 && ratio < 1.0, "ratio must be in (0, 1)");
    if set_a.is_empty() || set_b.is_empty() {
        return Vec::new();
    }

    let candidates: Vec<Option<(usize, f64)>> = set_a
        .par_iter()
        .map(|a| {
            let mut best = f64::INFINITY;
            let mut best_idx = 0usize;
            let mut second = f64::INFINITY;
            for (j, b) in set_b.iter().enumerate() {
                let d = a.distance(b);
                if d < best {
                    second = best;
                    best = d;
                    best_idx = j;
                } else if d < second {
                    second = d;
                }
            }
            let accepted = if set_b.len() == 1 {
                best < SINGLETON_DISTANCE_CAP
            } else {
                best < ratio * second
            };
            accepted.then_some((best_idx, best))
        })
        .collect();

    // One-to-one: per target index keep the closest source, lower source
    // index winning ties.
    let mut by_target: std::collections::BTreeMap<usize, (usize, f64)> = std::collections::BTreeMap::new();
    for (i, cand) in candidates.into_iter().enumerate() {
        if let Some((j, d)) = cand {
            match by_target.get(&j) {
                Some(&(_, prev)) if prev <= d => {}
                _ => {
                    by_target.insert(j, (i, d));
                }
            }
        }
    }
    let mut matches: Vec<KeypointMatch> = by_target
        .into_iter()
        .map(|(j, (i, d))| KeypointMatch {
            index_a: i,
            index_b: j,
            distance: d,
        })
        .collect();
    matches.sort_by_key(|m| m.index_a);
    matches
}

fn gaussian_blur(data: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let ksum: f64 = kernel.iter().sum();
    let kernel: Vec<f64> = kernel.into_iter().map(|k| k / ksum).collect();

    let mut tmp = vec![0.0f64; w * h];
    tmp.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, out) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                let sx = (x as i64 + k as i64 - radius).clamp(0, w as i64 - 1) as usize;
                acc += data[y * w + sx] * kv;
            }
            *out = acc;
        }
    });
    let mut out = vec![0.0f64; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, out_px) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                let sy = (y as i64 + k as i64 - radius).clamp(0, h as i64 - 1) as usize;
                acc += tmp[sy * w + x] * kv;
            }
            *out_px = acc;
        }
    });
    out
}
