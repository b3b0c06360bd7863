//! Superpixel oversegmentation behind a deterministic SLIC backend.
//!
//! The clustering runs k-means in (l, a, b, x, y) space for a fixed number
//! of iterations from grid-initialized seeds, then enforces 4-connectivity
//! by merging orphan components into the dominant adjacent superpixel. Same
//! frame, same plan, same compactness: bit-identical label map.

use crate::color::{histogram, rgb_to_lab, HsvHistogram};
use crate::error::Result;
use crate::frame::Frame;
use crate::geom::Vec2;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::io::Write;

const SLIC_ITERATIONS: usize = 10;

/// A connected pixel region with its centroid and color histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Superpixel {
    pub id: u32,
    pub center: Vec2,
    pub pixels: Vec<(u32, u32)>,
    pub histogram: HsvHistogram,
}

impl Superpixel {
    /// Shifts the superpixel by a whole-pixel offset (used when the
    /// segmentation ran on a cropped window).
    pub fn translated(mut self, dx: u32, dy: u32) -> Superpixel {
        self.center = self.center + Vec2::new(dx as f64, dy as f64);
        for p in self.pixels.iter_mut() {
            p.0 += dx;
            p.1 += dy;
        }
        self
    }
}

/// Dense per-pixel label image. `origin` is nonzero when the segmentation
/// covered a window of a larger frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    width: u32,
    height: u32,
    origin: (u32, u32),
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn with_origin(mut self, origin: (u32, u32)) -> LabelMap {
        self.origin = origin;
        self
    }

    /// Label under the given absolute pixel coordinate, if covered.
    pub fn label_at(&self, x: u32, y: u32) -> Option<u32> {
        let lx = x.checked_sub(self.origin.0)?;
        let ly = y.checked_sub(self.origin.1)?;
        if lx >= self.width || ly >= self.height {
            return None;
        }
        Some(self.labels[ly as usize * self.width as usize + lx as usize])
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Writes the label map as a 16-bit binary PGM for inspection.
    pub fn write_pgm(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "P5\n{} {}\n65535", self.width, self.height)?;
        for &l in &self.labels {
            out.write_all(&(l.min(65535) as u16).to_be_bytes())?;
        }
        Ok(())
    }
}

/// Target superpixel count and diameter for a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentationPlan {
    pub n_superpixels: usize,
    pub diameter: f64,
}

impl SegmentationPlan {
    fn from_count(frame_dims: (u32, u32), n: usize) -> SegmentationPlan {
        let area = frame_dims.0 as f64 * frame_dims.1 as f64;
        let n = n.max(1).min(area as usize);
        SegmentationPlan {
            n_superpixels: n,
            diameter: (area / n as f64).sqrt(),
        }
    }
}

/// Plans a frame segmentation whose superpixel count scales with the
/// frame-to-box area ratio: N = max(1, round(wh / (30 * wB * hB))).
pub fn plan_segmentation(frame_dims: (u32, u32), bbox_dims: (f64, f64)) -> SegmentationPlan {
    let area = frame_dims.0 as f64 * frame_dims.1 as f64;
    let n = (area / (30.0 * bbox_dims.0 * bbox_dims.1)).round() as usize;
    SegmentationPlan::from_count(frame_dims, n)
}

/// Plans a segmentation sized so that about `per_box` superpixels tile a
/// box of the given dimensions. This is what the tracker runs on: parts
/// must be small relative to the target for matching and voting to carry
/// information.
pub fn plan_for_box_density(
    frame_dims: (u32, u32),
    bbox_dims: (f64, f64),
    per_box: f64,
) -> SegmentationPlan {
    let area = frame_dims.0 as f64 * frame_dims.1 as f64;
    let n = (per_box * area / (bbox_dims.0 * bbox_dims.1)).round() as usize;
    SegmentationPlan::from_count(frame_dims, n)
}

#[derive(Clone, Copy)]
struct Cluster {
    l: f64,
    a: f64,
    b: f64,
    x: f64,
    y: f64,
}

/// Oversegments the frame into approximately `plan.n_superpixels` regions.
/// Returned superpixels are indexed by their label: `superpixels[l].id == l`
/// and the label map values are indices into the returned vector.
pub fn segment(frame: &Frame, plan: &SegmentationPlan, compactness: f64) -> (Vec<Superpixel>, LabelMap) {
    let w = frame.width() as usize;
    let h = frame.height() as usize;
    let lab = lab_image(frame);

    let s = plan.diameter.max(1.0);
    let mut clusters = seed_clusters(&lab, w, h, plan.n_superpixels, s);
    let mut labels = vec![0u32; w * h];
    let inv_s2 = (compactness / s) * (compactness / s);

    for _ in 0..SLIC_ITERATIONS {
        assign_pixels(&lab, w, h, &clusters, s, inv_s2, &mut labels);
        update_clusters(&lab, w, h, &labels, &mut clusters);
    }

    enforce_connectivity(&mut labels, w, h);
    build_superpixels(frame, labels, w, h)
}

fn lab_image(frame: &Frame) -> Vec<[f64; 3]> {
    let w = frame.width() as usize;
    let raw = frame.raw();
    let mut lab = vec![[0.0; 3]; frame.pixel_count()];
    lab.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, px) in row.iter_mut().enumerate() {
            let i = (y * w + x) * 3;
            *px = rgb_to_lab(raw[i], raw[i + 1], raw[i + 2]);
        }
    });
    lab
}

/// Grid seeding: choose a grid whose cell count best matches the requested
/// N, then nudge each seed to the lowest-gradient pixel in its 3x3
/// neighborhood so seeds avoid edges.
fn seed_clusters(lab: &[[f64; 3]], w: usize, h: usize, n: usize, s: f64) -> Vec<Cluster> {
    let fx = w as f64 / s;
    let fy = h as f64 / s;
    let candidates = |f: f64| -> Vec<usize> {
        let lo = (f.floor() as usize).max(1);
        let hi = (f.ceil() as usize).max(1);
        if lo == hi {
            vec![lo]
        } else {
            vec![lo, hi]
        }
    };
    let mut best = (1usize, 1usize);
    let mut best_err = usize::MAX;
    for &nx in &candidates(fx) {
        for &ny in &candidates(fy) {
            let err = (nx * ny).abs_diff(n);
            // Prefer more columns on ties: frames are usually landscape.
            if err < best_err || (err == best_err && nx > best.0) {
                best = (nx, ny);
                best_err = err;
            }
        }
    }
    let (nx, ny) = best;

    let grad = |x: usize, y: usize| -> f64 {
        let px = |x: usize, y: usize| lab[y * w + x];
        let dx: f64 = (0..3)
            .map(|c| (px(x + 1, y)[c] - px(x - 1, y)[c]).powi(2))
            .sum();
        let dy: f64 = (0..3)
            .map(|c| (px(x, y + 1)[c] - px(x, y - 1)[c]).powi(2))
            .sum();
        dx + dy
    };

    let mut clusters = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let sx = ((i as f64 + 0.5) * w as f64 / nx as f64) as usize;
            let sy = ((j as f64 + 0.5) * h as f64 / ny as f64) as usize;
            let mut cx = sx.min(w - 1);
            let mut cy = sy.min(h - 1);
            if w > 2 && h > 2 {
                cx = cx.clamp(1, w - 2);
                cy = cy.clamp(1, h - 2);
                let mut best_g = grad(cx, cy);
                let (ox, oy) = (cx, cy);
                for ny2 in oy.saturating_sub(1).max(1)..=(oy + 1).min(h - 2) {
                    for nx2 in ox.saturating_sub(1).max(1)..=(ox + 1).min(w - 2) {
                        let g = grad(nx2, ny2);
                        if g < best_g {
                            best_g = g;
                            cx = nx2;
                            cy = ny2;
                        }
                    }
                }
            }
            let c = lab[cy * w + cx];
            clusters.push(Cluster {
                l: c[0],
                a: c[1],
                b: c[2],
                x: cx as f64,
                y: cy as f64,
            });
        }
    }
    clusters
}

/// Each cluster claims the better-scoring pixels inside its 2s x 2s
/// search window. The sweep runs over horizontal bands in parallel;
/// within a band clusters are visited in ascending id, and the strict
/// comparison keeps the lowest label on distance ties, so the result does
/// not depend on the banding.
fn assign_pixels(
    lab: &[[f64; 3]],
    w: usize,
    h: usize,
    clusters: &[Cluster],
    s: f64,
    inv_s2: f64,
    labels: &mut [u32],
) {
    let window = 2.0 * s;
    let band = 32usize;
    let mut dist = vec![f64::INFINITY; w * h];

    labels
        .par_chunks_mut(w * band)
        .zip(dist.par_chunks_mut(w * band))
        .enumerate()
        .for_each(|(b, (band_labels, band_dist))| {
            band_labels.fill(u32::MAX);
            let y0 = b * band;
            let y1 = (y0 + band_labels.len() / w).min(h);
            for (id, c) in clusters.iter().enumerate() {
                let x_lo = ((c.x - window).ceil().max(0.0)) as usize;
                let x_hi = ((c.x + window).floor() as i64).min(w as i64 - 1);
                let ry0 = ((c.y - window).ceil().max(0.0) as usize).max(y0);
                let ry1 = (((c.y + window).floor() as i64).min(h as i64 - 1) as usize).min(y1 - 1);
                if x_hi < x_lo as i64 || ry1 < ry0 {
                    continue;
                }
                let x_hi = x_hi as usize;
                for y in ry0..=ry1 {
                    let yf = y as f64;
                    let row = (y - y0) * w;
                    for x in x_lo..=x_hi {
                        let d = distance(&lab[y * w + x], x as f64, yf, c, inv_s2);
                        if d < band_dist[row + x] {
                            band_dist[row + x] = d;
                            band_labels[row + x] = id as u32;
                        }
                    }
                }
            }
        });

    // Pixels outside every search window (clusters drifted): full scan.
    for i in 0..w * h {
        if labels[i] == u32::MAX {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            let mut best = f64::INFINITY;
            let mut best_id = u32::MAX;
            for (id, c) in clusters.iter().enumerate() {
                let d = distance(&lab[i], x, y, c, inv_s2);
                if d < best {
                    best = d;
                    best_id = id as u32;
                }
            }
            labels[i] = best_id;
        }
    }
}

#[inline]
fn distance(p: &[f64; 3], x: f64, y: f64, c: &Cluster, inv_s2: f64) -> f64 {
    let dl = p[0] - c.l;
    let da = p[1] - c.a;
    let db = p[2] - c.b;
    let dx = x - c.x;
    let dy = y - c.y;
    dl * dl + da * da + db * db + (dx * dx + dy * dy) * inv_s2
}

/// Recomputes cluster means. Accumulation runs sequentially in raster order
/// so results do not depend on thread scheduling.
fn update_clusters(lab: &[[f64; 3]], w: usize, h: usize, labels: &[u32], clusters: &mut [Cluster]) {
    let mut sums = vec![[0.0f64; 5]; clusters.len()];
    let mut counts = vec![0u64; clusters.len()];
    for y in 0..h {
        for x in 0..w {
            let id = labels[y * w + x] as usize;
            let p = lab[y * w + x];
            let s = &mut sums[id];
            s[0] += p[0];
            s[1] += p[1];
            s[2] += p[2];
            s[3] += x as f64;
            s[4] += y as f64;
            counts[id] += 1;
        }
    }
    for (id, c) in clusters.iter_mut().enumerate() {
        if counts[id] > 0 {
            let n = counts[id] as f64;
            c.l = sums[id][0] / n;
            c.a = sums[id][1] / n;
            c.b = sums[id][2] / n;
            c.x = sums[id][3] / n;
            c.y = sums[id][4] / n;
        }
    }
}

/// Every label keeps its largest connected component; all other components
/// are merged into the adjacent settled region they touch the most.
fn enforce_connectivity(labels: &mut [u32], w: usize, h: usize) {
    let n_px = w * h;
    let mut comp = vec![u32::MAX; n_px];
    let mut comp_pixels: Vec<Vec<u32>> = Vec::new();
    let mut comp_label: Vec<u32> = Vec::new();

    let mut stack = Vec::new();
    for start in 0..n_px {
        if comp[start] != u32::MAX {
            continue;
        }
        let id = comp_pixels.len() as u32;
        let label = labels[start];
        let mut pixels = Vec::new();
        comp[start] = id;
        stack.push(start as u32);
        while let Some(p) = stack.pop() {
            pixels.push(p);
            let (x, y) = (p as usize % w, p as usize / w);
            let mut push = |nx: usize, ny: usize| {
                let q = ny * w + nx;
                if comp[q] == u32::MAX && labels[q] == label {
                    comp[q] = id;
                    stack.push(q as u32);
                }
            };
            if x > 0 {
                push(x - 1, y);
            }
            if x + 1 < w {
                push(x + 1, y);
            }
            if y > 0 {
                push(x, y - 1);
            }
            if y + 1 < h {
                push(x, y + 1);
            }
        }
        comp_pixels.push(pixels);
        comp_label.push(label);
    }

    // Canonical component per label: largest, earliest on ties.
    let mut canonical: BTreeMap<u32, u32> = BTreeMap::new();
    for (id, pixels) in comp_pixels.iter().enumerate() {
        let label = comp_label[id];
        let better = match canonical.get(&label) {
            Some(&prev) => pixels.len() > comp_pixels[prev as usize].len(),
            None => true,
        };
        if better {
            canonical.insert(label, id as u32);
        }
    }

    let mut settled = vec![false; comp_pixels.len()];
    for &id in canonical.values() {
        settled[id as usize] = true;
    }
    let mut remaining: Vec<u32> = (0..comp_pixels.len() as u32)
        .filter(|&id| !settled[id as usize])
        .collect();

    while !remaining.is_empty() {
        let mut next = Vec::new();
        let mut progressed = false;
        for &cid in &remaining {
            let mut contact: BTreeMap<u32, usize> = BTreeMap::new();
            for &p in &comp_pixels[cid as usize] {
                let (x, y) = (p as usize % w, p as usize / w);
                let mut touch = |nx: usize, ny: usize| {
                    let q = ny * w + nx;
                    if comp[q] != cid && settled[comp[q] as usize] {
                        *contact.entry(labels[q]).or_insert(0) += 1;
                    }
                };
                if x > 0 {
                    touch(x - 1, y);
                }
                if x + 1 < w {
                    touch(x + 1, y);
                }
                if y > 0 {
                    touch(x, y - 1);
                }
                if y + 1 < h {
                    touch(x, y + 1);
                }
            }
            // Most boundary contact wins; BTreeMap iteration makes the
            // lowest label win ties.
            let target = contact
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(&l, _)| l);
            match target {
                Some(l) => {
                    for &p in &comp_pixels[cid as usize] {
                        labels[p as usize] = l;
                    }
                    settled[cid as usize] = true;
                    progressed = true;
                }
                None => next.push(cid),
            }
        }
        if !progressed {
            // Cannot happen on a connected image; settle in place to
            // guarantee termination.
            for &cid in &next {
                settled[cid as usize] = true;
            }
            break;
        }
        remaining = next;
    }
}

fn build_superpixels(frame: &Frame, labels: Vec<u32>, w: usize, h: usize) -> (Vec<Superpixel>, LabelMap) {
    // Compact surviving labels to 0..k preserving ascending order.
    let survivors: std::collections::BTreeSet<u32> = labels.iter().copied().collect();
    let mapping: BTreeMap<u32, u32> = survivors
        .into_iter()
        .enumerate()
        .map(|(new, old)| (old, new as u32))
        .collect();
    let labels: Vec<u32> = labels.iter().map(|l| mapping[l]).collect();

    let k = mapping.len();
    let mut pixel_lists: Vec<Vec<(u32, u32)>> = vec![Vec::new(); k];
    for y in 0..h {
        for x in 0..w {
            pixel_lists[labels[y * w + x] as usize].push((x as u32, y as u32));
        }
    }

    let superpixels = pixel_lists
        .into_iter()
        .enumerate()
        .map(|(id, pixels)| {
            let n = pixels.len() as f64;
            let cx = pixels.iter().map(|p| p.0 as f64 + 0.5).sum::<f64>() / n;
            let cy = pixels.iter().map(|p| p.1 as f64 + 0.5).sum::<f64>() / n;
            let hist = histogram(frame, &pixels).expect("superpixels are non-empty");
            Superpixel {
                id: id as u32,
                center: Vec2::new(cx, cy),
                pixels,
                histogram: hist,
            }
        })
        .collect();

    (
        superpixels,
        LabelMap {
            width: w as u32,
            height: h as u32,
            origin: (0, 0),
            labels,
        },
    )
}
