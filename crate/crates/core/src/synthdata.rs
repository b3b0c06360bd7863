//! Deterministic synthetic sequences with exact ground truth.
//!
//! Scenes are a textured rectangular target over a plain or noise
//! background, with per-scenario variations: translation, shear wobble,
//! a crossing occluder, an illumination ramp, or look-alike clutter.
//! Rendering is pure hashing on (seed, coordinates), so the same spec
//! produces bit-identical frames on every run.

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::geom::BoundingBox;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Two-color value-noise texture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextureSpec {
    pub dark: [u8; 3],
    pub light: [u8; 3],
    /// Noise lattice spacing in pixels; smaller means finer texture and
    /// more detectable corners.
    pub grain: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "style", rename_all = "snake_case")]
pub enum Background {
    Plain { color: [u8; 3] },
    Noise { texture: TextureSpec },
}

/// Occluder position keyframe: offset of the occluder center from the
/// target center at the given frame. Offsets interpolate linearly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathKey {
    pub frame: usize,
    pub offset: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioParams {
    Translate,
    Deform {
        /// Peak shear as a fraction of target height.
        amplitude: f64,
        /// Wobble period in frames.
        period: f64,
    },
    Occlude {
        occluder_size: (u32, u32),
        occluder_texture: TextureSpec,
        path: Vec<PathKey>,
    },
    Illum {
        gain_start: f64,
        gain_end: f64,
    },
    Clutter {
        distractors: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub frames: usize,
    pub seed: u64,
    pub frame_size: (u32, u32),
    pub target_size: (u32, u32),
    pub target_texture: TextureSpec,
    pub background: Background,
    /// Target top-left at frame 0.
    pub start: (f64, f64),
    /// Per-frame target displacement.
    pub motion: (f64, f64),
    #[serde(flatten)]
    pub params: ScenarioParams,
}

/// Frames plus exact ground truth; occlusion scenarios also report the
/// occluder trajectory and per-frame target visibility.
#[derive(Debug, Clone)]
pub struct RenderedSequence {
    pub frames: Vec<Frame>,
    pub groundtruth: Vec<BoundingBox>,
    pub occluder_boxes: Option<Vec<BoundingBox>>,
    pub visibility: Option<Vec<f64>>,
}

/// Sidecar written next to the generated frames.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub spec: ScenarioSpec,
    pub occluder_boxes: Option<Vec<[f64; 4]>>,
    pub visibility: Option<Vec<f64>>,
}

const SALT_BACKGROUND: u64 = 0x5eed_00ba;
const SALT_TARGET: u64 = 0x5eed_0001;
const SALT_OCCLUDER: u64 = 0x5eed_0cc1;

fn hash01(seed: u64, x: i64, y: i64) -> f64 {
    let mut v = seed
        ^ (x as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ (y as u64).wrapping_mul(0xc2b2_ae3d_27d4_eb4f);
    v ^= v >> 30;
    v = v.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    v ^= v >> 27;
    v = v.wrapping_mul(0x94d0_49bb_1331_11eb);
    v ^= v >> 31;
    (v >> 11) as f64 / (1u64 << 53) as f64
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

fn lattice_noise(seed: u64, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = smoothstep(x - x0);
    let fy = smoothstep(y - y0);
    let (xi, yi) = (x0 as i64, y0 as i64);
    let v00 = hash01(seed, xi, yi);
    let v10 = hash01(seed, xi + 1, yi);
    let v01 = hash01(seed, xi, yi + 1);
    let v11 = hash01(seed, xi + 1, yi + 1);
    let top = v00 * (1.0 - fx) + v10 * fx;
    let bot = v01 * (1.0 - fx) + v11 * fx;
    top * (1.0 - fy) + bot * fy
}

impl TextureSpec {
    /// Texture color at a point of its own coordinate space.
    pub fn sample(&self, seed: u64, x: f64, y: f64) -> [u8; 3] {
        let g = self.grain.max(1) as f64;
        let coarse = lattice_noise(seed, x / g, y / g);
        let fine = lattice_noise(seed ^ 0xa5a5_a5a5, 2.0 * x / g, 2.0 * y / g);
        let t = 0.65 * coarse + 0.35 * fine;
        let mix = |a: u8, b: u8| (a as f64 + t * (b as f64 - a as f64)).round() as u8;
        [
            mix(self.dark[0], self.light[0]),
            mix(self.dark[1], self.light[1]),
            mix(self.dark[2], self.light[2]),
        ]
    }
}

impl ScenarioSpec {
    fn validate(&self) -> Result<()> {
        if self.frames < 2 {
            return Err(Error::Scenario("a sequence needs at least 2 frames".into()));
        }
        if self.target_size.0 == 0 || self.target_size.1 == 0 {
            return Err(Error::Scenario("target size must be positive".into()));
        }
        for k in 0..self.frames {
            let (x, y) = self.target_origin(k);
            // Shear widens the box; reserve the worst-case margin.
            let margin = match &self.params {
                ScenarioParams::Deform { amplitude, .. } => {
                    (amplitude.abs() * self.target_size.1 as f64 / 2.0).ceil()
                }
                _ => 0.0,
            };
            if x - margin < 0.0
                || y < 0.0
                || x + self.target_size.0 as f64 + margin > self.frame_size.0 as f64
                || y + self.target_size.1 as f64 > self.frame_size.1 as f64
            {
                return Err(Error::Scenario(format!(
                    "target leaves the frame at frame {k} (origin {x}, {y})"
                )));
            }
        }
        Ok(())
    }

    /// Integer target origin at frame k.
    fn target_origin(&self, k: usize) -> (f64, f64) {
        (
            (self.start.0 + self.motion.0 * k as f64).round(),
            (self.start.1 + self.motion.1 * k as f64).round(),
        )
    }

    fn occluder_offset(path: &[PathKey], k: usize) -> (f64, f64) {
        if path.is_empty() {
            return (0.0, 0.0);
        }
        if k <= path[0].frame {
            return path[0].offset;
        }
        for pair in path.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if k <= b.frame {
                let span = (b.frame - a.frame).max(1) as f64;
                let t = (k - a.frame) as f64 / span;
                return (
                    a.offset.0 + t * (b.offset.0 - a.offset.0),
                    a.offset.1 + t * (b.offset.1 - a.offset.1),
                );
            }
        }
        path[path.len() - 1].offset
    }
}

/// Renders the full sequence in memory.
pub fn render(spec: &ScenarioSpec) -> Result<RenderedSequence> {
    spec.validate()?;
    let (w, h) = spec.frame_size;
    let is_occlude = matches!(spec.params, ScenarioParams::Occlude { .. });
    let mut frames = Vec::with_capacity(spec.frames);
    let mut groundtruth = Vec::with_capacity(spec.frames);
    let mut occluder_boxes = Vec::new();
    let mut visibility = Vec::new();

    for k in 0..spec.frames {
        let mut frame = match &spec.background {
            Background::Plain { color } => Frame::filled(w, h, *color, k)?,
            Background::Noise { texture } => {
                let mut f = Frame::filled(w, h, [0, 0, 0], k)?;
                for y in 0..h {
                    for x in 0..w {
                        f.set_rgb(x, y, texture.sample(spec.seed ^ SALT_BACKGROUND, x as f64, y as f64));
                    }
                }
                f
            }
        };

        if let ScenarioParams::Clutter { distractors } = spec.params {
            for i in 0..distractors {
                let dx = (hash01(spec.seed ^ 0xd15c, i as i64, 0) * (w - spec.target_size.0) as f64)
                    .floor() as u32;
                let dy = (hash01(spec.seed ^ 0xd15c, i as i64, 1) * (h - spec.target_size.1) as f64)
                    .floor() as u32;
                for y in dy..(dy + spec.target_size.1).min(h) {
                    for x in dx..(dx + spec.target_size.0).min(w) {
                        let phase = 997.0 * (i as f64 + 1.0);
                        frame.set_rgb(
                            x,
                            y,
                            spec.target_texture.sample(
                                spec.seed ^ SALT_TARGET,
                                (x - dx) as f64 + phase,
                                (y - dy) as f64 + phase,
                            ),
                        );
                    }
                }
            }
        }

        // Target, tracking the drawn mask for exact ground truth.
        let (ox, oy) = spec.target_origin(k);
        let (tw, th) = (spec.target_size.0 as f64, spec.target_size.1 as f64);
        let mut mask = Vec::new();
        match &spec.params {
            ScenarioParams::Deform { amplitude, period } => {
                let shear = amplitude * (std::f64::consts::TAU * k as f64 / period).sin();
                let cx = ox + tw / 2.0;
                let cy = oy + th / 2.0;
                let margin = (amplitude.abs() * th / 2.0).ceil() + 1.0;
                let x_lo = ((ox - margin).floor().max(0.0)) as u32;
                let x_hi = ((ox + tw + margin).ceil() as i64).clamp(0, w as i64) as u32;
                let y_lo = (oy.max(0.0)) as u32;
                let y_hi = ((oy + th).ceil() as i64).clamp(0, h as i64) as u32;
                for y in y_lo..y_hi {
                    for x in x_lo..x_hi {
                        let px = x as f64 + 0.5 - cx;
                        let py = y as f64 + 0.5 - cy;
                        let tx = px - shear * py + tw / 2.0;
                        let ty = py + th / 2.0;
                        if tx >= 0.0 && tx < tw && ty >= 0.0 && ty < th {
                            frame.set_rgb(x, y, spec.target_texture.sample(spec.seed ^ SALT_TARGET, tx, ty));
                            mask.push((x, y));
                        }
                    }
                }
            }
            _ => {
                for y in oy as u32..(oy + th) as u32 {
                    for x in ox as u32..(ox + tw) as u32 {
                        frame.set_rgb(
                            x,
                            y,
                            spec.target_texture
                                .sample(spec.seed ^ SALT_TARGET, x as f64 - ox, y as f64 - oy),
                        );
                        mask.push((x, y));
                    }
                }
            }
        }

        // Occluder drawn over the target.
        if let ScenarioParams::Occlude {
            occluder_size,
            occluder_texture,
            path,
        } = &spec.params
        {
            let offset = ScenarioSpec::occluder_offset(path, k);
            let tcx = ox + tw / 2.0;
            let tcy = oy + th / 2.0;
            let bx = (tcx + offset.0 - occluder_size.0 as f64 / 2.0).round();
            let by = (tcy + offset.1 - occluder_size.1 as f64 / 2.0).round();
            let obox = BoundingBox::new(bx, by, occluder_size.0 as f64, occluder_size.1 as f64);
            let mut covered = std::collections::HashSet::new();
            for y in (by.max(0.0) as u32)..(((by + occluder_size.1 as f64) as i64).clamp(0, h as i64) as u32) {
                for x in (bx.max(0.0) as u32)..(((bx + occluder_size.0 as f64) as i64).clamp(0, w as i64) as u32) {
                    frame.set_rgb(
                        x,
                        y,
                        occluder_texture.sample(spec.seed ^ SALT_OCCLUDER, x as f64 - bx, y as f64 - by),
                    );
                    covered.insert((x, y));
                }
            }
            let visible = mask.iter().filter(|p| !covered.contains(*p)).count();
            visibility.push(visible as f64 / mask.len().max(1) as f64);
            occluder_boxes.push(obox);
        }

        // Illumination ramp, applied to the whole frame.
        if let ScenarioParams::Illum { gain_start, gain_end } = spec.params {
            let gain = gain_start + (gain_end - gain_start) * k as f64 / (spec.frames - 1) as f64;
            for y in 0..h {
                for x in 0..w {
                    let [r, g, b] = frame.rgb(x, y);
                    let scale = |c: u8| ((c as f64 * gain).round().min(255.0)) as u8;
                    frame.set_rgb(x, y, [scale(r), scale(g), scale(b)]);
                }
            }
        }

        // Exact ground truth from the rendered mask.
        let min_x = mask.iter().map(|p| p.0).min().unwrap();
        let max_x = mask.iter().map(|p| p.0).max().unwrap();
        let min_y = mask.iter().map(|p| p.1).min().unwrap();
        let max_y = mask.iter().map(|p| p.1).max().unwrap();
        groundtruth.push(BoundingBox::new(
            min_x as f64,
            min_y as f64,
            (max_x - min_x + 1) as f64,
            (max_y - min_y + 1) as f64,
        ));
        frames.push(frame);
    }

    Ok(RenderedSequence {
        frames,
        groundtruth,
        occluder_boxes: is_occlude.then_some(occluder_boxes),
        visibility: is_occlude.then_some(visibility),
    })
}

/// Renders the sequence and writes it in the layout the evaluation harness
/// ingests: zero-padded PNG frames, `groundtruth_rect.txt`, and a
/// `manifest.json` sidecar.
pub fn generate(spec: &ScenarioSpec, dir: &Path) -> Result<RenderedSequence> {
    let rendered = render(spec)?;
    std::fs::create_dir_all(dir)?;
    for (k, frame) in rendered.frames.iter().enumerate() {
        frame.to_rgb_image().save(dir.join(format!("{:04}.png", k + 1)))?;
    }
    let mut gt = String::new();
    for b in &rendered.groundtruth {
        gt.push_str(&format!("{},{},{},{}\n", b.x, b.y, b.w, b.h));
    }
    std::fs::write(dir.join("groundtruth_rect.txt"), gt)?;

    let manifest = Manifest {
        spec: spec.clone(),
        occluder_boxes: rendered
            .occluder_boxes
            .as_ref()
            .map(|v| v.iter().map(|b| [b.x, b.y, b.w, b.h]).collect()),
        visibility: rendered.visibility.clone(),
    };
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(rendered)
}

fn orange_texture() -> TextureSpec {
    TextureSpec {
        dark: [205, 120, 40],
        light: [255, 190, 90],
        grain: 5,
    }
}

fn blue_background() -> Background {
    Background::Noise {
        texture: TextureSpec {
            dark: [40, 60, 95],
            light: [90, 115, 150],
            grain: 8,
        },
    }
}

impl ScenarioSpec {
    /// Rigid 60x60 textured target moving 3 px/frame for 60 frames.
    pub fn translate_demo() -> ScenarioSpec {
        ScenarioSpec {
            name: "translate".into(),
            frames: 60,
            seed: 7,
            frame_size: (320, 240),
            target_size: (60, 60),
            target_texture: orange_texture(),
            background: blue_background(),
            start: (30.0, 90.0),
            motion: (3.0, 0.0),
            params: ScenarioParams::Translate,
        }
    }

    /// A 100x100 occluder parked in the first-frame surround band, crossing
    /// the target over frames 10-20, gone afterwards.
    pub fn occlude_demo() -> ScenarioSpec {
        ScenarioSpec {
            name: "occlude".into(),
            frames: 36,
            seed: 11,
            frame_size: (320, 240),
            target_size: (60, 60),
            target_texture: orange_texture(),
            background: blue_background(),
            start: (60.0, 90.0),
            motion: (2.0, 0.0),
            params: ScenarioParams::Occlude {
                occluder_size: (100, 100),
                occluder_texture: TextureSpec {
                    dark: [40, 140, 60],
                    light: [100, 200, 120],
                    grain: 5,
                },
                path: vec![
                    PathKey { frame: 0, offset: (95.0, 0.0) },
                    PathKey { frame: 9, offset: (95.0, 0.0) },
                    PathKey { frame: 12, offset: (0.0, 0.0) },
                    PathKey { frame: 18, offset: (0.0, 0.0) },
                    PathKey { frame: 21, offset: (-95.0, 0.0) },
                    PathKey { frame: 35, offset: (-95.0, 0.0) },
                ],
            },
        }
    }

    /// Brightness gain ramping 1.0 to 1.5 over 50 frames. Palettes stay
    /// below the clipping point at full gain.
    pub fn illum_demo() -> ScenarioSpec {
        ScenarioSpec {
            name: "illum".into(),
            frames: 50,
            seed: 23,
            frame_size: (320, 240),
            target_size: (60, 60),
            target_texture: TextureSpec {
                dark: [135, 80, 30],
                light: [168, 125, 60],
                grain: 5,
            },
            background: Background::Noise {
                texture: TextureSpec {
                    dark: [30, 40, 60],
                    light: [60, 75, 100],
                    grain: 8,
                },
            },
            start: (40.0, 90.0),
            motion: (2.0, 0.0),
            params: ScenarioParams::Illum {
                gain_start: 1.0,
                gain_end: 1.5,
            },
        }
    }

    /// Shear wobble of +/-15% of target height, two full cycles.
    pub fn deform_demo() -> ScenarioSpec {
        ScenarioSpec {
            name: "deform".into(),
            frames: 60,
            seed: 31,
            frame_size: (320, 240),
            target_size: (60, 60),
            target_texture: orange_texture(),
            background: blue_background(),
            start: (60.0, 90.0),
            motion: (1.0, 0.0),
            params: ScenarioParams::Deform {
                amplitude: 0.15,
                period: 30.0,
            },
        }
    }

    /// Three stationary distractors sharing the target's texture family.
    pub fn clutter_demo() -> ScenarioSpec {
        ScenarioSpec {
            name: "clutter".into(),
            frames: 40,
            seed: 43,
            frame_size: (320, 240),
            target_size: (60, 60),
            target_texture: orange_texture(),
            background: blue_background(),
            start: (30.0, 60.0),
            motion: (2.0, 0.0),
            params: ScenarioParams::Clutter { distractors: 3 },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keypoints::{FeatureBackend, GradientFeatures};

    #[test]
    fn translate_groundtruth_is_arithmetic() {
        let spec = ScenarioSpec::translate_demo();
        let seq = render(&spec).unwrap();
        assert_eq!(seq.frames.len(), 60);
        for (k, b) in seq.groundtruth.iter().enumerate() {
            assert_eq!(b.x, 30.0 + 3.0 * k as f64);
            assert_eq!(b.y, 90.0);
            assert_eq!((b.w, b.h), (60.0, 60.0));
        }
    }

    #[test]
    fn rendering_is_bit_deterministic() {
        let spec = ScenarioSpec::occlude_demo();
        let a = render(&spec).unwrap();
        let b = render(&spec).unwrap();
        for (fa, fb) in a.frames.iter().zip(b.frames.iter()) {
            assert_eq!(fa.raw(), fb.raw());
        }
    }

    #[test]
    fn manifest_records_the_occluder_trajectory() {
        let mut spec = ScenarioSpec::occlude_demo();
        spec.frames = 14;
        if let ScenarioParams::Occlude { path, .. } = &mut spec.params {
            path.last_mut().unwrap().frame = 13;
        }
        let dir = tempfile::tempdir().unwrap();
        generate(&spec, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        let manifest: Manifest = serde_json::from_str(&text).unwrap();
        let boxes = manifest.occluder_boxes.expect("occlude records boxes");
        assert_eq!(boxes.len(), 14);
        // Parked right of the target first, then sweeping left.
        assert!(boxes[0][0] > boxes[12][0]);
        assert_eq!(manifest.visibility.unwrap().len(), 14);
    }

    #[test]
    fn written_sequence_is_byte_identical_across_runs() {
        let mut spec = ScenarioSpec::translate_demo();
        spec.frames = 4;
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        generate(&spec, d1.path()).unwrap();
        generate(&spec, d2.path()).unwrap();
        for name in ["0001.png", "0004.png", "groundtruth_rect.txt", "manifest.json"] {
            let a = std::fs::read(d1.path().join(name)).unwrap();
            let b = std::fs::read(d2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between runs");
        }
    }

    #[test]
    fn illumination_ramp_scales_mean_intensity() {
        let spec = ScenarioSpec::illum_demo();
        let seq = render(&spec).unwrap();
        let mean = |f: &Frame| -> f64 {
            f.raw().iter().map(|&v| v as f64).sum::<f64>() / f.raw().len() as f64
        };
        let m0 = mean(&seq.frames[0]);
        for (k, f) in seq.frames.iter().enumerate() {
            let gain = 1.0 + 0.5 * k as f64 / 49.0;
            let expect = m0 * gain;
            let got = mean(f);
            assert!(
                (got - expect).abs() <= 0.02 * expect,
                "frame {k}: mean {got:.2} vs expected {expect:.2}"
            );
        }
    }

    #[test]
    fn occluder_hides_target_during_crossing() {
        let spec = ScenarioSpec::occlude_demo();
        let seq = render(&spec).unwrap();
        let vis = seq.visibility.unwrap();
        for (k, &v) in vis.iter().enumerate().take(19).skip(12) {
            assert!(v < 0.3, "frame {k} visibility {v}");
        }
        // Fully visible before the crossing and at the first frame.
        assert_eq!(vis[0], 1.0);
        assert!(vis[5] == 1.0);
        assert!(vis[30] == 1.0);

        // At frame 0 the occluder overlaps the surround band but not the
        // target box.
        let occ = seq.occluder_boxes.unwrap();
        let gt0 = seq.groundtruth[0];
        let band_outer = gt0.inflated(2.0);
        assert_eq!(crate::geom::overlap_ratio(&occ[0], &gt0), 0.0);
        assert!(crate::geom::overlap_ratio(&occ[0], &band_outer) > 0.0);
    }

    #[test]
    fn deform_groundtruth_follows_the_shear() {
        let spec = ScenarioSpec::deform_demo();
        let seq = render(&spec).unwrap();
        // No shear at k = 0 (sin 0), widest near a quarter period.
        assert_eq!(seq.groundtruth[0].w, 60.0);
        let widest = seq.groundtruth.iter().map(|b| b.w).fold(0.0, f64::max);
        assert!(widest > 66.0, "peak width {widest}");
        for b in &seq.groundtruth {
            assert!(b.x >= 0.0 && b.x + b.w <= 320.0);
        }
    }

    #[test]
    fn target_texture_yields_enough_keypoints() {
        let spec = ScenarioSpec::translate_demo();
        let seq = render(&spec).unwrap();
        let kps = GradientFeatures::new(5).detect(&seq.frames[0], 5000);
        let gt0 = seq.groundtruth[0];
        let on_target = kps.iter().filter(|k| gt0.contains_point(k.position)).count();
        assert!(on_target >= 10, "only {on_target} keypoints on the target");
    }

    #[test]
    fn plain_background_confines_keypoints_to_target() {
        let mut spec = ScenarioSpec::translate_demo();
        spec.background = Background::Plain { color: [70, 80, 90] };
        spec.frames = 2;
        let seq = render(&spec).unwrap();
        let kps = GradientFeatures::new(5).detect(&seq.frames[0], 5000);
        let near_target = seq.groundtruth[0].inflated(1.3);
        for k in &kps {
            assert!(
                near_target.contains_point(k.position),
                "keypoint off the target at {:?}",
                k.position
            );
        }
    }

    #[test]
    fn out_of_bounds_motion_is_rejected() {
        let mut spec = ScenarioSpec::translate_demo();
        spec.motion = (8.0, 0.0); // exits the 320 px frame well before frame 60
        assert!(matches!(render(&spec), Err(Error::Scenario(_))));
    }

    #[test]
    fn spec_round_trips_through_json() {
        for spec in [
            ScenarioSpec::translate_demo(),
            ScenarioSpec::occlude_demo(),
            ScenarioSpec::illum_demo(),
            ScenarioSpec::deform_demo(),
            ScenarioSpec::clutter_demo(),
        ] {
            let text = serde_json::to_string(&spec).unwrap();
            let back: ScenarioSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, spec);
        }
    }
}
