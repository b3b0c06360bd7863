//! One-pass evaluation: run a tracker over ground-truthed sequences and
//! report precision, success, and AUC.
//!
//! Precision samples the fraction of frames whose center location error
//! stays within 0..=50 px; success samples the fraction whose overlap
//! ratio strictly exceeds thresholds 0.00..=1.00 in steps of 0.01; AUC is
//! the mean of the success samples. Every frame counts, including the
//! first (where the tracker echoes its init box).

use crate::config::TrackerConfig;
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::geom::{overlap_ratio, BoundingBox, Vec2};
use crate::tracker::SpikesTracker;
use rayon::prelude::*;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const PRECISION_SAMPLES: usize = 51;
pub const SUCCESS_SAMPLES: usize = 101;

/// An on-disk sequence: ordered frame paths plus one box per frame. The
/// first box doubles as the tracker's init region.
#[derive(Debug, Clone)]
pub struct SequenceSpec {
    pub name: String,
    pub frames: Vec<PathBuf>,
    pub groundtruth: Vec<BoundingBox>,
}

impl SequenceSpec {
    pub fn init_box(&self) -> BoundingBox {
        self.groundtruth[0]
    }
}

/// Center location error: Euclidean distance between predicted and
/// ground-truth centers.
pub fn cle(pred_center: Vec2, gt_center: Vec2) -> f64 {
    (pred_center - gt_center).norm()
}

/// Per-frame raw scores; curves and pooling both derive from these.
#[derive(Debug, Clone, Default)]
pub struct FrameScores {
    pub cle: Vec<f64>,
    pub overlap: Vec<f64>,
}

impl FrameScores {
    pub fn from_boxes(predictions: &[BoundingBox], groundtruth: &[BoundingBox]) -> FrameScores {
        let cle_values = predictions
            .iter()
            .zip(groundtruth)
            .map(|(p, g)| cle(p.center(), g.center()))
            .collect();
        let overlap = predictions
            .iter()
            .zip(groundtruth)
            .map(|(p, g)| overlap_ratio(p, g))
            .collect();
        FrameScores {
            cle: cle_values,
            overlap,
        }
    }

    pub fn extend(&mut self, other: &FrameScores) {
        self.cle.extend_from_slice(&other.cle);
        self.overlap.extend_from_slice(&other.overlap);
    }
}

/// Sampled precision and success curves.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalCurves {
    /// `precision[t]` = fraction of frames with CLE <= t, t = 0..=50 px.
    pub precision: Vec<f64>,
    /// `success[k]` = fraction of frames with OR > k/100, k = 0..=100.
    pub success: Vec<f64>,
    pub precision_at_20: f64,
    pub auc: f64,
}

impl EvalCurves {
    pub fn from_scores(scores: &FrameScores) -> EvalCurves {
        let n = scores.cle.len().max(1) as f64;
        let precision: Vec<f64> = (0..PRECISION_SAMPLES)
            .map(|t| scores.cle.iter().filter(|&&e| e <= t as f64).count() as f64 / n)
            .collect();
        let success: Vec<f64> = (0..SUCCESS_SAMPLES)
            .map(|k| {
                let tau = k as f64 / 100.0;
                scores.overlap.iter().filter(|&&o| o > tau).count() as f64 / n
            })
            .collect();
        let auc = success.iter().sum::<f64>() / SUCCESS_SAMPLES as f64;
        EvalCurves {
            precision_at_20: precision[20],
            precision,
            success,
            auc,
        }
    }
}

/// Parses `x,y,w,h` per line; separators may be commas, tabs, or spaces.
/// `one_indexed` shifts the origin to zero-based coordinates.
pub fn parse_groundtruth(text: &str, one_indexed: bool) -> Result<Vec<BoundingBox>> {
    let mut boxes = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split([',', '\t', ' '])
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>().map_err(|_| {
                    Error::Sequence(format!("groundtruth line {}: bad number `{s}`", lineno + 1))
                })
            })
            .collect::<Result<_>>()?;
        if fields.len() != 4 {
            return Err(Error::Sequence(format!(
                "groundtruth line {}: expected 4 fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let shift = if one_indexed { 1.0 } else { 0.0 };
        if fields[2] <= 0.0 || fields[3] <= 0.0 {
            return Err(Error::Sequence(format!(
                "groundtruth line {}: box dimensions must be positive",
                lineno + 1
            )));
        }
        boxes.push(BoundingBox::new(
            fields[0] - shift,
            fields[1] - shift,
            fields[2],
            fields[3],
        ));
    }
    Ok(boxes)
}

/// Loads a sequence directory: zero-padded PNG/JPG frames next to
/// `groundtruth_rect.txt`, or under an `img/` subdirectory.
pub fn load_sequence(dir: &Path, one_indexed: bool) -> Result<SequenceSpec> {
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sequence".to_string());

    let list_frames = |d: &Path| -> Result<Vec<PathBuf>> {
        let mut frames: Vec<PathBuf> = std::fs::read_dir(d)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .and_then(|e| e.to_str())
                    .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
                    .unwrap_or(false)
            })
            .collect();
        frames.sort();
        Ok(frames)
    };

    let mut frames = list_frames(dir)?;
    if frames.is_empty() && dir.join("img").is_dir() {
        frames = list_frames(&dir.join("img"))?;
    }
    if frames.len() < 2 {
        return Err(Error::Sequence(format!(
            "{}: need at least 2 frames, found {}",
            dir.display(),
            frames.len()
        )));
    }

    let gt_path = dir.join("groundtruth_rect.txt");
    let text = std::fs::read_to_string(&gt_path)
        .map_err(|e| Error::Sequence(format!("{}: {e}", gt_path.display())))?;
    let groundtruth = parse_groundtruth(&text, one_indexed)?;
    if groundtruth.len() != frames.len() {
        return Err(Error::Sequence(format!(
            "{}: {} groundtruth boxes for {} frames",
            dir.display(),
            groundtruth.len(),
            frames.len()
        )));
    }
    Ok(SequenceSpec {
        name,
        frames,
        groundtruth,
    })
}

pub fn load_frame(path: &Path, index: usize) -> Result<Frame> {
    let img = image::open(path)
        .map_err(|e| Error::Sequence(format!("{}: {e}", path.display())))?
        .to_rgb8();
    Frame::from_rgb_image(&img, index)
}

/// Runs the tracker (or the ground-truth echo in oracle mode) over one
/// sequence and returns one box per frame.
pub fn run_sequence(seq: &SequenceSpec, config: &TrackerConfig, oracle: bool) -> Result<Vec<BoundingBox>> {
    if oracle {
        return Ok(seq.groundtruth.clone());
    }
    let first = load_frame(&seq.frames[0], 0)?;
    let mut tracker = SpikesTracker::init(&first, &seq.init_box(), config.clone())?;
    let mut predictions = vec![seq.init_box()];
    for (k, path) in seq.frames.iter().enumerate().skip(1) {
        let frame = load_frame(path, k)?;
        predictions.push(tracker.step(&frame).bbox);
    }
    Ok(predictions)
}

#[derive(Debug, Clone)]
pub struct SequenceRun {
    pub predictions: Vec<BoundingBox>,
    pub scores: FrameScores,
    pub curves: EvalCurves,
}

#[derive(Debug, Clone)]
pub struct SequenceResult {
    pub name: String,
    pub outcome: std::result::Result<SequenceRun, String>,
}

#[derive(Debug, Clone)]
pub struct OpeReport {
    pub per_sequence: Vec<SequenceResult>,
    /// Frame-weighted pooled curves over the successful sequences.
    pub pooled: EvalCurves,
}

/// One-pass evaluation over a batch. Sequences run independently (in
/// parallel); a failing sequence is reported and does not abort the rest.
pub fn run_ope(sequences: &[SequenceSpec], config: &TrackerConfig, oracle: bool) -> OpeReport {
    let per_sequence: Vec<SequenceResult> = sequences
        .par_iter()
        .map(|seq| {
            let outcome = run_sequence(seq, config, oracle)
                .map(|predictions| {
                    let scores = FrameScores::from_boxes(&predictions, &seq.groundtruth);
                    let curves = EvalCurves::from_scores(&scores);
                    SequenceRun {
                        predictions,
                        scores,
                        curves,
                    }
                })
                .map_err(|e| e.to_string());
            SequenceResult {
                name: seq.name.clone(),
                outcome,
            }
        })
        .collect();

    let mut pooled_scores = FrameScores::default();
    for r in &per_sequence {
        if let Ok(run) = &r.outcome {
            pooled_scores.extend(&run.scores);
        }
    }
    OpeReport {
        pooled: EvalCurves::from_scores(&pooled_scores),
        per_sequence,
    }
}

/// `metric,threshold,value` rows: 51 precision samples then 101 success
/// samples.
pub fn write_curves_csv(curves: &EvalCurves, mut out: impl Write) -> Result<()> {
    writeln!(out, "metric,threshold,value")?;
    for (t, v) in curves.precision.iter().enumerate() {
        writeln!(out, "precision,{t},{v}")?;
    }
    for (k, v) in curves.success.iter().enumerate() {
        writeln!(out, "success,{:.2},{v}", k as f64 / 100.0)?;
    }
    Ok(())
}

/// Per-sequence summary plus a final pooled row. Failed sequences report
/// their error in place of numbers.
pub fn write_summary_csv(report: &OpeReport, mut out: impl Write) -> Result<()> {
    writeln!(out, "sequence,precision_at_20,auc")?;
    for r in &report.per_sequence {
        match &r.outcome {
            Ok(run) => writeln!(out, "{},{},{}", r.name, run.curves.precision_at_20, run.curves.auc)?,
            Err(e) => writeln!(out, "{},error: {},", r.name, e.replace(',', ";"))?,
        }
    }
    writeln!(
        out,
        "pooled,{},{}",
        report.pooled.precision_at_20, report.pooled.auc
    )?;
    Ok(())
}

/// Minimal standalone SVG line plot of one curve.
pub fn write_curve_svg(
    samples: &[f64],
    x_max: f64,
    title: &str,
    mut out: impl Write,
) -> Result<()> {
    const W: f64 = 480.0;
    const H: f64 = 360.0;
    const M: f64 = 40.0;
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    )?;
    writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#)?;
    writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>"#,
        W / 2.0
    )?;
    // Axes.
    writeln!(
        out,
        r#"<path d="M {M} {m} L {M} {b} L {r} {b}" stroke="black" fill="none"/>"#,
        m = M,
        b = H - M,
        r = W - M
    )?;
    let points: Vec<String> = samples
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let x = M + (i as f64 / (samples.len() - 1) as f64) * (W - 2.0 * M);
            let y = (H - M) - v.clamp(0.0, 1.0) * (H - 2.0 * M);
            format!("{x:.1},{y:.1}")
        })
        .collect();
    writeln!(
        out,
        r##"<polyline points="{}" stroke="#c0392b" stroke-width="2" fill="none"/>"##,
        points.join(" ")
    )?;
    for (frac, label) in [(0.0, "0".to_string()), (1.0, format!("{x_max}"))] {
        let x = M + frac * (W - 2.0 * M);
        writeln!(
            out,
            r#"<text x="{x}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{label}</text>"#,
            H - M + 16.0
        )?;
    }
    writeln!(out, "</svg>")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cle_examples() {
        assert_eq!(cle(Vec2::new(4.0, 9.0), Vec2::new(4.0, 9.0)), 0.0);
        assert_eq!(cle(Vec2::new(0.0, 0.0), Vec2::new(3.0, 4.0)), 5.0);
        assert_eq!(cle(Vec2::new(10.0, 10.0), Vec2::new(10.0, 30.0)), 20.0);
    }

    #[test]
    fn cle_at_twenty_counts_as_precise() {
        let gt = vec![BoundingBox::new(10.0, 10.0, 10.0, 10.0)];
        let pred = vec![BoundingBox::new(10.0, 30.0, 10.0, 10.0)]; // CLE exactly 20
        let curves = EvalCurves::from_scores(&FrameScores::from_boxes(&pred, &gt));
        assert_eq!(curves.precision_at_20, 1.0);
        assert_eq!(curves.precision[19], 0.0);
    }

    #[test]
    fn perfect_tracker_curves() {
        let gt: Vec<BoundingBox> = (0..10)
            .map(|i| BoundingBox::new(i as f64 * 3.0, 5.0, 20.0, 12.0))
            .collect();
        let curves = EvalCurves::from_scores(&FrameScores::from_boxes(&gt, &gt));
        assert!(curves.precision.iter().all(|&p| p == 1.0));
        // OR = 1 fails only the tau = 1.00 bin.
        assert!(curves.success[..100].iter().all(|&s| s == 1.0));
        assert_eq!(curves.success[100], 0.0);
        assert!((curves.auc - 100.0 / 101.0).abs() < 1e-12);
    }

    #[test]
    fn three_frame_toy_matches_hand_computation() {
        let gt = vec![
            BoundingBox::new(0.0, 0.0, 10.0, 10.0),
            BoundingBox::new(10.0, 0.0, 10.0, 10.0),
            BoundingBox::new(20.0, 0.0, 10.0, 10.0),
        ];
        let pred = vec![
            BoundingBox::new(0.0, 0.0, 10.0, 10.0),  // CLE 0, OR 1
            BoundingBox::new(13.0, 4.0, 10.0, 10.0), // CLE 5, OR 42/158
            BoundingBox::new(40.0, 0.0, 10.0, 10.0), // CLE 20, OR 0
        ];
        let scores = FrameScores::from_boxes(&pred, &gt);
        assert_eq!(scores.cle, vec![0.0, 5.0, 20.0]);
        assert!((scores.overlap[1] - 42.0 / 158.0).abs() < 1e-12);

        let curves = EvalCurves::from_scores(&scores);
        let third = 1.0 / 3.0;
        assert!((curves.precision[0] - third).abs() < 1e-12);
        assert!((curves.precision[5] - 2.0 * third).abs() < 1e-12);
        assert!((curves.precision[19] - 2.0 * third).abs() < 1e-12);
        assert_eq!(curves.precision_at_20, 1.0);
        assert_eq!(curves.precision[50], 1.0);

        // OR values {1, 0.26582.., 0}: two pass below tau = 0.27, one from
        // there to 0.99, none at 1.00.
        assert!((curves.success[0] - 2.0 * third).abs() < 1e-12);
        assert!((curves.success[26] - 2.0 * third).abs() < 1e-12);
        assert!((curves.success[27] - third).abs() < 1e-12);
        assert!((curves.success[99] - third).abs() < 1e-12);
        assert_eq!(curves.success[100], 0.0);
        let expected_auc = (27.0 * 2.0 * third + 73.0 * third) / 101.0;
        assert!((curves.auc - expected_auc).abs() < 1e-12);
        assert!((curves.auc - 127.0 / 303.0).abs() < 1e-12);
    }

    #[test]
    fn stuck_tracker_loses_the_success_tail() {
        // Predictions frozen at the first box while the target walks away:
        // overlap decays to zero, so the upper success samples vanish.
        let gt: Vec<BoundingBox> = (0..30)
            .map(|i| BoundingBox::new(i as f64 * 2.0, 0.0, 20.0, 20.0))
            .collect();
        let pred = vec![gt[0]; 30];
        let curves = EvalCurves::from_scores(&FrameScores::from_boxes(&pred, &gt));
        assert!(curves.success[0] > 0.0);
        assert_eq!(curves.success[90], 1.0 / 30.0, "only the first frame overlaps fully");
        assert!(curves.auc < 0.5);
    }

    #[test]
    fn pooling_equals_concatenation() {
        let gt_a = vec![BoundingBox::new(0.0, 0.0, 10.0, 10.0); 4];
        let pred_a: Vec<BoundingBox> = (0..4)
            .map(|i| BoundingBox::new(i as f64, 0.0, 10.0, 10.0))
            .collect();
        let gt_b = vec![BoundingBox::new(5.0, 5.0, 8.0, 8.0); 7];
        let pred_b: Vec<BoundingBox> = (0..7)
            .map(|i| BoundingBox::new(5.0, 5.0 + i as f64 * 2.0, 8.0, 8.0))
            .collect();

        let mut pooled = FrameScores::from_boxes(&pred_a, &gt_a);
        pooled.extend(&FrameScores::from_boxes(&pred_b, &gt_b));
        let direct = EvalCurves::from_scores(&pooled);

        let all_pred: Vec<_> = pred_a.iter().chain(&pred_b).copied().collect();
        let all_gt: Vec<_> = gt_a.iter().chain(&gt_b).copied().collect();
        let concat = EvalCurves::from_scores(&FrameScores::from_boxes(&all_pred, &all_gt));
        assert_eq!(direct, concat);
    }

    #[test]
    fn groundtruth_parsing_accepts_mixed_separators() {
        let text = "1,2,3,4\n5\t6\t7\t8\n9 10 11 12\n";
        let boxes = parse_groundtruth(text, false).unwrap();
        assert_eq!(boxes.len(), 3);
        assert_eq!(boxes[1], BoundingBox::new(5.0, 6.0, 7.0, 8.0));

        let shifted = parse_groundtruth("1,2,3,4\n", true).unwrap();
        assert_eq!(shifted[0], BoundingBox::new(0.0, 1.0, 3.0, 4.0));

        assert!(parse_groundtruth("1,2,3\n", false).is_err());
        assert!(parse_groundtruth("a,b,c,d\n", false).is_err());
        assert!(parse_groundtruth("1,2,0,4\n", false).is_err());
    }

    #[test]
    fn oracle_ope_on_generated_sequence() {
        let mut spec = crate::synthdata::ScenarioSpec::translate_demo();
        spec.frames = 5;
        let dir = tempfile::tempdir().unwrap();
        crate::synthdata::generate(&spec, dir.path()).unwrap();

        let seq = load_sequence(dir.path(), false).unwrap();
        assert_eq!(seq.frames.len(), 5);
        let report = run_ope(&[seq], &TrackerConfig::default(), true);
        assert_eq!(report.per_sequence.len(), 1);
        let run = report.per_sequence[0].outcome.as_ref().unwrap();
        assert_eq!(run.curves.precision_at_20, 1.0);
        assert!((run.curves.auc - 100.0 / 101.0).abs() < 1e-12);
        assert_eq!(report.pooled.precision_at_20, 1.0);
    }

    #[test]
    fn missing_groundtruth_is_a_sequence_error() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..3 {
            image::RgbImage::new(16, 16)
                .save(dir.path().join(format!("{:04}.png", i + 1)))
                .unwrap();
        }
        assert!(matches!(
            load_sequence(dir.path(), false),
            Err(Error::Sequence(_))
        ));
    }

    #[test]
    fn curves_csv_has_the_grid() {
        let gt = vec![BoundingBox::new(0.0, 0.0, 10.0, 10.0); 2];
        let curves = EvalCurves::from_scores(&FrameScores::from_boxes(&gt, &gt));
        let mut buf = Vec::new();
        write_curves_csv(&curves, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 51 + 101);
        assert_eq!(lines[0], "metric,threshold,value");
        assert_eq!(lines[1], "precision,0,1");
        assert!(lines[52].starts_with("success,0.00,"));
    }

    proptest! {
        #[test]
        fn curves_are_monotone(
            boxes in proptest::collection::vec(
                (0.0f64..100.0, 0.0f64..100.0, 1.0f64..40.0, 1.0f64..40.0),
                1..40,
            )
        ) {
            let gt = vec![BoundingBox::new(40.0, 40.0, 20.0, 20.0); boxes.len()];
            let pred: Vec<BoundingBox> = boxes
                .iter()
                .map(|&(x, y, w, h)| BoundingBox::new(x, y, w, h))
                .collect();
            let curves = EvalCurves::from_scores(&FrameScores::from_boxes(&pred, &gt));
            for w in curves.precision.windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
            for w in curves.success.windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
            prop_assert!((0.0..=1.0).contains(&curves.auc));
        }
    }
}
