//! Per-frame tracking diagnostics on the synthetic scenarios.

use spikes_track::synthdata::{render, ScenarioSpec};
use spikes_track::tracker::{init, track_frame};
use spikes_track::TrackerConfig;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "translate".into());
    let spec = match which.as_str() {
        "occlude" => ScenarioSpec::occlude_demo(),
        "illum" => ScenarioSpec::illum_demo(),
        "deform" => ScenarioSpec::deform_demo(),
        "clutter" => ScenarioSpec::clutter_demo(),
        _ => ScenarioSpec::translate_demo(),
    };
    let seq = render(&spec).unwrap();
    let config = TrackerConfig::default();
    let mut model = init(&seq.frames[0], &seq.groundtruth[0], &config).unwrap();
    println!(
        "init: {} parts, {} fg kps, {} bg kps, diameter {:.2}, capacity {}",
        model.model_spikes.len(),
        model.fg_keypoints.len(),
        model.bg_keypoints.len(),
        model.diameter,
        model.capacity,
    );
    for (k, frame) in seq.frames.iter().enumerate().skip(1) {
        let (outcome, next) = track_frame(&model, frame, &config);
        model = next;
        let gt_box = seq.groundtruth[k];
        let gt = gt_box.center();
        let cle = (outcome.center - gt).norm();
        let mean_links = model
            .model_spikes
            .iter()
            .map(|m| m.spikes.links.len())
            .sum::<usize>() as f64
            / model.model_spikes.len() as f64;

        // Contamination: parts and pool keypoints off the true target.
        let roi = gt_box.inflated(1.2);
        let stray_parts = model
            .model_spikes
            .iter()
            .filter(|m| !roi.contains_point(m.spikes.center()))
            .count();
        let stray_weight: f64 = model
            .model_spikes
            .iter()
            .filter(|m| !roi.contains_point(m.spikes.center()))
            .map(|m| m.persistence * m.predictive)
            .sum();
        let total_weight: f64 = model
            .model_spikes
            .iter()
            .map(|m| m.persistence * m.predictive)
            .sum();
        let stray_fg = model
            .fg_keypoints
            .iter()
            .filter(|p| !roi.contains_point(p.keypoint.position))
            .count();
        let vote_spread = {
            let n = outcome.votes.len().max(1) as f64;
            let mean = outcome
                .votes
                .iter()
                .fold(spikes_track::Vec2::ZERO, |a, v| a + v.position * (1.0 / n));
            (outcome
                .votes
                .iter()
                .map(|v| (v.position - mean).norm_sq())
                .sum::<f64>()
                / n)
                .sqrt()
        };
        println!(
            "frame {k:3}: cle {cle:6.2} matches {:3} occ {} parts {:3} (stray {:3} w {:4.1}%) fg {:4} (stray {:3}) bg {:4} links {mean_links:4.1} spread {vote_spread:6.2} vis {}",
            outcome.n_valid_matches,
            outcome.occluded as u8,
            model.model_spikes.len(),
            stray_parts,
            100.0 * stray_weight / total_weight,
            model.fg_keypoints.len(),
            stray_fg,
            model.bg_keypoints.len(),
            seq.visibility.as_ref().map_or(String::new(), |v| format!("{:.2}", v[k])),
        );
    }
}
