//! The tracking state machine: initialization from a first-frame box,
//! per-frame greedy matching, vote-based center estimation, occlusion
//! detection against a background keypoint pool, and the online model
//! update.

use crate::config::TrackerConfig;
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::geom::{BoundingBox, Vec2};
use crate::keypoints::{Descriptor, FeatureBackend, GradientFeatures, Keypoint};
use crate::segmentation::{plan_for_box_density, segment, LabelMap, SegmentationPlan, Superpixel};
use crate::spikes::{attach_structure, similarity, MatchLookup, SimilarityScore, Spikes};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};

/// One tracked part: a SPiKeS with its vote vector and reliability weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpikes {
    pub spikes: Spikes,
    /// Offset from the part center to the target center.
    pub vote: Vec2,
    /// Persistence weight, exponentially smoothed match frequency in (0, 1].
    pub persistence: f64,
    /// Predictive weight, accumulated reward for voting near the final
    /// center; starts at 1 and never decreases.
    pub predictive: f64,
    /// Frames since insertion.
    pub age: u64,
}

/// A pooled keypoint with its own persistence weight. Pool entries carry a
/// stable id so part structures survive pool eviction.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolKeypoint {
    pub id: usize,
    pub keypoint: Keypoint,
    pub descriptor: Descriptor,
    pub weight: f64,
}

/// The tracker's appearance and motion state.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub model_spikes: Vec<ModelSpikes>,
    /// Foreground keypoint pool.
    pub fg_keypoints: Vec<PoolKeypoint>,
    /// Background keypoint pool, used for occlusion detection.
    pub bg_keypoints: Vec<PoolKeypoint>,
    /// Box dimensions, fixed after the first frame.
    pub bbox_dims: (f64, f64),
    /// Center estimate at t-1.
    pub last_center: Vec2,
    /// Center estimate at t-2.
    pub prev_center: Vec2,
    /// Superpixel diameter from the initial plan; also sets the structure
    /// radius and motion gate scale.
    pub diameter: f64,
    /// Maximum number of model parts.
    pub capacity: usize,
    next_pool_id: usize,
}

/// A retained model-to-query part correspondence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchPair {
    pub model_index: usize,
    pub query_index: usize,
    pub score: SimilarityScore,
    pub displacement: f64,
}

/// One cast vote: predicted center position and its weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vote {
    pub position: Vec2,
    pub weight: f64,
}

/// Per-frame tracking result.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutcome {
    pub center: Vec2,
    pub bbox: BoundingBox,
    pub occluded: bool,
    pub n_valid_matches: usize,
    pub votes: Vec<Vote>,
}

/// Summary snapshot of a model for inspection tooling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub version: u32,
    pub diameter: f64,
    pub bbox_dims: (f64, f64),
    pub last_center: [f64; 2],
    pub prev_center: [f64; 2],
    pub fg_pool_size: usize,
    pub bg_pool_size: usize,
    pub capacity: usize,
    pub spikes: Vec<SpikesSnapshot>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpikesSnapshot {
    pub center: [f64; 2],
    pub vote: [f64; 2],
    pub persistence: f64,
    pub predictive: f64,
    pub age: u64,
    pub n_links: usize,
}

pub const SNAPSHOT_VERSION: u32 = 1;

impl Model {
    /// Assembles a model from bare parts with empty keypoint pools.
    /// Useful for driving the matching stage directly.
    pub fn from_parts(
        model_spikes: Vec<ModelSpikes>,
        bbox_dims: (f64, f64),
        last_center: Vec2,
        prev_center: Vec2,
        diameter: f64,
        capacity: usize,
    ) -> Model {
        Model {
            model_spikes,
            fg_keypoints: Vec::new(),
            bg_keypoints: Vec::new(),
            bbox_dims,
            last_center,
            prev_center,
            diameter,
            capacity,
            next_pool_id: 0,
        }
    }

    pub fn structure_radius(&self, config: &TrackerConfig) -> f64 {
        config.structure_radius_factor * self.diameter
    }

    pub fn snapshot(&self) -> ModelSnapshot {
        ModelSnapshot {
            version: SNAPSHOT_VERSION,
            diameter: self.diameter,
            bbox_dims: self.bbox_dims,
            last_center: [self.last_center.x, self.last_center.y],
            prev_center: [self.prev_center.x, self.prev_center.y],
            fg_pool_size: self.fg_keypoints.len(),
            bg_pool_size: self.bg_keypoints.len(),
            capacity: self.capacity,
            spikes: self
                .model_spikes
                .iter()
                .map(|ms| SpikesSnapshot {
                    center: [ms.spikes.center().x, ms.spikes.center().y],
                    vote: [ms.vote.x, ms.vote.y],
                    persistence: ms.persistence,
                    predictive: ms.predictive,
                    age: ms.age,
                    n_links: ms.spikes.links.len(),
                })
                .collect(),
        }
    }
}

/// Persistence update: `w <- (1 - rate) * w + rate * [matched]`.
pub fn persistence_step(weight: f64, matched: bool, rate: f64) -> f64 {
    (1.0 - rate) * weight + rate * if matched { 1.0 } else { 0.0 }
}

/// Predictive update: phi <- phi + exp(-d^2) with d the pixel distance
/// between the part's vote and the final center.
pub fn predictive_step(predictive: f64, dist_sq: f64, cap: Option<f64>) -> f64 {
    let next = predictive + (-dist_sq).exp();
    match cap {
        Some(c) => next.min(c),
        None => next,
    }
}

fn detector_for(diameter: f64) -> GradientFeatures {
    GradientFeatures::new((diameter / 2.0).round().max(2.0) as u32)
}

fn pixel_of(p: Vec2) -> Option<(u32, u32)> {
    if p.x < 0.0 || p.y < 0.0 {
        return None;
    }
    Some((p.x.floor() as u32, p.y.floor() as u32))
}

/// Builds the initial model from the first frame and its bounding box.
///
/// Superpixels with at least `foreground_overlap` of their pixels inside
/// the box become model parts with votes toward the box center; keypoints
/// inside those superpixels seed the foreground pool, keypoints in the
/// surrounding band (box inflated x2, minus the box) seed the background
/// pool.
pub fn init(frame: &Frame, bbox: &BoundingBox, config: &TrackerConfig) -> Result<Model> {
    config.validate()?;
    if bbox.w <= 0.0
        || bbox.h <= 0.0
        || bbox.x < 0.0
        || bbox.y < 0.0
        || bbox.x + bbox.w > frame.width() as f64
        || bbox.y + bbox.h > frame.height() as f64
    {
        return Err(Error::InvalidFrame(format!(
            "initial box {bbox:?} does not fit a {}x{} frame",
            frame.width(),
            frame.height()
        )));
    }

    let plan = plan_for_box_density(frame.dims(), (bbox.w, bbox.h), config.superpixels_per_box);
    let (superpixels, _labels) = segment(frame, &plan, config.compactness);
    let described = detector_for(plan.diameter).detect_and_describe(frame, config.max_keypoints);

    let selected: Vec<Superpixel> = superpixels
        .into_iter()
        .filter(|sp| {
            let inside = sp
                .pixels
                .iter()
                .filter(|&&(x, y)| bbox.contains_pixel(x, y))
                .count();
            inside as f64 >= config.foreground_overlap * sp.pixels.len() as f64
        })
        .collect();
    if selected.is_empty() {
        return Err(Error::EmptyModel);
    }

    let selected_pixels: HashSet<(u32, u32)> = selected
        .iter()
        .flat_map(|s| s.pixels.iter().copied())
        .collect();

    let mut next_pool_id = 0;
    let mut fg_keypoints = Vec::new();
    let mut bg_keypoints = Vec::new();
    let band_outer = bbox.inflated(2.0);
    for (kp, desc) in described.keypoints.iter().zip(&described.descriptors) {
        if let Some(px) = pixel_of(kp.position) {
            if selected_pixels.contains(&px) {
                fg_keypoints.push(PoolKeypoint {
                    id: next_pool_id,
                    keypoint: *kp,
                    descriptor: desc.clone(),
                    weight: 1.0,
                });
                next_pool_id += 1;
                continue;
            }
        }
        if band_outer.contains_point(kp.position) && !bbox.contains_point(kp.position) {
            bg_keypoints.push(PoolKeypoint {
                id: next_pool_id,
                keypoint: *kp,
                descriptor: desc.clone(),
                weight: 1.0,
            });
            next_pool_id += 1;
        }
    }

    let radius = config.structure_radius_factor * plan.diameter;
    let center0 = bbox.center();
    let model_spikes: Vec<ModelSpikes> = selected
        .into_iter()
        .map(|sp| {
            let center = sp.center;
            let links = attach_structure(center, radius, fg_keypoints.iter().map(|p| (p.id, &p.keypoint)));
            ModelSpikes {
                spikes: Spikes {
                    superpixel: sp,
                    links,
                    radius,
                },
                vote: center0 - center,
                persistence: 1.0,
                predictive: 1.0,
                age: 0,
            }
        })
        .collect();

    let capacity = ((config.model_capacity_factor * model_spikes.len() as f64).round() as usize)
        .max(model_spikes.len());

    Ok(Model {
        model_spikes,
        fg_keypoints,
        bg_keypoints,
        bbox_dims: (bbox.w, bbox.h),
        last_center: center0,
        prev_center: center0,
        diameter: plan.diameter,
        capacity,
        next_pool_id,
    })
}

/// Greedy one-to-one part matching with score and motion rejection.
///
/// Step 1: every model part takes its highest-scoring query SPiKeS.
/// Step 2: many-to-one conflicts keep only the highest-scoring model part.
/// Step 3: a pair survives iff its score strictly exceeds e^(-color_threshold)
/// (plus `score_margin` when it has contributing keypoint matches) and its
/// part displacement stays strictly below recent motion plus the slack.
pub fn match_model(
    model: &Model,
    query: &[Spikes],
    fg_matches: &MatchLookup,
    config: &TrackerConfig,
) -> Vec<MatchPair> {
    if model.model_spikes.is_empty() || query.is_empty() {
        return Vec::new();
    }

    let best: Vec<(usize, SimilarityScore)> = model
        .model_spikes
        .par_iter()
        .map(|ms| {
            let mut best_j = 0usize;
            let mut best_score = SimilarityScore::default();
            let mut best_total = f64::NEG_INFINITY;
            for (j, q) in query.iter().enumerate() {
                let s = similarity(&ms.spikes, q, fg_matches, config.color_threshold);
                if s.total > best_total {
                    best_total = s.total;
                    best_j = j;
                    best_score = s;
                }
            }
            (best_j, best_score)
        })
        .collect();

    let mut by_query: BTreeMap<usize, (usize, SimilarityScore)> = BTreeMap::new();
    for (i, &(j, score)) in best.iter().enumerate() {
        match by_query.get(&j) {
            Some(&(_, held)) if held.total >= score.total => {}
            _ => {
                by_query.insert(j, (i, score));
            }
        }
    }

    let score_floor = (-config.color_threshold).exp();
    let motion_gate = (model.last_center - model.prev_center).norm()
        + config.motion_slack_factor * model.diameter;

    let mut pairs: Vec<MatchPair> = by_query
        .into_iter()
        .filter_map(|(j, (i, score))| {
            let threshold = if score.n_kp_matches == 0 {
                score_floor
            } else {
                score_floor + config.score_margin
            };
            if score.total <= threshold {
                return None;
            }
            let displacement = (model.model_spikes[i].spikes.center() - query[j].center()).norm();
            if displacement >= motion_gate {
                return None;
            }
            Some(MatchPair {
                model_index: i,
                query_index: j,
                score,
                displacement,
            })
        })
        .collect();
    pairs.sort_by_key(|p| p.model_index);
    pairs
}

/// Weighted average of the votes cast by the retained pairs.
pub fn estimate_location(
    pairs: &[MatchPair],
    model: &Model,
    query: &[Spikes],
) -> Result<(Vec2, Vec<Vote>)> {
    if pairs.is_empty() {
        return Err(Error::NoMatches);
    }
    let votes: Vec<Vote> = pairs
        .iter()
        .map(|p| {
            let ms = &model.model_spikes[p.model_index];
            Vote {
                position: query[p.query_index].center() + ms.vote,
                weight: ms.persistence * ms.predictive,
            }
        })
        .collect();
    let total: f64 = votes.iter().map(|v| v.weight).sum();
    let mut center = Vec2::ZERO;
    for v in &votes {
        center = center + v.position * (v.weight / total);
    }
    Ok((center, votes))
}

/// True when strictly more than `threshold` frame keypoints inside the box
/// matched the background pool.
pub fn detect_occlusion(
    bbox: &BoundingBox,
    frame_keypoints: &[Keypoint],
    bg_matched_frame: &HashSet<usize>,
    threshold: usize,
) -> bool {
    let count = bg_matched_frame
        .iter()
        .filter(|&&i| bbox.contains_point(frame_keypoints[i].position))
        .count();
    count > threshold
}

struct UpdateContext<'a> {
    pairs: &'a [MatchPair],
    query: &'a [Spikes],
    labels: &'a LabelMap,
    keypoints: &'a [Keypoint],
    descriptors: &'a [Descriptor],
    /// Foreground pool id -> frame keypoint index.
    fg_matches: &'a MatchLookup,
    /// Frame keypoint indices matched to the foreground pool.
    matched_fg_frame: &'a HashSet<usize>,
    /// Foreground pool ids matched this frame.
    fg_matched_ids: &'a HashSet<usize>,
    /// Background pool ids matched this frame.
    bg_matched_ids: &'a HashSet<usize>,
    /// Frame keypoint indices matched to the background pool.
    bg_matched_frame: &'a HashSet<usize>,
    center: Vec2,
    votes: &'a [Vote],
    radius: f64,
}

fn update_model(model: &mut Model, ctx: &UpdateContext, config: &TrackerConfig) {
    let matched_model: HashSet<usize> = ctx.pairs.iter().map(|p| p.model_index).collect();
    let matched_query: HashSet<usize> = ctx.pairs.iter().map(|p| p.query_index).collect();

    for ms in &mut model.model_spikes {
        ms.age += 1;
    }

    // Reliability weights. Predictive rewards use the votes cast before
    // any blending below.
    for (pair, vote) in ctx.pairs.iter().zip(ctx.votes) {
        let ms = &mut model.model_spikes[pair.model_index];
        ms.predictive = predictive_step(
            ms.predictive,
            (vote.position - ctx.center).norm_sq(),
            config.predictive_cap,
        );
    }
    for (i, ms) in model.model_spikes.iter_mut().enumerate() {
        ms.persistence = persistence_step(
            ms.persistence,
            matched_model.contains(&i),
            config.persistence_rate,
        );
    }
    for pk in &mut model.fg_keypoints {
        pk.weight = persistence_step(
            pk.weight,
            ctx.fg_matched_ids.contains(&pk.id),
            config.persistence_rate,
        );
    }
    for pk in &mut model.bg_keypoints {
        pk.weight = persistence_step(
            pk.weight,
            ctx.bg_matched_ids.contains(&pk.id),
            config.persistence_rate,
        );
    }

    // Descriptor and vote interpolation for every valid pair. The part
    // adopts the matched superpixel's geometry so displacements and edges
    // stay expressed in current-frame coordinates.
    for pair in ctx.pairs {
        let q = &ctx.query[pair.query_index];
        let ms = &mut model.model_spikes[pair.model_index];
        ms.spikes.superpixel.id = q.superpixel.id;
        ms.spikes.superpixel.center = q.superpixel.center;
        ms.spikes.superpixel.pixels = q.superpixel.pixels.clone();
        ms.spikes
            .superpixel
            .histogram
            .blend(&q.superpixel.histogram, config.appearance_rate);
        ms.vote = ms.vote * (1.0 - config.vote_rate)
            + (ctx.center - q.center()) * config.vote_rate;
    }

    // Foreground keypoints ride with the target: carry every stored
    // position by the estimated displacement, then blend matched entries
    // toward their observations. Blending in the motion-compensated frame
    // smooths part-relative drift without trailing the target itself.
    let displacement = ctx.center - model.last_center;
    for pk in &mut model.fg_keypoints {
        pk.keypoint.position = pk.keypoint.position + displacement;
        if let Some(&fidx) = ctx.fg_matches.targets(pk.id).first() {
            let observed = &ctx.keypoints[fidx];
            pk.keypoint.position = pk.keypoint.position * (1.0 - config.appearance_rate)
                + observed.position * config.appearance_rate;
            pk.descriptor
                .blend(&ctx.descriptors[fidx], config.appearance_rate);
        }
    }

    // Insertion. New foreground keypoints: unmatched frame keypoints that
    // fall inside a matched query superpixel.
    let matched_query_labels: HashSet<u32> = ctx
        .pairs
        .iter()
        .map(|p| ctx.query[p.query_index].superpixel.id)
        .collect();
    let label_of = |kp: &Keypoint| -> Option<u32> {
        pixel_of(kp.position).and_then(|(x, y)| ctx.labels.label_at(x, y))
    };
    let mut newly_fg: HashSet<usize> = HashSet::new();
    for (fidx, kp) in ctx.keypoints.iter().enumerate() {
        if ctx.matched_fg_frame.contains(&fidx) || ctx.bg_matched_frame.contains(&fidx) {
            continue;
        }
        if let Some(label) = label_of(kp) {
            if matched_query_labels.contains(&label) {
                model.fg_keypoints.push(PoolKeypoint {
                    id: model.next_pool_id,
                    keypoint: *kp,
                    descriptor: ctx.descriptors[fidx].clone(),
                    weight: config.min_persistence,
                });
                model.next_pool_id += 1;
                newly_fg.insert(fidx);
            }
        }
    }

    // Existing parts refresh their structure against the grown pool.
    {
        let Model {
            model_spikes,
            fg_keypoints,
            ..
        } = model;
        for ms in model_spikes.iter_mut() {
            ms.spikes
                .refresh_structure(fg_keypoints.iter().map(|p| (p.id, &p.keypoint)));
        }
    }

    // New parts: unmatched query superpixels that contain a keypoint
    // matched to the foreground pool.
    let mut candidate_labels: HashSet<u32> = HashSet::new();
    for &fidx in ctx.matched_fg_frame {
        if let Some(label) = label_of(&ctx.keypoints[fidx]) {
            candidate_labels.insert(label);
        }
    }
    for (qidx, q) in ctx.query.iter().enumerate() {
        if matched_query.contains(&qidx) || !candidate_labels.contains(&q.superpixel.id) {
            continue;
        }
        let links = attach_structure(
            q.superpixel.center,
            ctx.radius,
            model.fg_keypoints.iter().map(|p| (p.id, &p.keypoint)),
        );
        model.model_spikes.push(ModelSpikes {
            spikes: Spikes {
                superpixel: q.superpixel.clone(),
                links,
                radius: ctx.radius,
            },
            vote: ctx.center - q.center(),
            persistence: config.min_persistence,
            predictive: 1.0,
            age: 0,
        });
    }

    // Background growth: unmatched keypoints in the surround band.
    let bbox = BoundingBox::from_center(ctx.center, model.bbox_dims);
    let band_outer = bbox.inflated(2.0);
    for (fidx, kp) in ctx.keypoints.iter().enumerate() {
        if ctx.matched_fg_frame.contains(&fidx)
            || ctx.bg_matched_frame.contains(&fidx)
            || newly_fg.contains(&fidx)
        {
            continue;
        }
        if band_outer.contains_point(kp.position) && !bbox.contains_point(kp.position) {
            model.bg_keypoints.push(PoolKeypoint {
                id: model.next_pool_id,
                keypoint: *kp,
                descriptor: ctx.descriptors[fidx].clone(),
                weight: config.min_persistence,
            });
            model.next_pool_id += 1;
        }
    }

    // Deletion: enforce caps by weight, then drop structure links that
    // point at evicted pool entries.
    evict_spikes_to_cap(&mut model.model_spikes, model.capacity);
    evict_pool_to_cap(&mut model.fg_keypoints, config.fg_pool_cap);
    evict_pool_to_cap(&mut model.bg_keypoints, config.bg_pool_cap);
    let alive: HashSet<usize> = model.fg_keypoints.iter().map(|p| p.id).collect();
    for ms in &mut model.model_spikes {
        ms.spikes.links.retain(|l| alive.contains(&l.key));
    }
}

/// Keeps the `cap` highest-persistence parts; ties prefer newer parts so a
/// fresh insertion displaces a stale entry of equal weight.
pub(crate) fn evict_spikes_to_cap(parts: &mut Vec<ModelSpikes>, cap: usize) {
    if parts.len() <= cap {
        return;
    }
    let mut order: Vec<usize> = (0..parts.len()).collect();
    order.sort_by(|&a, &b| {
        parts[b]
            .persistence
            .partial_cmp(&parts[a].persistence)
            .unwrap()
            .then(parts[a].age.cmp(&parts[b].age))
            .then(a.cmp(&b))
    });
    let keep: HashSet<usize> = order[..cap].iter().copied().collect();
    let mut i = 0;
    parts.retain(|_| {
        let kept = keep.contains(&i);
        i += 1;
        kept
    });
}

/// Keeps the `cap` heaviest pool entries; ties prefer newer entries
/// (higher id).
pub(crate) fn evict_pool_to_cap(pool: &mut Vec<PoolKeypoint>, cap: usize) {
    if pool.len() <= cap {
        return;
    }
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| {
        pool[b]
            .weight
            .partial_cmp(&pool[a].weight)
            .unwrap()
            .then(pool[b].id.cmp(&pool[a].id))
    });
    let keep: HashSet<usize> = order[..cap].iter().copied().collect();
    let mut i = 0;
    pool.retain(|_| {
        let kept = keep.contains(&i);
        i += 1;
        kept
    });
}

/// Tracks one frame: segmentation, detection, global keypoint matching,
/// part matching, voting, occlusion check, and (when clear) the model
/// update. Returns the outcome together with the advanced model; the input
/// model is untouched.
///
/// With no valid pairs the center falls back to a constant-velocity
/// prediction, the occluded flag is set, and the model is left exactly as
/// it was.
pub fn track_frame(model: &Model, frame: &Frame, config: &TrackerConfig) -> (FrameOutcome, Model) {
    let mut next = model.clone();
    let outcome = step(&mut next, frame, config);
    (outcome, next)
}

fn step(model: &mut Model, frame: &Frame, config: &TrackerConfig) -> FrameOutcome {
    let fallback = |model: &Model| {
        let center = model.last_center + (model.last_center - model.prev_center);
        FrameOutcome {
            center,
            bbox: BoundingBox::from_center(center, model.bbox_dims),
            occluded: true,
            n_valid_matches: 0,
            votes: Vec::new(),
        }
    };

    // Work region: whole frame, or a 3x box window around the last center.
    let mut origin = (0u32, 0u32);
    let cropped: Option<Frame> = if config.search_window {
        let window = BoundingBox::from_center(
            model.last_center,
            (model.bbox_dims.0 * 3.0, model.bbox_dims.1 * 3.0),
        );
        let x0 = window.x.floor().max(0.0) as u32;
        let y0 = window.y.floor().max(0.0) as u32;
        let x1 = ((window.x + window.w).ceil() as i64).clamp(0, frame.width() as i64) as u32;
        let y1 = ((window.y + window.h).ceil() as i64).clamp(0, frame.height() as i64) as u32;
        if x1 <= x0 || y1 <= y0 {
            return fallback(model);
        }
        origin = (x0, y0);
        Some(
            frame
                .crop(x0, y0, x1 - x0, y1 - y0)
                .expect("window is clamped to the frame"),
        )
    } else {
        None
    };
    let work = cropped.as_ref().unwrap_or(frame);

    // Segment at the model's superpixel scale.
    let area = work.width() as f64 * work.height() as f64;
    let plan = SegmentationPlan {
        n_superpixels: ((area / (model.diameter * model.diameter)).round() as usize).max(1),
        diameter: model.diameter,
    };
    let (mut superpixels, mut labels) = segment(work, &plan, config.compactness);
    let mut described = detector_for(model.diameter).detect_and_describe(work, config.max_keypoints);
    if origin != (0, 0) {
        superpixels = superpixels
            .into_iter()
            .map(|sp| sp.translated(origin.0, origin.1))
            .collect();
        labels = labels.with_origin(origin);
        let shift = Vec2::new(origin.0 as f64, origin.1 as f64);
        for kp in &mut described.keypoints {
            kp.position = kp.position + shift;
        }
    }

    let radius = model.structure_radius(config);
    let query = crate::spikes::build_spikes(superpixels, &described.keypoints, radius);

    // One joint descriptor matching pass: foreground pool, then background
    // pool, against the frame. One-to-one pruning spans both pools.
    let n_fg = model.fg_keypoints.len();
    let pool: Vec<Descriptor> = model
        .fg_keypoints
        .iter()
        .chain(model.bg_keypoints.iter())
        .map(|p| p.descriptor.clone())
        .collect();
    let kp_matches = crate::keypoints::match_descriptors(&pool, &described.descriptors, config.match_ratio);

    let mut fg_pairs: Vec<(usize, usize)> = Vec::new();
    let mut fg_matched_ids = HashSet::new();
    let mut matched_fg_frame = HashSet::new();
    let mut bg_matched_ids = HashSet::new();
    let mut bg_matched_frame = HashSet::new();
    for m in &kp_matches {
        if m.index_a < n_fg {
            let id = model.fg_keypoints[m.index_a].id;
            fg_pairs.push((id, m.index_b));
            fg_matched_ids.insert(id);
            matched_fg_frame.insert(m.index_b);
        } else {
            bg_matched_ids.insert(model.bg_keypoints[m.index_a - n_fg].id);
            bg_matched_frame.insert(m.index_b);
        }
    }
    let fg_matches = MatchLookup::from_pairs(fg_pairs);

    let pairs = match_model(model, &query, &fg_matches, config);
    if pairs.is_empty() {
        return fallback(model);
    }

    let (center, votes) = estimate_location(&pairs, model, &query).expect("pairs is non-empty");
    let bbox = BoundingBox::from_center(center, model.bbox_dims);
    let occluded = detect_occlusion(
        &bbox,
        &described.keypoints,
        &bg_matched_frame,
        config.occlusion_threshold,
    );

    if !occluded {
        let ctx = UpdateContext {
            pairs: &pairs,
            query: &query,
            labels: &labels,
            keypoints: &described.keypoints,
            descriptors: &described.descriptors,
            fg_matches: &fg_matches,
            matched_fg_frame: &matched_fg_frame,
            fg_matched_ids: &fg_matched_ids,
            bg_matched_ids: &bg_matched_ids,
            bg_matched_frame: &bg_matched_frame,
            center,
            votes: &votes,
            radius,
        };
        update_model(model, &ctx, config);
        model.prev_center = model.last_center;
        model.last_center = center;
    }

    FrameOutcome {
        center,
        bbox,
        occluded,
        n_valid_matches: pairs.len(),
        votes,
    }
}

/// Owning convenience wrapper around [`init`] and [`track_frame`].
pub struct SpikesTracker {
    pub model: Model,
    pub config: TrackerConfig,
}

impl SpikesTracker {
    pub fn init(frame: &Frame, bbox: &BoundingBox, config: TrackerConfig) -> Result<Self> {
        let model = init(frame, bbox, &config)?;
        Ok(SpikesTracker { model, config })
    }

    pub fn step(&mut self, frame: &Frame) -> FrameOutcome {
        let (outcome, next) = track_frame(&self.model, frame, &self.config);
        self.model = next;
        outcome
    }
}
