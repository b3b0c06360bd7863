//! Part-based visual object tracker built on superpixel-keypoint structures.
//!
//! A target given by a first-frame bounding box is decomposed into
//! superpixels, each enriched with the oriented keypoints found around its
//! center. These structures are matched frame to frame by color and keypoint
//! agreement, matched parts vote for the target center, and the appearance
//! model updates online unless an occlusion is detected against a background
//! keypoint pool.
//!
//! The crate also ships the evaluation harness (precision / success / AUC
//! curves over ground-truthed sequences) and a deterministic synthetic
//! sequence generator used by the acceptance tests.

pub mod color;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod frame;
pub mod geom;
pub mod keypoints;
pub mod segmentation;
pub mod spikes;
pub mod synthdata;
pub mod tracker;

pub use color::{bhattacharyya, histogram, rgb_to_hsv, HsvHistogram, HSV_BINS};
pub use config::TrackerConfig;
pub use error::{ConfigError, Error, Result};
pub use frame::Frame;
pub use geom::{overlap_ratio, BoundingBox, Vec2};
pub use keypoints::{match_descriptors, Descriptor, FeatureBackend, GradientFeatures, Keypoint, KeypointMatch};
pub use segmentation::{plan_for_box_density, plan_segmentation, segment, LabelMap, SegmentationPlan, Superpixel};
pub use spikes::{build_spikes, gamma, reorient_edge, similarity, MatchLookup, SimilarityScore, Spikes};
pub use tracker::{FrameOutcome, MatchPair, Model, ModelSpikes, SpikesTracker};
