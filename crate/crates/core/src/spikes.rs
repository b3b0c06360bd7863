//! Superpixel-keypoint structures (SPiKeS) and their similarity score.
//!
//! A SPiKeS is a superpixel plus every keypoint found within radius R of
//! its center, each linked by the edge vector from the center to the
//! keypoint. Two SPiKeS compare by color (Bhattacharyya-gated histogram
//! term) plus structure (matched keypoints weighted by reoriented edge
//! agreement).

use crate::color::bhattacharyya;
use crate::geom::Vec2;
use crate::keypoints::{Keypoint, KeypointMatch};
use crate::segmentation::Superpixel;
use serde::Serialize;
use std::collections::HashMap;

/// One keypoint attached to a SPiKeS. `key` identifies the keypoint in
/// whatever pool the structure was built against (frame index or model
/// pool id); the orientation is copied so scoring needs no pool lookup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureLink {
    pub key: usize,
    pub edge: Vec2,
    pub orientation: f64,
}

/// A superpixel with its surrounding keypoint structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Spikes {
    pub superpixel: Superpixel,
    /// Links sorted by `key`; may be empty for a superpixel-only SPiKeS.
    pub links: Vec<StructureLink>,
    /// Radius used at construction.
    pub radius: f64,
}

impl Spikes {
    pub fn center(&self) -> Vec2 {
        self.superpixel.center
    }

    pub fn find_link(&self, key: usize) -> Option<&StructureLink> {
        self.links
            .binary_search_by_key(&key, |l| l.key)
            .ok()
            .map(|i| &self.links[i])
    }

    /// Rebuilds the keypoint structure from a keyed keypoint set, keeping
    /// every keypoint strictly closer than `radius` to the center.
    pub fn refresh_structure<'a>(&mut self, keypoints: impl Iterator<Item = (usize, &'a Keypoint)>) {
        self.links = attach_structure(self.superpixel.center, self.radius, keypoints);
    }
}

/// Builds the links for a center: keypoint k attaches iff |x_k - c| < R.
pub fn attach_structure<'a>(
    center: Vec2,
    radius: f64,
    keypoints: impl Iterator<Item = (usize, &'a Keypoint)>,
) -> Vec<StructureLink> {
    let mut links: Vec<StructureLink> = keypoints
        .filter_map(|(key, kp)| {
            let edge = kp.position - center;
            (edge.norm() < radius).then_some(StructureLink {
                key,
                edge,
                orientation: kp.orientation,
            })
        })
        .collect();
    links.sort_by_key(|l| l.key);
    links
}

/// Combines each superpixel with the keypoints within radius `radius` of
/// its center. A keypoint may appear in many structures; a superpixel with
/// no nearby keypoint yields an empty structure.
pub fn build_spikes(superpixels: Vec<Superpixel>, keypoints: &[Keypoint], radius: f64) -> Vec<Spikes> {
    superpixels
        .into_iter()
        .map(|sp| {
            let links = attach_structure(sp.center, radius, keypoints.iter().enumerate());
            Spikes {
                superpixel: sp,
                links,
                radius,
            }
        })
        .collect()
}

/// Expresses an edge vector in the keypoint's canonical frame by rotating
/// it by minus the principal orientation. Magnitude is preserved.
pub fn reorient_edge(edge: Vec2, orientation: f64) -> Vec2 {
    edge.rotated(-orientation)
}

/// Structure agreement weight for a matched keypoint pair:
/// gamma = exp(-|e_m' - e_n'| / (2R)) with both edges reoriented.
/// Since |e| < R on both sides, gamma stays in (e^-1, 1].
pub fn gamma(edge_m: Vec2, orient_m: f64, edge_n: Vec2, orient_n: f64, radius: f64) -> f64 {
    let d = (reorient_edge(edge_m, orient_m) - reorient_edge(edge_n, orient_n)).norm();
    (-d / (2.0 * radius)).exp()
}

/// Pairwise SPiKeS score: zero when the color gate fails, otherwise the
/// color term plus the accumulated structure term.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimilarityScore {
    pub total: f64,
    pub color_part: f64,
    pub structure_part: f64,
    pub n_kp_matches: usize,
}

/// Keypoint match relation, keyed from one side's key space into the
/// other's. Built once per frame and shared by every pairwise score.
#[derive(Debug, Clone, Default)]
pub struct MatchLookup {
    forward: HashMap<usize, Vec<usize>>,
    len: usize,
}

impl MatchLookup {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut forward: HashMap<usize, Vec<usize>> = HashMap::new();
        let mut len = 0;
        for (a, b) in pairs {
            forward.entry(a).or_default().push(b);
            len += 1;
        }
        for v in forward.values_mut() {
            v.sort_unstable();
        }
        MatchLookup { forward, len }
    }

    pub fn from_matches(matches: &[KeypointMatch]) -> Self {
        Self::from_pairs(matches.iter().map(|m| (m.index_a, m.index_b)))
    }

    pub fn targets(&self, key: usize) -> &[usize] {
        self.forward.get(&key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.targets(a).binary_search(&b).is_ok()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The relation with pair order swapped.
    pub fn inverted(&self) -> MatchLookup {
        Self::from_pairs(
            self.forward
                .iter()
                .flat_map(|(&a, bs)| bs.iter().map(move |&b| (b, a))),
        )
    }
}

/// Similarity z between two SPiKeS given the global keypoint match
/// relation (keyed a-side to b-side) and the color gate threshold.
pub fn similarity(a: &Spikes, b: &Spikes, matches: &MatchLookup, color_threshold: f64) -> SimilarityScore {
    let d = bhattacharyya(&a.superpixel.histogram, &b.superpixel.histogram);
    if d >= color_threshold {
        return SimilarityScore::default();
    }
    let color_part = (-d).exp();

    let mut structure_part = 0.0;
    let mut n_kp_matches = 0;
    for link_a in &a.links {
        for &target in matches.targets(link_a.key) {
            if let Some(link_b) = b.find_link(target) {
                structure_part += gamma(
                    link_a.edge,
                    link_a.orientation,
                    link_b.edge,
                    link_b.orientation,
                    a.radius,
                );
                n_kp_matches += 1;
            }
        }
    }

    SimilarityScore {
        total: color_part + structure_part,
        color_part,
        structure_part,
        n_kp_matches,
    }
}

/// One JSON line per SPiKeS: center, radius, and edge list. Used by the
/// CLI `inspect` command.
pub fn write_jsonl(spikes: &[Spikes], mut out: impl std::io::Write) -> std::io::Result<()> {
    #[derive(Serialize)]
    struct LinkRecord {
        key: usize,
        edge: [f64; 2],
    }
    #[derive(Serialize)]
    struct SpikesRecord {
        id: u32,
        center: [f64; 2],
        radius: f64,
        pixel_count: usize,
        links: Vec<LinkRecord>,
    }
    for s in spikes {
        let record = SpikesRecord {
            id: s.superpixel.id,
            center: [s.superpixel.center.x, s.superpixel.center.y],
            radius: s.radius,
            pixel_count: s.superpixel.pixels.len(),
            links: s
                .links
                .iter()
                .map(|l| LinkRecord {
                    key: l.key,
                    edge: [l.edge.x, l.edge.y],
                })
                .collect(),
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::{HsvHistogram, HSV_BINS};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn hist_single(bin: usize) -> HsvHistogram {
        let mut bins = [0.0; HSV_BINS];
        bins[bin] = 1.0;
        HsvHistogram::from_bins(bins).unwrap()
    }

    fn hist_two(b0: usize, w0: f64, b1: usize) -> HsvHistogram {
        let mut bins = [0.0; HSV_BINS];
        bins[b0] = w0;
        bins[b1] = 1.0 - w0;
        HsvHistogram::from_bins(bins).unwrap()
    }

    fn superpixel_at(center: Vec2, hist: HsvHistogram) -> Superpixel {
        Superpixel {
            id: 0,
            center,
            pixels: vec![(center.x as u32, center.y as u32)],
            histogram: hist,
        }
    }

    fn kp(x: f64, y: f64, orientation: f64) -> Keypoint {
        Keypoint {
            position: Vec2::new(x, y),
            orientation,
            response: 1.0,
            scale: 8.0,
        }
    }

    fn plain_spikes(center: Vec2, hist: HsvHistogram, links: Vec<StructureLink>, radius: f64) -> Spikes {
        Spikes {
            superpixel: superpixel_at(center, hist),
            links,
            radius,
        }
    }

    #[test]
    fn attaches_keypoint_within_radius() {
        let sp = superpixel_at(Vec2::new(10.0, 10.0), hist_single(0));
        let kps = vec![kp(12.0, 10.0, 0.0)];
        let spikes = build_spikes(vec![sp], &kps, 5.0);
        assert_eq!(spikes[0].links.len(), 1);
        assert_eq!(spikes[0].links[0].edge, Vec2::new(2.0, 0.0));
    }

    #[test]
    fn keypoint_at_exact_radius_is_excluded() {
        let sp = superpixel_at(Vec2::new(10.0, 10.0), hist_single(0));
        let kps = vec![kp(15.0, 10.0, 0.0)]; // distance exactly 5
        let spikes = build_spikes(vec![sp], &kps, 5.0);
        assert!(spikes[0].links.is_empty());
    }

    #[test]
    fn shared_keypoint_joins_both_structures() {
        let a = superpixel_at(Vec2::new(0.0, 0.0), hist_single(0));
        let b = superpixel_at(Vec2::new(6.0, 0.0), hist_single(1));
        let kps = vec![kp(3.0, 0.0, 0.0)];
        let spikes = build_spikes(vec![a, b], &kps, 5.0);
        assert_eq!(spikes[0].links.len(), 1);
        assert_eq!(spikes[1].links.len(), 1);
    }

    #[test]
    fn reorient_examples() {
        assert_eq!(reorient_edge(Vec2::new(1.0, 0.0), 0.0), Vec2::new(1.0, 0.0));
        let r = reorient_edge(Vec2::new(1.0, 0.0), PI / 2.0);
        assert!((r.x - 0.0).abs() < 1e-12);
        assert!((r.y - -1.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_examples() {
        // Identical edges and orientations.
        let g = gamma(Vec2::new(2.0, 1.0), 0.3, Vec2::new(2.0, 1.0), 0.3, 5.0);
        assert!((g - 1.0).abs() < 1e-12);

        // Rotation invariance: both reorient to (3, 0).
        let g = gamma(Vec2::new(3.0, 0.0), 0.0, Vec2::new(0.0, 3.0), PI / 2.0, 7.0);
        assert!((g - 1.0).abs() < 1e-12);

        // Hand arithmetic: |(4,0) - (-4,0)| = 8, exp(-8/10).
        let g = gamma(Vec2::new(4.0, 0.0), 0.0, Vec2::new(-4.0, 0.0), 0.0, 5.0);
        assert!((g - (-0.8f64).exp()).abs() < 1e-12);
        assert!((g - 0.4493).abs() < 1e-4);
    }

    #[test]
    fn similarity_identical_superpixel_only() {
        let a = plain_spikes(Vec2::new(5.0, 5.0), hist_single(3), vec![], 10.0);
        let s = similarity(&a, &a, &MatchLookup::new(), 0.7);
        assert_eq!(s.total, 1.0);
        assert_eq!(s.color_part, 1.0);
        assert_eq!(s.structure_part, 0.0);
        assert_eq!(s.n_kp_matches, 0);
    }

    #[test]
    fn similarity_color_gate_rejects() {
        // Bhattacharyya coefficient sqrt(1 * 0.1296) = 0.36 gives d = 0.8
        // exactly: at or above the 0.7 gate, the score is zero.
        let a = plain_spikes(Vec2::ZERO, hist_single(0), vec![], 10.0);
        let b = plain_spikes(Vec2::ZERO, hist_two(0, 0.1296, 1), vec![], 10.0);
        let d = bhattacharyya(&a.superpixel.histogram, &b.superpixel.histogram);
        assert!((d - 0.8).abs() < 1e-12, "setup drifted: d = {d}");
        let s = similarity(&a, &b, &MatchLookup::new(), 0.7);
        assert_eq!(s.total, 0.0);
        assert_eq!(s.n_kp_matches, 0);
    }

    #[test]
    fn similarity_accumulates_structure() {
        // d = 0, one matching keypoint pair with identical reoriented
        // edges: z = 1 + 1 = 2.
        let link_a = StructureLink {
            key: 4,
            edge: Vec2::new(2.0, 0.0),
            orientation: 0.0,
        };
        let link_b = StructureLink {
            key: 9,
            edge: Vec2::new(2.0, 0.0),
            orientation: 0.0,
        };
        let a = plain_spikes(Vec2::ZERO, hist_single(0), vec![link_a], 10.0);
        let b = plain_spikes(Vec2::new(50.0, 0.0), hist_single(0), vec![link_b], 10.0);
        let matches = MatchLookup::from_pairs([(4usize, 9usize)]);
        let s = similarity(&a, &b, &matches, 0.7);
        assert!((s.total - 2.0).abs() < 1e-12);
        assert_eq!(s.n_kp_matches, 1);
    }

    #[test]
    fn similarity_is_symmetric_under_inverted_matches() {
        let a = plain_spikes(
            Vec2::ZERO,
            hist_two(0, 0.7, 1),
            vec![
                StructureLink { key: 0, edge: Vec2::new(1.0, 2.0), orientation: 0.4 },
                StructureLink { key: 1, edge: Vec2::new(-3.0, 0.5), orientation: 2.2 },
            ],
            8.0,
        );
        let b = plain_spikes(
            Vec2::new(9.0, 9.0),
            hist_two(0, 0.6, 1),
            vec![
                StructureLink { key: 0, edge: Vec2::new(1.5, 1.5), orientation: 1.0 },
                StructureLink { key: 2, edge: Vec2::new(0.0, -2.0), orientation: 5.0 },
            ],
            8.0,
        );
        let m = MatchLookup::from_pairs([(0usize, 0usize), (1, 2)]);
        let s_ab = similarity(&a, &b, &m, 0.7);
        let s_ba = similarity(&b, &a, &m.inverted(), 0.7);
        assert_eq!(s_ab.total, s_ba.total);
        assert_eq!(s_ab.n_kp_matches, s_ba.n_kp_matches);
    }

    #[test]
    fn adding_a_match_never_decreases_score() {
        let mut a = plain_spikes(
            Vec2::ZERO,
            hist_single(0),
            vec![StructureLink { key: 0, edge: Vec2::new(1.0, 0.0), orientation: 0.0 }],
            6.0,
        );
        let mut b = plain_spikes(
            Vec2::new(4.0, 0.0),
            hist_single(0),
            vec![StructureLink { key: 0, edge: Vec2::new(0.5, 0.2), orientation: 0.1 }],
            6.0,
        );
        let m1 = MatchLookup::from_pairs([(0usize, 0usize)]);
        let before = similarity(&a, &b, &m1, 0.7);

        a.links.push(StructureLink { key: 7, edge: Vec2::new(-2.0, 1.0), orientation: 3.0 });
        b.links.push(StructureLink { key: 9, edge: Vec2::new(-1.0, 1.5), orientation: 2.5 });
        a.links.sort_by_key(|l| l.key);
        b.links.sort_by_key(|l| l.key);
        let m2 = MatchLookup::from_pairs([(0usize, 0usize), (7, 9)]);
        let after = similarity(&a, &b, &m2, 0.7);
        assert!(after.total >= before.total);
        assert_eq!(after.n_kp_matches, before.n_kp_matches + 1);
    }

    proptest! {
        /// gamma bound: edges strictly inside R on both sides keeps
        /// gamma in (e^-1, 1].
        #[test]
        fn gamma_bound(
            ex in -0.99f64..0.99, ey in -0.99f64..0.99,
            fx in -0.99f64..0.99, fy in -0.99f64..0.99,
            om in 0.0f64..std::f64::consts::TAU,
            on in 0.0f64..std::f64::consts::TAU,
            r in 1.0f64..50.0,
        ) {
            // Scale offsets so |e| < r strictly.
            let e = Vec2::new(ex * r / 1.5, ey * r / 1.5);
            let f = Vec2::new(fx * r / 1.5, fy * r / 1.5);
            prop_assume!(e.norm() < r && f.norm() < r);
            let g = gamma(e, om, f, on, r);
            prop_assert!(g > (-1.0f64).exp());
            prop_assert!(g <= 1.0);
        }

        /// Attachment matches a brute-force distance check.
        #[test]
        fn attachment_equals_brute_force(
            cx in 0.0f64..100.0, cy in 0.0f64..100.0,
            pts in proptest::collection::vec((0.0f64..100.0, 0.0f64..100.0), 0..30),
            r in 1.0f64..60.0,
        ) {
            let center = Vec2::new(cx, cy);
            let kps: Vec<Keypoint> = pts.iter().map(|&(x, y)| kp(x, y, 0.0)).collect();
            let links = attach_structure(center, r, kps.iter().enumerate());
            let expected: Vec<usize> = kps
                .iter()
                .enumerate()
                .filter(|(_, k)| (k.position - center).norm() < r)
                .map(|(i, _)| i)
                .collect();
            let got: Vec<usize> = links.iter().map(|l| l.key).collect();
            prop_assert_eq!(got, expected);
            for l in &links {
                prop_assert!(l.edge.norm() < r);
            }
        }
    }
}
