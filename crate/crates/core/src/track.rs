//! Cross-frame instance bank with confidence-gated track IDs.
//!
//! Each step propagates the stored anchors at constant velocity, associates
//! detections to entries of the same class by center distance (Hungarian,
//! gated), and hands out a fresh ID to any entry whose score reaches
//! `t_track`. IDs are never reused or changed within a sequence.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::instance::{InstanceAnchor, InstancePrediction};
use crate::metrics::{check_grids, greedy_match, MetricsError, OccFrame};
use crate::supervision::hungarian;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackError {
    #[error("invalid track config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackBankConfig {
    /// Inclusive score gate for ID assignment.
    pub t_track: f64,
    pub top_k: usize,
    pub max_age: u32,
    /// Meters.
    pub gate_radius: f64,
    /// Seconds between frames.
    pub frame_dt: f64,
}

impl Default for TrackBankConfig {
    fn default() -> Self {
        Self {
            t_track: 0.2,
            top_k: 300,
            max_age: 4,
            gate_radius: 4.0,
            frame_dt: 0.5,
        }
    }
}

impl TrackBankConfig {
    pub fn validate(&self) -> Result<(), TrackError> {
        if !(self.t_track > 0.0 && self.t_track < 1.0) {
            return Err(TrackError::InvalidConfig(format!("t_track {} not in (0, 1)", self.t_track)));
        }
        if self.top_k == 0 {
            return Err(TrackError::InvalidConfig("top_k must be positive".into()));
        }
        if !(self.gate_radius > 0.0) {
            return Err(TrackError::InvalidConfig("gate_radius must be positive".into()));
        }
        if !(self.frame_dt >= 0.0) {
            return Err(TrackError::InvalidConfig("frame_dt must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackEntry {
    pub track_id: Option<u32>,
    pub class_id: u16,
    pub anchor: InstanceAnchor,
    pub score: f64,
    /// Frames since the last match.
    pub age: u32,
}

/// Moves the center by `velocity · dt` in the ground plane.
pub fn propagate_anchor(a: &InstanceAnchor, dt: f64) -> InstanceAnchor {
    let [x, y, z] = a.center();
    let [vx, vy] = a.velocity();
    a.with_center([x + vx * dt, y + vy * dt, z])
}

fn center_distance(a: &InstanceAnchor, b: &InstanceAnchor) -> f64 {
    let (a, b) = (a.center(), b.center());
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackBank {
    config: TrackBankConfig,
    entries: Vec<TrackEntry>,
    next_id: u32,
}

impl TrackBank {
    pub fn new(config: TrackBankConfig) -> Result<Self, TrackError> {
        config.validate()?;
        Ok(Self {
            config,
            entries: Vec::new(),
            next_id: 0,
        })
    }

    pub fn config(&self) -> &TrackBankConfig {
        &self.config
    }

    pub fn entries(&self) -> &[TrackEntry] {
        &self.entries
    }

    /// Number of IDs handed out so far.
    pub fn ids_assigned(&self) -> u32 {
        self.next_id
    }

    /// Pure form of [`TrackBank::step_mut`].
    pub fn step(&self, detections: &[InstancePrediction]) -> (TrackBank, Vec<InstancePrediction>) {
        let mut next = self.clone();
        let out = next.step_mut(detections);
        (next, out)
    }

    /// Advances one frame. Returns the detections, in input order, with
    /// `track_id` set from their bank entry (`None` below the gate).
    pub fn step_mut(&mut self, detections: &[InstancePrediction]) -> Vec<InstancePrediction> {
        let cfg = self.config;
        for e in &mut self.entries {
            e.anchor = propagate_anchor(&e.anchor, cfg.frame_dt);
        }

        let mut order: Vec<usize> = (0..detections.len()).collect();
        order.sort_by(|&a, &b| detections[b].score.total_cmp(&detections[a].score));

        // detection index -> entry index
        let mut det_entry: Vec<Option<usize>> = vec![None; detections.len()];
        let mut entry_matched = vec![false; self.entries.len()];

        let mut classes: BTreeMap<u16, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for (n, e) in self.entries.iter().enumerate() {
            classes.entry(e.class_id).or_default().0.push(n);
        }
        for &d in &order {
            classes.entry(detections[d].class_id).or_default().1.push(d);
        }
        // pairs beyond the gate get a cost no in-gate solution can reach
        let big = cfg.gate_radius * 4.0 * (1 + detections.len().max(self.entries.len())) as f64;
        for (entries, dets) in classes.values() {
            if entries.is_empty() || dets.is_empty() {
                continue;
            }
            let cost: Vec<Vec<f64>> = entries
                .iter()
                .map(|&e| {
                    dets.iter()
                        .map(|&d| {
                            let dist = center_distance(&self.entries[e].anchor, &detections[d].anchor);
                            if dist <= cfg.gate_radius { dist } else { big }
                        })
                        .collect()
                })
                .collect();
            let pairs = hungarian(&cost).expect("distances are finite");
            for (r, c) in pairs {
                if cost[r][c] <= cfg.gate_radius {
                    det_entry[dets[c]] = Some(entries[r]);
                    entry_matched[entries[r]] = true;
                }
            }
        }

        for (d, slot) in det_entry.iter().enumerate() {
            if let Some(e) = *slot {
                let entry = &mut self.entries[e];
                entry.anchor = detections[d].anchor;
                entry.score = detections[d].score;
                entry.age = 0;
            }
        }
        for (e, matched) in entry_matched.iter().enumerate() {
            if !matched {
                self.entries[e].age += 1;
            }
        }
        for &d in &order {
            if det_entry[d].is_none() {
                let det = &detections[d];
                det_entry[d] = Some(self.entries.len());
                self.entries.push(TrackEntry {
                    track_id: None,
                    class_id: det.class_id,
                    anchor: det.anchor,
                    score: det.score,
                    age: 0,
                });
            }
        }

        let mut by_score: Vec<usize> = (0..self.entries.len()).collect();
        by_score.sort_by(|&a, &b| self.entries[b].score.total_cmp(&self.entries[a].score));
        for &e in &by_score {
            let entry = &mut self.entries[e];
            if entry.track_id.is_none() && entry.score >= cfg.t_track {
                entry.track_id = Some(self.next_id);
                self.next_id += 1;
            }
        }

        let annotated: Vec<InstancePrediction> = detections
            .iter()
            .zip(&det_entry)
            .map(|(det, e)| {
                let mut det = det.clone();
                det.track_id = e.and_then(|e| self.entries[e].track_id);
                det
            })
            .collect();

        let kept: Vec<usize> = by_score
            .into_iter()
            .filter(|&e| self.entries[e].age <= cfg.max_age)
            .take(cfg.top_k)
            .collect();
        let mut kept_entries: Vec<TrackEntry> =
            kept.into_iter().map(|e| self.entries[e].clone()).collect();
        std::mem::swap(&mut self.entries, &mut kept_entries);
        annotated
    }
}

/// Identity switches of predicted tracks against ground-truth tracks.
///
/// Per frame and class, ground truth is matched to predictions greedily at
/// `iou_threshold`. A switch is counted whenever a ground-truth track's
/// matched prediction carries a track ID different from the last ID seen for
/// that track. Unmatched frames, and matches to predictions without an ID,
/// neither count nor reset the remembered ID. Ground-truth instances without
/// a track ID are ignored.
pub fn count_id_switches(
    gt_frames: &[OccFrame],
    pred_frames: &[OccFrame],
    iou_threshold: f64,
) -> Result<usize, MetricsError> {
    if gt_frames.len() != pred_frames.len() {
        return Err(MetricsError::FrameCountMismatch(pred_frames.len(), gt_frames.len()));
    }
    let mut last_seen: HashMap<u32, u32> = HashMap::new();
    let mut switches = 0;
    for (gf, pf) in gt_frames.iter().zip(pred_frames) {
        check_grids(&gf.grid, &pf.grid)?;
        let mut classes: BTreeMap<u16, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for (n, g) in gf.instances.iter().enumerate() {
            classes.entry(g.class_id).or_default().0.push(n);
        }
        for (n, p) in pf.instances.iter().enumerate() {
            classes.entry(p.class_id).or_default().1.push(n);
        }
        for (gts, preds) in classes.values() {
            let g: Vec<_> = gts.iter().map(|&n| &gf.instances[n]).collect();
            let p: Vec<_> = preds.iter().map(|&n| &pf.instances[n]).collect();
            let m = greedy_match(&p, &g, iou_threshold);
            for (gi, matched) in m.gt_to_pred.iter().enumerate() {
                let (Some(gt_id), Some(pi)) = (g[gi].track_id, *matched) else {
                    continue;
                };
                let Some(pred_id) = p[pi].track_id else {
                    continue;
                };
                if let Some(prev) = last_seen.insert(gt_id, pred_id) {
                    if prev != pred_id {
                        switches += 1;
                    }
                }
            }
        }
    }
    Ok(switches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VoxelGridSpec;
    use crate::instance::{Gaussian3D, SparseInstanceOccupancy};

    fn det(class: u16, score: f64, center: [f64; 3], velocity: [f64; 2]) -> InstancePrediction {
        let a = InstanceAnchor::from_yaw(center, [4.0, 2.0, 1.5], 0.0, velocity).unwrap();
        let g = Gaussian3D::isotropic([0.0; 3], 0.5).unwrap();
        InstancePrediction::new(class, score, a, vec![g], None).unwrap()
    }

    fn bank() -> TrackBank {
        TrackBank::new(TrackBankConfig::default()).unwrap()
    }

    #[test]
    fn propagation() {
        let a = InstanceAnchor::from_yaw([1.0, 2.0, 3.0], [1.0; 3], 0.4, [0.0, 0.0]).unwrap();
        assert_eq!(propagate_anchor(&a, 7.0), a);
        let a = InstanceAnchor::from_yaw([1.0, 2.0, 3.0], [1.0; 3], 0.4, [1.0, 0.0]).unwrap();
        let p = propagate_anchor(&a, 0.5);
        assert_eq!(p.center(), [1.5, 2.0, 3.0]);
        assert_eq!(p.yaw_sin_cos(), a.yaw_sin_cos());
        assert_eq!(propagate_anchor(&a, 0.0), a);
    }

    #[test]
    fn gate_is_inclusive() {
        let (_, out) = bank().step(&[det(0, 0.25, [0.0; 3], [0.0; 2])]);
        assert_eq!(out[0].track_id, Some(0));
        let (_, out) = bank().step(&[det(0, 0.1, [0.0; 3], [0.0; 2])]);
        assert_eq!(out[0].track_id, None);
        let (_, out) = bank().step(&[det(0, 0.2, [0.0; 3], [0.0; 2])]);
        assert_eq!(out[0].track_id, Some(0));
    }

    #[test]
    fn redetection_keeps_id() {
        let mut b = bank();
        let mut ids = Vec::new();
        for f in 0..5 {
            let x = f as f64 * 0.5; // 1 m/s at 2 Hz
            let out = b.step_mut(&[det(0, 0.6, [x, 0.0, 0.0], [1.0, 0.0])]);
            ids.push(out[0].track_id);
        }
        assert_eq!(ids, vec![Some(0); 5]);
        assert_eq!(b.entries().len(), 1);
    }

    #[test]
    fn late_promotion_gets_id_once_score_rises() {
        let mut b = bank();
        let out = b.step_mut(&[det(0, 0.1, [0.0; 3], [0.0; 2])]);
        assert_eq!(out[0].track_id, None);
        let out = b.step_mut(&[det(0, 0.3, [0.2, 0.0, 0.0], [0.0; 2])]);
        assert_eq!(out[0].track_id, Some(0));
        // dropping below the gate keeps the ID
        let out = b.step_mut(&[det(0, 0.05, [0.2, 0.0, 0.0], [0.0; 2])]);
        assert_eq!(out[0].track_id, Some(0));
    }

    #[test]
    fn class_and_gate_separate_tracks() {
        let mut b = bank();
        b.step_mut(&[det(0, 0.9, [0.0; 3], [0.0; 2])]);
        let out = b.step_mut(&[det(1, 0.9, [0.0; 3], [0.0; 2]), det(0, 0.9, [10.0, 0.0, 0.0], [0.0; 2])]);
        assert_eq!(out[0].track_id, Some(1));
        assert_eq!(out[1].track_id, Some(2));
    }

    #[test]
    fn eviction_after_max_age() {
        let mut b = bank();
        b.step_mut(&[det(0, 0.9, [0.0; 3], [0.0; 2])]);
        for _ in 0..4 {
            b.step_mut(&[]);
        }
        assert_eq!(b.entries().len(), 1);
        assert_eq!(b.entries()[0].age, 4);
        b.step_mut(&[]);
        assert!(b.entries().is_empty());
        // no re-identification after eviction
        let out = b.step_mut(&[det(0, 0.9, [0.0; 3], [0.0; 2])]);
        assert_eq!(out[0].track_id, Some(1));
    }

    #[test]
    fn top_k_truncation() {
        let cfg = TrackBankConfig { top_k: 2, ..Default::default() };
        let mut b = TrackBank::new(cfg).unwrap();
        let dets: Vec<_> = (0..5).map(|n| det(0, 0.1 * (n + 1) as f64, [10.0 * n as f64, 0.0, 0.0], [0.0; 2])).collect();
        b.step_mut(&dets);
        assert_eq!(b.entries().len(), 2);
        assert!(b.entries().iter().all(|e| e.score >= 0.4 - 1e-12));
    }

    #[test]
    fn output_order_follows_input() {
        let dets = [det(0, 0.3, [0.0; 3], [0.0; 2]), det(0, 0.9, [20.0, 0.0, 0.0], [0.0; 2])];
        let (_, out) = bank().step(&dets);
        // higher score is assigned first
        assert_eq!(out[0].track_id, Some(1));
        assert_eq!(out[1].track_id, Some(0));
        assert_eq!(out[0].score, 0.3);
    }

    #[test]
    fn config_validation() {
        assert!(TrackBank::new(TrackBankConfig { t_track: 1.0, ..Default::default() }).is_err());
        assert!(TrackBank::new(TrackBankConfig { gate_radius: 0.0, ..Default::default() }).is_err());
        assert!(TrackBank::new(TrackBankConfig { top_k: 0, ..Default::default() }).is_err());
    }

    fn occ(track: Option<u32>, voxels: &[u32]) -> SparseInstanceOccupancy {
        SparseInstanceOccupancy::new(0, 0.9, track, voxels.to_vec(), 1 << 20).unwrap()
    }

    fn frame(instances: Vec<SparseInstanceOccupancy>) -> OccFrame {
        OccFrame::new(VoxelGridSpec::occ3d(), instances)
    }

    #[test]
    fn ids_consistent_means_no_switch() {
        let gt: Vec<_> = (0..4).map(|_| frame(vec![occ(Some(7), &[1, 2]), occ(Some(8), &[10, 11])])).collect();
        let pred: Vec<_> = (0..4).map(|_| frame(vec![occ(Some(0), &[1, 2]), occ(Some(1), &[10, 11])])).collect();
        assert_eq!(count_id_switches(&gt, &pred, 0.5).unwrap(), 0);
    }

    #[test]
    fn swap_counts_two() {
        // frame:   0  1  2  3
        // GT 7 ->  0  0  1  1
        // GT 8 ->  1  1  0  0
        let gt: Vec<_> = (0..4).map(|_| frame(vec![occ(Some(7), &[1, 2]), occ(Some(8), &[10, 11])])).collect();
        let pred: Vec<_> = (0..4)
            .map(|f| {
                let (a, b) = if f < 2 { (0, 1) } else { (1, 0) };
                frame(vec![occ(Some(a), &[1, 2]), occ(Some(b), &[10, 11])])
            })
            .collect();
        assert_eq!(count_id_switches(&gt, &pred, 0.5).unwrap(), 2);
    }

    #[test]
    fn gap_then_same_id_is_not_a_switch() {
        // frame:   0  1  2  3  4
        // GT 7 ->  0  -  -  0  0
        let gt: Vec<_> = (0..5).map(|_| frame(vec![occ(Some(7), &[1, 2])])).collect();
        let pred: Vec<_> = (0..5)
            .map(|f| if f == 1 || f == 2 { frame(vec![]) } else { frame(vec![occ(Some(0), &[1, 2])]) })
            .collect();
        assert_eq!(count_id_switches(&gt, &pred, 0.5).unwrap(), 0);
    }

    #[test]
    fn switch_grid_mismatch() {
        let gt = vec![frame(vec![])];
        let pred = vec![OccFrame::new(VoxelGridSpec::occ3d().with_voxel_size(0.8).unwrap(), vec![])];
        assert!(matches!(count_id_switches(&gt, &pred, 0.5), Err(MetricsError::GridMismatch(_))));
    }
}
