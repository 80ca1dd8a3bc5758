//! Instance-occupancy mAP over voxel IoU thresholds, plus semantic mIoU
//! obtained by flattening instances into a per-voxel label grid.
//!
//! Matching is greedy by descending score. For each class and threshold the
//! TP/FP labels of all frames are pooled before AP is computed, and AP uses
//! all-point interpolation of the precision envelope. Classes without any
//! ground-truth instance are left out of the means.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::VoxelGridSpec;
use crate::instance::SparseInstanceOccupancy;

pub const DEFAULT_IOU_THRESHOLDS: [f64; 3] = [0.1, 0.2, 0.3];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("no ground-truth instance in any frame")]
    EmptyGroundTruth,
    #[error("{0} prediction frames but {1} ground-truth frames")]
    FrameCountMismatch(usize, usize),
    #[error("at least one IoU threshold is required")]
    NoThresholds,
}

/// The instance occupancies of one frame on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OccFrame {
    pub grid: VoxelGridSpec,
    pub instances: Vec<SparseInstanceOccupancy>,
}

impl OccFrame {
    pub fn new(grid: VoxelGridSpec, instances: Vec<SparseInstanceOccupancy>) -> Self {
        Self { grid, instances }
    }
}

pub(crate) fn check_grids(a: &VoxelGridSpec, b: &VoxelGridSpec) -> Result<(), MetricsError> {
    if a == b {
        Ok(())
    } else {
        Err(MetricsError::GridMismatch(format!(
            "dims {:?} vs {:?}",
            a.dims(),
            b.dims()
        )))
    }
}

/// `|a ∩ b| / |a ∪ b|` over two sorted voxel sets; 0 when both are empty.
pub fn voxel_iou(a: &SparseInstanceOccupancy, b: &SparseInstanceOccupancy) -> f64 {
    let (a, b) = (a.voxels(), b.voxels());
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    inter as f64 / (a.len() + b.len() - inter) as f64
}

/// [`voxel_iou`] for sets that may live on different grids.
pub fn voxel_iou_on(
    grid_a: &VoxelGridSpec,
    a: &SparseInstanceOccupancy,
    grid_b: &VoxelGridSpec,
    b: &SparseInstanceOccupancy,
) -> Result<f64, MetricsError> {
    check_grids(grid_a, grid_b)?;
    Ok(voxel_iou(a, b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// Per prediction, in input order: matched ground-truth index.
    pub pred_to_gt: Vec<Option<usize>>,
    /// Per ground truth: matched prediction index.
    pub gt_to_pred: Vec<Option<usize>>,
    /// Prediction indices in processing order (descending score, stable).
    pub order: Vec<usize>,
}

impl MatchResult {
    pub fn is_tp(&self, pred: usize) -> bool {
        self.pred_to_gt[pred].is_some()
    }

    /// TP flags in processing order.
    pub fn ordered_labels(&self) -> Vec<bool> {
        self.order.iter().map(|&p| self.is_tp(p)).collect()
    }
}

/// Prediction indices sorted by descending score, ties by input order.
pub(crate) fn score_order(preds: &[&SparseInstanceOccupancy]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[b].score.total_cmp(&preds[a].score));
    order
}

/// One-to-one greedy matching of same-class predictions to ground truth.
/// Each prediction, highest score first, takes the unmatched ground truth of
/// greatest IoU provided that IoU is at least `iou_threshold` (first index on
/// ties).
pub fn greedy_match(
    preds: &[&SparseInstanceOccupancy],
    gts: &[&SparseInstanceOccupancy],
    iou_threshold: f64,
) -> MatchResult {
    let order = score_order(preds);
    let mut pred_to_gt = vec![None; preds.len()];
    let mut gt_to_pred = vec![None; gts.len()];
    for &p in &order {
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in gts.iter().enumerate() {
            if gt_to_pred[g].is_some() {
                continue;
            }
            let iou = voxel_iou(preds[p], gt);
            if iou >= iou_threshold && best.is_none_or(|(_, b)| iou > b) {
                best = Some((g, iou));
            }
        }
        if let Some((g, _)) = best {
            pred_to_gt[p] = Some(g);
            gt_to_pred[g] = Some(p);
        }
    }
    MatchResult {
        pred_to_gt,
        gt_to_pred,
        order,
    }
}

/// All-point interpolated AP of a score-ordered TP/FP sequence.
pub fn average_precision(labels: &[bool], gt_count: usize) -> f64 {
    if gt_count == 0 {
        return if labels.is_empty() { 1.0 } else { 0.0 };
    }
    let mut recall = Vec::with_capacity(labels.len());
    let mut precision = Vec::with_capacity(labels.len());
    let mut tp = 0usize;
    for (n, &is_tp) in labels.iter().enumerate() {
        tp += is_tp as usize;
        recall.push(tp as f64 / gt_count as f64);
        precision.push(tp as f64 / (n + 1) as f64);
    }
    // monotone non-increasing envelope, right to left
    for n in (0..precision.len().saturating_sub(1)).rev() {
        precision[n] = precision[n].max(precision[n + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (r, p) in recall.iter().zip(&precision) {
        ap += (r - prev_recall) * p;
        prev_recall = *r;
    }
    ap
}

/// Mean over per-threshold mAPs.
pub fn average_thresholds(map_at: &[f64]) -> f64 {
    map_at.iter().sum::<f64>() / map_at.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub iou_thresholds: Vec<f64>,
    /// AP per ground-truth class, one entry per threshold.
    pub per_class_ap: BTreeMap<u16, Vec<f64>>,
    pub map_at: Vec<f64>,
    pub map_occ: f64,
    pub miou: f64,
    pub per_class_iou: BTreeMap<u16, f64>,
}

impl EvalReport {
    /// Key-value text, percentages with two decimals.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let pct = |x: f64| format!("{:.2}", 100.0 * x);
        for (t, m) in self.iou_thresholds.iter().zip(&self.map_at) {
            writeln!(s, "map@{t}: {}", pct(*m)).unwrap();
        }
        writeln!(s, "map_occ: {}", pct(self.map_occ)).unwrap();
        writeln!(s, "miou: {}", pct(self.miou)).unwrap();
        for (c, aps) in &self.per_class_ap {
            let aps: Vec<String> = aps.iter().map(|a| pct(*a)).collect();
            writeln!(s, "class.{c}.ap: {}", aps.join(" ")).unwrap();
        }
        for (c, iou) in &self.per_class_iou {
            writeln!(s, "class.{c}.iou: {}", pct(*iou)).unwrap();
        }
        s
    }
}

fn check_frames(preds: &[OccFrame], gts: &[OccFrame]) -> Result<(), MetricsError> {
    if preds.len() != gts.len() {
        return Err(MetricsError::FrameCountMismatch(preds.len(), gts.len()));
    }
    for (p, g) in preds.iter().zip(gts) {
        check_grids(&p.grid, &g.grid)?;
    }
    Ok(())
}

/// Per class and threshold AP with frame pooling, then the class means.
/// Returns `(per_class_ap, map_at)`.
pub fn map_by_threshold(
    preds: &[OccFrame],
    gts: &[OccFrame],
    thresholds: &[f64],
) -> Result<(BTreeMap<u16, Vec<f64>>, Vec<f64>), MetricsError> {
    check_frames(preds, gts)?;
    if thresholds.is_empty() {
        return Err(MetricsError::NoThresholds);
    }
    let gt_classes: BTreeSet<u16> = gts
        .iter()
        .flat_map(|f| f.instances.iter().map(|i| i.class_id))
        .collect();
    if gt_classes.is_empty() {
        return Err(MetricsError::EmptyGroundTruth);
    }

    let mut per_class_ap = BTreeMap::new();
    for &class in &gt_classes {
        let mut aps = Vec::with_capacity(thresholds.len());
        for &t in thresholds {
            // (score, frame, rank-in-frame, tp) pooled over frames
            let mut pooled: Vec<(f32, usize, usize, bool)> = Vec::new();
            let mut gt_count = 0;
            for (f, (pf, gf)) in preds.iter().zip(gts).enumerate() {
                let p: Vec<&SparseInstanceOccupancy> =
                    pf.instances.iter().filter(|i| i.class_id == class).collect();
                let g: Vec<&SparseInstanceOccupancy> =
                    gf.instances.iter().filter(|i| i.class_id == class).collect();
                gt_count += g.len();
                let m = greedy_match(&p, &g, t);
                for (rank, &pi) in m.order.iter().enumerate() {
                    pooled.push((p[pi].score, f, rank, m.is_tp(pi)));
                }
            }
            pooled.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            let labels: Vec<bool> = pooled.iter().map(|x| x.3).collect();
            aps.push(average_precision(&labels, gt_count));
        }
        per_class_ap.insert(class, aps);
    }
    let map_at = (0..thresholds.len())
        .map(|n| per_class_ap.values().map(|v: &Vec<f64>| v[n]).sum::<f64>() / gt_classes.len() as f64)
        .collect();
    Ok((per_class_ap, map_at))
}

/// Voxel → class, the highest-scoring claimant winning; ties go to the lower
/// class id, then the lower instance index.
pub fn semantic_labels(instances: &[SparseInstanceOccupancy]) -> HashMap<u32, u16> {
    let mut best: HashMap<u32, (f32, u16, usize)> = HashMap::new();
    for (n, inst) in instances.iter().enumerate() {
        for &v in inst.voxels() {
            let cand = (inst.score, inst.class_id, n);
            best.entry(v)
                .and_modify(|cur| {
                    let better = cand.0 > cur.0
                        || (cand.0 == cur.0 && (cand.1, cand.2) < (cur.1, cur.2));
                    if better {
                        *cur = cand;
                    }
                })
                .or_insert(cand);
        }
    }
    best.into_iter().map(|(v, (_, c, _))| (v, c)).collect()
}

/// Semantic mIoU with global (all-frame) intersection and union per class,
/// averaged over classes present in the ground truth.
pub fn semantic_miou(
    preds: &[OccFrame],
    gts: &[OccFrame],
) -> Result<(f64, BTreeMap<u16, f64>), MetricsError> {
    check_frames(preds, gts)?;
    let mut inter: BTreeMap<u16, u64> = BTreeMap::new();
    let mut union: BTreeMap<u16, u64> = BTreeMap::new();
    let mut gt_classes = BTreeSet::new();
    for (pf, gf) in preds.iter().zip(gts) {
        let p = semantic_labels(&pf.instances);
        let g = semantic_labels(&gf.instances);
        for (v, &gc) in &g {
            gt_classes.insert(gc);
            match p.get(v) {
                Some(&pc) if pc == gc => {
                    *inter.entry(gc).or_default() += 1;
                    *union.entry(gc).or_default() += 1;
                }
                Some(&pc) => {
                    *union.entry(gc).or_default() += 1;
                    *union.entry(pc).or_default() += 1;
                }
                None => *union.entry(gc).or_default() += 1,
            }
        }
        for (v, &pc) in &p {
            if !g.contains_key(v) {
                *union.entry(pc).or_default() += 1;
            }
        }
    }
    if gt_classes.is_empty() {
        return Err(MetricsError::EmptyGroundTruth);
    }
    let per_class: BTreeMap<u16, f64> = union
        .iter()
        .map(|(&c, &u)| (c, inter.get(&c).copied().unwrap_or(0) as f64 / u as f64))
        .collect();
    let miou = gt_classes.iter().map(|c| per_class[c]).sum::<f64>() / gt_classes.len() as f64;
    Ok((miou, per_class))
}

/// Full evaluation: mAP per threshold, their mean, and semantic mIoU.
pub fn map_occ(
    preds: &[OccFrame],
    gts: &[OccFrame],
    thresholds: &[f64],
) -> Result<EvalReport, MetricsError> {
    let (per_class_ap, map_at) = map_by_threshold(preds, gts, thresholds)?;
    let (miou, per_class_iou) = semantic_miou(preds, gts)?;
    Ok(EvalReport {
        iou_thresholds: thresholds.to_vec(),
        per_class_ap,
        map_occ: average_thresholds(&map_at),
        map_at,
        miou,
        per_class_iou,
    })
}
