use super::SupervisionError;
use crate::instance::{InstanceAnchor, SparseInstanceOccupancy, ANCHOR_WIDTH};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub reg: f64,
    pub cls: f64,
    pub occ: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { reg: 1.0, cls: 1.0, occ: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchCostConfig {
    pub lambda_cls: f64,
    pub lambda_reg: f64,
    pub focal_alpha: f64,
    pub focal_gamma: f64,
    pub weights: LossWeights,
}

impl Default for MatchCostConfig {
    fn default() -> Self {
        Self {
            lambda_cls: 1.0,
            lambda_reg: 1.0,
            focal_alpha: 0.25,
            focal_gamma: 2.0,
            weights: LossWeights::default(),
        }
    }
}

impl MatchCostConfig {
    pub fn validate(&self) -> Result<(), SupervisionError> {
        let w = self.weights;
        let non_negative = [self.lambda_cls, self.lambda_reg, self.focal_gamma, w.reg, w.cls, w.occ];
        if non_negative.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            return Err(SupervisionError::InvalidConfig("weights must be non-negative".into()));
        }
        if !(self.focal_alpha > 0.0 && self.focal_alpha < 1.0) {
            return Err(SupervisionError::InvalidConfig(format!(
                "focal alpha {} not in (0, 1)",
                self.focal_alpha
            )));
        }
        Ok(())
    }
}

/// Matching cost between a prediction and a labeled ground truth:
/// `λ_cls (1 − p(gt_class)) + λ_reg ‖Δanchor‖₁` over all 10 anchor values.
pub fn pairwise_cost(
    pred_anchor: &InstanceAnchor,
    class_probs: &[f64],
    gt_class: u16,
    gt_anchor: &InstanceAnchor,
    cfg: &MatchCostConfig,
) -> Result<f64, SupervisionError> {
    let total: f64 = class_probs.iter().sum();
    if (total - 1.0).abs() > 1e-6 || class_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(SupervisionError::InvalidProbabilities(total));
    }
    let p = *class_probs
        .get(gt_class as usize)
        .ok_or(SupervisionError::ClassOutOfRange {
            class: gt_class,
            num_classes: class_probs.len(),
        })?;
    let l1: f64 = pred_anchor
        .to_array()
        .iter()
        .zip(gt_anchor.to_array())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(cfg.lambda_cls * (1.0 - p) + cfg.lambda_reg * l1)
}

/// Mean absolute difference over the 10 anchor components.
pub fn l1_loss(pred: &InstanceAnchor, gt: &InstanceAnchor) -> f64 {
    pred.to_array()
        .iter()
        .zip(gt.to_array())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / ANCHOR_WIDTH as f64
}

/// Mean [`l1_loss`] over matched pairs; 0 with no pairs.
pub fn regression_loss(pairs: &[(&InstanceAnchor, &InstanceAnchor)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    pairs.iter().map(|(p, g)| l1_loss(p, g)).sum::<f64>() / pairs.len() as f64
}

/// `log(sigmoid(x))` without overflow.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Binary focal loss `−α_t (1 − p_t)^γ log p_t` of a logit, and its
/// derivative with respect to the logit.
pub fn focal_loss(logit: f64, target: bool, alpha: f64, gamma: f64) -> (f64, f64) {
    // z is the logit of p_t
    let (z, sign, alpha_t) = if target { (logit, 1.0, alpha) } else { (-logit, -1.0, 1.0 - alpha) };
    let log_pt = log_sigmoid(z);
    let pt = sigmoid(z);
    let q = sigmoid(-z);
    let q_gamma = if gamma == 0.0 { 1.0 } else { q.powf(gamma) };
    let loss = -alpha_t * q_gamma * log_pt;
    // dL/dz = α_t q^γ (γ p_t log p_t − q)
    let d_z = alpha_t * q_gamma * (gamma * pt * log_pt - q);
    (loss.max(0.0), sign * d_z)
}

/// Mean focal loss over an enumerated voxel region; `voxels[n]` carries
/// `logits[n]` and its target is membership in `gt`.
pub fn occupancy_loss(
    voxels: &[u32],
    logits: &[f64],
    gt: &SparseInstanceOccupancy,
    alpha: f64,
    gamma: f64,
) -> Result<f64, SupervisionError> {
    if voxels.len() != logits.len() {
        return Err(SupervisionError::VoxelEnumerationMismatch(format!(
            "{} voxels but {} logits",
            voxels.len(),
            logits.len()
        )));
    }
    let mut sorted = voxels.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(SupervisionError::VoxelEnumerationMismatch("duplicate voxel".into()));
    }
    if let Some(v) = gt.voxels().iter().find(|v| sorted.binary_search(v).is_err()) {
        return Err(SupervisionError::VoxelEnumerationMismatch(format!(
            "occupied voxel {v} is not enumerated"
        )));
    }
    if voxels.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = voxels
        .iter()
        .zip(logits)
        .map(|(&v, &x)| focal_loss(x, gt.contains(v), alpha, gamma).0)
        .sum();
    Ok(sum / voxels.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossComponents {
    pub reg: f64,
    pub cls: f64,
    pub occ: f64,
}

/// `w_reg L_reg + w_cls L_cls + w_occ L_occ`.
pub fn total_loss(c: &LossComponents, w: &LossWeights) -> f64 {
    w.reg * c.reg + w.cls * c.cls + w.occ * c.occ
}
