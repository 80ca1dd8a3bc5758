//! Per-instance records: Gaussians, anchors, predictions and their voxel sets.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Smallest Gaussian scale (meters) accepted without clamping.
pub const DEFAULT_SCALE_FLOOR: f64 = 0.01;

/// Tolerance on the norm of incoming unit quaternions and yaw pairs.
pub const UNIT_NORM_TOL: f64 = 1e-6;

pub const ANCHOR_WIDTH: usize = 10;
pub const GAUSSIAN_WIDTH: usize = 10;

/// Normalizes `v` unless it is already unit length to within a few ulps, so
/// that re-normalizing stored values is a no-op.
fn normalize<const N: usize>(v: [f64; N]) -> Option<[f64; N]> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOL {
        return None;
    }
    if (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
        return Some(v);
    }
    Some(v.map(|x| x / norm))
}

/// One occupancy primitive, positioned relative to its instance center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian3D {
    offset: [f64; 3],
    scale: [f64; 3],
    rotation: [f64; 4],
}

impl Gaussian3D {
    /// Builds a Gaussian, clamping scales up to [`DEFAULT_SCALE_FLOOR`].
    pub fn new(offset: [f64; 3], scale: [f64; 3], rotation: [f64; 4]) -> Result<Self, CoreError> {
        Self::with_scale_floor(offset, scale, rotation, Some(DEFAULT_SCALE_FLOOR))
    }

    /// `floor: None` disables clamping; scales must then only be positive.
    pub fn with_scale_floor(
        offset: [f64; 3],
        scale: [f64; 3],
        rotation: [f64; 4],
        floor: Option<f64>,
    ) -> Result<Self, CoreError> {
        if offset.iter().any(|x| !x.is_finite()) {
            return Err(CoreError::InvalidGaussian("non-finite offset".into()));
        }
        if scale.iter().any(|x| x.is_nan() || x.is_infinite()) {
            return Err(CoreError::InvalidGaussian("non-finite scale".into()));
        }
        let scale = match floor {
            Some(f) => scale.map(|s| s.max(f)),
            None => scale,
        };
        if scale.iter().any(|&s| s <= 0.0) {
            return Err(CoreError::InvalidGaussian(format!(
                "scale {scale:?} must be positive"
            )));
        }
        let rotation = normalize(rotation).ok_or_else(|| {
            CoreError::InvalidGaussian(format!("rotation {rotation:?} is not a unit quaternion"))
        })?;
        Ok(Self {
            offset,
            scale,
            rotation,
        })
    }

    pub fn isotropic(offset: [f64; 3], scale: f64) -> Result<Self, CoreError> {
        Self::new(offset, [scale; 3], [1.0, 0.0, 0.0, 0.0])
    }

    /// Layout `[dx, dy, dz, sx, sy, sz, qw, qx, qy, qz]`.
    pub fn from_row(row: [f64; GAUSSIAN_WIDTH]) -> Result<Self, CoreError> {
        Self::new(
            [row[0], row[1], row[2]],
            [row[3], row[4], row[5]],
            [row[6], row[7], row[8], row[9]],
        )
    }

    pub fn to_row(&self) -> [f64; GAUSSIAN_WIDTH] {
        let [dx, dy, dz] = self.offset;
        let [sx, sy, sz] = self.scale;
        let [qw, qx, qy, qz] = self.rotation;
        [dx, dy, dz, sx, sy, sz, qw, qx, qy, qz]
    }

    pub fn offset(&self) -> [f64; 3] {
        self.offset
    }

    pub fn scale(&self) -> [f64; 3] {
        self.scale
    }

    /// Unit quaternion `(w, x, y, z)`.
    pub fn rotation(&self) -> [f64; 4] {
        self.rotation
    }

    pub fn translated(&self, delta: [f64; 3]) -> Self {
        let mut g = *self;
        for a in 0..3 {
            g.offset[a] += delta[a];
        }
        g
    }
}

/// Pose, extent, heading and planar velocity of one instance.
///
/// Serialized as 10 scalars: `[x, y, z, w, l, h, sin(yaw), cos(yaw), vx, vy]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceAnchor {
    center: [f64; 3],
    extent: [f64; 3],
    yaw_sin_cos: [f64; 2],
    velocity: [f64; 2],
}

impl InstanceAnchor {
    pub fn new(
        center: [f64; 3],
        extent: [f64; 3],
        yaw_sin_cos: [f64; 2],
        velocity: [f64; 2],
    ) -> Result<Self, CoreError> {
        if center.iter().chain(&velocity).any(|x| !x.is_finite()) {
            return Err(CoreError::InvalidAnchor("non-finite center or velocity".into()));
        }
        if extent.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(CoreError::InvalidAnchor(format!(
                "extent {extent:?} must be positive"
            )));
        }
        let yaw_sin_cos = normalize(yaw_sin_cos).ok_or_else(|| {
            CoreError::InvalidAnchor(format!("yaw pair {yaw_sin_cos:?} is not unit length"))
        })?;
        Ok(Self {
            center,
            extent,
            yaw_sin_cos,
            velocity,
        })
    }

    pub fn from_yaw(
        center: [f64; 3],
        extent: [f64; 3],
        yaw: f64,
        velocity: [f64; 2],
    ) -> Result<Self, CoreError> {
        let (s, c) = yaw.sin_cos();
        Self::new(center, extent, [s, c], velocity)
    }

    pub fn from_array(v: [f64; ANCHOR_WIDTH]) -> Result<Self, CoreError> {
        Self::new(
            [v[0], v[1], v[2]],
            [v[3], v[4], v[5]],
            [v[6], v[7]],
            [v[8], v[9]],
        )
    }

    pub fn to_array(&self) -> [f64; ANCHOR_WIDTH] {
        let [x, y, z] = self.center;
        let [w, l, h] = self.extent;
        let [s, c] = self.yaw_sin_cos;
        let [vx, vy] = self.velocity;
        [x, y, z, w, l, h, s, c, vx, vy]
    }

    pub fn center(&self) -> [f64; 3] {
        self.center
    }

    pub fn extent(&self) -> [f64; 3] {
        self.extent
    }

    pub fn yaw(&self) -> f64 {
        self.yaw_sin_cos[0].atan2(self.yaw_sin_cos[1])
    }

    pub fn yaw_sin_cos(&self) -> [f64; 2] {
        self.yaw_sin_cos
    }

    pub fn velocity(&self) -> [f64; 2] {
        self.velocity
    }

    pub fn with_center(&self, center: [f64; 3]) -> Self {
        Self { center, ..*self }
    }
}

/// A detected instance together with the Gaussians describing its shape.
#[derive(Debug, Clone, PartialEq)]
pub struct InstancePrediction {
    pub class_id: u16,
    pub score: f64,
    pub anchor: InstanceAnchor,
    gaussians: Vec<Gaussian3D>,
    pub track_id: Option<u32>,
}

impl InstancePrediction {
    pub fn new(
        class_id: u16,
        score: f64,
        anchor: InstanceAnchor,
        gaussians: Vec<Gaussian3D>,
        track_id: Option<u32>,
    ) -> Result<Self, CoreError> {
        if !(0.0..=1.0).contains(&score) {
            return Err(CoreError::InvalidInstance(format!("score {score} not in [0, 1]")));
        }
        if gaussians.is_empty() {
            return Err(CoreError::InvalidInstance("instance has no gaussians".into()));
        }
        Ok(Self {
            class_id,
            score,
            anchor,
            gaussians,
            track_id,
        })
    }

    pub fn gaussians(&self) -> &[Gaussian3D] {
        &self.gaussians
    }

    /// Appends one Gaussian.
    pub fn push_gaussian(&mut self, g: Gaussian3D) {
        self.gaussians.push(g);
    }

    pub fn with_gaussians(&self, gaussians: Vec<Gaussian3D>) -> Result<Self, CoreError> {
        Self::new(self.class_id, self.score, self.anchor, gaussians, self.track_id)
    }

    /// World-frame mean of Gaussian `i`.
    pub fn gaussian_mean(&self, i: usize) -> [f64; 3] {
        let c = self.anchor.center();
        let o = self.gaussians[i].offset();
        [c[0] + o[0], c[1] + o[1], c[2] + o[2]]
    }
}

/// The voxels attributed to one instance, as ascending linear indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseInstanceOccupancy {
    pub class_id: u16,
    pub score: f32,
    pub track_id: Option<u32>,
    voxels: Vec<u32>,
}

impl SparseInstanceOccupancy {
    /// Fails unless `voxels` is strictly ascending and below `num_voxels`.
    pub fn new(
        class_id: u16,
        score: f32,
        track_id: Option<u32>,
        voxels: Vec<u32>,
        num_voxels: u64,
    ) -> Result<Self, CoreError> {
        if let Some(w) = voxels.windows(2).find(|w| w[0] >= w[1]) {
            return Err(CoreError::InvalidInstance(format!(
                "voxel indices not strictly ascending at {} >= {}",
                w[0], w[1]
            )));
        }
        if let Some(&last) = voxels.last() {
            if last as u64 >= num_voxels {
                return Err(CoreError::OutOfRange(format!(
                    "voxel index {last} >= {num_voxels}"
                )));
            }
        }
        Ok(Self {
            class_id,
            score,
            track_id,
            voxels,
        })
    }

    /// Caller guarantees the ordering invariant.
    pub(crate) fn from_sorted(
        class_id: u16,
        score: f32,
        track_id: Option<u32>,
        voxels: Vec<u32>,
    ) -> Self {
        debug_assert!(voxels.windows(2).all(|w| w[0] < w[1]));
        Self {
            class_id,
            score,
            track_id,
            voxels,
        }
    }

    pub fn voxels(&self) -> &[u32] {
        &self.voxels
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    pub fn contains(&self, linear: u32) -> bool {
        self.voxels.binary_search(&linear).is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::approx_constant)] // a quaternion just off unit length
    fn gaussian_clamps_scale_and_normalizes_rotation() {
        let g = Gaussian3D::new([0.0; 3], [0.001, 1.0, -2.0], [2.0_f64.sqrt() / 2.0, 0.0, 0.0, 0.7071068])
            .unwrap();
        assert_eq!(g.scale(), [DEFAULT_SCALE_FLOOR, 1.0, DEFAULT_SCALE_FLOOR]);
        let n: f64 = g.rotation().iter().map(|x| x * x).sum();
        assert!((n - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_rejects_non_unit_quaternion() {
        assert!(Gaussian3D::new([0.0; 3], [1.0; 3], [1.0, 0.1, 0.0, 0.0]).is_err());
        assert!(Gaussian3D::new([0.0; 3], [f64::NAN, 1.0, 1.0], [1.0, 0.0, 0.0, 0.0]).is_err());
        assert!(
            Gaussian3D::with_scale_floor([0.0; 3], [0.0, 1.0, 1.0], [1.0, 0.0, 0.0, 0.0], None)
                .is_err()
        );
    }

    #[test]
    fn normalization_is_idempotent() {
        let g = Gaussian3D::new([0.0; 3], [1.0; 3], [0.5, 0.5, 0.5, 0.5000001]).unwrap();
        let again = Gaussian3D::from_row(g.to_row()).unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn anchor_is_ten_wide() {
        let a = InstanceAnchor::from_yaw([1.0, 2.0, 3.0], [4.0, 5.0, 6.0], 0.3, [7.0, 8.0]).unwrap();
        let v = a.to_array();
        assert_eq!(v.len(), 10);
        assert_eq!(InstanceAnchor::from_array(v).unwrap(), a);
        assert!((a.yaw() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn anchor_invariants() {
        assert!(InstanceAnchor::new([0.0; 3], [1.0, 0.0, 1.0], [0.0, 1.0], [0.0; 2]).is_err());
        assert!(InstanceAnchor::new([0.0; 3], [1.0; 3], [0.5, 0.5], [0.0; 2]).is_err());
    }

    #[test]
    fn prediction_needs_gaussians_and_valid_score() {
        let a = InstanceAnchor::from_yaw([0.0; 3], [1.0; 3], 0.0, [0.0; 2]).unwrap();
        assert!(InstancePrediction::new(0, 0.5, a, vec![], None).is_err());
        let g = Gaussian3D::isotropic([0.0; 3], 1.0).unwrap();
        assert!(InstancePrediction::new(0, 1.5, a, vec![g], None).is_err());
        assert!(InstancePrediction::new(0, 1.0, a, vec![g], None).is_ok());
    }

    #[test]
    fn occupancy_ordering_invariant() {
        assert!(SparseInstanceOccupancy::new(0, 1.0, None, vec![1, 1], 10).is_err());
        assert!(SparseInstanceOccupancy::new(0, 1.0, None, vec![2, 1], 10).is_err());
        assert!(SparseInstanceOccupancy::new(0, 1.0, None, vec![1, 10], 10).is_err());
        let o = SparseInstanceOccupancy::new(0, 1.0, None, vec![1, 9], 10).unwrap();
        assert!(o.contains(9) && !o.contains(2));
    }
}
