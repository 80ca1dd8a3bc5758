//! Axis-aligned voxel grids and the world/voxel coordinate mapping.
//!
//! Every axis is a half-open interval `[min, max)` cut into `dims` cells of
//! `voxel_size` meters. Linear indices are x-major: `i * dy * dz + j * dz + k`.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Relative tolerance for "range is an integer multiple of the voxel size".
const DIMS_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoxelGridSpec {
    min_corner: [f64; 3],
    max_corner: [f64; 3],
    voxel_size: [f64; 3],
    dims: [u32; 3],
}

impl VoxelGridSpec {
    pub fn new(
        min_corner: [f64; 3],
        max_corner: [f64; 3],
        voxel_size: [f64; 3],
    ) -> Result<Self, CoreError> {
        let mut dims = [0u32; 3];
        for a in 0..3 {
            let (lo, hi, vs) = (min_corner[a], max_corner[a], voxel_size[a]);
            if !(lo.is_finite() && hi.is_finite() && vs.is_finite()) {
                return Err(CoreError::InvalidGrid(format!("axis {a}: non-finite value")));
            }
            if hi <= lo {
                return Err(CoreError::InvalidGrid(format!(
                    "axis {a}: max {hi} must exceed min {lo}"
                )));
            }
            if vs <= 0.0 {
                return Err(CoreError::InvalidGrid(format!(
                    "axis {a}: voxel size {vs} must be positive"
                )));
            }
            let cells = (hi - lo) / vs;
            let rounded = (cells + 0.5).floor();
            if rounded < 1.0 || (cells - rounded).abs() > DIMS_REL_TOL * rounded {
                return Err(CoreError::InvalidGrid(format!(
                    "axis {a}: range {} is not a multiple of voxel size {vs}",
                    hi - lo
                )));
            }
            if rounded > u32::MAX as f64 {
                return Err(CoreError::InvalidGrid(format!("axis {a}: too many cells")));
            }
            dims[a] = rounded as u32;
        }
        let total = dims.iter().map(|&d| d as u64).product::<u64>();
        if total > u32::MAX as u64 {
            return Err(CoreError::InvalidGrid(format!(
                "{total} voxels do not fit 32-bit linear indices"
            )));
        }
        Ok(Self {
            min_corner,
            max_corner,
            voxel_size,
            dims,
        })
    }

    /// The Occ3D-nuScenes layout: `[-40, -40, -1] .. [40, 40, 5.4]` at 0.4 m.
    pub fn occ3d() -> Self {
        Self::new([-40.0, -40.0, -1.0], [40.0, 40.0, 5.4], [0.4; 3])
            .expect("occ3d grid is valid")
    }

    /// Same range, new uniform resolution.
    pub fn with_voxel_size(&self, size: f64) -> Result<Self, CoreError> {
        Self::new(self.min_corner, self.max_corner, [size; 3])
    }

    pub fn min_corner(&self) -> [f64; 3] {
        self.min_corner
    }

    pub fn max_corner(&self) -> [f64; 3] {
        self.max_corner
    }

    pub fn voxel_size(&self) -> [f64; 3] {
        self.voxel_size
    }

    pub fn dims(&self) -> [u32; 3] {
        self.dims
    }

    pub fn num_voxels(&self) -> u64 {
        self.dims.iter().map(|&d| d as u64).product()
    }

    /// Index of the cell containing `p`.
    pub fn world_to_voxel(&self, p: [f64; 3]) -> Result<[u32; 3], CoreError> {
        let mut idx = [0u32; 3];
        for a in 0..3 {
            if !(p[a] >= self.min_corner[a] && p[a] < self.max_corner[a]) {
                return Err(CoreError::OutOfRange(format!(
                    "coordinate {} on axis {a} outside [{}, {})",
                    p[a], self.min_corner[a], self.max_corner[a]
                )));
            }
            let i = ((p[a] - self.min_corner[a]) / self.voxel_size[a]).floor();
            // p < max but rounding can still land on dims
            if i < 0.0 || i >= self.dims[a] as f64 {
                return Err(CoreError::OutOfRange(format!(
                    "coordinate {} on axis {a} maps to cell {i}",
                    p[a]
                )));
            }
            idx[a] = i as u32;
        }
        Ok(idx)
    }

    pub fn voxel_center(&self, index: [u32; 3]) -> Result<[f64; 3], CoreError> {
        self.check_index(index)?;
        Ok(self.voxel_center_unchecked(index))
    }

    #[inline]
    pub(crate) fn voxel_center_unchecked(&self, index: [u32; 3]) -> [f64; 3] {
        [
            self.axis_center(0, index[0]),
            self.axis_center(1, index[1]),
            self.axis_center(2, index[2]),
        ]
    }

    #[inline]
    pub(crate) fn axis_center(&self, axis: usize, i: u32) -> f64 {
        self.min_corner[axis] + (i as f64 + 0.5) * self.voxel_size[axis]
    }

    pub fn linear_index(&self, index: [u32; 3]) -> Result<u32, CoreError> {
        self.check_index(index)?;
        Ok(self.linear_index_unchecked(index))
    }

    #[inline]
    pub(crate) fn linear_index_unchecked(&self, index: [u32; 3]) -> u32 {
        let [_, dy, dz] = self.dims;
        (index[0] * dy + index[1]) * dz + index[2]
    }

    pub fn unravel(&self, linear: u32) -> Result<[u32; 3], CoreError> {
        if linear as u64 >= self.num_voxels() {
            return Err(CoreError::OutOfRange(format!(
                "linear index {linear} >= {}",
                self.num_voxels()
            )));
        }
        let [_, dy, dz] = self.dims;
        Ok([linear / (dy * dz), (linear / dz) % dy, linear % dz])
    }

    fn check_index(&self, index: [u32; 3]) -> Result<(), CoreError> {
        for a in 0..3 {
            if index[a] >= self.dims[a] {
                return Err(CoreError::OutOfRange(format!(
                    "index {} on axis {a} >= {}",
                    index[a], self.dims[a]
                )));
            }
        }
        Ok(())
    }
}
