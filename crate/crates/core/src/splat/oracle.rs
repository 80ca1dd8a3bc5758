//! Brute-force reference splatter: every grid voxel against every Gaussian.

use super::{prepare, LogComplement, SplatConfig, SplatError};
use crate::grid::VoxelGridSpec;
use crate::instance::{InstancePrediction, SparseInstanceOccupancy};

/// Grids larger than this are refused.
pub const ORACLE_MAX_VOXELS: u64 = 100_000_000;

/// Reference implementation of [`super::splat_instance`] with no spatial
/// culling. Applies the same Mahalanobis cutoff rule, so its output equals
/// the fast path exactly.
pub fn dense_oracle_splat(
    inst: &InstancePrediction,
    grid: &VoxelGridSpec,
    cfg: &SplatConfig,
) -> Result<SparseInstanceOccupancy, SplatError> {
    cfg.validate()?;
    if grid.num_voxels() > ORACLE_MAX_VOXELS {
        return Err(SplatError::RefusesLargeGrid(grid.num_voxels()));
    }
    let prepared = prepare(inst, cfg)?;
    let c_sq = cfg.cutoff * cfg.cutoff;
    let [nx, ny, nz] = grid.dims();
    let mut voxels = Vec::new();
    let mut linear = 0u32;
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let x = grid.voxel_center_unchecked([i, j, k]);
                let mut acc = LogComplement::default();
                for pg in &prepared {
                    let d_sq = pg.mahalanobis_sq(x);
                    if d_sq <= c_sq {
                        acc.add_mahalanobis_sq(d_sq, cfg.saturation_epsilon);
                    }
                }
                if acc.probability() >= cfg.occupancy_threshold {
                    voxels.push(linear);
                }
                linear += 1;
            }
        }
    }
    Ok(SparseInstanceOccupancy::from_sorted(
        inst.class_id,
        inst.score as f32,
        inst.track_id,
        voxels,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Gaussian3D, InstanceAnchor};

    #[test]
    fn far_gaussian_is_empty() {
        let grid = VoxelGridSpec::new([0.0; 3], [4.0; 3], [0.5; 3]).unwrap();
        let a = InstanceAnchor::from_yaw([50.0, 0.0, 0.0], [1.0; 3], 0.0, [0.0; 2]).unwrap();
        let g = Gaussian3D::isotropic([0.0; 3], 1.0).unwrap();
        let inst = InstancePrediction::new(0, 1.0, a, vec![g], None).unwrap();
        assert!(dense_oracle_splat(&inst, &grid, &SplatConfig::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn refuses_huge_grid() {
        let grid = VoxelGridSpec::occ3d().with_voxel_size(0.05).unwrap();
        let a = InstanceAnchor::from_yaw([0.0; 3], [1.0; 3], 0.0, [0.0; 2]).unwrap();
        let g = Gaussian3D::isotropic([0.0; 3], 1.0).unwrap();
        let inst = InstancePrediction::new(0, 1.0, a, vec![g], None).unwrap();
        assert!(matches!(
            dense_oracle_splat(&inst, &grid, &SplatConfig::default()),
            Err(SplatError::RefusesLargeGrid(_))
        ));
    }
}
