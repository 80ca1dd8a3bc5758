//! Gaussian-to-voxel splatting.
//!
//! Each instance's Gaussians are evaluated at voxel centers and combined with
//! `p = 1 − ∏(1 − pᵢ)`. A Gaussian contributes nothing to voxels whose
//! Mahalanobis distance exceeds the cutoff, which lets the fast path visit only
//! the voxels inside each Gaussian's support box. The dense oracle in
//! [`oracle`] applies the same cutoff rule without any culling, so the two
//! produce identical voxel sets.

mod kernel;
pub mod oracle;

use rayon::prelude::*;
use thiserror::Error;

use crate::grid::VoxelGridSpec;
use crate::instance::{InstancePrediction, SparseInstanceOccupancy, DEFAULT_SCALE_FLOOR};

pub use kernel::{
    aggregate_occupancy, aggregate_occupancy_eps, build_covariance, gaussian_prob, support_aabb,
    Aabb,
};
pub use oracle::dense_oracle_splat;

pub(crate) use kernel::{LogComplement, PreparedGaussian};

pub const DEFAULT_OCCUPANCY_THRESHOLD: f64 = 0.5;
pub const DEFAULT_CUTOFF: f64 = 3.0;
pub const DEFAULT_SATURATION_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplatError {
    #[error("invalid splat config: {0}")]
    InvalidConfig(String),
    #[error("gaussian scale {scale:?} below floor {floor}")]
    DegenerateScale { scale: [f64; 3], floor: f64 },
    #[error("dense oracle refuses a grid of {0} voxels")]
    RefusesLargeGrid(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplatConfig {
    /// A voxel is occupied when its aggregated probability is at least this.
    pub occupancy_threshold: f64,
    /// Mahalanobis radius beyond which a Gaussian contributes zero.
    pub cutoff: f64,
    pub saturation_epsilon: f64,
    pub scale_floor: f64,
}

impl Default for SplatConfig {
    fn default() -> Self {
        Self {
            occupancy_threshold: DEFAULT_OCCUPANCY_THRESHOLD,
            cutoff: DEFAULT_CUTOFF,
            saturation_epsilon: DEFAULT_SATURATION_EPSILON,
            scale_floor: DEFAULT_SCALE_FLOOR,
        }
    }
}

impl SplatConfig {
    pub fn validate(&self) -> Result<(), SplatError> {
        if !(self.occupancy_threshold > 0.0 && self.occupancy_threshold < 1.0) {
            return Err(SplatError::InvalidConfig(format!(
                "occupancy threshold {} not in (0, 1)",
                self.occupancy_threshold
            )));
        }
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return Err(SplatError::InvalidConfig(format!(
                "cutoff {} must be positive",
                self.cutoff
            )));
        }
        if !(self.saturation_epsilon > 0.0 && self.saturation_epsilon < 1.0) {
            return Err(SplatError::InvalidConfig(format!(
                "saturation epsilon {} not in (0, 1)",
                self.saturation_epsilon
            )));
        }
        if !(self.scale_floor > 0.0) {
            return Err(SplatError::InvalidConfig(format!(
                "scale floor {} must be positive",
                self.scale_floor
            )));
        }
        Ok(())
    }
}

pub(crate) fn prepare(
    inst: &InstancePrediction,
    cfg: &SplatConfig,
) -> Result<Vec<PreparedGaussian>, SplatError> {
    let center = inst.anchor.center();
    inst.gaussians()
        .iter()
        .map(|g| {
            if g.scale().iter().any(|&s| s < cfg.scale_floor) {
                return Err(SplatError::DegenerateScale {
                    scale: g.scale(),
                    floor: cfg.scale_floor,
                });
            }
            Ok(PreparedGaussian::new(g, center))
        })
        .collect()
}

/// Inclusive cell range on one axis covering `[lo, hi]`, padded by one cell
/// and clipped to the grid. `None` when the interval misses the grid.
fn axis_range(grid: &VoxelGridSpec, axis: usize, lo: f64, hi: f64) -> Option<(u32, u32)> {
    let min = grid.min_corner()[axis];
    let vs = grid.voxel_size()[axis];
    let n = grid.dims()[axis] as i64;
    let first = ((lo - min) / vs).floor() as i64 - 1;
    let last = ((hi - min) / vs).floor() as i64 + 1;
    let first = first.max(0);
    let last = last.min(n - 1);
    (first <= last).then_some((first as u32, last as u32))
}

/// Per-voxel accumulators over the union of the Gaussians' support boxes.
struct SparseField {
    origin: [u32; 3],
    size: [u32; 3],
    cells: Vec<Option<LogComplement>>,
}

fn accumulate(
    inst: &InstancePrediction,
    grid: &VoxelGridSpec,
    cfg: &SplatConfig,
) -> Result<Option<SparseField>, SplatError> {
    cfg.validate()?;
    let prepared = prepare(inst, cfg)?;
    let center = inst.anchor.center();

    let ranges: Vec<Option<[(u32, u32); 3]>> = inst
        .gaussians()
        .iter()
        .map(|g| {
            let b = support_aabb(g, center, cfg.cutoff);
            let (lo, hi) = (b.min(), b.max());
            Some([
                axis_range(grid, 0, lo[0], hi[0])?,
                axis_range(grid, 1, lo[1], hi[1])?,
                axis_range(grid, 2, lo[2], hi[2])?,
            ])
        })
        .collect();

    let mut union: Option<[(u32, u32); 3]> = None;
    for r in ranges.iter().flatten() {
        union = Some(match union {
            None => *r,
            Some(u) => [0, 1, 2].map(|a| (u[a].0.min(r[a].0), u[a].1.max(r[a].1))),
        });
    }
    let Some(union) = union else {
        return Ok(None);
    };
    let origin = union.map(|(lo, _)| lo);
    let size = union.map(|(lo, hi)| hi - lo + 1);
    let mut cells = vec![None; size.iter().map(|&s| s as usize).product()];

    let c_sq = cfg.cutoff * cfg.cutoff;
    let eps = cfg.saturation_epsilon;
    // Gaussian-major so each voxel sees contributions in Gaussian order.
    for (pg, range) in prepared.iter().zip(&ranges) {
        let Some([(i0, i1), (j0, j1), (k0, k1)]) = *range else {
            continue;
        };
        for i in i0..=i1 {
            let x = grid.axis_center(0, i);
            for j in j0..=j1 {
                let y = grid.axis_center(1, j);
                let row = (((i - origin[0]) * size[1] + (j - origin[1])) * size[2]) as usize;
                for k in k0..=k1 {
                    let z = grid.axis_center(2, k);
                    let d_sq = pg.mahalanobis_sq([x, y, z]);
                    if d_sq <= c_sq {
                        cells[row + (k - origin[2]) as usize]
                            .get_or_insert_with(LogComplement::default)
                            .add_mahalanobis_sq(d_sq, eps);
                    }
                }
            }
        }
    }
    Ok(Some(SparseField {
        origin,
        size,
        cells,
    }))
}

impl SparseField {
    /// Touched voxels in ascending linear order.
    fn iter<'a>(&'a self, grid: &'a VoxelGridSpec) -> impl Iterator<Item = (u32, f64)> + 'a {
        let [_, sy, sz] = self.size;
        self.cells.iter().enumerate().filter_map(move |(n, cell)| {
            let acc = cell.as_ref()?;
            let n = n as u32;
            let local = [n / (sy * sz), (n / sz) % sy, n % sz];
            let idx = [0, 1, 2].map(|a| self.origin[a] + local[a]);
            Some((grid.linear_index_unchecked(idx), acc.probability()))
        })
    }
}

/// Aggregated occupancy probability at every voxel reached by at least one
/// Gaussian within the cutoff, ascending by linear index.
pub fn occupancy_field(
    inst: &InstancePrediction,
    grid: &VoxelGridSpec,
    cfg: &SplatConfig,
) -> Result<Vec<(u32, f64)>, SplatError> {
    Ok(match accumulate(inst, grid, cfg)? {
        Some(field) => field.iter(grid).collect(),
        None => Vec::new(),
    })
}

/// Voxels whose aggregated occupancy reaches the threshold.
pub fn splat_instance(
    inst: &InstancePrediction,
    grid: &VoxelGridSpec,
    cfg: &SplatConfig,
) -> Result<SparseInstanceOccupancy, SplatError> {
    let voxels = match accumulate(inst, grid, cfg)? {
        Some(field) => field
            .iter(grid)
            .filter(|&(_, p)| p >= cfg.occupancy_threshold)
            .map(|(v, _)| v)
            .collect(),
        None => Vec::new(),
    };
    Ok(SparseInstanceOccupancy::from_sorted(
        inst.class_id,
        inst.score as f32,
        inst.track_id,
        voxels,
    ))
}

/// Splats every instance independently, in parallel on the current rayon
/// pool. Output order follows input order.
pub fn splat_scene(
    instances: &[InstancePrediction],
    grid: &VoxelGridSpec,
    cfg: &SplatConfig,
) -> Result<Vec<SparseInstanceOccupancy>, SplatError> {
    instances
        .par_iter()
        .map(|inst| splat_instance(inst, grid, cfg))
        .collect()
}

/// Serial version of [`splat_scene`].
pub fn splat_scene_serial(
    instances: &[InstancePrediction],
    grid: &VoxelGridSpec,
    cfg: &SplatConfig,
) -> Result<Vec<SparseInstanceOccupancy>, SplatError> {
    instances
        .iter()
        .map(|inst| splat_instance(inst, grid, cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Gaussian3D, InstanceAnchor};

    fn single(center: [f64; 3], g: Gaussian3D) -> InstancePrediction {
        let a = InstanceAnchor::from_yaw(center, [1.0; 3], 0.0, [0.0; 2]).unwrap();
        InstancePrediction::new(1, 0.9, a, vec![g], Some(3)).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SplatConfig::default().validate().is_ok());
        for bad in [
            SplatConfig { occupancy_threshold: 1.0, ..Default::default() },
            SplatConfig { occupancy_threshold: 0.0, ..Default::default() },
            SplatConfig { cutoff: 0.0, ..Default::default() },
            SplatConfig { saturation_epsilon: 0.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn mean_at_voxel_center_is_occupied() {
        let grid = VoxelGridSpec::occ3d();
        let c = grid.voxel_center([100, 50, 8]).unwrap();
        let inst = single(c, Gaussian3D::isotropic([0.0; 3], 4.0).unwrap());
        let occ = splat_instance(&inst, &grid, &SplatConfig::default()).unwrap();
        assert!(occ.contains(grid.linear_index([100, 50, 8]).unwrap()));
        assert_eq!(occ.class_id, 1);
        assert_eq!(occ.track_id, Some(3));
    }

    #[test]
    fn instance_outside_grid_is_empty() {
        let grid = VoxelGridSpec::occ3d();
        let inst = single([100.0, 100.0, 0.0], Gaussian3D::isotropic([0.0; 3], 1.0).unwrap());
        let occ = splat_instance(&inst, &grid, &SplatConfig::default()).unwrap();
        assert!(occ.is_empty());
    }

    #[test]
    fn small_gaussian_between_centers() {
        // Mean on a voxel corner, tiny scale: no center within reach.
        let grid = VoxelGridSpec::occ3d();
        let inst = single([0.0, 0.0, 0.2], Gaussian3D::isotropic([0.0; 3], 0.05).unwrap());
        let occ = splat_instance(&inst, &grid, &SplatConfig::default()).unwrap();
        assert!(occ.is_empty());
    }

    #[test]
    fn field_and_threshold_agree() {
        let grid = VoxelGridSpec::occ3d();
        let q = [0.9, 0.1, 0.3, 0.2];
        let n = q.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
        let g = Gaussian3D::new([0.3, 0.0, 0.0], [1.0, 0.5, 0.3], q.map(|x| x / n)).unwrap();
        let inst = single([1.0, 2.0, 1.0], g);
        let cfg = SplatConfig::default();
        let field = occupancy_field(&inst, &grid, &cfg).unwrap();
        let occ = splat_instance(&inst, &grid, &cfg).unwrap();
        let want: Vec<u32> = field.iter().filter(|(_, p)| *p >= 0.5).map(|(v, _)| *v).collect();
        assert_eq!(occ.voxels(), want.as_slice());
        assert!(field.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn scene_preserves_order_and_independence() {
        let grid = VoxelGridSpec::occ3d();
        let cfg = SplatConfig::default();
        assert!(splat_scene(&[], &grid, &cfg).unwrap().is_empty());
        let inst = single([5.0, 5.0, 1.0], Gaussian3D::isotropic([0.0; 3], 0.6).unwrap());
        let out = splat_scene(&[inst.clone(), inst], &grid, &cfg).unwrap();
        assert_eq!(out[0], out[1]);
        assert!(!out[0].is_empty());
    }

    #[test]
    fn degenerate_scale_under_stricter_floor() {
        let grid = VoxelGridSpec::occ3d();
        let inst = single([0.0; 3], Gaussian3D::isotropic([0.0; 3], 0.02).unwrap());
        let cfg = SplatConfig { scale_floor: 0.05, ..Default::default() };
        assert!(matches!(
            splat_instance(&inst, &grid, &cfg),
            Err(SplatError::DegenerateScale { .. })
        ));
    }
}
