#![allow(dead_code)]

use gauss_occ::{Gaussian3D, InstanceAnchor, InstancePrediction, VoxelGridSpec};
use rand::Rng;

pub fn unit_quaternion(rng: &mut impl Rng) -> [f64; 4] {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return q.map(|x| x / n);
        }
    }
}

pub fn random_gaussian(rng: &mut impl Rng, spread: f64) -> Gaussian3D {
    Gaussian3D::new(
        std::array::from_fn(|_| rng.random_range(-spread..spread)),
        std::array::from_fn(|_| rng.random_range(0.05..1.2)),
        unit_quaternion(rng),
    )
    .unwrap()
}

/// Instance centered anywhere in the grid's range, padded by 2 m so some
/// instances straddle the boundary.
pub fn random_instance(rng: &mut impl Rng, grid: &VoxelGridSpec, k: usize) -> InstancePrediction {
    let (lo, hi) = (grid.min_corner(), grid.max_corner());
    let center: [f64; 3] = std::array::from_fn(|a| rng.random_range(lo[a] - 2.0..hi[a] + 2.0));
    let anchor = InstanceAnchor::from_yaw(
        center,
        std::array::from_fn(|_| rng.random_range(0.5..4.0)),
        rng.random_range(-3.0..3.0),
        [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)],
    )
    .unwrap();
    let gaussians = (0..k).map(|_| random_gaussian(rng, 2.0)).collect();
    InstancePrediction::new(
        rng.random_range(0..8),
        rng.random_range(0.0..=1.0),
        anchor,
        gaussians,
        Some(rng.random_range(0..100)),
    )
    .unwrap()
}

/// A 24 m × 24 m × 6.4 m grid: big enough for clipping, small enough for the
/// dense oracle at 0.2 m.
pub fn test_grid(voxel_size: f64) -> VoxelGridSpec {
    VoxelGridSpec::new([-12.0, -12.0, -1.0], [12.0, 12.0, 5.4], [voxel_size; 3]).unwrap()
}
