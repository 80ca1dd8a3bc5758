//! Seeded synthetic sequences with self-consistent ground truth.
//!
//! Instances move at constant planar velocity and stay inside the grid for
//! the whole sequence. Ground-truth occupancy comes from the dense oracle,
//! and an instance is dropped from a frame (scene and ground truth alike)
//! when no voxel reaches the occupancy threshold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{IoError, OccFile, SceneFile, SceneFrame};
use crate::grid::VoxelGridSpec;
use crate::instance::{Gaussian3D, InstanceAnchor, InstancePrediction};
use crate::metrics::OccFrame;
use crate::splat::{dense_oracle_splat, SplatConfig};

pub const DEFAULT_CLASSES: [&str; 8] = [
    "car",
    "truck",
    "bus",
    "trailer",
    "construction_vehicle",
    "pedestrian",
    "motorcycle",
    "bicycle",
];

// (w, l, h) ranges in meters per default class
const EXTENTS: [([f64; 3], [f64; 3]); 8] = [
    ([1.7, 3.8, 1.4], [2.1, 5.0, 1.9]),
    ([2.2, 5.5, 2.2], [2.8, 9.0, 3.5]),
    ([2.6, 8.0, 3.0], [3.0, 12.0, 3.8]),
    ([2.4, 6.0, 2.8], [2.9, 12.0, 4.0]),
    ([2.4, 4.5, 2.5], [3.2, 7.0, 3.6]),
    ([0.5, 0.5, 1.5], [0.9, 0.9, 1.9]),
    ([0.7, 1.8, 1.2], [1.0, 2.4, 1.6]),
    ([0.5, 1.5, 1.1], [0.8, 1.9, 1.5]),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionConfig {
    /// Meters per second.
    pub max_speed: f64,
    /// Seconds between frames.
    pub frame_dt: f64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        Self {
            max_speed: 5.0,
            frame_dt: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_frames: usize,
    pub n_instances: usize,
    /// Gaussians per instance.
    pub k: usize,
    pub grid: VoxelGridSpec,
    pub motion: MotionConfig,
    pub splat: SplatConfig,
}

impl SynthConfig {
    pub fn new(seed: u64, n_frames: usize, n_instances: usize, k: usize, grid: VoxelGridSpec) -> Self {
        Self {
            seed,
            n_frames,
            n_instances,
            k,
            grid,
            motion: MotionConfig::default(),
            splat: SplatConfig::default(),
        }
    }

    fn validate(&self) -> Result<(), IoError> {
        if self.k == 0 {
            return Err(IoError::ConfigInvalid("k must be at least 1".into()));
        }
        if !(self.motion.max_speed >= 0.0 && self.motion.max_speed.is_finite()) {
            return Err(IoError::ConfigInvalid("max_speed must be non-negative".into()));
        }
        if !(self.motion.frame_dt >= 0.0 && self.motion.frame_dt.is_finite()) {
            return Err(IoError::ConfigInvalid("frame_dt must be non-negative".into()));
        }
        self.splat
            .validate()
            .map_err(|e| IoError::ConfigInvalid(e.to_string()))
    }
}

struct Track {
    class: u16,
    start: [f64; 3],
    velocity: [f64; 2],
    extent: [f64; 3],
    yaw: f64,
    base_score: f64,
    gaussians: Vec<Gaussian3D>,
}

fn random_unit_quaternion(rng: &mut impl Rng) -> [f64; 4] {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return q.map(|x| x / n);
        }
    }
}

fn sample_track(rng: &mut impl Rng, cfg: &SynthConfig) -> Track {
    let class = rng.random_range(0..DEFAULT_CLASSES.len());
    let (lo, hi) = EXTENTS[class];
    let extent: [f64; 3] = std::array::from_fn(|a| rng.random_range(lo[a]..=hi[a]));
    let yaw = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);

    let (min, max) = (cfg.grid.min_corner(), cfg.grid.max_corner());
    let margin = 0.5 * extent[0].max(extent[1]);
    let span = |a: usize| {
        let (l, h) = (min[a] + margin, max[a] - margin);
        if l < h { (l, h) } else { let c = 0.5 * (min[a] + max[a]); (c, c) }
    };
    let mut pick = |a: usize| {
        let (l, h) = span(a);
        if l < h { rng.random_range(l..h) } else { l }
    };
    let start = [pick(0), pick(1), 0.0];
    let end = [pick(0), pick(1)];
    let z_lo = min[2] + 0.5 * extent[2];
    let z_hi = (min[2] + 0.5 * extent[2] + 0.5).min(max[2] - 0.5 * extent[2]);
    let z = if z_lo < z_hi { rng.random_range(z_lo..z_hi) } else { 0.5 * (min[2] + max[2]) };
    let start = [start[0], start[1], z];

    // head toward `end`, capped at max_speed; the straight segment stays in
    // the (convex) inner box
    let duration = cfg.motion.frame_dt * cfg.n_frames.saturating_sub(1) as f64;
    let velocity = if duration > 0.0 {
        let d = [end[0] - start[0], end[1] - start[1]];
        let v = [d[0] / duration, d[1] / duration];
        let speed = v[0].hypot(v[1]);
        let cap = rng.random_range(0.0..=cfg.motion.max_speed);
        if speed > cap && speed > 0.0 {
            [v[0] * cap / speed, v[1] * cap / speed]
        } else {
            v
        }
    } else {
        [0.0, 0.0]
    };

    let (s, c) = yaw.sin_cos();
    let gaussians = (0..cfg.k)
        .map(|_| {
            let local: [f64; 3] = std::array::from_fn(|a| rng.random_range(-0.4..=0.4) * extent[a]);
            let offset = [c * local[0] - s * local[1], s * local[0] + c * local[1], local[2]];
            let min_extent = extent.iter().copied().fold(f64::INFINITY, f64::min);
            let scale: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.25..0.6) * min_extent.max(0.6));
            Gaussian3D::new(offset, scale, random_unit_quaternion(rng)).expect("valid sample")
        })
        .collect();

    Track {
        class: class as u16,
        start,
        velocity,
        extent,
        yaw,
        base_score: rng.random_range(0.3..1.0),
        gaussians,
    }
}

/// Deterministic (per seed) scene and its ground-truth occupancy.
pub fn gen_synthetic(cfg: &SynthConfig) -> Result<(SceneFile, OccFile), IoError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let tracks: Vec<Track> = (0..cfg.n_instances).map(|_| sample_track(&mut rng, cfg)).collect();

    let mut frames = Vec::with_capacity(cfg.n_frames);
    let mut gt_frames = Vec::with_capacity(cfg.n_frames);
    for f in 0..cfg.n_frames {
        let t = f as f64 * cfg.motion.frame_dt;
        let candidates: Vec<InstancePrediction> = tracks
            .iter()
            .enumerate()
            .map(|(id, tr)| {
                let center = [
                    tr.start[0] + tr.velocity[0] * t,
                    tr.start[1] + tr.velocity[1] * t,
                    tr.start[2],
                ];
                let score = (tr.base_score + rng.random_range(-0.05..0.05)).clamp(0.0, 1.0);
                let anchor = InstanceAnchor::from_yaw(center, tr.extent, tr.yaw, tr.velocity)
                    .expect("valid sample");
                InstancePrediction::new(tr.class, score, anchor, tr.gaussians.clone(), Some(id as u32))
                    .expect("valid sample")
            })
            .collect();
        let occupancies = candidates
            .par_iter()
            .map(|inst| dense_oracle_splat(inst, &cfg.grid, &cfg.splat))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| IoError::ConfigInvalid(e.to_string()))?;
        let (instances, occ): (Vec<_>, Vec<_>) = candidates
            .into_iter()
            .zip(occupancies)
            .filter(|(_, o)| !o.is_empty())
            .unzip();
        frames.push(SceneFrame { t, instances });
        gt_frames.push(OccFrame::new(cfg.grid, occ));
    }
    let scene = SceneFile {
        grid: cfg.grid,
        classes: DEFAULT_CLASSES.iter().map(|s| s.to_string()).collect(),
        k: Some(cfg.k),
        frames,
    };
    Ok((scene, OccFile { frames: gt_frames }))
}
