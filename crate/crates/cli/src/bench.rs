use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gauss_occ::splat::{dense_oracle_splat, splat_instance, splat_scene};
use gauss_occ::{Gaussian3D, InstanceAnchor, InstancePrediction, VoxelGridSpec};

use crate::{failure, BenchArgs, CliError};

fn random_instance(rng: &mut impl Rng, grid: &VoxelGridSpec, k: usize) -> InstancePrediction {
    let (min, max) = (grid.min_corner(), grid.max_corner());
    let center: [f64; 3] = std::array::from_fn(|a| rng.random_range(min[a]..max[a]));
    let extent = [rng.random_range(0.5..2.5), rng.random_range(0.5..6.0), rng.random_range(1.0..3.0)];
    let yaw = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let anchor = InstanceAnchor::from_yaw(center, extent, yaw, [0.0; 2]).expect("valid sample");
    let gaussians = (0..k)
        .map(|_| {
            let offset: [f64; 3] = std::array::from_fn(|a| rng.random_range(-0.5..0.5) * extent[a]);
            let scale: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.1..0.6));
            let q: [f64; 4] = loop {
                let q: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
                let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > 0.1 && n <= 1.0 {
                    break q.map(|x| x / n);
                }
            };
            Gaussian3D::new(offset, scale, q).expect("valid sample")
        })
        .collect();
    InstancePrediction::new(0, rng.random_range(0.0..=1.0), anchor, gaussians, None).expect("valid sample")
}

/// Peak resident set size in KiB, where the platform reports it.
fn peak_rss_kib() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn run(a: BenchArgs) -> Result<(), CliError> {
    let cfg = a.splat.config()?;
    if a.k == 0 {
        return Err(failure("--k must be at least 1"));
    }
    let grid = VoxelGridSpec::occ3d().with_voxel_size(a.voxel_size).map_err(failure)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let scene: Vec<_> = (0..a.instances).map(|_| random_instance(&mut rng, &grid, a.k)).collect();

    let start = Instant::now();
    let occ = splat_scene(&scene, &grid, &cfg).map_err(failure)?;
    let elapsed = start.elapsed();
    let voxels: usize = occ.iter().map(|o| o.len()).sum();
    println!("threads: {}", rayon::current_num_threads());
    println!("instances: {} x {} gaussians, grid {:?} at {} m", a.instances, a.k, grid.dims(), a.voxel_size);
    println!("splat_scene: {:.1} ms ({voxels} occupied voxels)", ms(elapsed));
    match peak_rss_kib() {
        Some(kib) => println!("peak_rss: {:.1} MiB", kib as f64 / 1024.0),
        None => println!("peak_rss: unavailable"),
    }

    if a.oracle_samples > 0 && !scene.is_empty() {
        let fine = VoxelGridSpec::occ3d().with_voxel_size(a.oracle_voxel_size).map_err(failure)?;
        let samples = &scene[..a.oracle_samples.min(scene.len())];
        let (mut sparse, mut dense) = (Duration::ZERO, Duration::ZERO);
        for inst in samples {
            let t = Instant::now();
            let fast = splat_instance(inst, &fine, &cfg).map_err(failure)?;
            sparse += t.elapsed();
            let t = Instant::now();
            let slow = dense_oracle_splat(inst, &fine, &cfg).map_err(failure)?;
            dense += t.elapsed();
            if fast != slow {
                return Err(failure("sparse and dense splatting disagree"));
            }
        }
        println!(
            "oracle at {} m over {} instances: sparse {:.2} ms, dense {:.1} ms, speedup {:.0}x",
            a.oracle_voxel_size,
            samples.len(),
            ms(sparse),
            ms(dense),
            dense.as_secs_f64() / sparse.as_secs_f64().max(1e-9)
        );
    }
    Ok(())
}
