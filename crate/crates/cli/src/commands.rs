use rayon::prelude::*;

use gauss_occ::io::{
    export_ply as write_ply_file, gen_synthetic, read_occ, read_scene, write_occ, write_scene, OccFile, SynthConfig,
};
use gauss_occ::metrics::map_occ;
use gauss_occ::splat::{dense_oracle_splat, splat_scene};
use gauss_occ::supervision::check::{check_focal_gradient, check_hungarian};
use gauss_occ::track::{count_id_switches, TrackBank, TrackBankConfig};
use gauss_occ::{OccFrame, SplatConfig, VoxelGridSpec};

use crate::{at_path, failure, CliError, EvalArgs, ExportPlyArgs, LosscheckArgs, SplatArgs, SplatOpts, SynthArgs, TrackArgs};

impl SplatOpts {
    pub fn config(&self) -> Result<SplatConfig, CliError> {
        let d = SplatConfig::default();
        let cfg = SplatConfig {
            occupancy_threshold: self.threshold.unwrap_or(d.occupancy_threshold),
            cutoff: self.cutoff.unwrap_or(d.cutoff),
            ..d
        };
        cfg.validate().map_err(failure)?;
        Ok(cfg)
    }
}

pub fn splat(a: SplatArgs) -> Result<(), CliError> {
    let cfg = a.splat.config()?;
    let scene = at_path(&a.scene, read_scene(&a.scene))?;
    let grid = match a.voxel_size {
        Some(v) => scene.grid.with_voxel_size(v).map_err(failure)?,
        None => scene.grid,
    };
    let mut frames = Vec::with_capacity(scene.frames.len());
    for f in &scene.frames {
        let occ = if a.oracle {
            f.instances
                .par_iter()
                .map(|i| dense_oracle_splat(i, &grid, &cfg))
                .collect::<Result<Vec<_>, _>>()
        } else {
            splat_scene(&f.instances, &grid, &cfg)
        }
        .map_err(failure)?;
        frames.push(OccFrame::new(grid, occ));
    }
    at_path(&a.out, write_occ(&OccFile { frames }, &a.out))?;
    Ok(())
}

pub fn eval(a: EvalArgs) -> Result<(), CliError> {
    let pred = at_path(&a.pred, read_occ(&a.pred))?;
    let gt = at_path(&a.gt, read_occ(&a.gt))?;
    let report = map_occ(&pred.frames, &gt.frames, &a.ious).map_err(failure)?;
    print!("{}", report.to_text());
    if let Some(path) = a.json {
        let text = serde_json::to_string_pretty(&report).map_err(failure)?;
        std::fs::write(&path, text + "\n").map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

pub fn track(a: TrackArgs) -> Result<(), CliError> {
    let d = TrackBankConfig::default();
    let cfg = TrackBankConfig {
        t_track: a.t_track.unwrap_or(d.t_track),
        top_k: a.top_k.unwrap_or(d.top_k),
        max_age: a.max_age.unwrap_or(d.max_age),
        gate_radius: a.gate_radius.unwrap_or(d.gate_radius),
        frame_dt: a.frame_dt.unwrap_or(d.frame_dt),
    };
    let splat_cfg = a.splat.config()?;
    let mut scene = at_path(&a.scene, read_scene(&a.scene))?;
    let gt = a.gt.as_ref().map(|p| at_path(p, read_occ(p))).transpose()?;
    let mut bank = TrackBank::new(cfg).map_err(failure)?;

    println!("frame\tdetection\tclass\tscore\ttrack_id");
    for (n, frame) in scene.frames.iter_mut().enumerate() {
        // incoming IDs are ignored; the bank owns assignment
        let dets: Vec<_> = frame
            .instances
            .iter()
            .cloned()
            .map(|mut d| {
                d.track_id = None;
                d
            })
            .collect();
        frame.instances = bank.step_mut(&dets);
        for (i, d) in frame.instances.iter().enumerate() {
            let id = d.track_id.map_or("-".to_string(), |t| t.to_string());
            println!("{n}\t{i}\t{}\t{:.4}\t{id}", d.class_id, d.score);
        }
    }
    at_path(&a.out, write_scene(&scene, &a.out))?;
    println!("ids_assigned: {}", bank.ids_assigned());

    if let Some(gt) = gt {
        let preds = splat_frames(&scene.frames, &scene.grid, &splat_cfg)?;
        let ids = count_id_switches(&gt.frames, &preds, a.iou).map_err(failure)?;
        println!("id_switches: {ids}");
    }
    Ok(())
}

fn splat_frames(
    frames: &[gauss_occ::io::SceneFrame],
    grid: &VoxelGridSpec,
    cfg: &SplatConfig,
) -> Result<Vec<OccFrame>, CliError> {
    frames
        .iter()
        .map(|f| Ok(OccFrame::new(*grid, splat_scene(&f.instances, grid, cfg).map_err(failure)?)))
        .collect()
}

pub fn synth(a: SynthArgs) -> Result<(), CliError> {
    let grid = VoxelGridSpec::occ3d().with_voxel_size(a.voxel_size).map_err(failure)?;
    let cfg = SynthConfig::new(a.seed, a.frames, a.instances, a.k, grid);
    let (scene, gt) = gen_synthetic(&cfg).map_err(failure)?;
    at_path(&a.out_scene, write_scene(&scene, &a.out_scene))?;
    at_path(&a.out_gt, write_occ(&gt, &a.out_gt))?;
    Ok(())
}

pub fn losscheck(a: LosscheckArgs) -> Result<(), CliError> {
    if a.max_side == 0 {
        return Err(failure("--max-side must be at least 1"));
    }
    let h = check_hungarian(a.seed, a.hungarian_trials, a.max_side);
    println!(
        "hungarian: {} trials, {} mismatches, max |diff| {:e}",
        h.trials, h.mismatches, h.max_abs_diff
    );
    let g = check_focal_gradient(a.seed, a.gradient_trials, a.h, a.tolerance);
    println!(
        "focal gradient: {} trials, {} above {:e}, max rel err {:e}",
        g.trials, g.failures, g.tolerance, g.max_rel_err
    );
    if h.passed() && g.passed() {
        println!("ok");
        Ok(())
    } else {
        Err(failure("reference checks failed"))
    }
}

pub fn export_ply(a: ExportPlyArgs) -> Result<(), CliError> {
    let occ = at_path(&a.occ, read_occ(&a.occ))?;
    let frame = occ
        .frames
        .get(a.frame)
        .ok_or_else(|| failure(format!("frame {} out of range ({} frames)", a.frame, occ.frames.len())))?;
    at_path(&a.out, write_ply_file(frame, &a.out, a.color.into()))?;
    Ok(())
}
