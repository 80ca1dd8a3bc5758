use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::grid::VoxelGridSpec;
use crate::instance::{Gaussian3D, InstanceAnchor, InstancePrediction, ANCHOR_WIDTH, GAUSSIAN_WIDTH};

#[derive(Debug, Clone, PartialEq)]
pub struct SceneFrame {
    /// Seconds.
    pub t: f64,
    pub instances: Vec<InstancePrediction>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneFile {
    pub grid: VoxelGridSpec,
    pub classes: Vec<String>,
    /// Gaussians per instance; `None` lets it vary.
    pub k: Option<usize>,
    pub frames: Vec<SceneFrame>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridRecord {
    min: [f64; 3],
    max: [f64; 3],
    voxel_size: [f64; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceRecord {
    class: u16,
    score: f64,
    anchor: [f64; ANCHOR_WIDTH],
    track_id: Option<u32>,
    gaussians: Vec<[f64; GAUSSIAN_WIDTH]>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum Record {
    Header {
        grid: GridRecord,
        classes: Vec<String>,
        k: Option<usize>,
    },
    Frame {
        t: f64,
        instances: Vec<InstanceRecord>,
    },
}

fn instance_from_record(
    rec: InstanceRecord,
    header: &SceneFile,
    line: usize,
    n: usize,
) -> Result<InstancePrediction, IoError> {
    let loc = format!("line {line}, instance {n}");
    if rec.class as usize >= header.classes.len() {
        return Err(IoError::invariant(
            loc,
            "class",
            format!("{} not in class table of {}", rec.class, header.classes.len()),
        ));
    }
    if let Some(k) = header.k {
        if rec.gaussians.len() != k {
            return Err(IoError::invariant(
                loc,
                "gaussians",
                format!("{} gaussians, header says {k}", rec.gaussians.len()),
            ));
        }
    }
    let anchor = InstanceAnchor::from_array(rec.anchor).map_err(|e| IoError::invariant(&loc, "anchor", e))?;
    let gaussians = rec
        .gaussians
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            Gaussian3D::from_row(row).map_err(|e| IoError::invariant(&loc, &format!("gaussians[{i}]"), e))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let field = if gaussians.is_empty() { "gaussians" } else { "score" };
    InstancePrediction::new(rec.class, rec.score, anchor, gaussians, rec.track_id)
        .map_err(|e| IoError::invariant(loc, field, e))
}

fn instance_to_record(inst: &InstancePrediction) -> InstanceRecord {
    InstanceRecord {
        class: inst.class_id,
        score: inst.score,
        anchor: inst.anchor.to_array(),
        track_id: inst.track_id,
        gaussians: inst.gaussians().iter().map(Gaussian3D::to_row).collect(),
    }
}

pub fn scene_from_str(text: &str) -> Result<SceneFile, IoError> {
    let mut scene: Option<SceneFile> = None;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(raw).map_err(|e| IoError::Parse {
            line,
            msg: e.to_string(),
        })?;
        match (rec, scene.as_mut()) {
            (Record::Header { grid, classes, k }, None) => {
                let grid = VoxelGridSpec::new(grid.min, grid.max, grid.voxel_size)
                    .map_err(|e| IoError::invariant(format!("line {line}"), "grid", e))?;
                if k == Some(0) {
                    return Err(IoError::invariant(format!("line {line}"), "k", "must be positive"));
                }
                scene = Some(SceneFile {
                    grid,
                    classes,
                    k,
                    frames: Vec::new(),
                });
            }
            (Record::Header { .. }, Some(_)) => {
                return Err(IoError::Parse {
                    line,
                    msg: "second header record".into(),
                })
            }
            (Record::Frame { .. }, None) => {
                return Err(IoError::Parse {
                    line,
                    msg: "frame before header".into(),
                })
            }
            (Record::Frame { t, instances }, Some(s)) => {
                if !t.is_finite() {
                    return Err(IoError::invariant(format!("line {line}"), "t", "not finite"));
                }
                let instances = instances
                    .into_iter()
                    .enumerate()
                    .map(|(i, rec)| instance_from_record(rec, s, line, i))
                    .collect::<Result<Vec<_>, _>>()?;
                s.frames.push(SceneFrame { t, instances });
            }
        }
    }
    scene.ok_or(IoError::Parse {
        line: 1,
        msg: "missing header record".into(),
    })
}

pub fn scene_to_string(scene: &SceneFile) -> String {
    let mut out = String::new();
    let header = Record::Header {
        grid: GridRecord {
            min: scene.grid.min_corner(),
            max: scene.grid.max_corner(),
            voxel_size: scene.grid.voxel_size(),
        },
        classes: scene.classes.clone(),
        k: scene.k,
    };
    writeln!(out, "{}", serde_json::to_string(&header).expect("serializable")).unwrap();
    for frame in &scene.frames {
        let rec = Record::Frame {
            t: frame.t,
            instances: frame.instances.iter().map(instance_to_record).collect(),
        };
        writeln!(out, "{}", serde_json::to_string(&rec).expect("serializable")).unwrap();
    }
    out
}

pub fn read_scene(path: impl AsRef<Path>) -> Result<SceneFile, IoError> {
    scene_from_str(&std::fs::read_to_string(path)?)
}

pub fn write_scene(scene: &SceneFile, path: impl AsRef<Path>) -> Result<(), IoError> {
    std::fs::write(path, scene_to_string(scene))?;
    Ok(())
}
