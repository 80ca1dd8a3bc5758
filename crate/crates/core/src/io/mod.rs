//! File formats and test-data generation.
//!
//! * Scenes are JSON Lines: a header record, then one record per frame.
//! * Occupancy is the little-endian `GOCC` binary format, one record per
//!   frame, concatenated.
//! * [`export_ply`] writes ASCII point clouds of voxel centers.

mod occ;
mod ply;
mod scene;
mod synth;

use thiserror::Error;

pub use occ::{decode_occ, encode_occ, encode_occ_frame, read_occ, write_occ, OccFile, GOCC_MAGIC, GOCC_VERSION};
pub use ply::{export_ply, write_ply, ColorScheme};
pub use scene::{read_scene, scene_from_str, scene_to_string, write_scene, SceneFile, SceneFrame};
pub use synth::{gen_synthetic, MotionConfig, SynthConfig, DEFAULT_CLASSES};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: parse error: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{location}: invalid `{field}`: {msg}")]
    InvariantViolation {
        location: String,
        field: String,
        msg: String,
    },
    #[error("bad magic {0:?}, expected \"GOCC\"")]
    BadMagic([u8; 4]),
    #[error("unsupported GOCC version {0}")]
    VersionUnsupported(u32),
    #[error("record {record}: stored dims {stored:?} inconsistent with grid ({msg})")]
    DimsInconsistent {
        record: usize,
        stored: [u32; 3],
        msg: String,
    },
    #[error("record {record}, instance {instance}: voxel indices not strictly ascending")]
    IndicesNotAscending { record: usize, instance: usize },
    #[error("record {record}: truncated ({msg})")]
    Truncated { record: usize, msg: String },
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
}

impl IoError {
    pub(crate) fn invariant(location: impl Into<String>, field: &str, msg: impl ToString) -> Self {
        IoError::InvariantViolation {
            location: location.into(),
            field: field.to_string(),
            msg: msg.to_string(),
        }
    }
}
