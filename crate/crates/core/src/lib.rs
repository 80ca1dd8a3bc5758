//! Instance occupancy from per-instance 3D Gaussians.
//!
//! Every detected instance carries a small set of anisotropic Gaussians.
//! Splatting them onto a voxel grid yields a per-instance voxel set at any
//! resolution. Around that kernel the crate provides
//!
//! * [`splat`]: Gaussian-to-voxel splatting with sparse culling and a dense
//!   reference implementation,
//! * [`metrics`]: instance-occupancy mAP over IoU thresholds and semantic mIoU,
//! * [`supervision`]: Hungarian assignment and the focal / L1 losses,
//! * [`track`]: a cross-frame instance bank with gated ID assignment and
//!   identity-switch counting,
//! * [`io`]: the scene (JSON Lines) and occupancy (`GOCC`) file formats,
//!   synthetic data and PLY export.
//!
//! The `book/` directory at the repository root walks through each piece;
//! its code listings are compiled and run as doc-tests of this crate.

// `!(x > 0.0)` is deliberate throughout: NaN must fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod instance;
pub mod io;
pub mod metrics;
pub mod splat;
pub mod supervision;
pub mod track;

pub use error::CoreError;
pub use grid::VoxelGridSpec;
pub use instance::{Gaussian3D, InstanceAnchor, InstancePrediction, SparseInstanceOccupancy};
pub use metrics::{EvalReport, OccFrame};
pub use splat::SplatConfig;

macro_rules! book_chapter {
    ($name:ident, $file:literal) => {
        #[cfg(doctest)]
        #[doc = include_str!(concat!("../../../book/src/", $file))]
        mod $name {}
    };
}

book_chapter!(book_introduction, "introduction.md");
book_chapter!(book_grid, "grid.md");
book_chapter!(book_instances, "instances.md");
book_chapter!(book_splatting, "splatting.md");
book_chapter!(book_evaluation, "evaluation.md");
book_chapter!(book_tracking, "tracking.md");
book_chapter!(book_supervision, "supervision.md");
book_chapter!(book_formats, "formats.md");
book_chapter!(book_cli, "cli.md");
