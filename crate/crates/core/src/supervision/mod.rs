//! Training-time association and loss arithmetic: Hungarian matching of
//! predictions to ground truth, L1 anchor regression, binary focal loss with
//! its analytic gradient, and the weighted loss total.
//!
//! [`check`] holds the reference routines (exhaustive assignment, central
//! differences) that the solver and the gradient are verified against.

pub mod check;
mod hungarian;
mod loss;

use thiserror::Error;

pub use check::{brute_force_assignment, finite_difference};
pub use hungarian::{assignment_cost, hungarian};
pub use loss::{
    focal_loss, l1_loss, occupancy_loss, pairwise_cost, regression_loss, total_loss,
    LossComponents, LossWeights, MatchCostConfig,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SupervisionError {
    #[error("non-finite cost at ({row}, {col})")]
    NonFiniteCost { row: usize, col: usize },
    #[error("row {row} has {len} columns, expected {expected}")]
    RaggedMatrix { row: usize, len: usize, expected: usize },
    #[error("class {class} out of range for {num_classes} classes")]
    ClassOutOfRange { class: u16, num_classes: usize },
    #[error("class probabilities sum to {0}, expected 1")]
    InvalidProbabilities(f64),
    #[error("voxel enumeration mismatch: {0}")]
    VoxelEnumerationMismatch(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}
