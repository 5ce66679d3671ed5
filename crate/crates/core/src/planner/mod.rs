//! View-tree planning: RRT* growth in observed free space, branch
//! selection, the search/acquisition strategy and the visibility-only
//! receding-horizon baseline.

mod baseline;
mod strategy;
mod tree;

pub use baseline::{baseline_rh_nbv_step, discounted_visibility};
pub use strategy::{
    best_index, score_branches, select_best_branch, step, BranchRecord, Fallback, ListOutcome,
    PlanInputs, PlannerState, RoundReport,
};
pub use tree::{grow_tree, sampling_region, Branch, PlannerConfig, ViewNode, ViewTree};

use crate::geometry::Vec3;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PlannerError {
    #[error("no free space around the tree root at {0:?}")]
    NoFreeSpace(Vec3),
    #[error("every target has been acquired")]
    Finished,
}

/// Per-round tree seed derived from the run seed.
pub fn round_seed(seed: u64, round: u64) -> u64 {
    let mut z = seed ^ round.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
