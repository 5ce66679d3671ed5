//! Semantic-aware next-best-view planning for a mobile depth camera that
//! searches an unknown voxelized environment for labelled targets and then
//! acquires each one from many viewpoints.
//!
//! The crate is organized bottom-up:
//!
//! - [`geometry`]: poses, the pinhole camera model, voxel indexing.
//! - [`scene`]: box-world ground truth and the ideal depth + label sensor.
//! - [`mapping`]: the occupancy TSDF and labelled voxel layers.
//! - [`gain`]: visibility and semantic view utilities.
//! - [`planner`]: RRT* view trees, the search/acquisition mode machine and a
//!   visibility-only receding-horizon baseline.
//! - [`metrics`]: directivity and region-of-interest reconstruction metrics.
//! - [`harness`]: configuration, kinematic motion and the simulation loop.

pub mod gain;
pub mod harness;
pub mod geometry;
pub mod mapping;
pub mod metrics;
pub mod planner;
pub mod raycast;
pub mod scene;

pub use geometry::{CameraModel, Pose, Vec3, VoxelIndex};
pub use mapping::{MapPair, MapParams, VoxelState};
pub use scene::{load_scene, Scene, SensorFrame};
