use std::ops::ControlFlow;

use rustc_hash::FxHashMap;

use super::layer::BlockIndex;
use super::{CategoryId, MapPair, VoxelState};
use crate::geometry::{CameraModel, Pose, VoxelIndex};
use crate::raycast::walk_voxels;
use crate::scene::SensorFrame;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MappingError {
    #[error("frame is {got:?} pixels but the camera is {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegrationSummary {
    /// TSDF voxel updates, counting repeats.
    pub voxels_updated: usize,
    /// Voxels that left the UNKNOWN state.
    pub newly_observed: usize,
    /// Voxels whose label went from background to an object category.
    pub newly_labelled: usize,
}

type Votes = Vec<(u32, CategoryId, u32)>;

/// Fuses one depth + label frame taken at `pose` into both layers.
///
/// Every pixel ray updates voxels from the sensor up to `depth + tau` with
/// the projective signed distance clamped to `tau`, weighted by
/// `min(1, 1/z^2)`. Rays without a hit carve free space up to the maximum
/// range. Voxels within `tau` of a hit collect that pixel's label; each
/// voxel then records one observation per frame carrying the plurality
/// label of its rays.
pub fn integrate(
    maps: &mut MapPair,
    pose: &Pose,
    frame: &SensorFrame,
    camera: &CameraModel,
) -> Result<IntegrationSummary, MappingError> {
    if frame.width() != camera.width() || frame.height() != camera.height() {
        return Err(MappingError::DimensionMismatch {
            expected: (camera.width(), camera.height()),
            got: (frame.width(), frame.height()),
        });
    }
    let params = maps.params;
    let vs = params.voxel_size;
    let tau = params.truncation;
    let max_range = camera.max_range();
    let category_ids: Vec<CategoryId> = frame
        .category_names()
        .iter()
        .map(|c| maps.intern_category(c))
        .collect();

    let origin = pose.position;
    let rays = camera.generate_rays(pose, 1);
    let mut summary = IntegrationSummary::default();
    let mut votes: FxHashMap<VoxelIndex, Votes> = FxHashMap::default();

    for (n, dir) in rays.iter().enumerate() {
        let (depth, instance, cat) = frame.pixel(n);
        let hit = depth.is_finite();
        let (t_end, weight) = if hit {
            (depth + tau, (1.0 / (depth * depth)).min(1.0))
        } else {
            (max_range, (1.0 / (max_range * max_range)).min(1.0))
        };
        let label = (instance, category_ids[cat]);
        let mut cached: Option<(BlockIndex, usize)> = None;
        walk_voxels(&origin, dir, t_end, vs, |v, _, _| {
            let sdf_raw = if hit {
                depth - (v.center(vs) - origin).dot(dir)
            } else {
                tau
            };
            if sdf_raw < -tau {
                return ControlFlow::Continue(());
            }
            let sdf = sdf_raw.min(tau);
            let (block, local) = maps.occupancy.split(v);
            let slot = match cached {
                Some((b, s)) if b == block => s,
                _ => {
                    let s = maps.occupancy.slot_or_insert(block);
                    cached = Some((block, s));
                    s
                }
            };
            let voxel = &mut maps.occupancy.slot_mut(slot)[local];
            let was_unknown = voxel.state == VoxelState::Unknown;
            let total = voxel.weight + weight;
            voxel.distance = (voxel.distance * voxel.weight + sdf * weight) / total;
            voxel.weight = total.min(params.weight_cap);
            voxel.state = params.classify(voxel.distance, voxel.weight);
            summary.voxels_updated += 1;
            if was_unknown && voxel.state != VoxelState::Unknown {
                summary.newly_observed += 1;
            }
            if hit && sdf_raw <= tau {
                let entry = votes.entry(v).or_default();
                match entry.iter_mut().find(|(i, c, _)| (*i, *c) == label) {
                    Some(e) => e.2 += 1,
                    None => entry.push((label.0, label.1, 1)),
                }
            }
            ControlFlow::Continue(())
        });
    }

    let mut staged: Vec<(VoxelIndex, Votes)> = votes.into_iter().collect();
    staged.sort_unstable_by_key(|(v, _)| *v);
    for (v, tally) in staged {
        let rays: u32 = tally.iter().map(|t| t.2).sum();
        let &(instance, category, _) = tally
            .iter()
            .max_by(|a, b| a.2.cmp(&b.2).then(b.0.cmp(&a.0)))
            .expect("nonempty tally");
        let voxel = maps.labelled.get_or_insert(v);
        let before = voxel.category;
        voxel.observe(instance, category, rays);
        let after = voxel.category;
        if after != 0 {
            if before == 0 {
                summary.newly_labelled += 1;
            }
            maps.label_log.push(v);
        }
    }
    Ok(summary)
}

impl MapPair {
    pub fn integrate(
        &mut self,
        pose: &Pose,
        frame: &SensorFrame,
        camera: &CameraModel,
    ) -> Result<IntegrationSummary, MappingError> {
        integrate(self, pose, frame, camera)
    }
}
