use std::ops::ControlFlow;

use rustc_hash::FxHashSet;

use crate::geometry::{CameraModel, Pose, VoxelIndex};
use crate::mapping::{BlockIndex, MapPair, OccupancyVoxel, VoxelState};
use crate::raycast::walk_voxels;

/// Visited-voxel set: a dense bitset over the map bounds when they are
/// known, a hash set otherwise.
enum SeenSet {
    Dense { lo: VoxelIndex, dims: [usize; 3], bits: Vec<u64> },
    Sparse(FxHashSet<VoxelIndex>),
}

impl SeenSet {
    fn new(maps: &MapPair) -> Self {
        match maps.bounds() {
            Some(b) => {
                // one voxel of padding absorbs rounding at the faces
                let (lo, hi) = b.voxel_range(maps.voxel_size());
                let lo = VoxelIndex::new(lo.i - 1, lo.j - 1, lo.k - 1);
                let hi = VoxelIndex::new(hi.i + 1, hi.j + 1, hi.k + 1);
                let dims = [
                    (hi.i - lo.i + 1).max(0) as usize,
                    (hi.j - lo.j + 1).max(0) as usize,
                    (hi.k - lo.k + 1).max(0) as usize,
                ];
                let n = dims[0] * dims[1] * dims[2];
                SeenSet::Dense { lo, dims, bits: vec![0; n.div_ceil(64)] }
            }
            None => SeenSet::Sparse(FxHashSet::default()),
        }
    }

    /// Returns true if `v` was not yet in the set. Dense sets only accept
    /// voxels inside the bounds.
    fn insert(&mut self, v: VoxelIndex) -> bool {
        match self {
            SeenSet::Dense { lo, dims, bits } => {
                let (i, j, k) = ((v.i - lo.i) as usize, (v.j - lo.j) as usize, (v.k - lo.k) as usize);
                let n = (k * dims[1] + j) * dims[0] + i;
                let (word, bit) = (n / 64, 1u64 << (n % 64));
                let fresh = bits[word] & bit == 0;
                bits[word] |= bit;
                fresh
            }
            SeenSet::Sparse(set) => set.insert(v),
        }
    }
}

/// Calls `visit` once for every voxel visible from `pose`, in first-seen
/// order. Rays are subsampled every `ray_step` pixels, run to the camera
/// range (clipped to the map bounds when set) and stop after their first
/// OCCUPIED voxel, which is itself visible. UNKNOWN voxels do not occlude.
pub fn for_each_visible<F>(
    maps: &MapPair,
    pose: &Pose,
    camera: &CameraModel,
    ray_step: usize,
    mut visit: F,
) where
    F: FnMut(VoxelIndex, &OccupancyVoxel),
{
    let vs = maps.voxel_size();
    let origin = pose.position;
    let unknown = OccupancyVoxel::default();
    let mut seen = SeenSet::new(maps);
    for dir in camera.generate_rays(pose, ray_step) {
        let mut t_max = camera.max_range();
        if let Some(b) = maps.bounds() {
            match b.ray_interval(&origin, &dir) {
                Some((_, exit)) => t_max = t_max.min(exit),
                None => continue,
            }
        }
        let mut cached: Option<(BlockIndex, Option<usize>)> = None;
        walk_voxels(&origin, &dir, t_max, vs, |v, t_enter, _| {
            if t_enter > t_max {
                return ControlFlow::Break(());
            }
            if !maps.in_bounds(v) {
                return ControlFlow::Continue(());
            }
            let layer = maps.occupancy();
            let (block, local) = layer.split(v);
            let slot = match cached {
                Some((b, s)) if b == block => s,
                _ => {
                    let s = layer.find_slot(block);
                    cached = Some((block, s));
                    s
                }
            };
            let voxel = slot.map_or(&unknown, |s| &layer.slot(s)[local]);
            if seen.insert(v) {
                visit(v, voxel);
            }
            if voxel.state == VoxelState::Occupied {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
    }
}

/// Deduplicated visible voxels, in first-seen order.
pub fn visible_voxels(
    maps: &MapPair,
    pose: &Pose,
    camera: &CameraModel,
    ray_step: usize,
) -> Vec<VoxelIndex> {
    let mut out = Vec::new();
    for_each_visible(maps, pose, camera, ray_step, |v, _| out.push(v));
    out
}
