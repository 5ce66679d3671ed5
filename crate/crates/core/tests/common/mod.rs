//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;
use semnbv::geometry::Aabb;
use semnbv::mapping::LabelledVoxel;
use semnbv::{CameraModel, MapPair, MapParams, Pose, Vec3, VoxelIndex, VoxelState};

/// Parameter interval `[enter, exit]` of the ray inside an axis-aligned
/// box, computed independently of the library's traversal code.
pub fn slab(origin: &Vec3, dir: &Vec3, lo: &Vec3, hi: &Vec3) -> Option<(f64, f64)> {
    let mut enter = f64::NEG_INFINITY;
    let mut exit = f64::INFINITY;
    for a in 0..3 {
        if dir[a] == 0.0 {
            if origin[a] < lo[a] || origin[a] > hi[a] {
                return None;
            }
            continue;
        }
        let t1 = (lo[a] - origin[a]) / dir[a];
        let t2 = (hi[a] - origin[a]) / dir[a];
        enter = enter.max(t1.min(t2));
        exit = exit.min(t1.max(t2));
    }
    (enter <= exit).then_some((enter, exit))
}

/// Voxels seen by `camera` at `pose`: a voxel is visible when some sampled
/// ray pierces it, within range and the grid, no later than the first
/// OCCUPIED voxel that ray pierces. Every voxel of the inclusive grid
/// `[lo, hi]` is tested against every ray.
pub fn visible_oracle(
    maps: &MapPair,
    pose: &Pose,
    camera: &CameraModel,
    ray_step: usize,
    lo: VoxelIndex,
    hi: VoxelIndex,
) -> BTreeSet<VoxelIndex> {
    let vs = maps.voxel_size();
    let o = pose.position;
    let grid_lo = Vec3::new(lo.i as f64, lo.j as f64, lo.k as f64) * vs;
    let grid_hi = Vec3::new((hi.i + 1) as f64, (hi.j + 1) as f64, (hi.k + 1) as f64) * vs;
    let mut out = BTreeSet::new();
    let mut hits: Vec<(VoxelIndex, f64, bool)> = Vec::new();
    for dir in camera.generate_rays(pose, ray_step) {
        let Some((_, grid_exit)) = slab(&o, &dir, &grid_lo, &grid_hi) else {
            continue;
        };
        let t_max = camera.max_range().min(grid_exit);
        hits.clear();
        for i in lo.i..=hi.i {
            for j in lo.j..=hi.j {
                for k in lo.k..=hi.k {
                    let v = VoxelIndex::new(i, j, k);
                    let a = Vec3::new(i as f64 * vs, j as f64 * vs, k as f64 * vs);
                    let b = Vec3::new((i + 1) as f64 * vs, (j + 1) as f64 * vs, (k + 1) as f64 * vs);
                    if let Some((enter, exit)) = slab(&o, &dir, &a, &b) {
                        let enter = enter.max(0.0);
                        if exit > enter && enter <= t_max {
                            hits.push((v, enter, maps.state_of(v) == VoxelState::Occupied));
                        }
                    }
                }
            }
        }
        let first_wall = hits
            .iter()
            .filter(|h| h.2)
            .map(|h| h.1)
            .fold(f64::INFINITY, f64::min);
        out.extend(hits.iter().filter(|h| h.1 <= first_wall).map(|h| h.0));
    }
    out
}

/// A cube of `n` voxels per side at the origin, with matching bounds.
pub fn cube_map(n: i32, voxel_size: f64) -> MapPair {
    let side = n as f64 * voxel_size;
    MapPair::new(MapParams::new(voxel_size)).with_bounds(Aabb::new(Vec3::zeros(), Vec3::repeat(side)))
}

pub fn set_state(maps: &mut MapPair, v: VoxelIndex, state: VoxelState) {
    let p = *maps.params();
    match state {
        VoxelState::Unknown => maps.set_occupancy(v, p.truncation, 0.0),
        VoxelState::Free => maps.set_occupancy(v, p.truncation, 1.0),
        VoxelState::Occupied => maps.set_occupancy(v, 0.0, 1.0),
    }
}

/// Fills an `n`-cube with random states; `p_occupied` and `p_free` are the
/// per-voxel probabilities, the rest stays UNKNOWN.
pub fn random_states<R: Rng>(maps: &mut MapPair, n: i32, p_occupied: f64, p_free: f64, rng: &mut R) {
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let u: f64 = rng.gen();
                let v = VoxelIndex::new(i, j, k);
                if u < p_occupied {
                    set_state(maps, v, VoxelState::Occupied);
                } else if u < p_occupied + p_free {
                    set_state(maps, v, VoxelState::Free);
                }
            }
        }
    }
}

/// Labels `v` with `category` at the given confidence (label / observation
/// counts) and ray count, and marks it OCCUPIED with `weight`.
pub fn label(maps: &mut MapPair, v: VoxelIndex, category: &str, labels: u32, observations: u32, rays: u32, weight: f64) {
    maps.set_occupancy(v, 0.0, weight);
    maps.set_label(v, category, LabelledVoxel::with_counts(1, 0, labels, observations, rays));
}
