//! Voxel traversal along a ray (Amanatides & Woo).

use std::ops::ControlFlow;

use crate::geometry::{Vec3, VoxelIndex};

/// Walks every voxel pierced by `origin + t * dir` for `t` in `[0, t_max]`,
/// starting with the voxel containing `origin`. The visitor receives the
/// voxel and its entry/exit parameters and may stop the walk early.
///
/// Boundary crossings are recomputed from the grid each step instead of
/// accumulated, so long rays do not drift.
pub fn walk_voxels<F>(origin: &Vec3, dir: &Vec3, t_max: f64, voxel_size: f64, mut visit: F)
where
    F: FnMut(VoxelIndex, f64, f64) -> ControlFlow<()>,
{
    let mut idx = [
        (origin.x / voxel_size).floor() as i32,
        (origin.y / voxel_size).floor() as i32,
        (origin.z / voxel_size).floor() as i32,
    ];
    let mut step = [0i32; 3];
    for a in 0..3 {
        step[a] = if dir[a] > 0.0 {
            1
        } else if dir[a] < 0.0 {
            -1
        } else {
            0
        };
    }
    let next_boundary = |a: usize, i: i32| -> f64 {
        match step[a] {
            1 => ((i + 1) as f64 * voxel_size - origin[a]) / dir[a],
            -1 => (i as f64 * voxel_size - origin[a]) / dir[a],
            _ => f64::INFINITY,
        }
    };
    let mut t_next = [
        next_boundary(0, idx[0]),
        next_boundary(1, idx[1]),
        next_boundary(2, idx[2]),
    ];
    let mut t_enter = 0.0;
    loop {
        let axis = if t_next[0] <= t_next[1] && t_next[0] <= t_next[2] {
            0
        } else if t_next[1] <= t_next[2] {
            1
        } else {
            2
        };
        let t_exit = t_next[axis];
        let voxel = VoxelIndex::new(idx[0], idx[1], idx[2]);
        if visit(voxel, t_enter, t_exit).is_break() || t_exit > t_max || !t_exit.is_finite() {
            return;
        }
        idx[axis] += step[axis];
        t_enter = t_exit;
        t_next[axis] = next_boundary(axis, idx[axis]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn collect(origin: Vec3, dir: Vec3, t_max: f64, vs: f64) -> Vec<VoxelIndex> {
        let mut out = Vec::new();
        walk_voxels(&origin, &dir.normalize(), t_max, vs, |v, _, _| {
            out.push(v);
            ControlFlow::Continue(())
        });
        out
    }

    #[test]
    fn axis_aligned_walk() {
        let v = collect(Vec3::new(0.05, 0.05, 0.05), Vec3::x(), 0.5, 0.1);
        let is: Vec<i32> = v.iter().map(|v| v.i).collect();
        // entry of voxel 5 is at t = 0.45 <= 0.5, voxel 6 starts at 0.55
        assert_eq!(is, vec![0, 1, 2, 3, 4, 5]);
        assert!(v.iter().all(|v| v.j == 0 && v.k == 0));
    }

    #[test]
    fn negative_direction() {
        let v = collect(Vec3::new(0.05, 0.05, 0.05), -Vec3::y(), 0.3, 0.1);
        let js: Vec<i32> = v.iter().map(|v| v.j).collect();
        assert_eq!(js, vec![0, -1, -2, -3]);
    }

    #[test]
    fn consecutive_voxels_are_face_neighbours() {
        let v = collect(
            Vec3::new(0.013, 0.37, -0.21),
            Vec3::new(0.31, -0.77, 0.41),
            4.0,
            0.2,
        );
        for w in v.windows(2) {
            assert_eq!(w[0].squared_distance(&w[1]), 1);
        }
    }

    #[test]
    fn intervals_are_contiguous_and_match_slabs() {
        let origin = Vec3::new(0.113, 0.271, 0.3377);
        let dir = Vec3::new(0.6, 0.3, -0.2).normalize();
        let mut last_exit = 0.0;
        walk_voxels(&origin, &dir, 3.0, 0.25, |v, t0, t1| {
            assert!((t0 - last_exit).abs() < 1e-12);
            last_exit = t1;
            let min = Vec3::new(v.i as f64, v.j as f64, v.k as f64) * 0.25;
            let aabb = crate::geometry::Aabb::new(min, min + Vec3::repeat(0.25));
            let (s0, s1) = aabb.ray_interval(&origin, &dir).expect("pierced");
            assert!((s0 - t0).abs() < 1e-9 && (s1 - t1).abs() < 1e-9);
            ControlFlow::Continue(())
        });
    }
}
