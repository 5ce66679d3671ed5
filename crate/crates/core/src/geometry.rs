//! Poses, the pinhole camera model and voxel indexing.

use std::f64::consts::PI;

use nalgebra::Vector3;

pub type Vec3 = Vector3<f64>;

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle(angle: f64) -> f64 {
    if !angle.is_finite() {
        return angle;
    }
    let mut a = angle % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Sensor pose. Yaw is kept in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    yaw: f64,
    pitch: f64,
}

impl Pose {
    pub fn new(position: Vec3, yaw: f64) -> Self {
        Self::with_pitch(position, yaw, 0.0)
    }

    pub fn with_pitch(position: Vec3, yaw: f64, pitch: f64) -> Self {
        Pose {
            position,
            yaw: normalize_angle(yaw),
            pitch,
        }
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn set_yaw(&mut self, yaw: f64) {
        self.yaw = normalize_angle(yaw);
    }

    /// Unit camera optical axis.
    pub fn optical_axis(&self) -> Vec3 {
        optical_axis(self)
    }

    /// Orthonormal camera frame as (forward, left, up).
    pub fn camera_frame(&self) -> (Vec3, Vec3, Vec3) {
        let (sy, cy) = self.yaw.sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        let forward = Vec3::new(cp * cy, cp * sy, sp);
        let left = Vec3::new(-sy, cy, 0.0);
        let up = Vec3::new(-sp * cy, -sp * sy, cp);
        (forward, left, up)
    }
}

pub fn optical_axis(pose: &Pose) -> Vec3 {
    let (sy, cy) = pose.yaw.sin_cos();
    let (sp, cp) = pose.pitch.sin_cos();
    Vec3::new(cp * cy, cp * sy, sp)
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CameraError {
    #[error("field of view must lie in (0, pi), got {0}")]
    FieldOfView(f64),
    #[error("max range must be positive, got {0}")]
    MaxRange(f64),
    #[error("image must have at least one pixel")]
    EmptyImage,
}

/// Pinhole depth camera with independent horizontal and vertical FOV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    horizontal_fov: f64,
    vertical_fov: f64,
    width: usize,
    height: usize,
    max_range: f64,
}

impl CameraModel {
    pub fn new(
        horizontal_fov: f64,
        vertical_fov: f64,
        width: usize,
        height: usize,
        max_range: f64,
    ) -> Result<Self, CameraError> {
        for fov in [horizontal_fov, vertical_fov] {
            if !(fov > 0.0 && fov < PI) {
                return Err(CameraError::FieldOfView(fov));
            }
        }
        if !(max_range > 0.0 && max_range.is_finite()) {
            return Err(CameraError::MaxRange(max_range));
        }
        if width == 0 || height == 0 {
            return Err(CameraError::EmptyImage);
        }
        Ok(CameraModel {
            horizontal_fov,
            vertical_fov,
            width,
            height,
            max_range,
        })
    }

    /// Depth stream of the D435-class sensor: 87 x 58 degrees, 5 m rays.
    pub fn depth_sensor(width: usize, height: usize) -> Self {
        Self::new(87f64.to_radians(), 58f64.to_radians(), width, height, 5.0)
            .expect("valid built-in camera")
    }

    pub fn horizontal_fov(&self) -> f64 {
        self.horizontal_fov
    }
    pub fn vertical_fov(&self) -> f64 {
        self.vertical_fov
    }
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn max_range(&self) -> f64 {
        self.max_range
    }

    fn focal(&self) -> (f64, f64) {
        let fx = 0.5 * self.width as f64 / (0.5 * self.horizontal_fov).tan();
        let fy = 0.5 * self.height as f64 / (0.5 * self.vertical_fov).tan();
        (fx, fy)
    }

    /// Unit ray through the center of pixel `(col, row)` in the world frame.
    pub fn pixel_ray(&self, pose: &Pose, col: usize, row: usize) -> Vec3 {
        let (forward, left, up) = pose.camera_frame();
        self.pixel_ray_in_frame(&forward, &left, &up, self.focal(), col, row)
    }

    fn pixel_ray_in_frame(
        &self,
        forward: &Vec3,
        left: &Vec3,
        up: &Vec3,
        (fx, fy): (f64, f64),
        col: usize,
        row: usize,
    ) -> Vec3 {
        let cx = 0.5 * self.width as f64;
        let cy = 0.5 * self.height as f64;
        let x = (col as f64 + 0.5 - cx) / fx;
        let y = (row as f64 + 0.5 - cy) / fy;
        (forward - left * x - up * y).normalize()
    }

    /// Rays for every `step`-th pixel column and row, row-major.
    pub fn generate_rays(&self, pose: &Pose, step: usize) -> Vec<Vec3> {
        let step = step.max(1);
        let (forward, left, up) = pose.camera_frame();
        let focal = self.focal();
        let mut rays =
            Vec::with_capacity(self.height.div_ceil(step) * self.width.div_ceil(step));
        for row in (0..self.height).step_by(step) {
            for col in (0..self.width).step_by(step) {
                rays.push(self.pixel_ray_in_frame(&forward, &left, &up, focal, col, row));
            }
        }
        rays
    }

    pub fn frustum_contains(&self, pose: &Pose, point: &Vec3) -> bool {
        let rel = point - pose.position;
        let dist = rel.norm();
        if !(dist > 0.0 && dist <= self.max_range) {
            return false;
        }
        let (forward, left, up) = pose.camera_frame();
        let z = rel.dot(&forward);
        if z <= 0.0 {
            return false;
        }
        let lateral = rel.dot(&left).abs() / z;
        let vertical = rel.dot(&up).abs() / z;
        lateral <= (0.5 * self.horizontal_fov).tan() && vertical <= (0.5 * self.vertical_fov).tan()
    }
}

pub fn frustum_contains(camera: &CameraModel, pose: &Pose, point: &Vec3) -> bool {
    camera.frustum_contains(pose, point)
}

pub fn generate_rays(camera: &CameraModel, pose: &Pose, step: usize) -> Vec<Vec3> {
    camera.generate_rays(pose, step)
}

/// Integer voxel coordinates. The voxel covers
/// `[index * size, (index + 1) * size)` on each axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VoxelIndex {
    pub i: i32,
    pub j: i32,
    pub k: i32,
}

impl VoxelIndex {
    pub const fn new(i: i32, j: i32, k: i32) -> Self {
        VoxelIndex { i, j, k }
    }

    pub fn from_point(point: &Vec3, voxel_size: f64) -> Self {
        VoxelIndex {
            i: (point.x / voxel_size).floor() as i32,
            j: (point.y / voxel_size).floor() as i32,
            k: (point.z / voxel_size).floor() as i32,
        }
    }

    pub fn center(&self, voxel_size: f64) -> Vec3 {
        Vec3::new(
            (self.i as f64 + 0.5) * voxel_size,
            (self.j as f64 + 0.5) * voxel_size,
            (self.k as f64 + 0.5) * voxel_size,
        )
    }

    pub fn offset(&self, di: i32, dj: i32, dk: i32) -> Self {
        VoxelIndex::new(self.i + di, self.j + dj, self.k + dk)
    }

    pub fn squared_distance(&self, other: &VoxelIndex) -> i64 {
        let di = (self.i - other.i) as i64;
        let dj = (self.j - other.j) as i64;
        let dk = (self.k - other.k) as i64;
        di * di + dj * dj + dk * dk
    }
}

/// Axis-aligned box in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Aabb { min, max }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    /// Strict interior test, used for collision of a point with solid geometry.
    pub fn contains_strict(&self, p: &Vec3) -> bool {
        (0..3).all(|a| p[a] > self.min[a] && p[a] < self.max[a])
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        self.contains(&other.min) && self.contains(&other.max)
    }

    /// Slab test. Returns the entry/exit parameters of `origin + t * dir`
    /// clipped to `t >= 0`, or `None` if the ray misses.
    pub fn ray_interval(&self, origin: &Vec3, dir: &Vec3) -> Option<(f64, f64)> {
        let mut t0 = 0.0f64;
        let mut t1 = f64::INFINITY;
        for a in 0..3 {
            if dir[a] == 0.0 {
                if origin[a] < self.min[a] || origin[a] > self.max[a] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / dir[a];
            let mut ta = (self.min[a] - origin[a]) * inv;
            let mut tb = (self.max[a] - origin[a]) * inv;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return None;
            }
        }
        Some((t0, t1))
    }

    /// Voxel index range `[lo, hi]` covering the box.
    pub fn voxel_range(&self, voxel_size: f64) -> (VoxelIndex, VoxelIndex) {
        let lo = VoxelIndex::from_point(&self.min, voxel_size);
        let hi = VoxelIndex::from_point(&self.max, voxel_size);
        (lo, hi)
    }
}
