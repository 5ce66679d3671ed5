//! Ground-truth world made of labelled boxes, and the ideal depth + label
//! sensor that observes it.

use std::collections::{BTreeMap, HashSet};

use rand::Rng;

use crate::geometry::{Aabb, CameraModel, Pose, Vec3, VoxelIndex};

pub const BACKGROUND: &str = "background";

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SceneError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid scene: {0}")]
    Validation(String),
    #[error("pose {0:?} is inside object {1}")]
    PoseInsideGeometry(Vec3, u32),
    #[error("pose {0:?} is outside the scene bounds")]
    PoseOutOfBounds(Vec3),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub shape: Aabb,
    pub category: String,
    pub instance_id: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    bounds: Aabb,
    objects: Vec<SceneObject>,
    targets: Vec<String>,
    target_positions: Vec<(String, Vec3)>,
}

impl Scene {
    pub fn new(
        bounds: Aabb,
        objects: Vec<SceneObject>,
        targets: Vec<String>,
        target_positions: Vec<(String, Vec3)>,
    ) -> Result<Self, SceneError> {
        let scene = Scene {
            bounds,
            objects,
            targets,
            target_positions,
        };
        scene.validate()?;
        Ok(scene)
    }

    fn validate(&self) -> Result<(), SceneError> {
        let invalid = |m: String| Err(SceneError::Validation(m));
        if (0..3).any(|a| self.bounds.min[a] >= self.bounds.max[a]) {
            return invalid("bounds min must be below max on every axis".into());
        }
        let mut ids = HashSet::new();
        for o in &self.objects {
            if (0..3).any(|a| o.shape.min[a] >= o.shape.max[a]) {
                return invalid(format!("object {} has min >= max", o.instance_id));
            }
            if o.instance_id == 0 {
                return invalid("instance ids must be positive".into());
            }
            if !ids.insert(o.instance_id) {
                return invalid(format!("duplicate instance id {}", o.instance_id));
            }
            if !self.bounds.contains_box(&o.shape) {
                return invalid(format!("object {} lies outside the bounds", o.instance_id));
            }
        }
        for t in &self.targets {
            if !self.objects.iter().any(|o| &o.category == t) {
                return invalid(format!("target category '{t}' has no object"));
            }
        }
        for (c, _) in &self.target_positions {
            if !self.targets.contains(c) {
                return invalid(format!("target_position for non-target category '{c}'"));
            }
        }
        Ok(())
    }

    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }

    pub fn objects(&self) -> &[SceneObject] {
        &self.objects
    }

    /// Target roster in search order.
    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    /// Ground-truth target positions. Evaluation only; never hand these to
    /// a planner.
    pub fn target_positions(&self) -> &[(String, Vec3)] {
        &self.target_positions
    }

    /// Object strictly containing `p`, if any.
    pub fn object_at(&self, p: &Vec3) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.shape.contains_strict(p))
    }

    /// Nearest hit along a ray within `max_range`: (distance, object index).
    pub fn cast(&self, origin: &Vec3, dir: &Vec3, max_range: f64) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for (n, o) in self.objects.iter().enumerate() {
            if let Some((t0, _)) = o.shape.ray_interval(origin, dir) {
                if t0 > 0.0
                    && t0 <= max_range
                    && best.is_none_or(|(bt, bn)| {
                        t0 < bt || (t0 == bt && o.instance_id < self.objects[bn].instance_id)
                    })
                {
                    best = Some((t0, n));
                }
            }
        }
        best
    }
}

/// Idealized depth + instance segmentation image. Depth is the range along
/// each pixel ray; `f64::INFINITY` marks rays without a hit in range.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorFrame {
    width: usize,
    height: usize,
    depth: Vec<f64>,
    instance: Vec<u32>,
    category: Vec<u16>,
    category_names: Vec<String>,
}

impl SensorFrame {
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn depth(&self, col: usize, row: usize) -> f64 {
        self.depth[row * self.width + col]
    }
    pub fn instance(&self, col: usize, row: usize) -> u32 {
        self.instance[row * self.width + col]
    }
    pub fn category(&self, col: usize, row: usize) -> &str {
        &self.category_names[self.category[row * self.width + col] as usize]
    }
    /// Depth, instance and index into [`Self::category_names`] of pixel `n`
    /// in row-major order.
    pub(crate) fn pixel(&self, n: usize) -> (f64, u32, usize) {
        (self.depth[n], self.instance[n], self.category[n] as usize)
    }
    pub(crate) fn category_names(&self) -> &[String] {
        &self.category_names
    }
}

/// Renders the scene from `pose`.
pub fn render(scene: &Scene, pose: &Pose, camera: &CameraModel) -> Result<SensorFrame, SceneError> {
    render_inner(scene, pose, camera, |_| false)
}

/// Like [`render`] but drops each pixel label to background with
/// probability `label_dropout`.
pub fn render_with_dropout<R: Rng>(
    scene: &Scene,
    pose: &Pose,
    camera: &CameraModel,
    label_dropout: f64,
    rng: &mut R,
) -> Result<SensorFrame, SceneError> {
    if label_dropout <= 0.0 {
        return render(scene, pose, camera);
    }
    render_inner(scene, pose, camera, |_| rng.gen_bool(label_dropout.min(1.0)))
}

fn render_inner<D: FnMut(usize) -> bool>(
    scene: &Scene,
    pose: &Pose,
    camera: &CameraModel,
    mut drop_label: D,
) -> Result<SensorFrame, SceneError> {
    if !scene.bounds.contains(&pose.position) {
        return Err(SceneError::PoseOutOfBounds(pose.position));
    }
    if let Some(o) = scene.object_at(&pose.position) {
        return Err(SceneError::PoseInsideGeometry(pose.position, o.instance_id));
    }
    let mut category_names = vec![BACKGROUND.to_string()];
    let object_category: Vec<u16> = scene
        .objects
        .iter()
        .map(|o| {
            let pos = category_names.iter().position(|c| c == &o.category);
            pos.unwrap_or_else(|| {
                category_names.push(o.category.clone());
                category_names.len() - 1
            }) as u16
        })
        .collect();
    let rays = camera.generate_rays(pose, 1);
    let n = rays.len();
    let mut frame = SensorFrame {
        width: camera.width(),
        height: camera.height(),
        depth: vec![f64::INFINITY; n],
        instance: vec![0; n],
        category: vec![0; n],
        category_names,
    };
    for (p, ray) in rays.iter().enumerate() {
        if let Some((t, obj)) = scene.cast(&pose.position, ray, camera.max_range()) {
            frame.depth[p] = t;
            if !drop_label(p) {
                frame.instance[p] = scene.objects[obj].instance_id;
                frame.category[p] = object_category[obj];
            }
        }
    }
    Ok(frame)
}

fn parse_f64(tok: &str, line: usize) -> Result<f64, SceneError> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| SceneError::Parse {
            line,
            message: format!("expected a number, got '{tok}'"),
        })
}

fn parse_vec3(toks: &[&str], line: usize) -> Result<Vec3, SceneError> {
    Ok(Vec3::new(
        parse_f64(toks[0], line)?,
        parse_f64(toks[1], line)?,
        parse_f64(toks[2], line)?,
    ))
}

/// Parses a scene file (see README for the format).
pub fn load_scene(text: &str) -> Result<Scene, SceneError> {
    let mut bounds = None;
    let mut objects = Vec::new();
    let mut targets = Vec::new();
    let mut target_positions = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = content.split_whitespace().collect();
        let Some(&keyword) = toks.first() else {
            continue;
        };
        let arity = |expected: usize| -> Result<(), SceneError> {
            if toks.len() != expected + 1 {
                return Err(SceneError::Parse {
                    line,
                    message: format!(
                        "'{keyword}' takes {expected} fields, got {}",
                        toks.len() - 1
                    ),
                });
            }
            Ok(())
        };
        match keyword {
            "bounds" => {
                arity(6)?;
                if bounds.is_some() {
                    return Err(SceneError::Parse {
                        line,
                        message: "duplicate 'bounds' line".into(),
                    });
                }
                bounds = Some(Aabb::new(
                    parse_vec3(&toks[1..4], line)?,
                    parse_vec3(&toks[4..7], line)?,
                ));
            }
            "object" => {
                arity(8)?;
                let instance_id = toks[2].parse::<u32>().map_err(|_| SceneError::Parse {
                    line,
                    message: format!("expected a positive integer id, got '{}'", toks[2]),
                })?;
                objects.push(SceneObject {
                    shape: Aabb::new(parse_vec3(&toks[3..6], line)?, parse_vec3(&toks[6..9], line)?),
                    category: toks[1].to_string(),
                    instance_id,
                });
            }
            "target" => {
                arity(1)?;
                targets.push(toks[1].to_string());
            }
            "target_position" => {
                arity(4)?;
                target_positions.push((toks[1].to_string(), parse_vec3(&toks[2..5], line)?));
            }
            other => {
                return Err(SceneError::Parse {
                    line,
                    message: format!("unknown keyword '{other}'"),
                })
            }
        }
    }
    let bounds = bounds.ok_or_else(|| SceneError::Validation("missing 'bounds' line".into()))?;
    Scene::new(bounds, objects, targets, target_positions)
}

/// Label of every voxel whose center lies inside an object. Overlaps go to
/// the lowest instance id.
pub fn ground_truth_voxels(scene: &Scene, voxel_size: f64) -> BTreeMap<VoxelIndex, (String, u32)> {
    let mut out: BTreeMap<VoxelIndex, (String, u32)> = BTreeMap::new();
    for o in &scene.objects {
        let (lo, hi) = o.shape.voxel_range(voxel_size);
        for i in lo.i..=hi.i {
            for j in lo.j..=hi.j {
                for k in lo.k..=hi.k {
                    let v = VoxelIndex::new(i, j, k);
                    if !o.shape.contains(&v.center(voxel_size)) {
                        continue;
                    }
                    match out.get(&v) {
                        Some((_, id)) if *id <= o.instance_id => {}
                        _ => {
                            out.insert(v, (o.category.clone(), o.instance_id));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Scenes shipped with the crate.
pub mod bundled {
    pub const COLLAPSED_ROOM: &str = include_str!("../scenes/collapsed_room.scene");
    pub const TWO_TARGETS: &str = include_str!("../scenes/two_targets.scene");
}
