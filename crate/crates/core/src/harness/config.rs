use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::gain::GainParams;
use crate::geometry::{CameraError, CameraModel, Pose, Vec3};
use crate::planner::PlannerConfig;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlannerKind {
    SemanticNbv,
    RhNbvBaseline,
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlannerKind::SemanticNbv => "semantic_nbv",
            PlannerKind::RhNbvBaseline => "rh_nbv_baseline",
        })
    }
}

impl FromStr for PlannerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "semantic_nbv" => Ok(PlannerKind::SemanticNbv),
            "rh_nbv_baseline" => Ok(PlannerKind::RhNbvBaseline),
            _ => Err(format!("unknown planner '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionLimits {
    pub max_velocity: f64,
    pub max_acceleration: f64,
    pub max_yaw_rate: f64,
}

impl Default for MotionLimits {
    fn default() -> Self {
        MotionLimits {
            max_velocity: 0.8,
            max_acceleration: 0.8,
            max_yaw_rate: std::f64::consts::FRAC_PI_4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraSettings {
    pub hfov_deg: f64,
    pub vfov_deg: f64,
    pub width: usize,
    pub height: usize,
    pub max_range: f64,
    /// Pixel stride of the rays cast when scoring views.
    pub ray_step: usize,
}

impl Default for CameraSettings {
    fn default() -> Self {
        CameraSettings {
            hfov_deg: 87.0,
            vfov_deg: 58.0,
            width: 160,
            height: 120,
            max_range: 5.0,
            ray_step: 8,
        }
    }
}

impl CameraSettings {
    pub fn model(&self) -> Result<CameraModel, CameraError> {
        CameraModel::new(
            self.hfov_deg.to_radians(),
            self.vfov_deg.to_radians(),
            self.width,
            self.height,
            self.max_range,
        )
    }
}

/// Every tunable of a simulated mission.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scene_path: Option<PathBuf>,
    pub planner: PlannerKind,
    pub gain: GainParams,
    pub dominance_ratio: f64,
    pub c_thre: u32,
    pub baseline_lambda_exp: f64,
    pub tree: PlannerConfig,
    pub roi_dilation: f64,
    pub sample_period: f64,
    pub voxel_size: f64,
    pub camera: CameraSettings,
    pub limits: MotionLimits,
    pub sim_timestep: f64,
    pub max_sim_time: f64,
    pub sensor_rate: f64,
    pub start_pose: Option<Pose>,
    pub start_clear_radius: f64,
    pub no_progress_rounds: u32,
    pub rng_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scene_path: None,
            planner: PlannerKind::SemanticNbv,
            gain: GainParams::default(),
            dominance_ratio: 10.0,
            c_thre: 3,
            baseline_lambda_exp: 0.5,
            tree: PlannerConfig::default(),
            roi_dilation: 1.0,
            sample_period: 1.0,
            voxel_size: 0.2,
            camera: CameraSettings::default(),
            limits: MotionLimits::default(),
            sim_timestep: 0.05,
            max_sim_time: 600.0,
            sensor_rate: 2.0,
            start_pose: None,
            start_clear_radius: 0.6,
            no_progress_rounds: 20,
            rng_seed: 0,
        }
    }
}

/// Documented keys in output order.
pub const KEYS: &[(&str, &str)] = &[
    ("scene", "scene file path"),
    ("planner", "semantic_nbv or rh_nbv_baseline"),
    ("rng_seed", "seed for tree sampling"),
    ("start_pose", "x y z yaw of the sensor at t = 0"),
    ("start_clear_radius", "radius marked free around the start pose, m"),
    ("max_sim_time", "simulated time budget, s"),
    ("sim_timestep", "motion integration step, s"),
    ("sensor_rate", "frame rate while moving, Hz"),
    ("max_velocity", "m/s"),
    ("max_acceleration", "m/s^2"),
    ("max_yaw_rate", "rad/s"),
    ("no_progress_rounds", "stop after this many rounds without newly observed voxels"),
    ("voxel_size", "map resolution, m"),
    ("camera_hfov_deg", "horizontal field of view, degrees"),
    ("camera_vfov_deg", "vertical field of view, degrees"),
    ("camera_width", "pixels"),
    ("camera_height", "pixels"),
    ("camera_max_range", "m"),
    ("ray_step", "pixel stride of view-scoring rays"),
    ("lambda1", "unknown-voxel discount rate, 1/m"),
    ("lambda2", "surrounding-voxel discount rate, 1/m"),
    ("eta_tgt", "weight of target refinement"),
    ("n_exp", "expected rays per target voxel"),
    ("lambda_o", "visibility path cost factor, 1/m"),
    ("lambda_l", "semantic path cost factor, 1/m"),
    ("conf_min", "label confidence needed to join the target list"),
    ("dominance_ratio", "surroundings-over-target ratio that ends acquisition"),
    ("c_thre", "consecutive dominated rounds that end acquisition"),
    ("baseline_lambda_exp", "baseline exponential path discount, 1/m"),
    ("max_nodes", "tree size including the root"),
    ("extension_radius", "m"),
    ("rewire_radius", "m"),
    ("yaw_samples", "yaw candidates per node"),
    ("robot_radius", "collision radius, m"),
    ("attempts_per_node", "sampling attempts per requested node"),
    ("parallel_scoring", "score views on a worker pool (true/false)"),
    ("roi_dilation", "margin around targets counted as region of interest, m"),
    ("sample_period", "metric sampling period while moving, s"),
];

fn num<T: FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse '{v}'"))
}

fn parse_pose(v: &str) -> Result<Pose, String> {
    let xs: Vec<f64> = v.split_whitespace().map(num).collect::<Result<_, _>>()?;
    match xs[..] {
        [x, y, z, yaw] => Ok(Pose::new(Vec3::new(x, y, z), yaw)),
        _ => Err("start_pose needs four numbers: x y z yaw".into()),
    }
}

impl RunConfig {
    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut c = RunConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ConfigError::Parse { line: n + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected 'key = value'".into()))?;
            c.set(key.trim(), value.trim()).map_err(err)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "scene" => self.scene_path = Some(PathBuf::from(v)),
            "planner" => self.planner = v.parse()?,
            "rng_seed" => self.rng_seed = num(v)?,
            "start_pose" => self.start_pose = Some(parse_pose(v)?),
            "start_clear_radius" => self.start_clear_radius = num(v)?,
            "max_sim_time" => self.max_sim_time = num(v)?,
            "sim_timestep" => self.sim_timestep = num(v)?,
            "sensor_rate" => self.sensor_rate = num(v)?,
            "max_velocity" => self.limits.max_velocity = num(v)?,
            "max_acceleration" => self.limits.max_acceleration = num(v)?,
            "max_yaw_rate" => self.limits.max_yaw_rate = num(v)?,
            "no_progress_rounds" => self.no_progress_rounds = num(v)?,
            "voxel_size" => self.voxel_size = num(v)?,
            "camera_hfov_deg" => self.camera.hfov_deg = num(v)?,
            "camera_vfov_deg" => self.camera.vfov_deg = num(v)?,
            "camera_width" => self.camera.width = num(v)?,
            "camera_height" => self.camera.height = num(v)?,
            "camera_max_range" => self.camera.max_range = num(v)?,
            "ray_step" => self.camera.ray_step = num(v)?,
            "lambda1" => self.gain.lambda1 = num(v)?,
            "lambda2" => self.gain.lambda2 = num(v)?,
            "eta_tgt" => self.gain.eta_tgt = num(v)?,
            "n_exp" => self.gain.n_exp = num(v)?,
            "lambda_o" => self.gain.lambda_o = num(v)?,
            "lambda_l" => self.gain.lambda_l = num(v)?,
            "conf_min" => self.gain.conf_min = num(v)?,
            "dominance_ratio" => self.dominance_ratio = num(v)?,
            "c_thre" => self.c_thre = num(v)?,
            "baseline_lambda_exp" => self.baseline_lambda_exp = num(v)?,
            "max_nodes" => self.tree.max_nodes = num(v)?,
            "extension_radius" => self.tree.extension_radius = num(v)?,
            "rewire_radius" => self.tree.rewire_radius = num(v)?,
            "yaw_samples" => self.tree.yaw_samples = num(v)?,
            "robot_radius" => self.tree.robot_radius = num(v)?,
            "attempts_per_node" => self.tree.attempts_per_node = num(v)?,
            "parallel_scoring" => self.tree.parallel = num(v)?,
            "roi_dilation" => self.roi_dilation = num(v)?,
            "sample_period" => self.sample_period = num(v)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let s = match key {
            "scene" => self.scene_path.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            "planner" => self.planner.to_string(),
            "rng_seed" => self.rng_seed.to_string(),
            "start_pose" => match &self.start_pose {
                Some(p) => format!("{} {} {} {}", p.position.x, p.position.y, p.position.z, p.yaw()),
                None => String::new(),
            },
            "start_clear_radius" => self.start_clear_radius.to_string(),
            "max_sim_time" => self.max_sim_time.to_string(),
            "sim_timestep" => self.sim_timestep.to_string(),
            "sensor_rate" => self.sensor_rate.to_string(),
            "max_velocity" => self.limits.max_velocity.to_string(),
            "max_acceleration" => self.limits.max_acceleration.to_string(),
            "max_yaw_rate" => self.limits.max_yaw_rate.to_string(),
            "no_progress_rounds" => self.no_progress_rounds.to_string(),
            "voxel_size" => self.voxel_size.to_string(),
            "camera_hfov_deg" => self.camera.hfov_deg.to_string(),
            "camera_vfov_deg" => self.camera.vfov_deg.to_string(),
            "camera_width" => self.camera.width.to_string(),
            "camera_height" => self.camera.height.to_string(),
            "camera_max_range" => self.camera.max_range.to_string(),
            "ray_step" => self.camera.ray_step.to_string(),
            "lambda1" => self.gain.lambda1.to_string(),
            "lambda2" => self.gain.lambda2.to_string(),
            "eta_tgt" => self.gain.eta_tgt.to_string(),
            "n_exp" => self.gain.n_exp.to_string(),
            "lambda_o" => self.gain.lambda_o.to_string(),
            "lambda_l" => self.gain.lambda_l.to_string(),
            "conf_min" => self.gain.conf_min.to_string(),
            "dominance_ratio" => self.dominance_ratio.to_string(),
            "c_thre" => self.c_thre.to_string(),
            "baseline_lambda_exp" => self.baseline_lambda_exp.to_string(),
            "max_nodes" => self.tree.max_nodes.to_string(),
            "extension_radius" => self.tree.extension_radius.to_string(),
            "rewire_radius" => self.tree.rewire_radius.to_string(),
            "yaw_samples" => self.tree.yaw_samples.to_string(),
            "robot_radius" => self.tree.robot_radius.to_string(),
            "attempts_per_node" => self.tree.attempts_per_node.to_string(),
            "parallel_scoring" => self.tree.parallel.to_string(),
            "roi_dilation" => self.roi_dilation.to_string(),
            "sample_period" => self.sample_period.to_string(),
            _ => return None,
        };
        Some(s)
    }

    /// Every key with its resolved value, in documentation order.
    pub fn key_values(&self) -> Vec<(&'static str, String)> {
        KEYS.iter()
            .map(|(k, _)| (*k, self.get(k).expect("documented key")))
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.into()));
        let positive = [
            ("sim_timestep", self.sim_timestep),
            ("sensor_rate", self.sensor_rate),
            ("max_velocity", self.limits.max_velocity),
            ("max_acceleration", self.limits.max_acceleration),
            ("max_yaw_rate", self.limits.max_yaw_rate),
            ("voxel_size", self.voxel_size),
            ("eta_tgt", self.gain.eta_tgt),
            ("n_exp", self.gain.n_exp),
            ("lambda_o", self.gain.lambda_o),
            ("lambda_l", self.gain.lambda_l),
            ("dominance_ratio", self.dominance_ratio),
            ("sample_period", self.sample_period),
        ];
        for (k, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::Invalid(format!("{k} must be positive")));
            }
        }
        let non_negative = [
            ("max_sim_time", self.max_sim_time),
            ("lambda1", self.gain.lambda1),
            ("lambda2", self.gain.lambda2),
            ("baseline_lambda_exp", self.baseline_lambda_exp),
            ("roi_dilation", self.roi_dilation),
            ("start_clear_radius", self.start_clear_radius),
            ("conf_min", self.gain.conf_min),
        ];
        for (k, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::Invalid(format!("{k} must be non-negative")));
            }
        }
        if self.c_thre == 0 || self.camera.ray_step == 0 {
            return bad("c_thre and ray_step must be positive");
        }
        self.tree.validate().map_err(ConfigError::Invalid)?;
        self.camera.model().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    /// `key = value` text that parses back to this configuration.
    pub fn to_text(&self) -> String {
        self.key_values()
            .into_iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
