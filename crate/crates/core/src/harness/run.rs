use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use super::config::{ConfigError, PlannerKind, RunConfig};
use super::logs::RunLogs;
use super::motion::{advance_motion, MotionState};
use crate::gain::{GainParams, TargetList};
use crate::geometry::{CameraError, CameraModel, Pose};
use crate::mapping::{MapPair, MapParams, MappingError};
use crate::metrics::{directivity, MetricSample, MetricsConfig, RoiModel};
use crate::planner::{
    baseline_rh_nbv_step, step, PlanInputs, PlannerConfig, PlannerError, PlannerState, RoundReport,
};
use crate::scene::{render, Scene, SceneError};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error("start_pose is not set")]
    MissingStartPose,
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Finished,
    MaxSimTime,
    NoProgress,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::Finished => "finished",
            StopReason::MaxSimTime => "max_sim_time",
            StopReason::NoProgress => "no_progress",
        })
    }
}

/// Condensed record of one planning round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundSummary {
    pub round: u64,
    pub sim_time: f64,
    pub mode_k: bool,
    pub target_index: usize,
    pub switched: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub finished: bool,
    pub stop_reason: StopReason,
    pub sim_time: f64,
    /// Time the first roster target entered the map with enough
    /// confidence, whatever the planner.
    pub first_detection_time: Option<f64>,
    pub samples: Vec<MetricSample>,
    pub rounds: Vec<RoundSummary>,
    pub logs: RunLogs,
    pub planning_wall_s: f64,
}

impl RunOutcome {
    /// Number of completed acquisitions. A target switch can only end an
    /// acquisition phase, so this counts the switching rounds.
    pub fn acquisitions(&self) -> usize {
        self.rounds.iter().filter(|r| r.switched).count()
    }

    /// Samples taken at or after the first detection.
    pub fn post_detection(&self) -> Vec<MetricSample> {
        match self.first_detection_time {
            Some(t) => self.samples.iter().filter(|s| s.sim_time >= t).copied().collect(),
            None => Vec::new(),
        }
    }
}

struct Sim<'a> {
    scene: &'a Scene,
    camera: CameraModel,
    maps: MapPair,
    roi: RoiModel,
    metrics: MetricsConfig,
    detector: TargetList,
    detector_params: GainParams,
    first_detection: Option<f64>,
    samples: Vec<MetricSample>,
    logs: RunLogs,
}

impl Sim<'_> {
    fn integrate(&mut self, pose: &Pose, sim_time: f64) -> Result<usize, HarnessError> {
        let frame = render(self.scene, pose, &self.camera)?;
        let s = self.maps.integrate(pose, &frame, &self.camera)?;
        if self.first_detection.is_none() && self.detector.update(&self.maps, &self.detector_params) > 0 {
            self.first_detection = Some(sim_time);
        }
        Ok(s.newly_observed)
    }

    fn sample(&mut self, pose: &Pose, sim_time: f64, target_index: usize, mode_k: bool) {
        let counts = self.roi.measure(&self.maps);
        let d = self
            .metrics
            .anchor(self.scene.targets(), target_index)
            .and_then(|t| directivity(pose, t).ok())
            .unwrap_or(0.0);
        let s = MetricSample {
            sim_time,
            directivity: d,
            roi_voxels: counts.roi_voxels,
            total_voxels: counts.total_voxels,
            roi_ratio: counts.roi_ratio,
            roi_progress: counts.roi_progress,
            target_index,
            mode_k,
        };
        self.logs.metric(&s);
        self.samples.push(s);
    }
}

/// Runs one mission in memory: integrate at the current pose, sample
/// metrics, plan, then fly to the waypoint while integrating at the sensor
/// rate. Stops when every target is acquired, on the time budget, or after
/// too many rounds without newly observed voxels.
pub fn run(config: &RunConfig, scene: &Scene) -> Result<RunOutcome, HarnessError> {
    config.validate()?;
    let wall = Instant::now();
    let start = config.start_pose.ok_or(HarnessError::MissingStartPose)?;
    let camera = config.camera.model()?;
    let vs = config.voxel_size;
    let mut maps = MapPair::new(MapParams::new(vs)).with_bounds(*scene.bounds());
    maps.clear_unknown_sphere(&start.position, config.start_clear_radius);
    let roster = scene.targets().to_vec();
    let mut metrics = MetricsConfig::for_scene(scene);
    metrics.roi_dilation = config.roi_dilation;
    metrics.sample_period = config.sample_period;
    let mut sim = Sim {
        scene,
        camera,
        roi: RoiModel::new(scene, vs, config.roi_dilation),
        maps,
        metrics,
        detector: TargetList::new(),
        detector_params: GainParams {
            target_category: roster.first().cloned().unwrap_or_default(),
            ..config.gain.clone()
        },
        first_detection: None,
        samples: Vec::new(),
        logs: RunLogs::new(),
    };
    let mut header = String::new();
    for (k, v) in config.key_values() {
        let _ = writeln!(header, "{k} = {v}");
    }

    let mut planner = PlannerState::new(roster, config.c_thre, config.dominance_ratio);
    let mut motion = MotionState::at_rest(start);
    let mut rounds = Vec::new();
    let mut idle_rounds = 0;
    let mut observed = 0;
    let mut planning_wall = 0.0;
    let sensor_period = 1.0 / config.sensor_rate;
    let mut next_frame = sensor_period;
    let mut next_sample = config.sample_period;
    let tree = PlannerConfig { rng_seed: config.rng_seed, ..config.tree.clone() };
    let limits = config.limits;
    let dt = config.sim_timestep;
    sim.logs.pose(motion.sim_time, &motion.pose);

    let stop = 'mission: loop {
        if motion.sim_time >= config.max_sim_time {
            break StopReason::MaxSimTime;
        }
        observed += sim.integrate(&motion.pose, motion.sim_time)?;
        let (index, k) = match config.planner {
            PlannerKind::SemanticNbv => (planner.target_index(), planner.mode_k()),
            PlannerKind::RhNbvBaseline => (1, true),
        };
        sim.sample(&motion.pose, motion.sim_time, index, k);
        if !rounds.is_empty() {
            idle_rounds = if observed == 0 { idle_rounds + 1 } else { 0 };
        }
        observed = 0;
        if idle_rounds >= config.no_progress_rounds {
            break StopReason::NoProgress;
        }

        let inputs = PlanInputs {
            maps: &sim.maps,
            camera: &sim.camera,
            ray_step: config.camera.ray_step,
            base: &config.gain,
            config: &tree,
        };
        let t0 = Instant::now();
        let (waypoint, report): (Pose, RoundReport) = match config.planner {
            PlannerKind::SemanticNbv => step(&mut planner, &inputs, &motion.pose)?,
            PlannerKind::RhNbvBaseline => {
                baseline_rh_nbv_step(&inputs, &motion.pose, config.baseline_lambda_exp, rounds.len() as u64 + 1)?
            }
        };
        planning_wall += t0.elapsed().as_secs_f64();
        sim.logs.round(motion.sim_time, &report);
        rounds.push(RoundSummary {
            round: report.round,
            sim_time: motion.sim_time,
            mode_k: report.mode_k,
            target_index: report.target_index,
            switched: report.switched,
        });
        if config.planner == PlannerKind::SemanticNbv && planner.finished() {
            break StopReason::Finished;
        }

        let (index, k) = (report.target_index, report.mode_k);
        while !motion.reached(&waypoint, vs) {
            if motion.sim_time >= config.max_sim_time {
                break 'mission StopReason::MaxSimTime;
            }
            motion = advance_motion(&motion, &waypoint, &limits, dt);
            sim.logs.pose(motion.sim_time, &motion.pose);
            let t = motion.sim_time;
            if t + 1e-9 >= next_frame {
                while t + 1e-9 >= next_frame {
                    next_frame += sensor_period;
                }
                if !motion.reached(&waypoint, vs) {
                    observed += sim.integrate(&motion.pose, t)?;
                }
            }
            if t + 1e-9 >= next_sample {
                while t + 1e-9 >= next_sample {
                    next_sample += config.sample_period;
                }
                sim.sample(&motion.pose, t, index, k);
            }
        }
    };

    let finished = stop == StopReason::Finished;
    planning_wall = (planning_wall * 1e3).round() / 1e3;
    let _ = writeln!(header, "# outcome");
    let _ = writeln!(header, "finished = {finished}");
    let _ = writeln!(header, "stop_reason = {stop}");
    let _ = writeln!(header, "sim_time_s = {}", motion.sim_time);
    let _ = writeln!(header, "rounds = {}", rounds.len());
    let _ = writeln!(header, "planning_wall_clock_s = {planning_wall}");
    let _ = writeln!(header, "total_wall_clock_s = {:.3}", wall.elapsed().as_secs_f64());
    sim.logs.header = header;
    Ok(RunOutcome {
        finished,
        stop_reason: stop,
        sim_time: motion.sim_time,
        first_detection_time: sim.first_detection,
        samples: sim.samples,
        rounds,
        logs: sim.logs,
        planning_wall_s: planning_wall,
    })
}

/// Runs a mission and writes its logs to `dir`.
pub fn run_to_dir(config: &RunConfig, scene: &Scene, dir: &Path) -> Result<RunOutcome, HarnessError> {
    let outcome = run(config, scene)?;
    outcome.logs.write(dir)?;
    Ok(outcome)
}
