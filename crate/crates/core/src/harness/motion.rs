use super::config::MotionLimits;
use crate::geometry::{normalize_angle, Pose, Vec3};

/// Yaw error below which a waypoint counts as reached, radians.
pub const YAW_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionState {
    pub pose: Pose,
    pub velocity: Vec3,
    pub yaw_rate: f64,
    pub sim_time: f64,
}

impl MotionState {
    pub fn at_rest(pose: Pose) -> Self {
        MotionState { pose, velocity: Vec3::zeros(), yaw_rate: 0.0, sim_time: 0.0 }
    }

    pub fn reached(&self, waypoint: &Pose, voxel_size: f64) -> bool {
        (waypoint.position - self.pose.position).norm() < 0.5 * voxel_size
            && normalize_angle(waypoint.yaw() - self.pose.yaw()).abs() < YAW_TOLERANCE
    }
}

/// Advances one timestep toward `waypoint`.
///
/// Translation follows a straight line with a trapezoidal speed profile:
/// speed rises at the acceleration limit, is capped at the velocity limit
/// and is kept below the speed from which the sensor can still brake to a
/// stop at the waypoint. Yaw slews independently at up to the yaw-rate
/// limit. Targets closer than one step are snapped to.
pub fn advance_motion(state: &MotionState, waypoint: &Pose, limits: &MotionLimits, dt: f64) -> MotionState {
    let mut next = *state;
    next.sim_time += dt;

    let offset = waypoint.position - state.pose.position;
    let distance = offset.norm();
    if distance > 0.0 {
        let dir = offset / distance;
        let speed = state.velocity.dot(&dir).max(0.0);
        let brake = (2.0 * limits.max_acceleration * distance).sqrt();
        let target = limits.max_velocity.min(brake);
        let new_speed = if target >= speed {
            (speed + limits.max_acceleration * dt).min(target)
        } else {
            (speed - limits.max_acceleration * dt).max(target)
        };
        let travel = 0.5 * (speed + new_speed) * dt;
        if travel >= distance {
            next.pose.position = waypoint.position;
            next.velocity = Vec3::zeros();
        } else {
            next.pose.position += dir * travel;
            next.velocity = dir * new_speed;
        }
    } else {
        next.velocity = Vec3::zeros();
    }

    let err = normalize_angle(waypoint.yaw() - state.pose.yaw());
    let max_turn = limits.max_yaw_rate * dt;
    if err.abs() <= max_turn * (1.0 + 1e-9) {
        next.pose.set_yaw(waypoint.yaw());
        next.yaw_rate = err / dt;
    } else {
        let turn = max_turn.copysign(err);
        next.pose.set_yaw(state.pose.yaw() + turn);
        next.yaw_rate = turn / dt;
    }
    next
}
