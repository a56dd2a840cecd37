//! Point-mass robot that tracks commanded trajectories under velocity and
//! acceleration clamps (perfect low-level control otherwise).

use serde::{Deserialize, Serialize};

use crate::{BsplineTrajectory, PolyTrajectory, Pose, Vec3};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RobotState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub yaw: f64,
    pub v_max: f64,
    pub a_max: f64,
}

impl RobotState {
    pub fn at(position: Vec3, yaw: f64, v_max: f64, a_max: f64) -> Self {
        Self { position, velocity: Vec3::zeros(), yaw, v_max, a_max }
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.position, self.yaw)
    }
}

/// What the executor is currently flying.
#[derive(Debug, Clone)]
pub enum TrajectoryCommand {
    Hold,
    Poly(PolyTrajectory),
    Spline(BsplineTrajectory),
}

impl TrajectoryCommand {
    /// Commanded position at absolute time `t`, or `None` outside the
    /// command's domain (the robot then holds position).
    pub fn position_at(&self, t: f64) -> Option<Vec3> {
        match self {
            TrajectoryCommand::Hold => None,
            TrajectoryCommand::Poly(p) => {
                (t >= p.start_time() - 1e-9).then(|| p.position(t))
            }
            TrajectoryCommand::Spline(s) => {
                let t = t.min(s.end_time());
                s.position(t).ok()
            }
        }
    }

    pub fn end_time(&self) -> Option<f64> {
        match self {
            TrajectoryCommand::Hold => None,
            TrajectoryCommand::Poly(p) => Some(p.end_time()),
            TrajectoryCommand::Spline(s) => Some(s.end_time()),
        }
    }
}

/// Full executor command: a trajectory plus an optional yaw override. When
/// no override is given the robot yaws along its velocity.
#[derive(Debug, Clone)]
pub struct Command {
    pub trajectory: TrajectoryCommand,
    pub yaw_override: Option<f64>,
}

impl Command {
    pub fn hold() -> Self {
        Self { trajectory: TrajectoryCommand::Hold, yaw_override: None }
    }
}

const YAW_RATE: f64 = 2.5; // rad/s slew when holding or overridden

/// Advances the robot by `dt`, tracking the commanded trajectory exactly in
/// position up to the velocity/acceleration clamps.
pub fn step(robot: &RobotState, command: &Command, t: f64, dt: f64) -> RobotState {
    assert!(dt > 0.0);
    let target = command.trajectory.position_at(t + dt).unwrap_or(robot.position);
    let mut desired_vel = (target - robot.position) / dt;
    let dv = desired_vel - robot.velocity;
    let dv_max = robot.a_max * dt;
    if dv.norm() > dv_max {
        desired_vel = robot.velocity + dv * (dv_max / dv.norm());
    }
    if desired_vel.norm() > robot.v_max {
        desired_vel *= robot.v_max / desired_vel.norm();
    }
    let position = robot.position + desired_vel * dt;

    let mut yaw = robot.yaw;
    let speed = desired_vel.norm();
    let target_yaw = match command.yaw_override {
        Some(y) => Some(y),
        None if speed > 0.05 => Some(desired_vel.y.atan2(desired_vel.x)),
        None => None,
    };
    if let Some(ty) = target_yaw {
        let err = crate::geometry::wrap_angle(ty - yaw);
        let max_step = YAW_RATE * dt;
        yaw = crate::geometry::wrap_angle(yaw + err.clamp(-max_step, max_step));
    }

    RobotState { position, velocity: desired_vel, yaw, v_max: robot.v_max, a_max: robot.a_max }
}
