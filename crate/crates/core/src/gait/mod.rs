//! Locomotion cycle, rotation in place and mode-switch choreography.

mod compensation;
mod engine;
mod export;
mod slip;
mod trajectory;

use std::f64::consts::{FRAC_PI_3, FRAC_PI_6};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{JointAngles, KinematicsError};

pub use compensation::{
    horizontal_shift, lifting_angle, theta_tilde, vertical_compensation, CompensationState,
};
pub use engine::{limb_trajectory_for_phase, GaitEngine, FORWARD_LIMB};
pub use export::{write_trajectory_csv, CSV_HEADER};
pub use slip::{analytic_mid_stroke_residual, slip_report, SlipReport, SlipSample};
pub use trajectory::{BodyDelta, BodyMotion, LimbMotion, Segment, Trajectory, TrajectorySample};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaitError {
    #[error("{limb_label} joint limit violated during {phase:?}: {source}")]
    JointLimit {
        limb_label: String,
        phase: PhaseKind,
        #[source]
        source: KinematicsError,
    },
    #[error("command requires {required:?} mode, robot is in {actual:?} mode")]
    WrongMode {
        required: RobotMode,
        actual: RobotMode,
    },
    #[error("gait configuration error: {0}")]
    Config(String),
    #[error("phase {0:?} cannot be evaluated in isolation")]
    UnsupportedPhase(PhaseKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobotMode {
    Locomotion,
    Manipulation,
}

impl RobotMode {
    pub fn other(self) -> Self {
        match self {
            RobotMode::Locomotion => RobotMode::Manipulation,
            RobotMode::Manipulation => RobotMode::Locomotion,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepDirection {
    Forward,
    Backward,
    Left,
    Right,
}

impl StepDirection {
    /// The limb pointing in the direction of travel.
    pub fn leading_limb(self) -> usize {
        match self {
            StepDirection::Forward => 0,
            StepDirection::Left => 1,
            StepDirection::Backward => 2,
            StepDirection::Right => 3,
        }
    }

    /// Unit travel vector in the body frame.
    pub fn unit(self) -> [f64; 2] {
        match self {
            StepDirection::Forward => [1.0, 0.0],
            StepDirection::Left => [0.0, 1.0],
            StepDirection::Backward => [-1.0, 0.0],
            StepDirection::Right => [0.0, -1.0],
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            StepDirection::Forward => StepDirection::Backward,
            StepDirection::Backward => StepDirection::Forward,
            StepDirection::Left => StepDirection::Right,
            StepDirection::Right => StepDirection::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationDirection {
    /// Clockwise seen from above; heading decreases.
    Cw,
    /// Counterclockwise; heading increases.
    Ccw,
}

impl RotationDirection {
    pub fn sign(self) -> f64 {
        match self {
            RotationDirection::Cw => -1.0,
            RotationDirection::Ccw => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "limb")]
pub enum PhaseKind {
    Idle,
    PlaceForward,
    LiftAndPush,
    Recover,
    RotatePlace,
    RotateRecover(usize),
    ModeSwitch,
    CancelRotation,
}

/// Position within the current gait phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitPhase {
    pub kind: PhaseKind,
    pub progress: f64,
    pub leading_limb: usize,
}

impl GaitPhase {
    pub const IDLE: GaitPhase = GaitPhase {
        kind: PhaseKind::Idle,
        progress: 0.0,
        leading_limb: 0,
    };

    pub fn new(kind: PhaseKind, progress: f64, leading_limb: usize) -> Self {
        Self {
            kind,
            progress,
            leading_limb,
        }
    }
}

impl Default for GaitPhase {
    fn default() -> Self {
        Self::IDLE
    }
}

fn default_sweep_limit() -> f64 {
    FRAC_PI_6
}
fn default_step_duration() -> f64 {
    4.0
}
fn default_rotation_duration() -> f64 {
    10.0
}
fn default_mode_switch_duration() -> f64 {
    15.0
}
fn default_grasp_duration() -> f64 {
    5.0
}
fn default_tick_rate() -> f64 {
    50.0
}
fn default_swing_lift() -> f64 {
    0.2
}
fn default_arm_pose() -> JointAngles {
    JointAngles::new(0.0, -FRAC_PI_6, FRAC_PI_3)
}

/// Timing and shape parameters of the gait. Durations are in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitParams {
    /// Shoulder yaw extreme used for stepping and rotation.
    #[serde(default = "default_sweep_limit")]
    pub sweep_limit: f64,
    #[serde(default = "default_step_duration")]
    pub step_duration: f64,
    #[serde(default = "default_rotation_duration")]
    pub rotation_duration: f64,
    #[serde(default = "default_mode_switch_duration")]
    pub mode_switch_duration: f64,
    #[serde(default = "default_grasp_duration")]
    pub grasp_duration: f64,
    #[serde(default = "default_tick_rate")]
    pub tick_rate: f64,
    /// Upper-arm pitch taken off a swing limb at mid-swing, radians.
    #[serde(default = "default_swing_lift")]
    pub swing_lift: f64,
    /// Pose of the forward limb once raised as a manipulator.
    #[serde(default = "default_arm_pose")]
    pub arm_pose: JointAngles,
}

impl Default for GaitParams {
    fn default() -> Self {
        Self {
            sweep_limit: default_sweep_limit(),
            step_duration: default_step_duration(),
            rotation_duration: default_rotation_duration(),
            mode_switch_duration: default_mode_switch_duration(),
            grasp_duration: default_grasp_duration(),
            tick_rate: default_tick_rate(),
            swing_lift: default_swing_lift(),
            arm_pose: default_arm_pose(),
        }
    }
}

impl GaitParams {
    pub fn dt(&self) -> f64 {
        1.0 / self.tick_rate
    }

    /// Converts a duration into a whole number of ticks.
    pub fn ticks(&self, seconds: f64) -> u32 {
        (seconds * self.tick_rate).round() as u32
    }

    pub fn step_ticks(&self) -> u32 {
        self.ticks(self.step_duration)
    }

    pub fn rotation_ticks(&self) -> u32 {
        self.ticks(self.rotation_duration)
    }

    pub fn mode_switch_ticks(&self) -> u32 {
        self.ticks(self.mode_switch_duration)
    }

    pub fn grasp_ticks(&self) -> u32 {
        self.ticks(self.grasp_duration)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.sweep_limit > 0.0 && self.sweep_limit <= FRAC_PI_6) {
            return Err(format!("sweep_limit {} must lie in (0, π/6]", self.sweep_limit));
        }
        if !(self.tick_rate.is_finite() && self.tick_rate > 0.0) {
            return Err(format!("tick_rate {} must be positive", self.tick_rate));
        }
        let durations = [
            ("step_duration", self.step_duration, 4),
            ("rotation_duration", self.rotation_duration, 5),
            ("mode_switch_duration", self.mode_switch_duration, 3),
            ("grasp_duration", self.grasp_duration, 1),
        ];
        for (name, seconds, min_ticks) in durations {
            if !(seconds.is_finite() && seconds > 0.0) {
                return Err(format!("{name} {seconds} must be positive"));
            }
            let exact = seconds * self.tick_rate;
            if (exact - exact.round()).abs() > 1e-9 {
                return Err(format!("{name} {seconds} s is not a whole number of ticks"));
            }
            if (exact.round() as u32) < min_ticks {
                return Err(format!("{name} {seconds} s is shorter than {min_ticks} ticks"));
            }
        }
        if !(self.swing_lift.is_finite() && self.swing_lift >= 0.0) {
            return Err(format!("swing_lift {} must be non-negative", self.swing_lift));
        }
        self.arm_pose.check_limits(&crate::kinematics::JOINT_LIMITS).map_err(|e| format!("arm_pose: {e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_params_validate() {
        let params = GaitParams::default();
        params.validate().unwrap();
        assert_eq!(params.step_ticks(), 200);
        assert_eq!(params.rotation_ticks(), 500);
        assert_eq!(params.mode_switch_ticks(), 750);
        assert_eq!(params.grasp_ticks(), 250);
    }

    #[test]
    fn rejects_bad_params() {
        let wide = GaitParams { sweep_limit: 0.6, ..GaitParams::default() };
        assert!(wide.validate().is_err());
        let fractional = GaitParams { step_duration: 4.01, ..GaitParams::default() };
        assert!(fractional.validate().is_err());
        let frozen = GaitParams { tick_rate: 0.0, ..GaitParams::default() };
        assert!(frozen.validate().is_err());
        let negative = GaitParams { grasp_duration: -1.0, ..GaitParams::default() };
        assert!(negative.validate().is_err());
    }

    #[test]
    fn leading_limbs_point_along_travel() {
        for dir in [StepDirection::Forward, StepDirection::Left, StepDirection::Backward, StepDirection::Right] {
            let angle = crate::config::mount_angle(dir.leading_limb());
            let [x, y] = dir.unit();
            assert!((angle.cos() - x).abs() < 1e-12 && (angle.sin() - y).abs() < 1e-12);
        }
    }
}
