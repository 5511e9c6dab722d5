//! Forward and inverse kinematics of a single 3-DoF limb.
//!
//! Angle convention: `shoulder_yaw` rotates the limb plane about the vertical
//! axis, `upper_arm_pitch` is measured below the horizontal (positive points
//! the upper arm at the ground) and `forearm_pitch` is relative to the upper
//! arm. With `upper_arm_pitch + forearm_pitch = π/2` the forearm is vertical.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, PI};
use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack used when classifying IK solutions that land on a limit boundary.
const LIMIT_SLACK: f64 = 1e-9;
/// Horizontal distance below which the shoulder yaw is treated as undefined.
const YAW_SINGULARITY: f64 = 1e-12;
const REACH_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Joint {
    ShoulderYaw,
    UpperArmPitch,
    ForearmPitch,
}

impl fmt::Display for Joint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Joint::ShoulderYaw => "shoulder_yaw",
            Joint::UpperArmPitch => "upper_arm_pitch",
            Joint::ForearmPitch => "forearm_pitch",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("{joint} = {value:.6} rad outside [{min:.6}, {max:.6}]")]
    JointLimit {
        joint: Joint,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("target at {distance:.6} m from shoulder is out of reach (closest reachable: {closest:.6} m)")]
    OutOfReach { distance: f64, closest: f64 },
    #[error("invalid limb geometry: {0}")]
    InvalidGeometry(String),
}

/// Closed interval of admissible values for one joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointRange {
    pub min: f64,
    pub max: f64,
}

impl JointRange {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }
}

/// Hardware joint limits of every limb.
///
/// The upper-arm servo range is [−π/2, π/4] with upward pitch positive; in the
/// downward-positive convention used here that becomes [−π/4, π/2].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLimits {
    pub shoulder_yaw: JointRange,
    pub upper_arm_pitch: JointRange,
    pub forearm_pitch: JointRange,
}

pub const JOINT_LIMITS: JointLimits = JointLimits {
    shoulder_yaw: JointRange::new(-FRAC_PI_6, FRAC_PI_6),
    upper_arm_pitch: JointRange::new(-FRAC_PI_4, FRAC_PI_2),
    forearm_pitch: JointRange::new(-FRAC_PI_2, FRAC_PI_2),
};

impl JointLimits {
    pub fn range(&self, joint: Joint) -> JointRange {
        match joint {
            Joint::ShoulderYaw => self.shoulder_yaw,
            Joint::UpperArmPitch => self.upper_arm_pitch,
            Joint::ForearmPitch => self.forearm_pitch,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointAngles {
    pub shoulder_yaw: f64,
    pub upper_arm_pitch: f64,
    pub forearm_pitch: f64,
}

impl JointAngles {
    pub const fn new(shoulder_yaw: f64, upper_arm_pitch: f64, forearm_pitch: f64) -> Self {
        Self {
            shoulder_yaw,
            upper_arm_pitch,
            forearm_pitch,
        }
    }

    pub fn get(&self, joint: Joint) -> f64 {
        match joint {
            Joint::ShoulderYaw => self.shoulder_yaw,
            Joint::UpperArmPitch => self.upper_arm_pitch,
            Joint::ForearmPitch => self.forearm_pitch,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.shoulder_yaw, self.upper_arm_pitch, self.forearm_pitch]
    }

    /// Returns the first joint (in yaw, upper arm, forearm order) outside `limits`.
    pub fn check_limits(&self, limits: &JointLimits) -> Result<(), KinematicsError> {
        for joint in [Joint::ShoulderYaw, Joint::UpperArmPitch, Joint::ForearmPitch] {
            let range = limits.range(joint);
            let value = self.get(joint);
            if !range.contains(value) {
                return Err(KinematicsError::JointLimit {
                    joint,
                    value,
                    min: range.min,
                    max: range.max,
                });
            }
        }
        Ok(())
    }

    pub fn within_limits(&self) -> bool {
        self.check_limits(&JOINT_LIMITS).is_ok()
    }

    /// Absolute pitch of the forearm below the horizontal.
    pub fn forearm_absolute_pitch(&self) -> f64 {
        self.upper_arm_pitch + self.forearm_pitch
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimbGeometry {
    pub upper_arm_length: f64,
    pub forearm_length: f64,
    /// Shoulder attachment point in the body frame.
    pub shoulder_offset: Vector3<f64>,
    /// Direction of the limb's zero-yaw plane around the body.
    pub mount_yaw: f64,
}

impl LimbGeometry {
    pub fn new(upper_arm_length: f64, forearm_length: f64) -> Self {
        Self {
            upper_arm_length,
            forearm_length,
            shoulder_offset: Vector3::zeros(),
            mount_yaw: 0.0,
        }
    }

    pub fn with_mount(mut self, shoulder_offset: Vector3<f64>, mount_yaw: f64) -> Self {
        self.shoulder_offset = shoulder_offset;
        self.mount_yaw = mount_yaw;
        self
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        let finite = self.upper_arm_length.is_finite()
            && self.forearm_length.is_finite()
            && self.mount_yaw.is_finite()
            && self.shoulder_offset.iter().all(|v| v.is_finite());
        if !finite {
            return Err(KinematicsError::InvalidGeometry("non-finite value".into()));
        }
        if self.upper_arm_length <= 0.0 || self.forearm_length <= 0.0 {
            return Err(KinematicsError::InvalidGeometry(format!(
                "link lengths must be positive (upper arm {}, forearm {})",
                self.upper_arm_length, self.forearm_length
            )));
        }
        Ok(())
    }

    pub fn max_reach(&self) -> f64 {
        self.upper_arm_length + self.forearm_length
    }

    pub fn min_reach(&self) -> f64 {
        (self.upper_arm_length - self.forearm_length).abs()
    }
}

/// Standing configuration of a grounded limb.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StanceConfig {
    pub theta1_init: f64,
    pub theta2_init: f64,
}

impl Default for StanceConfig {
    fn default() -> Self {
        Self::from_upper_arm_pitch(FRAC_PI_6)
    }
}

impl StanceConfig {
    /// Builds the stance with a vertical forearm for the given upper-arm pitch.
    pub fn from_upper_arm_pitch(theta1_init: f64) -> Self {
        Self {
            theta1_init,
            theta2_init: FRAC_PI_2 - theta1_init,
        }
    }

    pub fn joints(&self, shoulder_yaw: f64) -> JointAngles {
        JointAngles::new(shoulder_yaw, self.theta1_init, self.theta2_init)
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        if !(self.theta1_init.is_finite() && self.theta2_init.is_finite()) {
            return Err(KinematicsError::InvalidGeometry("non-finite stance".into()));
        }
        if (self.theta1_init + self.theta2_init - FRAC_PI_2).abs() > 1e-12 {
            return Err(KinematicsError::InvalidGeometry(format!(
                "stance angles must sum to π/2, got {}",
                self.theta1_init + self.theta2_init
            )));
        }
        if self.theta1_init.cos() <= 0.0 {
            return Err(KinematicsError::InvalidGeometry(
                "cos(theta1_init) must be positive".into(),
            ));
        }
        self.joints(0.0).check_limits(&JOINT_LIMITS)
    }
}

/// Wraps an angle into (−π, π].
pub fn normalize_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// End-effector position in the body frame.
pub fn forward_kinematics(
    geom: &LimbGeometry,
    q: &JointAngles,
) -> Result<Vector3<f64>, KinematicsError> {
    q.check_limits(&JOINT_LIMITS)?;
    Ok(forward_kinematics_unchecked(geom, q))
}

/// Forward kinematics without the joint-limit precondition.
pub fn forward_kinematics_unchecked(geom: &LimbGeometry, q: &JointAngles) -> Vector3<f64> {
    let (a, b) = (geom.upper_arm_length, geom.forearm_length);
    let pitch2 = q.upper_arm_pitch + q.forearm_pitch;
    let horizontal = a * q.upper_arm_pitch.cos() + b * pitch2.cos();
    let drop = a * q.upper_arm_pitch.sin() + b * pitch2.sin();
    let yaw = geom.mount_yaw + q.shoulder_yaw;
    geom.shoulder_offset + Vector3::new(horizontal * yaw.cos(), horizontal * yaw.sin(), -drop)
}

/// Analytic inverse kinematics.
///
/// Among the (up to four) yaw/elbow solutions, picks one inside the joint
/// limits, preferring a forearm pointing at or below the horizontal and then
/// the elbow branch whose forearm pitch has the same sign as the stance.
pub fn inverse_kinematics(
    geom: &LimbGeometry,
    target: &Vector3<f64>,
) -> Result<JointAngles, KinematicsError> {
    geom.validate()?;
    let (a, b) = (geom.upper_arm_length, geom.forearm_length);
    let rel = target - geom.shoulder_offset;
    let rho = rel.x.hypot(rel.y);
    let depth = -rel.z;

    let distance = rho.hypot(depth);
    if distance > a + b + REACH_SLACK {
        return Err(KinematicsError::OutOfReach {
            distance,
            closest: a + b,
        });
    }
    if distance < (a - b).abs() - REACH_SLACK {
        return Err(KinematicsError::OutOfReach {
            distance,
            closest: (a - b).abs(),
        });
    }

    let yaw_options: Vec<(f64, f64)> = if rho < YAW_SINGULARITY {
        vec![(0.0, 0.0)]
    } else {
        let phi = normalize_angle(rel.y.atan2(rel.x) - geom.mount_yaw);
        vec![(phi, rho), (normalize_angle(phi + PI), -rho)]
    };

    let cos_elbow = ((distance * distance - a * a - b * b) / (2.0 * a * b)).clamp(-1.0, 1.0);
    let elbow = cos_elbow.acos();

    let mut candidates = Vec::with_capacity(4);
    for &(yaw, reach) in &yaw_options {
        for sign in [1.0, -1.0] {
            let forearm = sign * elbow;
            let upper = normalize_angle(
                depth.atan2(reach) - (b * forearm.sin()).atan2(a + b * forearm.cos()),
            );
            candidates.push(JointAngles::new(yaw, upper, forearm));
        }
    }

    let mut admissible: Vec<JointAngles> = candidates
        .iter()
        .filter_map(|q| snap_into_limits(q, &JOINT_LIMITS))
        .collect();
    // Stable sort keeps the positive-elbow candidate first on ties.
    admissible.sort_by_key(|q| (q.forearm_absolute_pitch() < 0.0, q.forearm_pitch < 0.0));
    match admissible.first() {
        Some(q) => Ok(*q),
        None => Err(candidates[0]
            .check_limits(&JOINT_LIMITS)
            .expect_err("candidate outside limits")),
    }
}

/// Clamps values that overshoot a limit by floating-point noise; rejects real violations.
fn snap_into_limits(q: &JointAngles, limits: &JointLimits) -> Option<JointAngles> {
    let snap = |value: f64, range: JointRange| {
        if value < range.min - LIMIT_SLACK || value > range.max + LIMIT_SLACK {
            None
        } else {
            Some(value.clamp(range.min, range.max))
        }
    };
    Some(JointAngles::new(
        snap(q.shoulder_yaw, limits.shoulder_yaw)?,
        snap(q.upper_arm_pitch, limits.upper_arm_pitch)?,
        snap(q.forearm_pitch, limits.forearm_pitch)?,
    ))
}

/// True iff the forearm is vertical within `tol`, i.e. `|θ1 + θ2 − π/2| ≤ tol`.
pub fn check_stance_constraint(q: &JointAngles, tol: f64) -> bool {
    (q.upper_arm_pitch + q.forearm_pitch - FRAC_PI_2).abs() <= tol
}
