//! Chassis pose on the ground plane.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::config::{RobotConfig, LIMB_COUNT};
use crate::gait::BodyDelta;
use crate::kinematics::{forward_kinematics_unchecked, normalize_angle, JointAngles};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyPose {
    /// World-frame position of the body center, meters (+x east, +y north).
    pub position: Vector2<f64>,
    /// Heading of body +x, radians in (−π, π].
    pub heading: f64,
    /// Height of the body frame origin above the ground.
    pub height: f64,
}

impl BodyPose {
    pub fn new(x: f64, y: f64, heading: f64, height: f64) -> Self {
        Self {
            position: Vector2::new(x, y),
            heading: normalize_angle(heading),
            height,
        }
    }

    /// Applies a displacement expressed in this pose's body frame.
    pub fn compose(&self, delta: &BodyDelta) -> BodyPose {
        let (s, c) = self.heading.sin_cos();
        BodyPose {
            position: self.position
                + Vector2::new(c * delta.dx - s * delta.dy, s * delta.dx + c * delta.dy),
            heading: normalize_angle(self.heading + delta.dheading),
            height: self.height,
        }
    }

    pub fn body_to_world(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let (s, c) = self.heading.sin_cos();
        Vector3::new(
            self.position.x + c * p.x - s * p.y,
            self.position.y + s * p.x + c * p.y,
            self.height + p.z,
        )
    }

    pub fn world_to_body(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let (s, c) = self.heading.sin_cos();
        let (dx, dy) = (p.x - self.position.x, p.y - self.position.y);
        Vector3::new(c * dx + s * dy, -s * dx + c * dy, p.z - self.height)
    }
}

/// Body height implied by the first grounded limb, or the stance height when airborne.
pub fn support_height(
    config: &RobotConfig,
    joints: &[JointAngles; LIMB_COUNT],
    grounded: &[bool; LIMB_COUNT],
) -> f64 {
    grounded
        .iter()
        .position(|&g| g)
        .map(|limb| -forward_kinematics_unchecked(&config.limbs[limb], &joints[limb]).z)
        .unwrap_or_else(|| config.stance_height())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn compose_rotates_into_world() {
        let pose = BodyPose::new(1.0, 2.0, FRAC_PI_2, 0.4);
        let moved = pose.compose(&BodyDelta { dx: 0.5, dy: 0.0, dheading: FRAC_PI_2 });
        assert_abs_diff_eq!(moved.position, Vector2::new(1.0, 2.5), epsilon = 1e-15);
        assert_abs_diff_eq!(moved.heading, std::f64::consts::PI, epsilon = 1e-15);
    }

    #[test]
    fn world_body_round_trip() {
        let pose = BodyPose::new(-0.3, 0.7, 2.1, 0.39);
        let p = Vector3::new(0.2, -0.1, -0.3);
        assert_abs_diff_eq!(pose.world_to_body(&pose.body_to_world(&p)), p, epsilon = 1e-15);
    }

    #[test]
    fn stance_support_height() {
        let config = RobotConfig::default();
        let joints = [config.stance.joints(0.0); LIMB_COUNT];
        assert_abs_diff_eq!(support_height(&config, &joints, &[true; 4]), 0.39, epsilon = 1e-15);
        assert_eq!(support_height(&config, &joints, &[false; 4]), config.stance_height());
    }
}
