//! Arc-to-line compensation for the stance limbs.
//!
//! While a grounded limb sweeps its shoulder yaw, the foot traces an arc
//! around the shoulder. Lifting the body by `ξ` shortens the ground
//! projection of the upper arm so the arc is pulled towards a straight line.

use serde::{Deserialize, Serialize};

use super::GaitError;
use crate::kinematics::{StanceConfig, JOINT_LIMITS};

/// Compensation quantities at one instant of a push.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompensationState {
    /// Angle between the current shoulder yaw and the nearest sweep extreme.
    pub theta_tilde: f64,
    /// Lifting angle added to the upper-arm pitch.
    pub xi: f64,
    /// Horizontal shift absorbed by the lift.
    pub delta: f64,
}

impl CompensationState {
    pub fn at(
        theta_tilde: f64,
        upper_arm_length: f64,
        stance: &StanceConfig,
    ) -> Result<Self, GaitError> {
        Ok(Self {
            theta_tilde,
            xi: lifting_angle(theta_tilde, stance)?,
            delta: horizontal_shift(theta_tilde, upper_arm_length, stance),
        })
    }
}

/// `θ̃ = sweep − |θ0|`: distance of the shoulder yaw from the nearest extreme.
pub fn theta_tilde(shoulder_yaw: f64, sweep_limit: f64) -> f64 {
    (sweep_limit - shoulder_yaw.abs()).clamp(0.0, sweep_limit)
}

/// `Δ = 2(1 − cos θ̃)·l_UA·cos θ1_init`.
pub fn horizontal_shift(theta_tilde: f64, upper_arm_length: f64, stance: &StanceConfig) -> f64 {
    2.0 * (1.0 - theta_tilde.cos()) * upper_arm_length * stance.theta1_init.cos()
}

/// `Δ = (cos θ1_init − cos(θ1_init + ξ))·l_UA`, the shift produced by lifting `ξ`.
pub fn vertical_compensation(xi: f64, upper_arm_length: f64, stance: &StanceConfig) -> f64 {
    (stance.theta1_init.cos() - (stance.theta1_init + xi).cos()) * upper_arm_length
}

/// `ξ = arccos((2 cos θ̃ − 1)·cos θ1_init) − θ1_init`.
pub fn lifting_angle(theta_tilde: f64, stance: &StanceConfig) -> Result<f64, GaitError> {
    let arg = (2.0 * theta_tilde.cos() - 1.0) * stance.theta1_init.cos();
    if !(-1.0..=1.0).contains(&arg) {
        return Err(GaitError::Config(format!(
            "lifting angle undefined: arccos argument {arg:.6} for θ̃ = {theta_tilde:.6}"
        )));
    }
    let xi = arg.acos() - stance.theta1_init;
    let pitch = stance.theta1_init + xi;
    if !JOINT_LIMITS.upper_arm_pitch.contains(pitch) {
        return Err(GaitError::Config(format!(
            "lifted upper-arm pitch {pitch:.6} leaves the joint range"
        )));
    }
    Ok(xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, PI};

    // Reference values from a 40-digit evaluation of the closed forms.
    const SHIFT_AT_SWEEP: f64 = 0.051_051_177_665_153_00;
    const XI_AT_SWEEP: f64 = 0.360_515_670_894_529_14;
    const XI_FLAT_STANCE: f64 = 0.749_468_865_417_480_15;

    #[test]
    fn shift_is_zero_at_extreme() {
        assert_eq!(horizontal_shift(0.0, 0.22, &StanceConfig::default()), 0.0);
    }

    #[test]
    fn shift_at_mid_stroke() {
        let shift = horizontal_shift(FRAC_PI_6, 0.22, &StanceConfig::default());
        assert_abs_diff_eq!(shift, SHIFT_AT_SWEEP, epsilon = 1e-15);
    }

    #[test]
    fn shift_vanishes_as_upper_arm_turns_vertical() {
        let stance = StanceConfig::from_upper_arm_pitch(FRAC_PI_2 - 1e-9);
        assert!(horizontal_shift(FRAC_PI_6, 0.22, &stance) < 1e-9);
    }

    #[test]
    fn lifting_angle_examples() {
        assert_eq!(lifting_angle(0.0, &StanceConfig::default()).unwrap(), 0.0);
        let xi = lifting_angle(FRAC_PI_6, &StanceConfig::default()).unwrap();
        assert_abs_diff_eq!(xi, XI_AT_SWEEP, epsilon = 1e-15);
        let flat = StanceConfig::from_upper_arm_pitch(0.0);
        assert_abs_diff_eq!(lifting_angle(FRAC_PI_6, &flat).unwrap(), XI_FLAT_STANCE, epsilon = 1e-15);
        assert_abs_diff_eq!(XI_FLAT_STANCE, (3f64.sqrt() - 1.0).acos(), epsilon = 1e-15);
    }

    #[test]
    fn lifting_angle_domain_error() {
        let flat = StanceConfig::from_upper_arm_pitch(0.0);
        assert!(matches!(lifting_angle(PI, &flat), Err(GaitError::Config(_))));
    }

    #[test]
    fn compensation_state_is_consistent() {
        let stance = StanceConfig::from_upper_arm_pitch(FRAC_PI_4 / 2.0);
        let state = CompensationState::at(0.3, 0.22, &stance).unwrap();
        assert_abs_diff_eq!(
            vertical_compensation(state.xi, 0.22, &stance),
            state.delta,
            epsilon = 1e-15
        );
        assert!(state.xi >= 0.0);
    }

    #[test]
    fn theta_tilde_endpoints() {
        assert_eq!(theta_tilde(FRAC_PI_6, FRAC_PI_6), 0.0);
        assert_eq!(theta_tilde(-FRAC_PI_6, FRAC_PI_6), 0.0);
        assert_eq!(theta_tilde(0.0, FRAC_PI_6), FRAC_PI_6);
    }
}
