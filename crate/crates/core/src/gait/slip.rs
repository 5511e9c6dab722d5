//! Foot-slip diagnostic for the push phase.
//!
//! The body follows an exact straight line while the grounded feet follow the
//! compensated joint profile. Where the two disagree the foot has to slide;
//! this module measures that slide against the foot placement.

use serde::{Deserialize, Serialize};

use super::{GaitEngine, GaitError, PhaseKind, RobotMode, StepDirection};
use crate::config::RobotConfig;
use crate::kinematics::forward_kinematics_unchecked;
use crate::pose::{support_height, BodyPose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlipSample {
    pub tick: u32,
    pub limb: usize,
    /// Horizontal distance of the foot from where it was placed, meters.
    pub slip: f64,
    /// Shoulder-to-foot ground distance minus the distance to the placement point.
    pub radial_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlipReport {
    pub direction: StepDirection,
    pub samples: Vec<SlipSample>,
    pub max_slip: f64,
    /// |radial residual| at the push midpoint, where the shoulder yaw is zero.
    pub mid_stroke_radial_residual: f64,
    pub analytic_mid_stroke_residual: f64,
}

/// Closed form of the mid-stroke gap: `|(2cos s − 1) − cos s|·l_UA·cos θ1_init`.
pub fn analytic_mid_stroke_residual(config: &RobotConfig) -> f64 {
    let sweep = config.gait.sweep_limit;
    ((2.0 * sweep.cos() - 1.0) - sweep.cos()).abs() * config.stance_reach()
}

/// Simulates one step and measures how far each grounded foot drifts from
/// its placement during the push.
pub fn slip_report(config: &RobotConfig, direction: StepDirection) -> Result<SlipReport, GaitError> {
    let trajectory = GaitEngine::new(config.clone()).step(RobotMode::Locomotion, direction)?;
    let segments = trajectory.segments();
    let push_start: u32 = segments
        .iter()
        .take_while(|s| s.kind != PhaseKind::LiftAndPush)
        .map(|s| s.ticks)
        .sum();
    let push = segments
        .iter()
        .find(|s| s.kind == PhaseKind::LiftAndPush)
        .expect("step has a push phase");
    let mid_tick = push_start + push.ticks / 2;

    let origin = BodyPose::new(0.0, 0.0, 0.0, config.stance_height());
    let mut placements = [None; 4];
    let mut samples = Vec::new();
    let mut mid = 0.0f64;
    for tick in push_start..=push_start + push.ticks {
        let s = trajectory.sample(tick)?;
        // Sampling at the first push tick still reports the previous phase.
        let grounded = push.grounded;
        let mut pose = origin.compose(&s.body);
        pose.height = support_height(config, &s.joints, &grounded);
        for limb in (0..4).filter(|&l| grounded[l]) {
            let geom = &config.limbs[limb];
            let foot = pose.body_to_world(&forward_kinematics_unchecked(geom, &s.joints[limb]));
            let shoulder = pose.body_to_world(&geom.shoulder_offset);
            let placed = *placements[limb].get_or_insert(foot);
            let slip = (foot.xy() - placed.xy()).norm();
            let radial_residual =
                (foot.xy() - shoulder.xy()).norm() - (placed.xy() - shoulder.xy()).norm();
            if tick == mid_tick {
                mid = mid.max(radial_residual.abs());
            }
            samples.push(SlipSample {
                tick,
                limb,
                slip,
                radial_residual,
            });
        }
    }
    let max_slip = samples.iter().map(|s| s.slip).fold(0.0, f64::max);
    Ok(SlipReport {
        direction,
        samples,
        max_slip,
        mid_stroke_radial_residual: mid,
        analytic_mid_stroke_residual: analytic_mid_stroke_residual(config),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn mid_stroke_residual_matches_closed_form() {
        let config = RobotConfig::default();
        let report = slip_report(&config, StepDirection::Forward).unwrap();
        assert_abs_diff_eq!(
            report.mid_stroke_radial_residual,
            report.analytic_mid_stroke_residual,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(report.analytic_mid_stroke_residual, 0.025_525_588_832_576_50, epsilon = 1e-15);
    }

    #[test]
    fn feet_do_not_slip_at_push_endpoints() {
        let report = slip_report(&RobotConfig::default(), StepDirection::Left).unwrap();
        let first = report.samples.first().unwrap().tick;
        let last = report.samples.last().unwrap().tick;
        for s in report.samples.iter().filter(|s| s.tick == first || s.tick == last) {
            assert!(s.slip < 1e-12, "{s:?}");
        }
        assert!(report.max_slip > 0.0);
    }
}
