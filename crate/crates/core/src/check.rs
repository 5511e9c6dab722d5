//! Invariant checks run against a robot configuration.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::config::RobotConfig;
use crate::gait::{
    analytic_mid_stroke_residual, horizontal_shift, lifting_angle, slip_report, vertical_compensation,
    GaitEngine, RobotMode, RotationDirection, StepDirection, Trajectory,
};
use crate::kinematics::{
    check_stance_constraint, forward_kinematics, forward_kinematics_unchecked, inverse_kinematics,
    JointAngles, JOINT_LIMITS,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn result(name: &'static str, pass: bool, detail: String) -> CheckResult {
    CheckResult { name, pass, detail }
}

/// Every plan the gait engine can produce from the home stance.
fn all_plans(config: &RobotConfig) -> Result<Vec<(String, Trajectory)>, String> {
    let engine = GaitEngine::new(config.clone());
    let mut plans = Vec::new();
    for dir in [StepDirection::Forward, StepDirection::Backward, StepDirection::Left, StepDirection::Right] {
        let t = engine.step(RobotMode::Locomotion, dir).map_err(|e| format!("step {dir:?}: {e}"))?;
        plans.push((format!("step {dir:?}"), t));
    }
    for dir in [RotationDirection::Ccw, RotationDirection::Cw] {
        let t = engine
            .rotate_in_place(RobotMode::Locomotion, dir)
            .map_err(|e| format!("rotation {dir:?}: {e}"))?;
        plans.push((format!("rotation {dir:?}"), t));
    }
    let arm = config.gait.arm_pose;
    for (from, to) in [
        (RobotMode::Locomotion, RobotMode::Manipulation),
        (RobotMode::Manipulation, RobotMode::Locomotion),
    ] {
        if let Some(t) = engine.switch_mode(from, to, &arm).map_err(|e| format!("switch to {to:?}: {e}"))? {
            plans.push((format!("switch to {to:?}"), t));
        }
    }
    Ok(plans)
}

fn check_config(config: &RobotConfig) -> CheckResult {
    match config.validate() {
        Ok(()) => result(
            "configuration",
            true,
            format!(
                "stance height {:.4} m, stride {:.6} m, tick {} Hz",
                config.stance_height(),
                config.stride(),
                config.gait.tick_rate
            ),
        ),
        Err(e) => result("configuration", false, e.to_string()),
    }
}

fn check_compensation(config: &RobotConfig) -> CheckResult {
    let l_ua = config.limbs[0].upper_arm_length;
    let sweep = config.gait.sweep_limit;
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let tilde = i as f64 * sweep / 999.0;
        match lifting_angle(tilde, &config.stance) {
            Ok(xi) => {
                let gap = vertical_compensation(xi, l_ua, &config.stance) - horizontal_shift(tilde, l_ua, &config.stance);
                worst = worst.max(gap.abs());
            }
            Err(e) => return result("compensation identity", false, e.to_string()),
        }
    }
    result("compensation identity", worst <= 1e-9, format!("max gap {worst:.2e} over 1000 angles"))
}

fn check_plans(plans: &Result<Vec<(String, Trajectory)>, String>) -> [CheckResult; 2] {
    let plans = match plans {
        Ok(plans) => plans,
        Err(e) => {
            return [
                result("joint limits", false, e.clone()),
                result("stance constraint", false, "plans unavailable".into()),
            ]
        }
    };
    let mut limit_failures = Vec::new();
    let mut stance_failures = Vec::new();
    let mut samples = 0;
    for (name, plan) in plans {
        if let Err(e) = plan.validate() {
            limit_failures.push(format!("{name}: {e}"));
        }
        for tick in 0..=plan.total_ticks() {
            let s = match plan.sample(tick) {
                Ok(s) => s,
                Err(e) => {
                    limit_failures.push(format!("{name}: {e}"));
                    break;
                }
            };
            for (q, grounded) in s.joints.iter().zip(s.grounded) {
                samples += 1;
                if grounded && !check_stance_constraint(q, 1e-12) {
                    stance_failures.push(format!("{name} tick {tick}"));
                }
            }
        }
    }
    [
        result(
            "joint limits",
            limit_failures.is_empty(),
            if limit_failures.is_empty() {
                format!("{} plans, {samples} joint samples in range", plans.len())
            } else {
                limit_failures.join("; ")
            },
        ),
        result(
            "stance constraint",
            stance_failures.is_empty(),
            if stance_failures.is_empty() {
                "grounded limbs keep θ1+θ2 = π/2 to 1e-12".into()
            } else {
                format!("{} violations, first at {}", stance_failures.len(), stance_failures[0])
            },
        ),
    ]
}

fn check_motion_constants(config: &RobotConfig) -> CheckResult {
    let engine = GaitEngine::new(config.clone());
    let stride = config.stride();
    let mut worst = 0.0f64;
    let mut turn_ok = true;
    let outcome = (|| -> Result<(), String> {
        for dir in [StepDirection::Forward, StepDirection::Backward, StepDirection::Left, StepDirection::Right] {
            let d = engine
                .step(RobotMode::Locomotion, dir)
                .and_then(|t| t.final_delta())
                .map_err(|e| e.to_string())?;
            let unit = dir.unit();
            worst = worst.max((d.dx - stride * unit[0]).abs()).max((d.dy - stride * unit[1]).abs());
        }
        for dir in [RotationDirection::Ccw, RotationDirection::Cw] {
            let d = engine
                .rotate_in_place(RobotMode::Locomotion, dir)
                .and_then(|t| t.final_delta())
                .map_err(|e| e.to_string())?;
            turn_ok &= d.dheading == dir.sign() * config.gait.sweep_limit && d.dx == 0.0 && d.dy == 0.0;
        }
        Ok(())
    })();
    match outcome {
        Ok(()) => result(
            "stride and rotation",
            worst <= 1e-9 && turn_ok,
            format!("stride {stride:.9} m (error {worst:.1e}), rotation ±sweep exact: {turn_ok}"),
        ),
        Err(e) => result("stride and rotation", false, e),
    }
}

fn check_ik(config: &RobotConfig) -> CheckResult {
    let l = JOINT_LIMITS;
    let n = 12;
    let lerp = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * k as f64 / (n - 1) as f64;
    let mut worst = 0.0f64;
    let mut poses = 0;
    let mut failures = 0;
    for geom in &config.limbs {
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let q = JointAngles::new(
                        lerp(l.shoulder_yaw.min, l.shoulder_yaw.max, a),
                        lerp(l.upper_arm_pitch.min, l.upper_arm_pitch.max, b),
                        lerp(0.05, l.forearm_pitch.max, c),
                    );
                    let rel = forward_kinematics_unchecked(geom, &q) - geom.shoulder_offset;
                    if q.upper_arm_pitch + q.forearm_pitch < 0.0 || rel.xy().norm() < 1e-3 {
                        continue;
                    }
                    poses += 1;
                    let target = forward_kinematics_unchecked(geom, &q);
                    match inverse_kinematics(geom, &target) {
                        Ok(sol) => {
                            for (x, y) in q.as_array().iter().zip(sol.as_array()) {
                                worst = worst.max((x - y).abs());
                            }
                        }
                        Err(_) => failures += 1,
                    }
                }
            }
        }
    }
    let arm = forward_kinematics(&config.limbs[0], &config.gait.arm_pose).is_ok();
    result(
        "FK/IK round trip",
        failures == 0 && worst <= 1e-9 && arm,
        format!("{poses} poses, max error {worst:.2e} rad, {failures} failures, arm pose in range: {arm}"),
    )
}

fn check_slip(config: &RobotConfig) -> CheckResult {
    match slip_report(config, StepDirection::Forward) {
        Ok(report) => {
            let analytic = analytic_mid_stroke_residual(config);
            let gap = (report.mid_stroke_radial_residual - analytic).abs();
            result(
                "slip diagnostic",
                gap <= 1e-9,
                format!(
                    "mid-stroke residual {:.6} m vs {analytic:.6} m closed form, max slip {:.4} m",
                    report.mid_stroke_radial_residual, report.max_slip
                ),
            )
        }
        Err(e) => result("slip diagnostic", false, e.to_string()),
    }
}

/// Runs every check; a configuration is usable when all of them pass.
pub fn invariant_suite(config: &RobotConfig) -> Vec<CheckResult> {
    let plans = all_plans(config);
    let [limits, stance] = check_plans(&plans);
    let mut results = vec![
        check_config(config),
        check_compensation(config),
        limits,
        stance,
        check_motion_constants(config),
        check_ik(config),
        check_slip(config),
    ];
    // A stance off the vertical-forearm pose makes the stance check meaningless.
    if (config.stance.theta1_init + config.stance.theta2_init - FRAC_PI_2).abs() > 1e-12 {
        results.push(result("stance pose", false, "θ1_init + θ2_init must equal π/2".into()));
    }
    results
}
