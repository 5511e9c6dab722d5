use std::io::Write;

use super::{GaitError, Trajectory};
use crate::config::{RobotConfig, LIMB_COUNT};
use crate::kinematics::forward_kinematics_unchecked;
use crate::pose::{support_height, BodyPose};

pub const CSV_HEADER: [&str; 11] = [
    "t", "limb", "theta0", "theta1", "theta2", "foot_x", "foot_y", "foot_z", "body_x", "body_y",
    "heading",
];

/// Writes one row per tick per limb for trajectories played back to back from `start`.
/// Feet are in world coordinates.
pub fn write_trajectory_csv<W: Write>(
    writer: W,
    config: &RobotConfig,
    start: &BodyPose,
    trajectories: &[Trajectory],
) -> Result<(), GaitError> {
    let io_err = |e: csv::Error| GaitError::Config(format!("csv export failed: {e}"));
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(CSV_HEADER).map_err(io_err)?;
    let dt = config.gait.dt();
    let mut pose = *start;
    let mut elapsed: u64 = 0;
    for (index, trajectory) in trajectories.iter().enumerate() {
        let first_tick = if index == 0 { 0 } else { 1 };
        let anchor = pose;
        for tick in first_tick..=trajectory.total_ticks() {
            let s = trajectory.sample(tick)?;
            pose = anchor.compose(&s.body);
            pose.height = support_height(config, &s.joints, &s.grounded);
            let t = (elapsed + tick as u64) as f64 * dt;
            for limb in 0..LIMB_COUNT {
                let q = &s.joints[limb];
                let foot = pose.body_to_world(&forward_kinematics_unchecked(&config.limbs[limb], q));
                out.serialize((
                    t,
                    limb,
                    q.shoulder_yaw,
                    q.upper_arm_pitch,
                    q.forearm_pitch,
                    foot.x,
                    foot.y,
                    foot.z,
                    pose.position.x,
                    pose.position.y,
                    pose.heading,
                ))
                .map_err(io_err)?;
            }
        }
        elapsed += trajectory.total_ticks() as u64;
    }
    out.flush()
        .map_err(|e| GaitError::Config(format!("csv export failed: {e}")))?;
    Ok(())
}
