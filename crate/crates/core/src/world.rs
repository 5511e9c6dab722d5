//! Tick-driven kinematic world: one robot, one ball, one box.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::config::{RobotConfig, LIMB_COUNT};
use crate::gait::{
    GaitEngine, GaitError, GaitPhase, PhaseKind, RobotMode, RotationDirection, StepDirection,
    Trajectory, FORWARD_LIMB,
};
use crate::kinematics::{forward_kinematics_unchecked, JointAngles};
use crate::pose::{support_height, BodyPose};
use crate::scenario::Scenario;
use crate::teleop::{arm_jog, Command, SessionState, SubmitResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallState {
    Resting,
    Held,
    Dropped,
    InBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub position: Vector3<f64>,
    pub state: BallState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    Cancelled,
    Unreachable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventKind {
    CommandAccepted { command: Command },
    CommandRejected { command: Command, result: SubmitResult },
    CommandDone { command: Command, outcome: Outcome },
    ModeChanged { mode: RobotMode },
    Grasp { captured: bool },
    Release { in_box: bool },
    Failure { trial: u32 },
    Success {},
}

/// A timestamped entry of the event log; `t` is simulation seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone)]
enum Activity {
    Motion {
        command: Command,
        trajectory: Trajectory,
        base: BodyPose,
        start_tick: u64,
    },
    Gripper {
        command: Command,
        start_tick: u64,
        ticks: u32,
    },
}

#[derive(Debug, Clone)]
pub struct World {
    config: RobotConfig,
    engine: GaitEngine,
    scenario: Scenario,
    start: BodyPose,
    tick: u64,
    session: SessionState,
    pose: BodyPose,
    joints: [JointAngles; LIMB_COUNT],
    grounded: [bool; LIMB_COUNT],
    phase: GaitPhase,
    activity: Option<Activity>,
    /// End-effector target in the body frame while manipulating.
    arm_target: Option<Vector3<f64>>,
    ball: Ball,
    trial_count: u32,
    success: bool,
    events: Vec<Event>,
}

impl World {
    pub fn new(config: RobotConfig, scenario: Scenario) -> Self {
        let start = BodyPose::new(
            scenario.robot_start.x,
            scenario.robot_start.y,
            scenario.start_heading(),
            config.stance_height(),
        );
        let home = config.stance.joints(0.0);
        let ball = Ball {
            position: scenario.ball_rest_position(),
            state: BallState::Resting,
        };
        Self {
            engine: GaitEngine::new(config.clone()),
            config,
            scenario,
            start,
            tick: 0,
            session: SessionState::default(),
            pose: start,
            joints: [home; LIMB_COUNT],
            grounded: [true; LIMB_COUNT],
            phase: GaitPhase::IDLE,
            activity: None,
            arm_target: None,
            ball,
            trial_count: 1,
            success: false,
            events: Vec::new(),
        }
    }

    pub fn config(&self) -> &RobotConfig {
        &self.config
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Simulation time in seconds.
    pub fn clock(&self) -> f64 {
        self.tick as f64 * self.config.gait.dt()
    }

    pub fn mode(&self) -> RobotMode {
        self.session.mode
    }

    pub fn busy(&self) -> bool {
        self.session.busy()
    }

    pub fn session(&self) -> &SessionState {
        &self.session
    }

    pub fn pose(&self) -> &BodyPose {
        &self.pose
    }

    pub fn start_pose(&self) -> &BodyPose {
        &self.start
    }

    pub fn joints(&self) -> &[JointAngles; LIMB_COUNT] {
        &self.joints
    }

    pub fn grounded(&self) -> &[bool; LIMB_COUNT] {
        &self.grounded
    }

    pub fn phase(&self) -> GaitPhase {
        self.phase
    }

    pub fn ball(&self) -> &Ball {
        &self.ball
    }

    pub fn arm_target(&self) -> Option<Vector3<f64>> {
        self.arm_target
    }

    pub fn trial_count(&self) -> u32 {
        self.trial_count
    }

    pub fn success(&self) -> bool {
        self.success
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Ticks a command occupies when submitted to an idle robot in this state.
    pub fn command_ticks(&self, cmd: &Command) -> u32 {
        let gait = &self.config.gait;
        match cmd {
            Command::StepForward | Command::StepBackward | Command::StepLeft | Command::StepRight => {
                gait.step_ticks()
            }
            Command::RotateLeft | Command::RotateRight => gait.rotation_ticks(),
            Command::SwitchMode => gait.mode_switch_ticks(),
            Command::GripperOpen | Command::GripperClose => gait.grasp_ticks(),
            Command::ArmJog { .. } | Command::CancelRotation => 0,
        }
    }

    /// World position of the forward limb's end effector.
    pub fn end_effector(&self) -> Vector3<f64> {
        let limb = &self.config.limbs[FORWARD_LIMB];
        self.pose
            .body_to_world(&forward_kinematics_unchecked(limb, &self.joints[FORWARD_LIMB]))
    }

    /// Horizontal disk the forward limb can reach on the ground: center and radius.
    pub fn reach_disk(&self) -> (Vector2<f64>, f64) {
        let limb = &self.config.limbs[FORWARD_LIMB];
        let shoulder = self.pose.body_to_world(&limb.shoulder_offset);
        let h = shoulder.z;
        let radius = (limb.max_reach().powi(2) - h * h).max(0.0).sqrt();
        (shoulder.xy(), radius)
    }

    fn emit(&mut self, kind: EventKind) {
        log::debug!("t={:.2} {:?}", self.clock(), kind);
        self.events.push(Event { t: self.clock(), kind });
    }

    /// Offers a command to the one-command gate and starts it when accepted.
    pub fn submit(&mut self, cmd: Command) -> SubmitResult {
        let result = self.session.evaluate(&cmd);
        if result != SubmitResult::Accepted {
            self.emit(EventKind::CommandRejected { command: cmd, result });
            return result;
        }
        self.emit(EventKind::CommandAccepted { command: cmd });
        if let Err(err) = self.start(cmd) {
            // Plans are validated against the joint limits when built; a
            // failure here means the configuration cannot perform the move.
            log::warn!("{cmd} could not be planned: {err}");
            self.emit(EventKind::CommandDone { command: cmd, outcome: Outcome::Unreachable });
        }
        result
    }

    fn start(&mut self, cmd: Command) -> Result<(), GaitError> {
        let mode = self.session.mode;
        let trajectory = match cmd {
            Command::StepForward => Some(self.engine.step(mode, StepDirection::Forward)?),
            Command::StepBackward => Some(self.engine.step(mode, StepDirection::Backward)?),
            Command::StepLeft => Some(self.engine.step(mode, StepDirection::Left)?),
            Command::StepRight => Some(self.engine.step(mode, StepDirection::Right)?),
            Command::RotateLeft => Some(self.engine.rotate_in_place(mode, RotationDirection::Ccw)?),
            Command::RotateRight => Some(self.engine.rotate_in_place(mode, RotationDirection::Cw)?),
            Command::SwitchMode => {
                if mode == RobotMode::Manipulation && self.ball.state == BallState::Held {
                    self.release_ball();
                }
                self.engine
                    .switch_mode(mode, mode.other(), &self.joints[FORWARD_LIMB])?
            }
            Command::CancelRotation => match self.activity.take() {
                Some(Activity::Motion { command, trajectory, start_tick, .. }) if command.is_rotation() => {
                    let elapsed = (self.tick - start_tick) as u32;
                    self.emit(EventKind::CommandDone { command, outcome: Outcome::Cancelled });
                    Some(self.engine.cancel_rotation(&trajectory, elapsed))
                }
                other => {
                    self.activity = other;
                    self.emit(EventKind::CommandDone { command: cmd, outcome: Outcome::Completed });
                    return Ok(());
                }
            },
            Command::ArmJog { axis, sign } => {
                let limb = &self.config.limbs[FORWARD_LIMB];
                let target = self.arm_target.expect("arm target is set in manipulation mode");
                let outcome = match arm_jog(axis, sign, self.scenario.teleop.jog_distance, limb, &target) {
                    Ok((next, q)) => {
                        self.arm_target = Some(next);
                        self.joints[FORWARD_LIMB] = q;
                        self.carry_ball();
                        Outcome::Completed
                    }
                    Err(err) => {
                        log::info!("jog {cmd} refused: {err}");
                        Outcome::Unreachable
                    }
                };
                self.emit(EventKind::CommandDone { command: cmd, outcome });
                return Ok(());
            }
            Command::GripperOpen | Command::GripperClose => {
                self.session.active_command = Some(cmd);
                self.activity = Some(Activity::Gripper {
                    command: cmd,
                    start_tick: self.tick,
                    ticks: self.config.gait.grasp_ticks(),
                });
                return Ok(());
            }
        };

        match trajectory {
            Some(trajectory) if trajectory.total_ticks() > 0 => {
                self.session.active_command = Some(cmd);
                self.activity = Some(Activity::Motion {
                    command: cmd,
                    trajectory,
                    base: self.pose,
                    start_tick: self.tick,
                });
            }
            _ => {
                self.session.active_command = None;
                self.emit(EventKind::CommandDone { command: cmd, outcome: Outcome::Completed });
            }
        }
        Ok(())
    }

    /// Advances the world by one tick.
    pub fn step(&mut self) {
        self.tick += 1;
        let Some(activity) = self.activity.take() else {
            return;
        };
        match activity {
            Activity::Motion { command, trajectory, base, start_tick } => {
                let elapsed = (self.tick - start_tick) as u32;
                let sample = trajectory
                    .sample(elapsed)
                    .expect("trajectory was validated when planned");
                self.joints = sample.joints;
                self.grounded = sample.grounded;
                self.phase = sample.phase;
                self.pose = base.compose(&sample.body);
                self.pose.height = support_height(&self.config, &self.joints, &self.grounded);
                self.carry_ball();
                if elapsed >= trajectory.total_ticks() {
                    self.finish_motion(command);
                } else {
                    self.activity = Some(Activity::Motion { command, trajectory, base, start_tick });
                }
            }
            Activity::Gripper { command, start_tick, ticks } => {
                if self.tick - start_tick >= ticks as u64 {
                    match command {
                        Command::GripperClose => self.close_gripper(),
                        _ => {
                            if self.ball.state == BallState::Held {
                                self.release_ball();
                            }
                        }
                    }
                    self.session.finish();
                    self.emit(EventKind::CommandDone { command, outcome: Outcome::Completed });
                    self.check_success();
                } else {
                    self.activity = Some(Activity::Gripper { command, start_tick, ticks });
                }
            }
        }
    }

    /// Steps until the robot is idle; returns the number of ticks taken.
    pub fn run_until_idle(&mut self) -> u64 {
        let from = self.tick;
        while self.busy() {
            self.step();
        }
        self.tick - from
    }

    fn finish_motion(&mut self, command: Command) {
        self.phase = GaitPhase::IDLE;
        self.session.finish();
        if command == Command::SwitchMode {
            self.session.mode = self.session.mode.other();
            self.arm_target = match self.session.mode {
                RobotMode::Manipulation => Some(forward_kinematics_unchecked(
                    &self.config.limbs[FORWARD_LIMB],
                    &self.joints[FORWARD_LIMB],
                )),
                RobotMode::Locomotion => None,
            };
            self.emit(EventKind::ModeChanged { mode: self.session.mode });
        }
        self.emit(EventKind::CommandDone { command, outcome: Outcome::Completed });
        self.check_success();
    }

    fn carry_ball(&mut self) {
        if self.ball.state == BallState::Held {
            self.ball.position = self.end_effector();
        }
    }

    fn close_gripper(&mut self) {
        if self.ball.state == BallState::Held {
            return;
        }
        let ee = self.end_effector();
        let captured = self.ball.state != BallState::InBox
            && (ee - self.ball.position).norm() <= self.scenario.teleop.grasp_radius;
        if captured {
            self.ball.state = BallState::Held;
            self.ball.position = ee;
        }
        self.emit(EventKind::Grasp { captured });
    }

    /// Lets go of the ball; it falls straight down into the box or onto the floor.
    fn release_ball(&mut self) {
        let ee = self.end_effector();
        let offset = ee.xy() - self.scenario.target_box.position();
        let in_box = offset.norm() <= self.scenario.target_box.aperture_radius;
        self.ball.position = Vector3::new(ee.x, ee.y, self.scenario.ball.radius);
        self.ball.state = if in_box { BallState::InBox } else { BallState::Dropped };
        self.emit(EventKind::Release { in_box });
        if !in_box {
            let (center, radius) = self.reach_disk();
            if (self.ball.position.xy() - center).norm() > radius {
                let trial = self.trial_count;
                self.emit(EventKind::Failure { trial });
                self.trial_count += 1;
                self.ball = Ball {
                    position: self.scenario.ball_rest_position(),
                    state: BallState::Resting,
                };
            }
        }
    }

    fn check_success(&mut self) {
        if self.success {
            return;
        }
        let home = (self.pose.position - self.start.position).norm() <= self.scenario.return_tolerance;
        if self.ball.state == BallState::InBox
            && self.session.mode == RobotMode::Locomotion
            && !self.session.busy()
            && home
        {
            self.success = true;
            self.emit(EventKind::Success {});
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            kind: SnapshotTag::Snapshot,
            v: SNAPSHOT_VERSION,
            tick: self.tick,
            clock: self.clock(),
            mode: self.session.mode,
            busy: self.session.busy(),
            active_command: self.session.active_command,
            phase: self.phase.kind,
            progress: self.phase.progress,
            body: BodySnapshot {
                x: self.pose.position.x,
                y: self.pose.position.y,
                heading: self.pose.heading,
                height: self.pose.height,
            },
            joints: self.joints.map(|q| q.as_array()),
            grounded: self.grounded,
            ball: BallSnapshot {
                x: self.ball.position.x,
                y: self.ball.position.y,
                z: self.ball.position.z,
                state: self.ball.state,
            },
            target_box: BoxSnapshot {
                x: self.scenario.target_box.x,
                y: self.scenario.target_box.y,
                aperture_radius: self.scenario.target_box.aperture_radius,
            },
            trial_count: self.trial_count,
            success: self.success,
        }
    }
}

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotTag {
    Snapshot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodySnapshot {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallSnapshot {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub state: BallState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSnapshot {
    pub x: f64,
    pub y: f64,
    pub aperture_radius: f64,
}

/// World state as broadcast to clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    #[serde(rename = "type")]
    pub kind: SnapshotTag,
    pub v: u32,
    pub tick: u64,
    pub clock: f64,
    pub mode: RobotMode,
    pub busy: bool,
    pub active_command: Option<Command>,
    pub phase: PhaseKind,
    pub progress: f64,
    pub body: BodySnapshot,
    /// `[θ0, θ1, θ2]` per limb, counterclockwise from the forward limb.
    pub joints: [[f64; 3]; LIMB_COUNT],
    pub grounded: [bool; LIMB_COUNT],
    pub ball: BallSnapshot,
    #[serde(rename = "box")]
    pub target_box: BoxSnapshot,
    pub trial_count: u32,
    pub success: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::normalize_angle;
    use crate::teleop::{Axis, Sign};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_6;

    fn world() -> World {
        World::new(RobotConfig::default(), Scenario::default())
    }

    fn kinds(world: &World) -> Vec<&EventKind> {
        world.events().iter().map(|e| &e.kind).collect()
    }

    #[test]
    fn starts_idle_facing_the_ball() {
        let w = world();
        assert!(!w.busy());
        assert_eq!(w.mode(), RobotMode::Locomotion);
        assert_abs_diff_eq!(w.pose().heading, (-1.0f64).atan2(-2.0), epsilon = 1e-15);
        assert_abs_diff_eq!(w.pose().height, 0.39, epsilon = 1e-12);
        assert_eq!(w.trial_count(), 1);
    }

    #[test]
    fn step_takes_its_duration_and_advances_one_stride() {
        let mut w = world();
        let before = *w.pose();
        assert_eq!(w.submit(Command::StepForward), SubmitResult::Accepted);
        let ticks = w.run_until_idle();
        assert_eq!(ticks, 200);
        let moved = (w.pose().position - before.position).norm();
        assert_abs_diff_eq!(moved, w.config().stride(), epsilon = 1e-12);
        assert_abs_diff_eq!(w.clock(), 4.0, epsilon = 1e-12);
        assert!(matches!(
            kinds(&w).last(),
            Some(EventKind::CommandDone { outcome: Outcome::Completed, .. })
        ));
    }

    #[test]
    fn busy_rejections_leave_state_alone() {
        let mut w = world();
        w.submit(Command::RotateLeft);
        w.step();
        let snapshot = w.snapshot();
        assert_eq!(w.submit(Command::StepForward), SubmitResult::RejectedBusy);
        assert_eq!(w.snapshot(), snapshot);
    }

    #[test]
    fn cancel_restores_heading() {
        let mut w = world();
        let heading = w.pose().heading;
        w.submit(Command::RotateLeft);
        for _ in 0..130 {
            w.step();
        }
        assert_eq!(w.submit(Command::CancelRotation), SubmitResult::Accepted);
        assert_eq!(w.run_until_idle(), 130);
        assert_abs_diff_eq!(w.pose().heading, heading, epsilon = 1e-12);
        for q in w.joints() {
            assert_abs_diff_eq!(q.shoulder_yaw, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn full_rotation_turns_by_sweep() {
        let mut w = world();
        let heading = w.pose().heading;
        w.submit(Command::RotateRight);
        assert_eq!(w.run_until_idle(), 500);
        assert_abs_diff_eq!(w.pose().heading, normalize_angle(heading - FRAC_PI_6), epsilon = 1e-12);
    }

    #[test]
    fn idle_cancel_is_a_no_op() {
        let mut w = world();
        assert_eq!(w.submit(Command::CancelRotation), SubmitResult::Accepted);
        assert!(!w.busy());
        assert_eq!(w.tick(), 0);
    }

    #[test]
    fn mode_switch_sets_arm_target_and_jogs_move_it() {
        let mut w = world();
        assert_eq!(w.submit(Command::GripperClose), SubmitResult::RejectedWrongMode);
        w.submit(Command::SwitchMode);
        assert_eq!(w.run_until_idle(), 750);
        assert_eq!(w.mode(), RobotMode::Manipulation);
        let target = w.arm_target().unwrap();
        let jog = Command::ArmJog { axis: Axis::Z, sign: Sign::Negative };
        assert_eq!(w.submit(jog), SubmitResult::Accepted);
        assert!(!w.busy());
        assert_abs_diff_eq!(w.arm_target().unwrap().z, target.z - 0.02, epsilon = 1e-15);
        assert_eq!(w.submit(Command::StepForward), SubmitResult::RejectedWrongMode);
        w.submit(Command::SwitchMode);
        w.run_until_idle();
        assert_eq!(w.mode(), RobotMode::Locomotion);
        for q in w.joints() {
            assert_abs_diff_eq!(q.shoulder_yaw, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn dropping_the_ball_out_of_reach_counts_a_failure() {
        let mut w = world();
        w.submit(Command::SwitchMode);
        w.run_until_idle();
        // Hand the ball to the gripper directly.
        w.ball = Ball { position: w.end_effector(), state: BallState::Held };
        // Walk the target outward until the next jog is refused.
        loop {
            let before = w.arm_target();
            w.submit(Command::ArmJog { axis: Axis::X, sign: Sign::Positive });
            if w.arm_target() == before {
                break;
            }
        }
        // The end effector is at full reach but 0.36 m up: release point is outside the ground disk.
        w.submit(Command::GripperOpen);
        assert_eq!(w.run_until_idle(), 250);
        assert!(kinds(&w).contains(&&EventKind::Failure { trial: 1 }));
        assert_eq!(w.trial_count(), 2);
        assert_eq!(w.ball().state, BallState::Resting);
        assert_abs_diff_eq!(w.ball().position, w.scenario().ball_rest_position(), epsilon = 0.0);
    }

    #[test]
    fn snapshot_wire_shape() {
        let w = world();
        let value = serde_json::to_value(w.snapshot()).unwrap();
        assert_eq!(value["type"], "snapshot");
        assert_eq!(value["v"], 1);
        assert_eq!(value["mode"], "locomotion");
        assert_eq!(value["joints"].as_array().unwrap().len(), 4);
        assert_eq!(value["ball"]["state"], "resting");
        assert_eq!(value["box"]["y"], 0.2);
        let back: Snapshot = serde_json::from_value(value).unwrap();
        assert_eq!(back, w.snapshot());
    }

    #[test]
    fn event_wire_shape() {
        let e = Event { t: 1.5, kind: EventKind::Release { in_box: true } };
        assert_eq!(
            serde_json::to_string(&e).unwrap(),
            r#"{"t":1.5,"kind":"release","payload":{"in_box":true}}"#
        );
        let e = Event { t: 0.0, kind: EventKind::CommandAccepted { command: Command::StepLeft } };
        assert_eq!(
            serde_json::to_string(&e).unwrap(),
            r#"{"t":0.0,"kind":"command_accepted","payload":{"command":{"type":"command","name":"step_left"}}}"#
        );
    }
}
