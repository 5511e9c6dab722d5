//! Teleoperation vocabulary, gesture mapping and the one-command session gate.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gait::RobotMode;
use crate::kinematics::{inverse_kinematics, JointAngles, KinematicsError, LimbGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Jog direction along an axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }

    fn of(v: f64) -> Self {
        if v >= 0.0 {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    StepForward,
    StepBackward,
    StepLeft,
    StepRight,
    RotateLeft,
    RotateRight,
    CancelRotation,
    SwitchMode,
    ArmJog { axis: Axis, sign: Sign },
    GripperOpen,
    GripperClose,
}

impl Command {
    /// Every distinct command, arm jogs expanded.
    pub fn all() -> Vec<Command> {
        let mut all = vec![
            Command::StepForward,
            Command::StepBackward,
            Command::StepLeft,
            Command::StepRight,
            Command::RotateLeft,
            Command::RotateRight,
            Command::CancelRotation,
            Command::SwitchMode,
        ];
        for axis in Axis::ALL {
            for sign in [Sign::Positive, Sign::Negative] {
                all.push(Command::ArmJog { axis, sign });
            }
        }
        all.push(Command::GripperOpen);
        all.push(Command::GripperClose);
        all
    }

    pub fn legal_in(&self, mode: RobotMode) -> bool {
        match self {
            Command::SwitchMode => true,
            Command::StepForward
            | Command::StepBackward
            | Command::StepLeft
            | Command::StepRight
            | Command::RotateLeft
            | Command::RotateRight
            | Command::CancelRotation => mode == RobotMode::Locomotion,
            Command::ArmJog { .. } | Command::GripperOpen | Command::GripperClose => {
                mode == RobotMode::Manipulation
            }
        }
    }

    pub fn is_rotation(&self) -> bool {
        matches!(self, Command::RotateLeft | Command::RotateRight)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::StepForward => "step_forward",
            Command::StepBackward => "step_backward",
            Command::StepLeft => "step_left",
            Command::StepRight => "step_right",
            Command::RotateLeft => "rotate_left",
            Command::RotateRight => "rotate_right",
            Command::CancelRotation => "cancel_rotation",
            Command::SwitchMode => "switch_mode",
            Command::ArmJog { .. } => "arm_jog",
            Command::GripperOpen => "gripper_open",
            Command::GripperClose => "gripper_close",
        }
    }

    fn from_name(name: &str) -> Option<Command> {
        Some(match name {
            "step_forward" => Command::StepForward,
            "step_backward" => Command::StepBackward,
            "step_left" => Command::StepLeft,
            "step_right" => Command::StepRight,
            "rotate_left" => Command::RotateLeft,
            "rotate_right" => Command::RotateRight,
            "cancel_rotation" => Command::CancelRotation,
            "switch_mode" => Command::SwitchMode,
            "gripper_open" => Command::GripperOpen,
            "gripper_close" => Command::GripperClose,
            _ => return None,
        })
    }

    pub fn to_wire(&self) -> WireCommand {
        let (axis, sign) = match self {
            Command::ArmJog { axis, sign } => (Some(*axis), Some(sign.value() as i8)),
            _ => (None, None),
        };
        WireCommand {
            kind: WireTag::Command,
            name: self.name().to_string(),
            axis,
            sign,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_wire()).expect("command serializes")
    }

    pub fn from_json(text: &str) -> Result<Command, ProtocolError> {
        let wire: WireCommand = serde_json::from_str(text)
            .map_err(|e| ProtocolError::Malformed(e.to_string()))?;
        Command::try_from(wire)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::ArmJog { axis, sign } => {
                let s = if *sign == Sign::Positive { '+' } else { '-' };
                let a = match axis {
                    Axis::X => 'x',
                    Axis::Y => 'y',
                    Axis::Z => 'z',
                };
                write!(f, "arm_jog {s}{a}")
            }
            other => f.write_str(other.name()),
        }
    }
}

/// Parses the display form: a command name, or `arm_jog` followed by `+x`, `-z`, ….
impl FromStr for Command {
    type Err = ProtocolError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut words = text.split_whitespace();
        let name = words.next().unwrap_or_default();
        let arg = words.next();
        if words.next().is_some() {
            return Err(ProtocolError::Malformed(text.to_string()));
        }
        match (name, arg) {
            ("arm_jog", Some(arg)) => {
                let mut chars = arg.chars();
                let sign = match chars.next() {
                    Some('+') => Sign::Positive,
                    Some('-') => Sign::Negative,
                    _ => return Err(ProtocolError::MissingJogAxis),
                };
                let axis = match chars.as_str() {
                    "x" | "X" => Axis::X,
                    "y" | "Y" => Axis::Y,
                    "z" | "Z" => Axis::Z,
                    _ => return Err(ProtocolError::MissingJogAxis),
                };
                Ok(Command::ArmJog { axis, sign })
            }
            ("arm_jog", None) => Err(ProtocolError::MissingJogAxis),
            (_, Some(_)) => Err(ProtocolError::UnexpectedJogFields),
            (name, None) => {
                Command::from_name(name).ok_or_else(|| ProtocolError::UnknownCommand(name.to_string()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("unknown command name {0:?}")]
    UnknownCommand(String),
    #[error("arm_jog requires axis and sign ±1")]
    MissingJogAxis,
    #[error("axis/sign are only valid for arm_jog")]
    UnexpectedJogFields,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WireTag {
    Command,
}

/// `{"type":"command","name":"<snake_case>","axis":"x|y|z","sign":1|-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireCommand {
    #[serde(rename = "type")]
    pub kind: WireTag,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<i8>,
}

impl TryFrom<WireCommand> for Command {
    type Error = ProtocolError;

    fn try_from(wire: WireCommand) -> Result<Self, Self::Error> {
        if wire.name == "arm_jog" {
            let sign = match wire.sign {
                Some(1) => Sign::Positive,
                Some(-1) => Sign::Negative,
                _ => return Err(ProtocolError::MissingJogAxis),
            };
            let axis = wire.axis.ok_or(ProtocolError::MissingJogAxis)?;
            return Ok(Command::ArmJog { axis, sign });
        }
        if wire.axis.is_some() || wire.sign.is_some() {
            return Err(ProtocolError::UnexpectedJogFields);
        }
        Command::from_name(&wire.name).ok_or(ProtocolError::UnknownCommand(wire.name))
    }
}

impl Serialize for Command {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_wire().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Command {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = WireCommand::deserialize(deserializer)?;
        Command::try_from(wire).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubmitResult {
    Accepted,
    RejectedBusy,
    RejectedWrongMode,
}

/// `{"type":"ack","result":"accepted|rejected_busy|rejected_wrong_mode"}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename = "ack")]
pub struct Ack {
    pub result: SubmitResult,
}

impl Ack {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ack serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hand {
    Left,
    Right,
}

/// Tracked hand position relative to its calibrated home, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandSample {
    pub hand: Hand,
    pub position: Vector3<f64>,
    pub timestamp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeleopSettings {
    /// Radius of the spherical dead zone around the hand's home.
    pub reach_threshold: f64,
    pub jog_distance: f64,
    pub grasp_radius: f64,
}

impl Default for TeleopSettings {
    fn default() -> Self {
        Self {
            reach_threshold: 0.15,
            jog_distance: 0.02,
            grasp_radius: 0.04,
        }
    }
}

/// Maps a hand displacement onto the virtual joystick.
///
/// Outside the dead zone the dominant axis picks one of six half-axis zones
/// (ties go to the earlier of X, Y, Z). Bindings:
///
/// | mode         | hand  | +X            | −X              | +Y           | −Y            | +Z          | −Z |
/// |--------------|-------|---------------|-----------------|--------------|---------------|-------------|----|
/// | locomotion   | right | step_forward  | step_backward   | step_left    | step_right    | –           | –  |
/// | locomotion   | left  | –             | cancel_rotation | rotate_left  | rotate_right  | switch_mode | –  |
/// | manipulation | right | jog +X        | jog −X          | jog +Y       | jog −Y        | jog +Z      | jog −Z |
/// | manipulation | left  | –             | –               | gripper_open | gripper_close | switch_mode | –  |
pub fn map_gesture(sample: &HandSample, mode: RobotMode, reach_threshold: f64) -> Option<Command> {
    let d = sample.position;
    if !d.iter().all(|v| v.is_finite()) || d.norm() <= reach_threshold {
        return None;
    }
    let mut axis = Axis::X;
    for candidate in [Axis::Y, Axis::Z] {
        if d[candidate.index()].abs() > d[axis.index()].abs() {
            axis = candidate;
        }
    }
    let sign = Sign::of(d[axis.index()]);
    use Sign::{Negative as Neg, Positive as Pos};
    match (mode, sample.hand, axis, sign) {
        (RobotMode::Locomotion, Hand::Right, Axis::X, Pos) => Some(Command::StepForward),
        (RobotMode::Locomotion, Hand::Right, Axis::X, Neg) => Some(Command::StepBackward),
        (RobotMode::Locomotion, Hand::Right, Axis::Y, Pos) => Some(Command::StepLeft),
        (RobotMode::Locomotion, Hand::Right, Axis::Y, Neg) => Some(Command::StepRight),
        (RobotMode::Locomotion, Hand::Left, Axis::X, Neg) => Some(Command::CancelRotation),
        (RobotMode::Locomotion, Hand::Left, Axis::Y, Pos) => Some(Command::RotateLeft),
        (RobotMode::Locomotion, Hand::Left, Axis::Y, Neg) => Some(Command::RotateRight),
        (_, Hand::Left, Axis::Z, Pos) => Some(Command::SwitchMode),
        (RobotMode::Manipulation, Hand::Right, axis, sign) => Some(Command::ArmJog { axis, sign }),
        (RobotMode::Manipulation, Hand::Left, Axis::Y, Pos) => Some(Command::GripperOpen),
        (RobotMode::Manipulation, Hand::Left, Axis::Y, Neg) => Some(Command::GripperClose),
        _ => None,
    }
}

/// What a tracked hand sample amounted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GestureEvent {
    /// Timestamp not after the previous sample of the same hand.
    Stale,
    /// Dead zone, or still in the zone that already fired.
    Quiet,
    /// The hand entered a new zone.
    Fire(Command),
}

/// Edge-triggers the virtual joystick: a zone fires once when entered and
/// must be left (to the dead zone or another zone) before it fires again.
#[derive(Debug, Clone, Default)]
pub struct GestureTracker {
    last: [Option<(f64, Option<Command>)>; 2],
}

impl GestureTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reset(&mut self) {
        self.last = [None, None];
    }

    pub fn update(&mut self, sample: &HandSample, mode: RobotMode, reach_threshold: f64) -> GestureEvent {
        let slot = &mut self.last[sample.hand as usize];
        if !sample.timestamp.is_finite() {
            return GestureEvent::Stale;
        }
        if let Some((t, _)) = slot {
            if sample.timestamp <= *t {
                return GestureEvent::Stale;
            }
        }
        let zone = map_gesture(sample, mode, reach_threshold);
        let previous = slot.and_then(|(_, z)| z);
        *slot = Some((sample.timestamp, zone));
        match zone {
            Some(cmd) if previous != Some(cmd) => GestureEvent::Fire(cmd),
            _ => GestureEvent::Quiet,
        }
    }
}

/// Mode flag and the command currently executing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionState {
    pub mode: RobotMode,
    pub active_command: Option<Command>,
}

impl Default for SessionState {
    fn default() -> Self {
        Self {
            mode: RobotMode::Locomotion,
            active_command: None,
        }
    }
}

impl SessionState {
    pub fn busy(&self) -> bool {
        self.active_command.is_some()
    }

    /// Decides a submission without touching the state.
    ///
    /// While busy everything is rejected, except that a running rotation can
    /// be cancelled.
    pub fn evaluate(&self, cmd: &Command) -> SubmitResult {
        if let Some(active) = &self.active_command {
            if *cmd == Command::CancelRotation && active.is_rotation() {
                return SubmitResult::Accepted;
            }
            return SubmitResult::RejectedBusy;
        }
        if !cmd.legal_in(self.mode) {
            return SubmitResult::RejectedWrongMode;
        }
        SubmitResult::Accepted
    }

    /// Evaluates `cmd` and, when accepted, marks it active.
    pub fn submit(&mut self, cmd: Command) -> SubmitResult {
        let result = self.evaluate(&cmd);
        if result == SubmitResult::Accepted {
            self.active_command = Some(cmd);
        }
        result
    }

    pub fn finish(&mut self) -> Option<Command> {
        self.active_command.take()
    }
}

/// Moves the end-effector target by `sign·jog_distance` along a body axis and
/// solves for the limb. The target is left to the caller to keep on failure.
pub fn arm_jog(
    axis: Axis,
    sign: Sign,
    jog_distance: f64,
    geom: &LimbGeometry,
    target: &Vector3<f64>,
) -> Result<(Vector3<f64>, JointAngles), KinematicsError> {
    let mut next = *target;
    next[axis.index()] += sign.value() * jog_distance;
    let joints = inverse_kinematics(geom, &next)?;
    Ok((next, joints))
}
